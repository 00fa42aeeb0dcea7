"""The classical deterministic game and a search for deals that never end.

No shuffling and the trick winner leads the next trick, so a deal fixes
the whole trajectory of trick-boundary states ``(split, leader)``.  A game
that does not end must revisit one of finitely many states; Brent's
power-of-two variant of the tortoise/hare method finds the period without
storing the trajectory.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Iterator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from bmn.core import SeedSpec, SinkId, Split, deal_with, encode_state
from bmn.engine import Outcome, collect, rollout
from bmn.rules import RuleSpec


class PickupOrder(enum.Enum):
    PLAYED_ORDER = "played"
    """Cards go under the winner's deck in the order played; the first card played ends up highest."""
    REVERSE_PLAYED_ORDER = "reverse"
    """The table pile is appended as it lies; the first card played ends up at the bottom."""


@dataclass(frozen=True)
class DeterministicConfig:
    pickup_order: PickupOrder = PickupOrder.PLAYED_ORDER
    first_leader: int = 1
    leader_rule: str = "trick_winner"


class Kind(enum.Enum):
    TERMINATED = "terminated"
    CYCLE = "cycle"


@dataclass(frozen=True)
class CycleOutcome:
    kind: Kind
    winner: int | None
    moves: int
    """Cards placed: until the end for terminated games, over pre-period plus one period for cycles."""
    preperiod: int = 0
    period: int = 0
    witness: Split | None = None
    witness_leader: int | None = None


State = tuple[Split, int]


def deterministic_trick(
    rules: RuleSpec, split: Split, leader: int, config: DeterministicConfig
) -> tuple[Split | SinkId, int, int]:
    """One classical trick: returns (next state, trick winner or loser, cards placed)."""
    result = rollout(rules, split, leader)
    if result.kind is Outcome.GAME_OVER:
        return collect(result), result.player, result.moves
    if config.pickup_order is PickupOrder.PLAYED_ORDER:
        pickup = result.table[::-1]
    else:
        pickup = result.table
    return collect(result, pickup), result.player, result.moves


def _stepper(rules: RuleSpec, config: DeterministicConfig) -> Callable[[State], tuple[State | int, int]]:
    """Map a live state to the next live state, or to the winner (int) if the game ends."""

    def step(state: State) -> tuple[State | int, int]:
        split, leader = state
        nxt, player, moves = deterministic_trick(rules, split, leader, config)
        if isinstance(nxt, SinkId):
            return 3 - nxt.loser, moves
        if nxt.is_absorbing:
            return (1 if nxt.left else 2), moves
        return (nxt, player), moves

    return step


def play_deterministic(rules: RuleSpec, deal: Split, config: DeterministicConfig) -> CycleOutcome:
    if deal.is_absorbing:
        return CycleOutcome(Kind.TERMINATED, 1 if deal.left else 2, 0)
    step = _stepper(rules, config)
    start: State = (deal, config.first_leader)

    # Brent: compare the runner with a snapshot refreshed at powers of two.
    snapshot = start
    hare, moves = step(start)
    power = lam = 1
    while True:
        if isinstance(hare, int):
            return CycleOutcome(Kind.TERMINATED, hare, moves)
        if hare == snapshot:
            break
        if power == lam:
            snapshot = hare
            power *= 2
            lam = 0
        hare, placed = step(hare)
        moves += placed
        lam += 1

    ahead: Any = start
    for _ in range(lam):
        ahead, _ = step(ahead)
    behind: Any = start
    mu = placed = 0
    while ahead != behind:
        ahead, _ = step(ahead)
        behind, m = step(behind)
        placed += m
        mu += 1
    witness = behind
    cur = witness
    for _ in range(lam):
        cur, m = step(cur)
        placed += m
    return CycleOutcome(Kind.CYCLE, None, placed, mu, lam, witness[0], witness[1])


def verify_cycle(rules: RuleSpec, witness: Split, leader: int, period: int, config: DeterministicConfig) -> bool:
    """Replay ``period`` tricks from the witness and check the state comes back, and not sooner."""
    if period < 1:
        return False
    step = _stepper(rules, config)
    cur: Any = (witness, leader)
    for k in range(period):
        cur, _ = step(cur)
        if isinstance(cur, int):
            return False
        if cur == (witness, leader) and k < period - 1:
            return False
    return cur == (witness, leader)


@dataclass
class CycleReport:
    deals: int
    terminated: int
    cycles: int
    config: DeterministicConfig
    left_size: int
    wins: dict[int, int]
    mean_moves: float
    max_moves: int
    examples: list[dict[str, Any]] = field(default_factory=list)

    @property
    def frequency(self) -> float:
        return self.cycles / self.deals

    def to_json(self) -> dict[str, Any]:
        return {
            "deals": self.deals,
            "terminated": self.terminated,
            "cycles": self.cycles,
            "frequency": self.frequency,
            "pickup_order": self.config.pickup_order.value,
            "first_leader": self.config.first_leader,
            "left_size": self.left_size,
            "wins": {str(k): v for k, v in self.wins.items()},
            "moves": {"mean_terminated": self.mean_moves, "max_terminated": self.max_moves},
            "examples": self.examples,
        }


class CycleMismatch(RuntimeError):
    """The compiled search and the reference replay disagree about a deal."""


def _deal_outcomes(
    rules: RuleSpec,
    left_size: int,
    master_seed: int,
    start: int,
    stop: int,
    config: DeterministicConfig,
    backend: str,
) -> Iterator[tuple[int, Split | None, CycleOutcome]]:
    """Yield every deal's outcome; the compiled path omits the split for terminating deals."""
    deck = rules.deck
    if backend == "compiled":
        from bmn import _kernels

        cards = deck.cards
        penalties = np.array([deck.penalty(c) for c in cards], dtype=np.int64)
        order = np.empty(len(cards), dtype=np.int64)
        reverse = config.pickup_order is PickupOrder.REVERSE_PLAYED_ORDER
        for i in range(start, stop):
            rng = SeedSpec(master_seed, i).generator()
            kind, winner, moves, mu, lam = _kernels.deal_and_play_deterministic(
                penalties, left_size, rng, config.first_leader - 1, reverse, order
            )
            if kind == _kernels.TERMINATED:
                yield i, None, CycleOutcome(Kind.TERMINATED, int(winner), int(moves))
                continue
            split = Split(
                tuple(cards[k] for k in order[:left_size]), tuple(cards[k] for k in order[left_size:])
            )
            # Rare: confirm with the reference engine before reporting.
            ref = play_deterministic(rules, split, config)
            if ref.kind is not Kind.CYCLE or (ref.preperiod, ref.period, ref.moves) != (mu, lam, moves):
                raise CycleMismatch(f"deal {i}: compiled search and reference replay disagree")
            yield i, split, ref
        return
    for i in range(start, stop):
        split = deal_with(deck, left_size, SeedSpec(master_seed, i).generator())
        yield i, split, play_deterministic(rules, split, config)


@dataclass
class _Tally:
    wins: list[int]
    move_sum: int
    move_max: int
    cycles: list[tuple[int, Split, CycleOutcome]]


def _scan(args: tuple) -> _Tally:
    rules, left_size, master_seed, start, stop, config, backend = args
    tally = _Tally([0, 0], 0, 0, [])
    for i, split, outcome in _deal_outcomes(rules, left_size, master_seed, start, stop, config, backend):
        if outcome.kind is Kind.TERMINATED:
            tally.wins[outcome.winner - 1] += 1
            tally.move_sum += outcome.moves
            tally.move_max = max(tally.move_max, outcome.moves)
        else:
            assert split is not None
            tally.cycles.append((i, split, outcome))
    return tally


def search_cycles(
    rules: RuleSpec,
    deals: int,
    master_seed: int,
    config: DeterministicConfig = DeterministicConfig(),
    left_size: int | None = None,
    backend: str = "auto",
    max_examples: int = 20,
    workers: int = 1,
) -> CycleReport:
    """Play ``deals`` uniform random deals deterministically and count non-terminating ones.

    Deal ``i`` comes from ``SeedSpec(master_seed, i)``, so the report does not
    depend on ``workers``.  Every cycle is re-verified by replaying one period
    from its witness state.
    """
    if deals < 1:
        raise ValueError("deals must be at least 1")
    deck = rules.deck
    if left_size is None:
        left_size = deck.size // 2
    if backend == "auto":
        backend = "compiled" if rules.is_relative else "python"
    if backend == "compiled" and not rules.is_relative:
        raise ValueError("the compiled backend only handles penalty (relative) rules")

    size = max(1, math.ceil(deals / max(1, 4 * workers)))
    jobs = [
        (rules, left_size, master_seed, a, min(a + size, deals), config, backend) for a in range(0, deals, size)
    ]
    if workers <= 1:
        tallies = [_scan(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            tallies = list(pool.map(_scan, jobs))

    wins = {1: sum(t.wins[0] for t in tallies), 2: sum(t.wins[1] for t in tallies)}
    move_sum = sum(t.move_sum for t in tallies)
    move_max = max(t.move_max for t in tallies)
    cycles = 0
    examples = []
    for i, split, outcome in (c for t in tallies for c in t.cycles):
        assert outcome.witness is not None and outcome.witness_leader is not None
        if not verify_cycle(rules, outcome.witness, outcome.witness_leader, outcome.period, config):
            raise CycleMismatch(f"deal {i}: reported cycle fails replay verification")
        cycles += 1
        if len(examples) < max_examples:
            examples.append(
                {
                    "deal_index": i,
                    "deal": encode_state(deck, split),
                    "preperiod": outcome.preperiod,
                    "period": outcome.period,
                    "moves": outcome.moves,
                    "witness_state": encode_state(deck, outcome.witness),
                    "witness_leader": outcome.witness_leader,
                    "verified": True,
                }
            )
    terminated = deals - cycles
    mean = move_sum / terminated if terminated else 0.0
    return CycleReport(deals, terminated, cycles, config, left_size, wins, mean, move_max, examples)
