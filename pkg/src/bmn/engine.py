"""Trick rollout, canonical successors and the randomized game.

Players are absolute seats 1 (``left``) and 2 (``right``).  A trick starts
with the starter's top card; the rule function then names the next player
(relative to the starter) until it finishes the trick or a player who must
play has no cards, which ends the game on the spot.
"""

from __future__ import annotations

import enum
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from bmn.core import Pile, SeedSpec, SinkId, Split, fisher_yates
from bmn.rules import RuleSpec, Verdict, machine


class Outcome(enum.Enum):
    TAKEN = "taken"
    GAME_OVER = "game_over"


class AbsorbingStateError(ValueError):
    """A trick was requested from a state where the game is already over."""


@dataclass(frozen=True)
class TrickResult:
    kind: Outcome
    player: int
    """Trick winner for TAKEN, the player who could not play for GAME_OVER."""
    left_rem: Pile
    right_rem: Pile
    table: Pile
    """Cards played this trick, most recent first."""
    starter: int

    @property
    def moves(self) -> int:
        return len(self.table)


@dataclass(frozen=True)
class GameRecord:
    winner: int | None
    """1 or 2; None when the game was capped."""
    moves: int
    tricks: int
    capped: bool


def rollout(rules: RuleSpec, state: Split, starter: int) -> TrickResult:
    """Play one trick from ``state`` with ``starter`` leading."""
    if state.is_absorbing:
        raise AbsorbingStateError("rollout needs both decks non-empty")
    if starter not in (1, 2):
        raise ValueError(f"starter must be 1 or 2, got {starter!r}")
    decks = {1: list(state.left), 2: list(state.right)}
    played: list = []
    m = machine(rules, starter)
    player = starter
    while True:
        if not decks[player]:
            kind, who = Outcome.GAME_OVER, player
            break
        card = decks[player].pop(0)
        played.append(card)
        decision = m.push(card)
        if decision.verdict is Verdict.FINISH:
            kind, who = Outcome.TAKEN, decision.who.absolute(starter)
            break
        player = decision.who.absolute(starter)
    return TrickResult(kind, who, tuple(decks[1]), tuple(decks[2]), tuple(reversed(played)), starter)


def collect(result: TrickResult, pickup: Pile | None = None) -> Split | SinkId:
    """State after a trick; ``pickup`` is what goes under the winner's deck.

    By default the table is appended as-is (most recent first), which puts
    the first card played at the very bottom.
    """
    if result.kind is Outcome.GAME_OVER:
        return SinkId(result.player)
    pile = result.table if pickup is None else pickup
    if result.player == 1:
        return Split(result.left_rem + pile, result.right_rem)
    return Split(result.left_rem, result.right_rem + pile)


def canonical_successor(rules: RuleSpec, state: Split, starter: int) -> Split | SinkId:
    return collect(rollout(rules, state, starter))


def check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly inside (0,1), got {p!r}")


def draw_starter(p: float, rng: np.random.Generator) -> int:
    return 1 if rng.random() < p else 2


Shuffle = Callable[[Pile, np.random.Generator], Pile]


def _shuffled(pile: Pile, rng: np.random.Generator) -> Pile:
    return tuple(fisher_yates(pile, rng))


def step_with(
    rules: RuleSpec,
    state: Split,
    p: float,
    rng: np.random.Generator,
    shuffle: Shuffle = _shuffled,
) -> tuple[Split | SinkId, int]:
    """One randomized trick: Bernoulli(p) starter, shuffled pickup."""
    result = rollout(rules, state, draw_starter(p, rng))
    if result.kind is Outcome.TAKEN:
        return collect(result, shuffle(result.table, rng)), result.moves
    return collect(result), result.moves


def step_stochastic(rules: RuleSpec, state: Split, p: float, seed: SeedSpec) -> tuple[Split | SinkId, int]:
    check_p(p)
    return step_with(rules, state, p, seed.generator())


def play_with(
    rules: RuleSpec, start: Split, p: float, rng: np.random.Generator, move_cap: int
) -> GameRecord:
    state: Split | SinkId = start
    moves = tricks = 0
    while isinstance(state, Split) and not state.is_absorbing:
        state, placed = step_with(rules, state, p, rng)
        moves += placed
        tricks += 1
        if moves > move_cap:
            return GameRecord(None, move_cap, tricks, True)
    if isinstance(state, SinkId):
        return GameRecord(3 - state.loser, moves, tricks, False)
    return GameRecord(1 if state.left else 2, moves, tricks, False)


def play_game(rules: RuleSpec, deal: Split, p: float, seed: SeedSpec, move_cap: int = 10**7) -> GameRecord:
    """Play one randomized game to the end or until ``move_cap`` is exceeded."""
    check_p(p)
    if move_cap <= 0:
        raise ValueError("move_cap must be positive")
    return play_with(rules, deal, p, seed.generator(), move_cap)
