"""Monte-Carlo estimates of game length for the randomized game.

Replica ``i`` draws its deal and its whole game from the stream
``SeedSpec(master_seed, i)``, so a run is reproducible and independent of
how replicas are spread over workers.  Partial results are integer sums,
which makes the reduction exact and order-insensitive.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from bmn.core import SeedSpec, deal_with
from bmn.engine import check_p, play_with
from bmn.rules import RuleSpec


@dataclass
class Partial:
    games: int = 0
    capped: int = 0
    sum_moves: int = 0
    sum_sq_moves: int = 0
    max_moves: int = 0
    sum_tricks: int = 0
    wins: Counter = field(default_factory=Counter)

    def __add__(self, other: Partial) -> Partial:
        return Partial(
            self.games + other.games,
            self.capped + other.capped,
            self.sum_moves + other.sum_moves,
            self.sum_sq_moves + other.sum_sq_moves,
            max(self.max_moves, other.max_moves),
            self.sum_tricks + other.sum_tricks,
            self.wins + other.wins,
        )


@dataclass(frozen=True)
class McStats:
    games: int
    terminated: int
    capped: int
    mean_moves: float
    stderr_moves: float
    max_moves: int
    mean_tricks: float
    wins: dict[int, int]

    @classmethod
    def from_partial(cls, part: Partial) -> McStats:
        g = part.games
        mean = Fraction(part.sum_moves, g)
        if g > 1:
            var = (Fraction(part.sum_sq_moves) - part.sum_moves * mean) / (g - 1)
            stderr = math.sqrt(var / g)
        else:
            stderr = 0.0
        return cls(
            games=g,
            terminated=g - part.capped,
            capped=part.capped,
            mean_moves=float(mean),
            stderr_moves=stderr,
            max_moves=part.max_moves,
            mean_tricks=part.sum_tricks / g,
            wins={1: part.wins[1], 2: part.wins[2]},
        )

    def to_json(self) -> dict:
        return {
            "games": self.games,
            "terminated": self.terminated,
            "capped": self.capped,
            "mean_moves": self.mean_moves,
            "stderr_moves": self.stderr_moves,
            "max_moves": self.max_moves,
            "mean_tricks": self.mean_tricks,
            "wins": {str(k): v for k, v in self.wins.items()},
        }


def _backend(rules: RuleSpec, backend: str) -> str:
    if backend == "auto":
        return "compiled" if rules.is_relative else "python"
    if backend == "compiled" and not rules.is_relative:
        raise ValueError("the compiled backend only handles penalty (relative) rules")
    if backend not in ("compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def run_replicas(
    rules: RuleSpec,
    left_size: int,
    p: float,
    master_seed: int,
    start: int,
    stop: int,
    move_cap: int,
    backend: str = "auto",
) -> np.ndarray:
    """Per-game ``(winner, moves, tricks, capped)`` rows for replicas ``start..stop-1``."""
    backend = _backend(rules, backend)
    deck = rules.deck
    out = np.zeros((stop - start, 4), dtype=np.int64)
    if backend == "compiled":
        from bmn import _kernels

        penalties = np.array([deck.penalty(c) for c in deck.cards], dtype=np.int64)
        for row, i in enumerate(range(start, stop)):
            rng = SeedSpec(master_seed, i).generator()
            out[row] = _kernels.play_random(penalties, left_size, p, rng, move_cap)
        return out
    for row, i in enumerate(range(start, stop)):
        rng = SeedSpec(master_seed, i).generator()
        rec = play_with(rules, deal_with(deck, left_size, rng), p, rng, move_cap)
        out[row] = (rec.winner or 0, rec.moves, rec.tricks, rec.capped)
    return out


def _partial(rows: np.ndarray) -> Partial:
    moves = [int(m) for m in rows[:, 1]]
    return Partial(
        games=len(rows),
        capped=int(rows[:, 3].sum()),
        sum_moves=sum(moves),
        sum_sq_moves=sum(m * m for m in moves),
        max_moves=max(moves, default=0),
        sum_tricks=int(rows[:, 2].sum()),
        wins=Counter({w: int((rows[:, 0] == w).sum()) for w in (1, 2)}),
    )


def _chunk(args: tuple) -> Partial:
    return _partial(run_replicas(*args))


def _chunks(games: int, workers: int) -> list[tuple[int, int]]:
    size = max(1, math.ceil(games / max(1, 4 * workers)))
    return [(s, min(games, s + size)) for s in range(0, games, size)]


def monte_carlo(
    rules: RuleSpec,
    left_size: int,
    p: float,
    games: int,
    master_seed: int,
    move_cap: int = 10**7,
    workers: int = 1,
    backend: str = "auto",
) -> McStats:
    """Play ``games`` independent randomized games from fresh uniform deals."""
    check_p(p)
    if games < 1:
        raise ValueError("games must be at least 1")
    if not 0 <= left_size <= rules.deck.size:
        raise ValueError(f"left_size must lie in [0, {rules.deck.size}], got {left_size}")
    jobs = [
        (rules, left_size, p, master_seed, a, b, move_cap, backend) for a, b in _chunks(games, workers)
    ]
    if workers <= 1:
        parts = [_chunk(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, jobs))
    total = Partial()
    for part in parts:
        total = total + part
    return McStats.from_partial(total)


def histogram(
    rules: RuleSpec,
    left_size: int,
    p: float,
    games: int,
    master_seed: int,
    bucket_width: int,
    move_cap: int = 10**7,
    backend: str = "auto",
) -> list[tuple[int, int]]:
    """Game-length counts in buckets ``[k*w, (k+1)*w)``, keyed by the bucket's lower edge."""
    if bucket_width < 1:
        raise ValueError("bucket_width must be positive")
    check_p(p)
    rows = run_replicas(rules, left_size, p, master_seed, 0, games, move_cap, backend)
    buckets = Counter(int(m) // bucket_width * bucket_width for m in rows[:, 1])
    return sorted(buckets.items())
