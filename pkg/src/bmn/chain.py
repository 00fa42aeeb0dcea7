"""Exact expected game length for the randomized game.

Each step picks the starter by a Bernoulli(p) trial and returns the taken
pile in a uniformly random order.  With ``Q`` the transient-to-transient
block of the transition matrix and ``b`` the expected cards placed per
step, the expected number of moves to absorption solves ``(I - Q) t = b``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from bmn.core import DEFAULT_ENUMERATION_CAP, SinkId, Split, encode_state, enumerate_splits
from bmn.engine import Outcome, check_p, collect, rollout
from bmn.graph import check_absorbing
from bmn.rules import RuleSpec

PERMUTATION_CAP = 8
DENSE_LIMIT = 10_000
RESIDUAL_TOL = 1e-9


class ChainError(ValueError):
    """The chain is not absorbing or the linear system is degenerate."""

    def __init__(self, message: str, residual: float | None = None, non_absorbing: Any = None) -> None:
        super().__init__(message)
        self.residual = residual
        self.non_absorbing = non_absorbing


@dataclass
class TransitionRow:
    source: Split
    entries: dict[Split | SinkId, float]
    step_moves: float


def transitions(rules: RuleSpec, state: Split, p: float) -> TransitionRow:
    """Exact one-step distribution out of a non-absorbing split."""
    check_p(p)
    entries: dict[Split | SinkId, float] = defaultdict(float)
    step_moves = 0.0
    for starter, weight in ((1, p), (2, 1.0 - p)):
        result = rollout(rules, state, starter)
        step_moves += weight * result.moves
        if result.kind is Outcome.GAME_OVER:
            entries[collect(result)] += weight
            continue
        if result.moves > PERMUTATION_CAP:
            raise ValueError(
                f"taken pile of {result.moves} cards exceeds the permutation cap of {PERMUTATION_CAP}"
            )
        share = weight / math.factorial(result.moves)
        for order in itertools.permutations(result.table):
            entries[collect(result, order)] += share
    return TransitionRow(state, dict(entries), step_moves)


@dataclass
class ExpectationTable:
    p: float
    values: dict[Split, float]
    residual: float
    method: str
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, state: Split) -> float:
        if state.is_absorbing:
            return 0.0
        return self.values[state]

    def to_json(self, rules: RuleSpec) -> dict[str, float]:
        return {encode_state(rules.deck, s): t for s, t in self.values.items()}


def _solve(a: scipy.sparse.csr_matrix, b: np.ndarray) -> tuple[np.ndarray, str]:
    if a.shape[0] <= DENSE_LIMIT:
        try:
            return np.linalg.solve(a.toarray(), b), "dense-lu"
        except np.linalg.LinAlgError as exc:
            raise ChainError(f"chain not absorbing or numerically degenerate: {exc}") from exc
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.sparse.linalg.MatrixRankWarning)
        try:
            return scipy.sparse.linalg.spsolve(a.tocsc(), b), "sparse-lu"
        except scipy.sparse.linalg.MatrixRankWarning as exc:
            raise ChainError(f"chain not absorbing or numerically degenerate: {exc}") from exc


def expected_moves(
    rules: RuleSpec, p: float, check: bool = True, cap: int = DEFAULT_ENUMERATION_CAP
) -> ExpectationTable:
    """Expected cards placed until the game ends, for every non-absorbing split.

    With ``check`` (the default) the chain is first proved absorbing by
    reverse reachability and a non-absorbing chain is refused.
    """
    check_p(p)
    if check:
        stuck = check_absorbing(rules, cap)
        if stuck:
            raise ChainError(
                f"chain is not absorbing: {len(stuck)} state(s) cannot reach the end of the game",
                non_absorbing=stuck,
            )
    transient = [s for s in enumerate_splits(rules.deck, cap) if not s.is_absorbing]
    index = {s: i for i, s in enumerate(transient)}
    n = len(transient)
    b = np.empty(n)
    rows, cols, vals = [], [], []
    for i, state in enumerate(transient):
        row = transitions(rules, state, p)
        b[i] = row.step_moves
        for target, prob in row.entries.items():
            j = index.get(target) if isinstance(target, Split) else None
            if j is not None:
                rows.append(i)
                cols.append(j)
                vals.append(prob)
    if n == 0:
        return ExpectationTable(p, {}, 0.0, "empty")
    q = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    a = (scipy.sparse.identity(n, format="csr") - q).tocsr()
    t, method = _solve(a, b)
    residual = float(np.abs(a @ t - b).max())
    scale = float(np.abs(b).max())
    if not np.all(np.isfinite(t)) or residual > RESIDUAL_TOL * scale:
        raise ChainError(
            f"chain not absorbing or numerically degenerate: residual {residual:.3e}", residual=residual
        )
    return ExpectationTable(
        p,
        dict(zip(transient, t.tolist())),
        residual,
        method,
        {"states": n, "nonzeros": int(q.nnz), "relative_residual": residual / scale},
    )


def deal_expectation(
    rules: RuleSpec, p: float, left_size: int, table: ExpectationTable | None = None
) -> float:
    """Expected game length averaged over uniform deals with ``left_size`` cards to player 1."""
    n = rules.deck.size
    if not 0 <= left_size <= n:
        raise ValueError(f"left_size must lie in [0, {n}], got {left_size}")
    if left_size in (0, n):
        return 0.0
    if table is None:
        table = expected_moves(rules, p)
    vals = [t for s, t in table.values.items() if len(s.left) == left_size]
    return float(np.mean(vals))
