"""Exhaustive state graphs and the absorption argument, checked vertex by vertex.

Vertices are all splits of the deck plus two sinks (one per loser).  In the
skeleton graph G0 each non-absorbing split keeps exactly two edges: its
canonical successors under starter 1 and starter 2.  The full support graph
instead connects a split to every arrangement of each taken pile.
"""

from __future__ import annotations

import itertools
from collections import Counter, deque
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from bmn.core import DEFAULT_ENUMERATION_CAP, SinkId, Split, encode_state, enumerate_splits
from bmn.engine import Outcome, canonical_successor, collect, rollout
from bmn.rules import RuleError, RuleSpec, Verdict, machine

LEFT, RIGHT = 1, 2


@dataclass
class StateGraph:
    rules: RuleSpec
    splits: list[Split]
    index: dict[Split, int]
    edges: np.ndarray
    """``edges[v, s - 1]`` is the canonical successor of ``v`` under starter ``s``; -1 if absorbing."""
    winners: np.ndarray
    """Trick winner (1 or 2) along each edge, 0 when the edge runs to a sink."""
    absorbing: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.splits) + 2

    def sink(self, loser: int) -> int:
        return len(self.splits) + loser - 1

    def vertex(self, i: int) -> Split | SinkId:
        if i >= len(self.splits):
            return SinkId(i - len(self.splits) + 1)
        return self.splits[i]

    def id_of(self, state: Split | SinkId) -> int:
        if isinstance(state, SinkId):
            return self.sink(state.loser)
        return self.index[state]

    def encode(self, i: int) -> str:
        return encode_state(self.rules.deck, self.vertex(i))

    def in_degrees(self) -> np.ndarray:
        targets = self.edges[~self.absorbing].ravel()
        return np.bincount(targets, minlength=self.n_vertices)


def build_g0(rules: RuleSpec, cap: int = DEFAULT_ENUMERATION_CAP) -> StateGraph:
    splits = list(enumerate_splits(rules.deck, cap))
    index = {s: i for i, s in enumerate(splits)}
    n_v = len(splits) + 2
    edges = np.full((n_v, 2), -1, dtype=np.int64)
    winners = np.zeros((n_v, 2), dtype=np.int8)
    absorbing = np.ones(n_v, dtype=bool)
    graph = StateGraph(rules, splits, index, edges, winners, absorbing)
    for i, split in enumerate(splits):
        if split.is_absorbing:
            continue
        absorbing[i] = False
        for starter in (1, 2):
            result = rollout(rules, split, starter)
            edges[i, starter - 1] = graph.id_of(collect(result))
            if result.kind is Outcome.TAKEN:
                winners[i, starter - 1] = result.player
    return graph


@dataclass(frozen=True)
class PredecessorResult:
    found: bool
    predecessor: Split | None = None
    starter: int | None = None
    trick_length: int = 0


def predecessor_candidates(rules: RuleSpec, state: Split, side: int) -> list[PredecessorResult]:
    """Every verified direct predecessor whose trick was taken by ``side``.

    The taken pile sits at the bottom of the winner's deck with the first
    card played lowest, so peeling from the bottom replays the trick.  The
    first finishing prefix is the trick; its relative winner pins down who
    must have started.  Each candidate is confirmed by replaying forward.
    """
    deck = state.deck(side)
    other = state.deck(3 - side)
    found = []
    for starter in (1, 2):
        m = machine(rules, starter)
        owner = starter
        owners = []
        k = 0
        finished = False
        try:
            while k < len(deck):
                k += 1
                owners.append(owner)
                decision = m.push(deck[-k])
                if decision.verdict is Verdict.FINISH:
                    finished = decision.who.absolute(starter) == side
                    break
                owner = decision.who.absolute(starter)
        except RuleError:
            continue
        if not finished:
            continue
        played = deck[::-1][:k]
        mine = tuple(c for c, o in zip(played, owners) if o == side)
        theirs = tuple(c for c, o in zip(played, owners) if o != side)
        winner_deck = mine + deck[: len(deck) - k]
        loser_deck = theirs + other
        pred = Split(winner_deck, loser_deck) if side == LEFT else Split(loser_deck, winner_deck)
        if pred.is_absorbing or canonical_successor(rules, pred, starter) != state:
            continue
        found.append(PredecessorResult(True, pred, starter, k))
    return found


def reconstruct_predecessor(rules: RuleSpec, state: Split, side: int) -> PredecessorResult:
    candidates = predecessor_candidates(rules, state, side)
    if not candidates:
        return PredecessorResult(False)
    return candidates[0]


@dataclass(frozen=True)
class Violation:
    vertex: int
    condition: str
    detail: str = ""


def check_nondegeneracy(rules: RuleSpec, graph: StateGraph | None = None) -> list[Violation]:
    """Splits whose two starters lead to the same non-absorbing outcome."""
    if graph is None:
        graph = build_g0(rules)
    out = []
    for v in np.flatnonzero(~graph.absorbing):
        a, b = graph.edges[v]
        if a == b and not graph.absorbing[a]:
            out.append(Violation(int(v), "nondegeneracy", f"both starters lead to {graph.encode(a)}"))
    return out


@dataclass
class LemmaReport:
    out_degree_ok: bool
    in_degree_ok: bool
    escape_ancestor_ok: bool
    violations: list[Violation] = field(default_factory=list)
    in_degree_histogram: dict[int, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.out_degree_ok and self.in_degree_ok and self.escape_ancestor_ok


def verify_lemma(graph: StateGraph) -> LemmaReport:
    """Check the three degree conditions that make G0, hence the chain, absorbing.

    1. every non-absorbing vertex has out-degree 2;
    2. every non-absorbing vertex has in-degree at most 2, counted directly
       from the edge list and, independently, by predecessor reconstruction;
    3. every in-degree-2 vertex has an ancestor with in-degree below 2,
       searched along left-predecessor chains, whose left deck must shrink
       at every step.
    """
    rules = graph.rules
    violations: list[Violation] = []
    live = ~graph.absorbing
    live[len(graph.splits):] = False

    for v in np.flatnonzero(live):
        if (graph.edges[v] < 0).any():
            violations.append(Violation(int(v), "out_degree", "fewer than two outgoing edges"))
    out_ok = not violations

    counted = graph.in_degrees()
    left_pred = np.full(len(graph.splits), -1, dtype=np.int64)
    mark = len(violations)
    for v, split in enumerate(graph.splits):
        by_recon = 0
        for side in (LEFT, RIGHT):
            cands = predecessor_candidates(rules, split, side)
            by_recon += len(cands)
            if side == LEFT and cands:
                left_pred[v] = graph.index[cands[0].predecessor]
        if by_recon != counted[v]:
            violations.append(
                Violation(v, "in_degree", f"counted {counted[v]} in-edges, reconstructed {by_recon}")
            )
        elif live[v] and counted[v] > 2:
            violations.append(Violation(v, "in_degree", f"in-degree {counted[v]} exceeds 2"))
    in_ok = len(violations) == mark

    mark = len(violations)
    escapes = np.zeros(len(graph.splits), dtype=bool)
    for v in np.flatnonzero(live & (counted[: len(live)] == 2)):
        if escapes[v]:
            continue
        path = [int(v)]
        seen = {int(v)}
        cur = int(v)
        problem = ""
        while True:
            pred = int(left_pred[cur])
            if pred < 0:
                problem = f"{graph.encode(cur)} has in-degree 2 but no left predecessor"
                break
            if len(graph.splits[pred].left) >= len(graph.splits[cur].left):
                problem = f"left deck does not shrink from {graph.encode(cur)} to {graph.encode(pred)}"
                break
            if pred in seen:
                problem = f"left-predecessor chain revisits {graph.encode(pred)}"
                break
            if escapes[pred] or counted[pred] < 2:
                break
            seen.add(pred)
            path.append(pred)
            cur = pred
        if problem:
            violations.append(Violation(int(v), "escape_ancestor", problem))
        else:
            escapes[path] = True
    esc_ok = len(violations) == mark

    hist = Counter(int(counted[v]) for v in np.flatnonzero(live))
    return LemmaReport(out_ok, in_ok, esc_ok, violations, dict(sorted(hist.items())))


def support_successors(rules: RuleSpec, state: Split) -> Iterable[Split | SinkId]:
    """Every state reachable in one randomized trick with positive probability."""
    for starter in (1, 2):
        result = rollout(rules, state, starter)
        if result.kind is Outcome.GAME_OVER:
            yield collect(result)
            continue
        for order in itertools.permutations(result.table):
            yield collect(result, order)


def check_absorbing(rules: RuleSpec, cap: int = DEFAULT_ENUMERATION_CAP) -> set[Split]:
    """Splits from which no absorbing state can be reached.

    Reverse breadth-first search from all absorbing vertices over the full
    support graph.  An empty result means the chain is absorbing.
    """
    splits = list(enumerate_splits(rules.deck, cap))
    index: dict[Any, int] = {s: i for i, s in enumerate(splits)}
    index[SinkId(1)] = len(splits)
    index[SinkId(2)] = len(splits) + 1
    preds: list[list[int]] = [[] for _ in range(len(splits) + 2)]
    frontier = deque([len(splits), len(splits) + 1])
    for i, split in enumerate(splits):
        if split.is_absorbing:
            frontier.append(i)
            continue
        for target in set(support_successors(rules, split)):
            preds[index[target]].append(i)
    reached = np.zeros(len(splits) + 2, dtype=bool)
    reached[list(frontier)] = True
    while frontier:
        w = frontier.popleft()
        for v in preds[w]:
            if not reached[v]:
                reached[v] = True
                frontier.append(v)
    return {splits[i] for i in np.flatnonzero(~reached[: len(splits)])}


def graph_report(graph: StateGraph) -> dict[str, Any]:
    """JSON-ready summary of nondegeneracy, the lemma and absorption."""
    nondeg = check_nondegeneracy(graph.rules, graph)
    lemma = verify_lemma(graph)
    stuck = check_absorbing(graph.rules, cap=len(graph.rules.deck.cards))
    deck = graph.rules.deck

    def violation(v: Violation) -> dict[str, str]:
        return {"state": graph.encode(v.vertex), "condition": v.condition, "detail": v.detail}

    return {
        "states": len(graph.splits),
        "nondegeneracy_violations": [violation(v) for v in nondeg],
        "lemma": {
            "out_degree_ok": lemma.out_degree_ok,
            "in_degree_ok": lemma.in_degree_ok,
            "escape_ancestor_ok": lemma.escape_ancestor_ok,
            "violations": [violation(v) for v in lemma.violations],
            "in_degree_histogram": {str(k): c for k, c in lemma.in_degree_histogram.items()},
        },
        "non_absorbing_states": sorted(encode_state(deck, s) for s in stuck),
    }
