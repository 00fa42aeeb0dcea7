"""The rule function: what happens next given the cards on the table.

Decisions name players relative to the trick's starter.  A pile alone does
not reveal which absolute player led, but for penalty-card rules it does
fix who plays next relative to the leader, so relative indexing turns the
rule into a genuine function of the pile.

Penalty rules are evaluated with a small payment machine replayed
oldest-card-first:

* players alternate while no payment is owed;
* a card with penalty ``k > 0`` obliges the other player to pay ``k`` cards;
* each ordinary card paid reduces the debt, and when it reaches zero the
  owner of the last penalty card takes the trick;
* a penalty card laid during payment discards the old debt and makes the
  other player pay the new one.
"""

from __future__ import annotations

import enum
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Union

from bmn.core import Card, DeckSpec, Pile, Rank


class RelativePlayer(enum.Enum):
    STARTER = "starter"
    OPPONENT = "opponent"

    @property
    def other(self) -> RelativePlayer:
        return RelativePlayer.OPPONENT if self is RelativePlayer.STARTER else RelativePlayer.STARTER

    def absolute(self, starter: int) -> int:
        return starter if self is RelativePlayer.STARTER else 3 - starter


def relative(player: int, starter: int) -> RelativePlayer:
    return RelativePlayer.STARTER if player == starter else RelativePlayer.OPPONENT


class Verdict(enum.Enum):
    CONTINUE = "continue"
    FINISH = "finish"


class Indexing(enum.Enum):
    RELATIVE = "relative"
    ABSOLUTE_FIXTURE = "absolute_fixture"


@dataclass(frozen=True)
class RuleDecision:
    verdict: Verdict
    who: RelativePlayer


# Fixture entries may name the player relative to the starter or as an
# absolute seat (1 or 2); absolute entries need the starter to resolve.
FixtureWho = Union[RelativePlayer, int]


@dataclass(frozen=True)
class FixtureEntry:
    verdict: Verdict
    who: FixtureWho


@dataclass(frozen=True)
class RuleSpec:
    deck: DeckSpec
    indexing: Indexing = Indexing.RELATIVE
    fixture_table: Mapping[Pile, FixtureEntry] = field(default_factory=dict)
    court_free: bool = False

    @property
    def is_relative(self) -> bool:
        return self.indexing is Indexing.RELATIVE

    def __hash__(self) -> int:
        return hash((self.deck, self.indexing, self.court_free, tuple(sorted(self.fixture_table.items(), key=repr))))


@dataclass(frozen=True)
class PileAnnotation:
    owners: tuple[RelativePlayer, ...]
    """Owner of each card, in play order (oldest first)."""
    mode_trace: tuple[int, ...]
    """Outstanding payment debt after each card, in play order."""


class RuleError(ValueError):
    """A pile the rule function is not defined on."""


class PaymentMachine:
    """Incremental evaluation of a penalty rule over one trick."""

    def __init__(self, deck: DeckSpec) -> None:
        self.deck = deck
        self.next_player = RelativePlayer.STARTER
        self.debt = 0
        self.court_owner: RelativePlayer | None = None

    def push(self, card: Card) -> RuleDecision:
        player = self.next_player
        penalty = self.deck.penalty(card)
        if penalty > 0:
            self.debt = penalty
            self.court_owner = player
            self.next_player = player.other
        elif self.debt == 0:
            self.next_player = player.other
        else:
            self.debt -= 1
            if self.debt == 0:
                assert self.court_owner is not None
                return RuleDecision(Verdict.FINISH, self.court_owner)
        return RuleDecision(Verdict.CONTINUE, self.next_player)


class FixtureMachine:
    """Incremental lookup in an explicit decision table."""

    def __init__(self, rules: RuleSpec, starter: int | None) -> None:
        self.rules = rules
        self.starter = starter
        self.pile: Pile = ()

    def push(self, card: Card) -> RuleDecision:
        self.pile = (card,) + self.pile
        entry = self.rules.fixture_table.get(self.pile)
        if entry is None:
            shown = ",".join(self.rules.deck.label(c) for c in self.pile)
            raise RuleError(f"fixture table has no entry for pile [{shown}]")
        who = entry.who
        if not isinstance(who, RelativePlayer):
            if self.starter is None:
                raise RuleError("absolute fixture entry needs the trick's starter")
            who = relative(who, self.starter)
        return RuleDecision(entry.verdict, who)


def machine(rules: RuleSpec, starter: int | None = None) -> PaymentMachine | FixtureMachine:
    if rules.is_relative:
        return PaymentMachine(rules.deck)
    return FixtureMachine(rules, starter)


def _replay(rules: RuleSpec, pile: Pile, starter: int | None) -> tuple[RuleDecision, PileAnnotation]:
    if not pile:
        raise RuleError("the rule function is undefined on an empty pile")
    if len(set(pile)) != len(pile):
        raise RuleError("pile contains a card twice")
    for card in pile:
        if not rules.deck.contains(card):
            raise RuleError(f"card {card} is not in the deck")
    m = machine(rules, starter)
    owners = []
    trace = []
    who = RelativePlayer.STARTER
    play_order = pile[::-1]
    decision = None
    for i, card in enumerate(play_order):
        if decision is not None:
            raise RuleError(
                f"inconsistent pile: the trick already finished after {i} of {len(pile)} cards"
            )
        owners.append(who)
        d = m.push(card)
        trace.append(m.debt if isinstance(m, PaymentMachine) else 0)
        if d.verdict is Verdict.FINISH:
            decision = d
        else:
            who = d.who
    final = decision if decision is not None else RuleDecision(Verdict.CONTINUE, who)
    return final, PileAnnotation(tuple(owners), tuple(trace))


def evaluate(rules: RuleSpec, pile: Pile, starter: int | None = None) -> RuleDecision:
    """Decide the next action for a table pile written most-recent-first.

    Only piles whose every proper prefix continues (those reachable in play)
    are accepted; anything else raises :class:`RuleError`.
    """
    return _replay(rules, pile, starter)[0]


def annotate(rules: RuleSpec, pile: Pile, starter: int | None = None) -> PileAnnotation:
    return _replay(rules, pile, starter)[1]


def _fixture_gaps(rules: RuleSpec, limit: int = 200_000) -> list[str]:
    """Reachable piles with no table entry, found by depth-first extension."""
    deck = rules.deck
    cards = deck.cards
    missing: list[str] = []
    visited = 0
    stack: list[Pile] = [(c,) for c in cards]
    while stack:
        pile = stack.pop()
        visited += 1
        if visited > limit:
            missing.append(f"totality check stopped after {limit} piles")
            break
        entry = rules.fixture_table.get(pile)
        if entry is None:
            missing.append(",".join(deck.label(c) for c in pile))
            continue
        if entry.verdict is Verdict.CONTINUE and len(pile) < len(cards):
            stack.extend((c,) + pile for c in cards if c not in pile)
    return missing


def validate(rules: RuleSpec) -> list[str]:
    """Diagnostics for a rule spec; an empty list means it is usable."""
    out = list(rules.deck.problems())
    if rules.is_relative:
        if rules.fixture_table:
            out.append("fixture_table is only used with absolute_fixture indexing")
        if not rules.court_free and not any(r.penalty > 0 for r in rules.deck.ranks):
            out.append("no rank has a positive penalty; set court_free to allow a pure alternation game")
        return out
    if not rules.fixture_table:
        out.append("partial fixture table: absolute_fixture indexing needs a fixture_table")
        return out
    for pile, entry in rules.fixture_table.items():
        if not all(rules.deck.contains(c) for c in pile):
            out.append("fixture entry refers to a card outside the deck")
        if not isinstance(entry.who, RelativePlayer) and entry.who not in (1, 2):
            out.append(f"fixture entry names player {entry.who!r}; expected starter, opponent, 1 or 2")
    if out:
        return out
    gaps = _fixture_gaps(rules)
    if gaps:
        shown = "; ".join(f"[{g}]" for g in gaps[:5])
        more = f" and {len(gaps) - 5} more" if len(gaps) > 5 else ""
        out.append(f"partial fixture table: no entry for reachable pile(s) {shown}{more}")
    return out


CLASSICAL_ORDINARY = ("Two", "Three", "Four", "Five", "Six", "Seven", "Eight", "Nine", "Ten")


def classical_deck() -> DeckSpec:
    """52 cards: nine ordinary ranks, then J, Q, K, A owing 1, 2, 3, 4 cards."""
    ordinary = [Rank(name, 4, 0) for name in CLASSICAL_ORDINARY]
    courts = [Rank("J", 4, 1), Rank("Q", 4, 2), Rank("K", 4, 3), Rank("A", 4, 4)]
    return DeckSpec(tuple(ordinary + courts))


def classical() -> RuleSpec:
    return RuleSpec(classical_deck())


def penalty_rules(*ranks: tuple[str, int, int]) -> RuleSpec:
    """Relative rules over a small deck given as ``(name, count, penalty)`` rows."""
    deck = DeckSpec.from_table(ranks)
    return RuleSpec(deck, court_free=not any(p > 0 for _, _, p in ranks))


def mini1() -> RuleSpec:
    """Three cards: one penalty-1 card ``P0`` and two ordinary cards ``N0``, ``N1``."""
    return penalty_rules(("P", 1, 1), ("N", 2, 0))


def stuck() -> RuleSpec:
    """Two cards ``X0``, ``Y0``; every one-card pile finishes for its starter.

    Both ``([X0],[Y0])`` and ``([Y0],[X0])`` map to themselves under either
    starter, so the nondegeneracy condition fails there.
    """
    deck = DeckSpec((Rank("X", 1, 0), Rank("Y", 1, 0)))
    table = {
        (card,): FixtureEntry(Verdict.FINISH, RelativePlayer.STARTER) for card in deck.cards
    }
    return RuleSpec(deck, Indexing.ABSOLUTE_FIXTURE, table)
