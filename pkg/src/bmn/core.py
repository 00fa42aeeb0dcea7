"""Cards, piles, decks, deals and the seeded-randomness contract.

Piles are plain tuples of :class:`Card` with index 0 on top: for a player's
deck that is the next card drawn, for a table pile it is the card placed
most recently.  Prepending a played card and appending a taken pile to the
bottom of a deck are then ordinary tuple concatenations.
"""

from __future__ import annotations

import itertools
import math
import re
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

DEFAULT_ENUMERATION_CAP = 8

_RANK_NAME = re.compile(r"^[A-Za-z_][A-Za-z_]*$")


class StateSpaceTooLarge(ValueError):
    """Raised when a deck is too big to enumerate its splits."""


@dataclass(frozen=True, order=True)
class Card:
    rank_id: int
    copy_id: int


Pile = tuple[Card, ...]


@dataclass(frozen=True)
class Rank:
    name: str
    count: int
    penalty: int = 0


@dataclass(frozen=True)
class DeckSpec:
    """A multiset of ranks; every physical card is distinguishable.

    Card ``(rank_id, copy_id)`` is printed as the rank name followed by the
    copy index, e.g. ``J0`` or ``N3``.  Rank names are therefore restricted
    to letters and underscores so labels parse unambiguously.
    """

    ranks: tuple[Rank, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranks", tuple(self.ranks))

    @classmethod
    def from_table(cls, table: Iterable[tuple[str, int, int] | dict[str, Any]]) -> DeckSpec:
        ranks = []
        for row in table:
            if isinstance(row, dict):
                ranks.append(Rank(row["name"], int(row["count"]), int(row.get("penalty", 0))))
            else:
                name, count, penalty = row
                ranks.append(Rank(name, int(count), int(penalty)))
        return cls(tuple(ranks))

    @property
    def size(self) -> int:
        return sum(r.count for r in self.ranks)

    @property
    def cards(self) -> Pile:
        return tuple(
            Card(rank_id, copy_id)
            for rank_id, rank in enumerate(self.ranks)
            for copy_id in range(rank.count)
        )

    def penalty(self, card: Card) -> int:
        return self.ranks[card.rank_id].penalty

    def contains(self, card: Card) -> bool:
        return 0 <= card.rank_id < len(self.ranks) and 0 <= card.copy_id < self.ranks[card.rank_id].count

    def label(self, card: Card) -> str:
        return f"{self.ranks[card.rank_id].name}{card.copy_id}"

    def card(self, label: str) -> Card:
        """Inverse of :meth:`label`."""
        match = re.fullmatch(r"([A-Za-z_]+)(\d+)", label.strip())
        if match is None:
            raise ValueError(f"malformed card label {label!r}")
        name, copy = match.group(1), int(match.group(2))
        for rank_id, rank in enumerate(self.ranks):
            if rank.name == name:
                card = Card(rank_id, copy)
                if not self.contains(card):
                    raise ValueError(f"card {label!r} is not in the deck")
                return card
        raise ValueError(f"unknown rank in card label {label!r}")

    def problems(self) -> list[str]:
        out = []
        if self.size < 1:
            out.append("empty deck: total card count must be at least 1")
        names = [r.name for r in self.ranks]
        for name, seen in Counter(names).items():
            if seen > 1:
                out.append(f"duplicate rank name {name!r}")
        for r in self.ranks:
            if not _RANK_NAME.match(r.name):
                out.append(f"rank name {r.name!r} must consist of letters or underscores")
            if r.count < 1:
                out.append(f"rank {r.name!r}: count must be positive, got {r.count}")
            if r.penalty < 0:
                out.append(f"rank {r.name!r}: negative penalty {r.penalty}")
        return out


@dataclass(frozen=True)
class Split:
    """A between-tricks state: player 1's deck ``left`` and player 2's ``right``."""

    left: Pile
    right: Pile

    @property
    def is_absorbing(self) -> bool:
        return not self.left or not self.right

    def deck(self, player: int) -> Pile:
        return self.left if player == 1 else self.right


@dataclass(frozen=True)
class SinkId:
    """Game ended mid-trick because ``loser`` could not play."""

    loser: int


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(seq))


def fisher_yates(items: Sequence[Any], rng: np.random.Generator) -> list[Any]:
    """Uniform shuffle driven only by ``rng.random()``.

    Restricting the draws to doubles keeps the stream consumption identical
    in the compiled kernels, which take the same generator object.
    """
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        out[i], out[j] = out[j], out[i]
    return out


def shuffle_pile(pile: Pile, seed: SeedSpec) -> Pile:
    return tuple(fisher_yates(pile, seed.generator()))


def deal_with(deck: DeckSpec, left_size: int, rng: np.random.Generator) -> Split:
    n = deck.size
    if not 0 <= left_size <= n:
        raise ValueError(f"left_size must lie in [0, {n}], got {left_size}")
    order = tuple(fisher_yates(deck.cards, rng))
    return Split(order[:left_size], order[left_size:])


def deal(deck: DeckSpec, left_size: int, seed: SeedSpec) -> Split:
    """Uniformly random split with ``left_size`` cards for player 1."""
    return deal_with(deck, left_size, seed.generator())


def state_count(n: int) -> int:
    return math.factorial(n + 1)


def enumerate_splits(deck: DeckSpec, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[Split]:
    """Yield every ordered split of the deck exactly once.

    Each split is a permutation of all cards plus a cut point, and that
    correspondence is one-to-one, so there are ``(n + 1)!`` of them.
    """
    n = deck.size
    if n > cap:
        raise StateSpaceTooLarge(
            f"state space too large: {n} cards give {state_count(n):,} splits (cap is {cap} cards)"
        )
    cards = deck.cards
    for perm in itertools.permutations(cards):
        for cut in range(n + 1):
            yield Split(perm[:cut], perm[cut:])


def conserves(deck: DeckSpec, *piles: Pile) -> bool:
    """True when the piles together hold each card of the deck exactly once."""
    held = [c for pile in piles for c in pile]
    return len(held) == deck.size and set(held) == set(deck.cards)


def encode_pile(deck: DeckSpec, pile: Pile) -> str:
    return ",".join(deck.label(c) for c in pile)


def encode_state(deck: DeckSpec, state: Split | SinkId) -> str:
    """Canonical text form, e.g. ``"L:J0,N3|R:Q1"`` or ``"SINK:2"``."""
    if isinstance(state, SinkId):
        return f"SINK:{state.loser}"
    return f"L:{encode_pile(deck, state.left)}|R:{encode_pile(deck, state.right)}"


def decode_pile(deck: DeckSpec, text: str) -> Pile:
    text = text.strip()
    if not text:
        return ()
    return tuple(deck.card(part) for part in text.split(","))


def decode_state(deck: DeckSpec, text: str) -> Split | SinkId:
    text = text.strip()
    if text.startswith("SINK:"):
        return SinkId(int(text[5:]))
    match = re.fullmatch(r"L:(.*)\|R:(.*)", text)
    if match is None:
        raise ValueError(f"malformed state encoding {text!r}")
    split = Split(decode_pile(deck, match.group(1)), decode_pile(deck, match.group(2)))
    if not conserves(deck, split.left, split.right):
        raise ValueError(f"state {text!r} does not hold every card of the deck exactly once")
    return split
