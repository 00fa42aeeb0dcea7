import itertools
import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from bmn.core import (
    Card,
    DeckSpec,
    Rank,
    SeedSpec,
    Split,
    StateSpaceTooLarge,
    conserves,
    deal,
    decode_state,
    encode_state,
    enumerate_splits,
    shuffle_pile,
)
from bmn.rules import classical_deck


def plain_deck(n):
    return DeckSpec((Rank("N", n, 0),)) if n else DeckSpec(())


def brute_force_splits(cards):
    """Every (ordered subset, ordered complement) pair, built independently of enumerate_splits."""
    out = set()
    for k in range(len(cards) + 1):
        for chosen in itertools.combinations(cards, k):
            rest = [c for c in cards if c not in chosen]
            for left in itertools.permutations(chosen):
                for right in itertools.permutations(rest):
                    out.add(Split(left, right))
    return out


def test_one_card_deck_has_two_splits():
    deck = plain_deck(1)
    (x,) = deck.cards
    assert list(enumerate_splits(deck)) == [Split((), (x,)), Split((x,), ())]


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_enumeration_matches_brute_force(n):
    deck = DeckSpec((Rank("P", 1, 1), Rank("N", n - 1, 0))) if n > 1 else plain_deck(1)
    splits = list(enumerate_splits(deck))
    assert len(splits) == len(set(splits))
    assert set(splits) == brute_force_splits(deck.cards)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_enumeration_count_is_factorial(n):
    count = sum(1 for _ in enumerate_splits(plain_deck(n)))
    by_sum = sum(math.comb(n, k) * math.factorial(k) * math.factorial(n - k) for k in range(n + 1))
    assert count == by_sum == math.factorial(n + 1)


def test_enumeration_cap():
    with pytest.raises(StateSpaceTooLarge, match="3,628,800"):
        next(enumerate_splits(plain_deck(9)))
    with pytest.raises(StateSpaceTooLarge, match="40,320"):
        next(enumerate_splits(plain_deck(7), cap=6))


def test_shuffle_trivial_piles():
    seed = SeedSpec(1, 2)
    assert shuffle_pile((), seed) == ()
    card = Card(0, 0)
    assert shuffle_pile((card,), seed) == (card,)


def test_shuffle_three_cards_uniform():
    pile = plain_deck(3).cards
    counts = Counter(shuffle_pile(pile, SeedSpec(7, i)) for i in range(60_000))
    assert len(counts) == 6
    assert chisquare(list(counts.values())).pvalue > 0.001


@given(st.integers(0, 8), st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
@settings(max_examples=60)
def test_shuffle_is_a_pure_permutation(n, master, stream):
    pile = plain_deck(n).cards
    seed = SeedSpec(master, stream)
    out = shuffle_pile(pile, seed)
    assert sorted(out) == sorted(pile)
    assert shuffle_pile(pile, seed) == out


def test_deal_forced_left_empty():
    deck = DeckSpec((Rank("P", 1, 1), Rank("N", 1, 0)))
    orders = Counter(deal(deck, 0, SeedSpec(3, i)) for i in range(2_000))
    assert all(not s.left for s in orders)
    assert {s.right for s in orders} == set(itertools.permutations(deck.cards))


@pytest.mark.parametrize("n, expected_splits", [(2, 2), (3, 6), (4, 24)])
def test_deal_one_card_uniform(n, expected_splits):
    deck = plain_deck(n)
    counts = Counter(deal(deck, 1, SeedSpec(11, i)) for i in range(12_000 * expected_splits // 2))
    # |L| = 1 leaves n choices for the left card and (n-1)! orders on the right.
    assert len(counts) == expected_splits == n * math.factorial(n - 1)
    assert chisquare(list(counts.values())).pvalue > 0.001


def test_deal_52():
    deck = classical_deck()
    split = deal(deck, 26, SeedSpec(0, 0))
    assert len(split.left) == len(split.right) == 26
    assert conserves(deck, split.left, split.right)
    assert deal(deck, 26, SeedSpec(0, 0)) == split
    assert deal(deck, 26, SeedSpec(0, 1)) != split


def test_deal_range_checked():
    with pytest.raises(ValueError, match="left_size"):
        deal(plain_deck(2), 3, SeedSpec(0))


def test_deck_problems():
    assert DeckSpec(()).problems() == ["empty deck: total card count must be at least 1"]
    assert any("negative penalty" in p for p in DeckSpec((Rank("J", 1, -1),)).problems())
    assert any("letters" in p for p in DeckSpec((Rank("N1", 1, 0),)).problems())
    assert any("duplicate" in p for p in DeckSpec((Rank("N", 1, 0), Rank("N", 2, 0))).problems())
    assert classical_deck().problems() == []


def test_state_encoding_round_trip():
    deck = DeckSpec((Rank("J", 1, 1), Rank("N", 4, 0), Rank("Q", 2, 2)))
    for split in itertools.islice(enumerate_splits(deck, cap=7), 0, 40_320, 997):
        text = encode_state(deck, split)
        assert decode_state(deck, text) == split
    j0, n3, q1 = deck.card("J0"), deck.card("N3"), deck.card("Q1")
    rest = tuple(c for c in deck.cards if c not in (j0, n3, q1))
    state = Split((j0, n3), (q1,) + rest)
    assert encode_state(deck, state).startswith("L:J0,N3|R:Q1")


def test_decode_rejects_bad_states():
    deck = plain_deck(2)
    with pytest.raises(ValueError):
        decode_state(deck, "L:N0|R:N0")
    with pytest.raises(ValueError):
        decode_state(deck, "L:N0|R:")
    with pytest.raises(ValueError):
        decode_state(deck, "nonsense")
