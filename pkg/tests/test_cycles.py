import pytest

from bmn.core import SeedSpec, Split, deal
from bmn.cycles import (
    CycleOutcome,
    DeterministicConfig,
    Kind,
    PickupOrder,
    deterministic_trick,
    play_deterministic,
    search_cycles,
    verify_cycle,
)
from bmn.rules import penalty_rules

from decks import PN2, STUCK

PP, PN = PN2.deck.cards
X, Y = STUCK.deck.cards
PLAYED = DeterministicConfig(PickupOrder.PLAYED_ORDER)
REVERSE = DeterministicConfig(PickupOrder.REVERSE_PLAYED_ORDER)

# Eighteen cards with four court ranks: non-terminating deals are common enough to sample.
SMALL = penalty_rules(("J", 2, 1), ("Q", 2, 2), ("K", 2, 3), ("A", 2, 4), ("N", 10, 0))
# Decks where cycles show up often enough to compare every deal against an oracle.
LOOPY = {
    "played": (penalty_rules(("J", 2, 1), ("N", 8, 0)), 400),
    "reverse": (penalty_rules(("J", 2, 1), ("Q", 2, 2), ("N", 8, 0)), 3_000),
}


def visited_map_outcome(rules, split, config):
    """Pre-period and period from a dictionary of every visited state (memory-hungry oracle)."""
    seen = {}
    state, leader = split, config.first_leader
    k = 0
    while True:
        if state.is_absorbing:
            return None
        key = (state, leader)
        if key in seen:
            mu = seen[key]
            return mu, k - mu
        seen[key] = k
        nxt, player, _ = deterministic_trick(rules, state, leader, config)
        if not isinstance(nxt, Split):
            return None
        state, leader = nxt, player
        k += 1


def test_two_card_game():
    out = play_deterministic(PN2, Split((PP,), (PN,)), PLAYED)
    assert out == CycleOutcome(Kind.TERMINATED, 1, 2)


def test_pickup_orders():
    nxt_played, winner, moves = deterministic_trick(PN2, Split((PP,), (PN,)), 1, PLAYED)
    assert (winner, moves) == (1, 2)
    assert nxt_played == Split((PP, PN), ())
    nxt_rev, _, _ = deterministic_trick(PN2, Split((PP,), (PN,)), 1, REVERSE)
    assert nxt_rev == Split((PN, PP), ())


def test_stuck_cycle():
    out = play_deterministic(STUCK, Split((X,), (Y,)), PLAYED)
    assert out.kind is Kind.CYCLE
    assert (out.preperiod, out.period, out.moves) == (0, 1, 1)
    assert out.witness == Split((X,), (Y,)) and out.witness_leader == 1
    assert verify_cycle(STUCK, out.witness, out.witness_leader, out.period, PLAYED)


def test_stuck_search_always_cycles():
    report = search_cycles(STUCK, 50, master_seed=3, config=PLAYED, left_size=1)
    assert report.cycles == 50 and report.frequency == 1.0
    assert all(e["period"] == 1 and e["verified"] for e in report.examples)


@pytest.mark.parametrize("config", [PLAYED, REVERSE], ids=["played", "reverse"])
def test_brent_matches_visited_map(config):
    rules, deals = LOOPY[config.pickup_order.value]
    found_cycle = False
    for i in range(deals):
        split = deal(rules.deck, rules.deck.size // 2, SeedSpec(1, i))
        out = play_deterministic(rules, split, config)
        oracle = visited_map_outcome(rules, split, config)
        if oracle is None:
            assert out.kind is Kind.TERMINATED
            continue
        found_cycle = True
        assert out.kind is Kind.CYCLE
        assert (out.preperiod, out.period) == oracle
        assert verify_cycle(rules, out.witness, out.witness_leader, out.period, config)
        assert not verify_cycle(rules, out.witness, out.witness_leader, out.period + 1, config)
    assert found_cycle


@pytest.mark.parametrize("config", [PLAYED, REVERSE], ids=["played", "reverse"])
def test_compiled_search_matches_python(config):
    a = search_cycles(SMALL, 1_500, master_seed=4, config=config, backend="compiled")
    b = search_cycles(SMALL, 1_500, master_seed=4, config=config, backend="python")
    assert a.to_json() == b.to_json()


def test_small_deck_search_reports_verified_cycles():
    report = search_cycles(SMALL, 3_000, master_seed=1, config=PLAYED)
    assert report.cycles >= 1
    assert report.terminated + report.cycles == 3_000
    for example in report.examples:
        assert example["verified"] and example["period"] >= 1


def test_classical_backends_agree(classical_rules):
    for config in (PLAYED, REVERSE):
        a = search_cycles(classical_rules, 150, master_seed=2, config=config, backend="compiled")
        b = search_cycles(classical_rules, 150, master_seed=2, config=config, backend="python")
        assert a.to_json() == b.to_json()


def test_deterministic_repeatable(classical_rules):
    split = deal(classical_rules.deck, 26, SeedSpec(5, 5))
    assert play_deterministic(classical_rules, split, PLAYED) == play_deterministic(classical_rules, split, PLAYED)


def test_second_leader_config():
    out = play_deterministic(PN2, Split((PP,), (PN,)), DeterministicConfig(first_leader=2))
    # Player 2 leads N, player 1 lays P, player 2 has nothing left to pay with.
    assert out == CycleOutcome(Kind.TERMINATED, 1, 2)


def test_search_independent_of_workers():
    rules, _ = LOOPY["played"]
    a = search_cycles(rules, 600, master_seed=9, config=PLAYED, workers=1)
    b = search_cycles(rules, 600, master_seed=9, config=PLAYED, workers=2)
    assert a.cycles > 0
    assert a.to_json() == b.to_json()
