import numpy as np
import pytest

from bmn.chain import deal_expectation
from bmn.simulate import histogram, monte_carlo, run_replicas

from decks import JQ4, MINI1, PN2, STUCK


def test_two_card_deck_always_two_moves():
    stats = monte_carlo(PN2, 1, 0.37, 10_000, master_seed=5)
    assert stats.mean_moves == 2.0
    assert stats.stderr_moves == 0.0
    assert stats.capped == 0 and stats.terminated == 10_000
    assert stats.wins[1] + stats.wins[2] == 10_000


def test_mc_agrees_with_exact_mini1():
    stats = monte_carlo(MINI1, 1, 0.5, 20_000, master_seed=17)
    exact = deal_expectation(MINI1, 0.5, 1)
    assert abs(stats.mean_moves - exact) <= 3 * stats.stderr_moves


def test_same_stats_for_any_worker_count():
    a = monte_carlo(JQ4, 2, 0.6, 3_000, master_seed=99, workers=1)
    b = monte_carlo(JQ4, 2, 0.6, 3_000, master_seed=99, workers=3)
    assert a == b


@pytest.mark.parametrize("rules, left", [(MINI1, 1), (JQ4, 2)], ids=["mini1", "jq4"])
def test_compiled_and_python_backends_identical(rules, left):
    a = run_replicas(rules, left, 0.45, 3, 0, 500, 10**6, backend="compiled")
    b = run_replicas(rules, left, 0.45, 3, 0, 500, 10**6, backend="python")
    np.testing.assert_array_equal(a, b)


def test_compiled_and_python_backends_identical_classical(classical_rules):
    a = run_replicas(classical_rules, 26, 0.5, 12, 0, 60, 10**7, backend="compiled")
    b = run_replicas(classical_rules, 26, 0.5, 12, 0, 60, 10**7, backend="python")
    np.testing.assert_array_equal(a, b)


def test_compiled_backend_honours_cap(classical_rules):
    a = run_replicas(classical_rules, 26, 0.5, 12, 0, 60, 50, backend="compiled")
    b = run_replicas(classical_rules, 26, 0.5, 12, 0, 60, 50, backend="python")
    np.testing.assert_array_equal(a, b)
    assert a[:, 3].any()
    assert (a[a[:, 3] == 1, 1] == 50).all()


def test_fixture_rules_use_python_backend():
    stats = monte_carlo(STUCK, 1, 0.5, 20, master_seed=0, move_cap=25)
    assert stats.capped == 20 and stats.max_moves == 25
    with pytest.raises(ValueError, match="compiled"):
        run_replicas(STUCK, 1, 0.5, 0, 0, 1, 10, backend="compiled")


def test_histogram_two_card_deck():
    assert histogram(PN2, 1, 0.5, 1_000, 3, bucket_width=1) == [(2, 1_000)]


def test_histogram_sums_and_repeats():
    h = histogram(JQ4, 2, 0.5, 2_000, 8, bucket_width=3)
    assert sum(c for _, c in h) == 2_000
    assert all(c > 0 and b % 3 == 0 for b, c in h)
    assert h == histogram(JQ4, 2, 0.5, 2_000, 8, bucket_width=3)


def test_argument_checks():
    with pytest.raises(ValueError):
        monte_carlo(MINI1, 1, 0.0, 10, 0)
    with pytest.raises(ValueError):
        monte_carlo(MINI1, 1, 0.5, 0, 0)
    with pytest.raises(ValueError):
        monte_carlo(MINI1, 4, 0.5, 10, 0)
