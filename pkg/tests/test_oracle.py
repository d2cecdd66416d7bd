import itertools
import math
from fractions import Fraction

import pytest

from orwalk.lattice import EnvironmentSpec, out_neighbors
from orwalk.oracle import (BudgetExceeded, LemmaCounterexample, catalan, enumerate_excursions,
                           enumerated_prob_X_sigma1_zero, exact_distribution, exact_return_mass, lazy_vertical_law,
                           nb_difference_zero, _verify, oracle_rows, verify_delta_lemma_H, verify_delta_lemma_L)
from orwalk.skeleton import delta_at_sigma

L, H = EnvironmentSpec.alternate(), EnvironmentSpec.half_plane()
ENVS = [L, H, EnvironmentSpec.rademacher(1), EnvironmentSpec.periodic([1, -1, -1])]


def brute_force_law(env, n):
    law = {}
    for choice in itertools.product(range(3), repeat=n):
        v = (0, 0)
        for c in choice:
            v = out_neighbors(env, v)[c]
        law[v] = law.get(v, 0) + Fraction(1, 3**n)
    return law


@pytest.mark.parametrize("env", ENVS, ids=lambda e: e.label)
def test_dp_matches_path_enumeration(env):
    for n in (1, 4, 7):
        assert exact_distribution(env, (0, 0), n).mass == brute_force_law(env, n)


def test_two_step_origin_mass_alternate():
    assert exact_distribution(L, (0, 0), 2).prob((0, 0)) == Fraction(2, 9)


@pytest.mark.parametrize("env", ENVS, ids=lambda e: e.label)
def test_mass_conserved_and_y_marginal(env):
    dist = exact_distribution(env, (0, 0), 12)
    assert dist.total() == 1
    assert dist.y_marginal() == lazy_vertical_law(12)


def test_return_mass_running_sums():
    masses, cumulative = exact_return_mass(L, 6)
    assert masses[1] == (2, Fraction(2, 9))
    assert masses[0][1] == 0 and masses[2][1] == 0
    assert cumulative[-1] == sum(m for _, m in masses)
    law4 = brute_force_law(L, 4)
    assert masses[3][1] == law4.get((0, 0), 0)


def test_budget_guard():
    with pytest.raises(BudgetExceeded):
        exact_distribution(L, (0, 0), 31)
    with pytest.raises(BudgetExceeded):
        exact_return_mass(L, 0)


def test_excursion_enumeration_counts():
    for length in (2, 4, 6, 8, 10):
        paths = [p for p, _ in enumerate_excursions(length) if len(p) - 1 == length]
        assert len(paths) == 2 * catalan(length // 2 - 1)
        assert all(p[0] == 0 and p[-1] == 0 and 0 not in p[1:-1] for p in paths)
    total = sum(w for _, w in enumerate_excursions(12))
    assert total == 1 - Fraction(math.comb(12, 6), 2**12)


def test_nb_difference_zero_small_cases():
    # P(G1 = G2) for two geometric(2/3) bursts = p^2 / (1 - q^2) = 1/2
    assert nb_difference_zero(1, 1) == pytest.approx(0.5, abs=1e-14)
    assert nb_difference_zero(2, 0) == pytest.approx(4 / 9)
    direct = sum((2 / 3) ** 2 * (1 / 3) ** (2 * k) * (k + 1) * (2 / 3) for k in range(200))
    assert nb_difference_zero(2, 1) == pytest.approx(direct, rel=1e-12)


def test_enumerated_first_return_bounds():
    low, tail = enumerated_prob_X_sigma1_zero(L, 40)
    assert low <= 1 / 3 <= low + tail
    low, tail = enumerated_prob_X_sigma1_zero(H, 40)
    closed = 0.5 * ((1 - math.sqrt(1 - (2 / 3) ** 2)) + 8 / 9 * (1 - math.sqrt(1 - (3 / 4) ** 2)))
    assert low <= closed <= low + tail
    assert closed - low < 1e-7


def test_delta_lemmas_hold():
    rep = verify_delta_lemma_L(max_len=12, pair_total=10, n_random=5000)
    assert rep.single_checked > 0 and rep.pairs_checked > 0 and rep.random_checked == 5000
    rep = verify_delta_lemma_H(max_len=12, pair_total=10, n_random=5000)
    assert rep.passed


def test_counterexample_is_reported_for_wrong_environment():
    # a period-3 environment breaks the alternate-lattice identity; the verifier must name a path
    bad = EnvironmentSpec.periodic([1, 1, -1])
    with pytest.raises(LemmaCounterexample) as info:
        _verify(bad, "L", 8, 6, 0, 200, 0)
    path = info.value.path
    assert path[0] == 0 and path[-1] == 0
    assert delta_at_sigma(bad, path, 1) != 0


def test_oracle_rows_exact_strings():
    rows = oracle_rows(exact_distribution(L, (0, 0), 1))
    assert sorted(rows) == sorted([(0, 1, "1/3"), (0, -1, "1/3"), (1, 0, "1/3")])


def test_documented_distributions():
    assert exact_distribution(L, (0, 0), 1).mass == {(0, 1): Fraction(1, 3), (0, -1): Fraction(1, 3),
                                                      (1, 0): Fraction(1, 3)}
    for env in ENVS:
        for n in range(13):
            dist = exact_distribution(env, (2, -3), n)
            assert dist.total() == 1
            assert all(c > 0 for c in dist.counts.values())
            assert all(abs(v.x - 2) + abs(v.y + 3) <= n for v in dist.counts)
        assert abs(sum(exact_distribution(env, (0, 0), 9).float_mass().values()) - 1) < 1e-12


def test_return_mass_parity_and_comparison():
    masses_l, cum_l = exact_return_mass(L, 20)
    masses_h, cum_h = exact_return_mass(H, 20)
    assert all(m == 0 for n, m in masses_l + masses_h if n % 2)
    assert cum_l[-1] > cum_h[-1]


def test_documented_excursion_lists():
    assert sorted(p for p, _ in enumerate_excursions(2)) == [(0, -1, 0), (0, 1, 0)]
    assert sum(1 for p, _ in enumerate_excursions(4) if len(p) == 5) == 2 * catalan(1)
    for max_len in (2, 8, 16):
        total = sum(w for _, w in enumerate_excursions(max_len))
        k = max_len // 2
        assert total == 1 - Fraction(math.comb(2 * k, k), 4**k)


def test_documented_excursion_deltas():
    for p, _ in enumerate_excursions(2):
        assert delta_at_sigma(L, p, 1) == 0
    assert delta_at_sigma(H, (0, 1, 0), 1) == 1 * 1 + 1
    assert delta_at_sigma(H, (0, -1, 0), 1) == -1 * 1 + 1


def test_full_budget_delta_lemmas():
    rep_l = verify_delta_lemma_L(16, 12, 100_000)
    rep_h = verify_delta_lemma_H(16, 12, 100_000)
    assert rep_l.single_checked == rep_h.single_checked == sum(2 * catalan(k - 1) for k in range(1, 9))
    assert rep_l.random_checked == rep_h.random_checked == 100_000
