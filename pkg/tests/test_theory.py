import numpy as np
import pytest

from desdis.core import RngStream
from desdis.sdis import cosine_similarity
from desdis import theory as T
from desdis.variation import mutation_probability


def test_recursion_zero():
    series, fp = T.violation_recursion(0.0, 20)
    assert np.all(series == 0) and fp == 0


@pytest.mark.parametrize("F", np.linspace(0.05, 1.0, 20))
def test_recursion_limit_in_bounds(F):
    _, fp = T.violation_recursion(F, 10)
    assert F / 3 <= fp <= 2 * F / 3


def test_recursion_fixed_point_099():
    fp = T.violation_fixed_point(0.99)
    assert 0.33 <= fp <= 0.66
    assert T.violation_step(fp, 0.99) == pytest.approx(fp, abs=1e-12)


def test_recursion_range_check():
    with pytest.raises(ValueError):
        T.violation_recursion(1.5, 5)


def test_single_generation_rate_is_F_over_3():
    assert T.simulate_violation_probability(0.6, 10**6, RngStream(1)) == pytest.approx(0.2, abs=0.002)


def test_expected_correction_distance():
    assert T.expected_correction_distance(0.5, 0.0, [1, 2]) == 0.0
    assert T.expected_correction_distance(1.0, 1.0, [0.3, 0.4]) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        T.expected_correction_distance(1.2, 0.1, [1.0])


@pytest.mark.parametrize("p_m, p_v", [(0.3, 0.2), (0.8, 0.5)])
def test_correction_distance_monte_carlo(p_m, p_v):
    deltas = [0.1, 0.5, 0.2, 0.9]
    mean, se = T.simulate_correction_distance(p_m, p_v, deltas, 200000, RngStream(4))
    assert abs(mean - T.expected_correction_distance(p_m, p_v, deltas)) < 3 * se


def test_mirror_variance_values():
    assert T.mirror_corrected_variance(0.5) == pytest.approx(0.15)
    assert T.mirror_corrected_variance(1.0) == pytest.approx(0.1)
    with pytest.warns(T.TheoryRangeWarning):
        T.mirror_corrected_variance(0.2)


@pytest.mark.parametrize("F", [0.5, 0.8])
def test_overshoot_moments(F):
    rng = RngStream(5)
    x = rng.random((3, 10**6))
    z = x[0] + F * (x[1] - x[2])
    up = z[z > 1]
    mom = T.overshoot_moments(F)
    assert up.mean() == pytest.approx(mom["mean_upper"], abs=0.003)
    assert z[z < 0].mean() == pytest.approx(mom["mean_lower"], abs=0.003)
    assert up.var() == pytest.approx(mom["var"], abs=0.002)
    h = F / 10000
    mids = 1 + h * (np.arange(10000) + 0.5)
    assert float(T.overshoot_density(mids, F).sum() * h) == pytest.approx(1.0, abs=1e-6)


def test_beta_ratio_sat_uni():
    p_m, p_v, N = 0.5, 0.2, 100
    sat = T.beta_term(p_m, p_v, N, *T.sdis_moments("SAT"), 0.5)
    uni = T.beta_term(p_m, p_v, N, *T.sdis_moments("UNI"), 0.5)
    assert sat / uni == pytest.approx(3.0)
    assert T.beta_term(p_m, 0.0, N, 0.5, 0.25, 0.5) == 0.0


def test_beta_mirror_first_term_factor_four():
    p_m, p_v, N, mu = 0.5, 0.2, 100, 0.3
    # zero the variance to isolate the mean-dependent term
    mir = T.beta_term(p_m, p_v, N, T.sdis_moments("MIR", 0.75, mu)[0], 0.0, mu)
    sat = T.beta_term(p_m, p_v, N, T.sdis_moments("SAT")[0], 0.0, mu)
    assert mir / sat == pytest.approx(4.0)


@pytest.mark.parametrize("kind", ["MIR", "TOR"])
def test_corrected_variance_simulation(kind):
    v = T.simulate_corrected_variance(0.75, 10**6, RngStream(6), kind)
    assert v == pytest.approx(T.mirror_corrected_variance(0.75), abs=0.005)


def test_sat_simulation_small_F_matches_recursion():
    sim = T.simulate_sat_violation(0.25, 100000, 100, RngStream(7))[-30:].mean()
    assert sim == pytest.approx(T.violation_fixed_point(0.25), abs=0.01)


def test_mirror_vs_torus_verdicts():
    v = T.check_mirror_vs_torus([0.3, 0.2], [-0.2, 0.4], [0, 0], [1, 1])
    assert v.holds is True and v.lhs >= v.rhs
    assert T.check_mirror_vs_torus([0.3, 0.2], [0.4, 0.4], [0, 0], [1, 1]).reason == "feasible"
    assert T.check_mirror_vs_torus([0.3, 0.2], [-0.7, 0.4], [0, 0], [1, 1]).reason == "overshoot_beyond_half_width"
    assert T.check_mirror_vs_torus([0.8, 0.2], [-0.2, 0.4], [0, 0], [1, 1]).reason == "different_quadrant"


def test_mirror_vs_torus_counterexample_with_opposed_mirror_direction():
    # Both overshoots are small and the mirrored point stays in the target's
    # half-box, yet the mirrored direction points against d, so TOR wins.
    x, z = np.array([0.02, 0.17]), np.array([-0.25, -0.44])
    v = T.check_mirror_vs_torus(x, z, [0, 0], [1, 1])
    assert v.holds is False
    d, dm = z - x, np.array([0.25, 0.44]) - x
    assert d @ dm < 0
    assert v.lhs == pytest.approx(cosine_similarity(d, dm))


def test_mirror_vs_torus_holds_with_nonnegative_mirror_dot():
    res = T.mirror_vs_torus_suite(20000, RngStream(8), require_positive_dot=True)
    assert res["checked"] == 20000 and res["violations"] == 0


def test_saturation_vs_interior_verdicts():
    v = T.check_saturation_vs_interior([0.5, 0.5], [1.2, 0.7], [0, 0], [1, 1], 0.4)
    assert v.holds is True
    assert T.check_saturation_vs_interior([0.5, 0.5], [1.2, 1.7], [0, 0], [1, 1], 0.4).reason == "multiple_infeasible"
    assert T.check_saturation_vs_interior([0.5, 0.5], [1.2, 0.7], [0, 0], [1, 1], 1.0).reason == "not_interior"


def test_saturation_vs_interior_suite_small():
    res = T.saturation_vs_interior_suite(20000, RngStream(9))
    assert res["violations"] == 0


def test_dominance_continuous_example():
    # F_Y(x) = x dominates F_X(x) = x^2, so P(Y <= X) = 2/3.
    p = T.check_dominance(lambda u: u, np.sqrt, 400000, RngStream(10))
    assert p == pytest.approx(2 / 3, abs=0.005)
    assert p >= 0.5


def test_dominance_discrete():
    assert T.dominance_discrete([1, 0], [0, 1]) == 1.0
    assert T.check_dominance_discrete([0.5, 0.5], [0.5, 0.5]).holds
    assert T.check_dominance_discrete([0.0, 1.0], [1.0, 0.0]).reason == "no_dominance"
    assert T.dominance_suite(20000, RngStream(11))["violations"] == 0


def test_infeasible_solution_probability():
    assert T.infeasible_solution_probability(0.0, 30) == 0.0
    assert T.infeasible_solution_probability(0.1, 2) == pytest.approx(0.19)


def test_mutation_probability_feeds_theory():
    pm = mutation_probability(0.52, 30)
    assert 0.52 < pm < 0.54
