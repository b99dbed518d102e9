import math

import pytest

from markovup import KappaModel, alpha_max, m1, m2, m3, sweep, theorem_bound
from markovup.audit import AssumptionProfile
from markovup.errors import (
    InfeasibleAlpha,
    NoFeasibleAlpha,
    NonMonotoneFeasibility,
    SeriesDiverges,
    TailUnknown,
)


def _profile(kappa, q, kbar, moment, kbar_err=0.0, moment_limit=math.inf):
    return AssumptionProfile(floor=0, ceiling=None, rho=0.5, kappa=kappa, q=q,
                             kappa_bar_inf=kbar, kappa_bar_error=kbar_err,
                             exp_moment=moment, moment_limit=moment_limit)


# -- M1 -----------------------------------------------------------------------

def test_m1_at_zero():
    assert m1(0.0, 0.4) == pytest.approx(2 / 3, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.0, 0.1, 0.4])
def test_m1_matches_geometric_partial_sums(alpha):
    r = math.exp(alpha) * 0.4
    oracle = math.fsum(r ** i for i in range(1, 400))
    assert m1(alpha, 0.4) == pytest.approx(oracle, abs=1e-12)


def test_m1_boundary_is_infeasible():
    with pytest.raises(InfeasibleAlpha):
        m1(math.log(2.5) + 1e-12, 0.4)


# -- M2 -----------------------------------------------------------------------

def _m2_oracle(alpha, terms=2000):
    """Direct partial sum of e^{a i} (1 - kappa_{i-1}) for the example kernel."""
    return math.fsum(math.exp(alpha * i) * 0.4 * 0.5 ** (i - 1) for i in range(1, terms))


def test_m2_at_zero_equals_total_failure_mass(example_profile):
    assert m2(0.0, example_profile.kappa) == pytest.approx(0.8, abs=1e-12)
    assert _m2_oracle(0.0) == pytest.approx(0.8, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.01, 0.05, 0.1])
def test_m2_matches_partial_sums(example_profile, alpha):
    assert m2(alpha, example_profile.kappa) == pytest.approx(_m2_oracle(alpha), abs=1e-10)


def test_m2_tail_is_an_upper_bound_for_short_heads(example_profile):
    from markovup import kappa_closed_form_example
    for m_max in (0, 2, 5):
        short = m2(0.1, kappa_closed_form_example(m_max=m_max))
        assert short >= _m2_oracle(0.1) - 1e-12


def test_m2_trivial_and_failure_modes(example_profile):
    assert m2(0.3, KappaModel((1,), complete=True)) == 0.0
    with pytest.raises(SeriesDiverges):
        m2(math.log(2), example_profile.kappa)
    with pytest.raises(TailUnknown):
        m2(0.1, KappaModel((0.6, 0.8)))


# -- M3 -----------------------------------------------------------------------

def test_m3_examples():
    mu, val = m3(0.0, 0.4, 1.0)
    assert mu == pytest.approx(math.sqrt(0.4)) and val == pytest.approx(mu / (1 - mu))
    with pytest.raises(InfeasibleAlpha):
        m3(0.1, 0.4, 2.5)
    with pytest.raises(ValueError):
        m3(0.1, 0.4, 0.5)


# -- theorem constant --------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.005, 0.02, 0.05])
def test_theorem_constant_recomputed_from_parts(example_profile, alpha):
    p = example_profile
    rep = theorem_bound(alpha, p)
    assert rep.feasible
    a1 = m1(2 * alpha, p.q)
    a2 = m2(2 * alpha, p.kappa)
    mu = math.sqrt(p.q * (1 + math.exp(4 * alpha)) / 2)
    a3 = mu / (1 - mu)
    c1 = math.sqrt(a1 * a3) / (1 - math.sqrt(a1 * a2 * a3 * p.q_bar))
    assert rep.c1 == pytest.approx(c1, rel=1e-12)
    assert rep.bound(3) == pytest.approx(math.exp(3 * alpha) * c1, rel=1e-12)


def test_infeasible_alpha_is_reported_not_raised(example_profile):
    rep = theorem_bound(0.2, example_profile)
    assert not rep.feasible and rep.c1 is None
    assert any(v.startswith("denominator") or v.startswith("m3") for v in rep.violated_conditions)
    with pytest.raises(InfeasibleAlpha):
        rep.bound(1)


def test_unknown_tail_is_a_named_condition():
    prof = _profile(KappaModel((0.6,)), 0.4, None, lambda a: 1.0)
    rep = theorem_bound(0.01, prof)
    assert "m2_tail_unknown: no kappa tail model" in rep.violated_conditions
    assert any(v.startswith("q_bar_unknown") for v in rep.violated_conditions)


def test_c1_below_one_is_flagged():
    prof = _profile(KappaModel((1,), complete=True), 0.01, 1.0, lambda a: 1.0)
    rep = theorem_bound(0.01, prof)
    assert rep.feasible and rep.c1 < 1 and rep.c1_at_least_one is False


def test_c1_increases_along_feasible_grid(example_profile):
    reps = [r for r in sweep(example_profile, [0.001 * i for i in range(1, 60)]) if r.feasible]
    assert len(reps) > 40
    assert all(a.c1 <= b.c1 for a, b in zip(reps, reps[1:]))


# -- alpha_max ----------------------------------------------------------------

def test_alpha_max_brackets_grid_scan(example_profile):
    a = alpha_max(example_profile)
    assert 0 < a < math.log(2) / 4
    grid = [0.001 * i for i in range(1, 200)]
    feasible = [g for g in grid if theorem_bound(g, example_profile).feasible]
    assert feasible and max(feasible) <= a + 1e-6 < max(feasible) + 0.001 + 1e-6
    assert a == pytest.approx(0.0541049, abs=1e-6)


def test_alpha_max_synthetic_geometric_limit():
    prof = _profile(KappaModel((1,), complete=True), 0.4, 1.0, lambda a: 1.0)
    assert alpha_max(prof, tolerance=1e-9, upper=1.0) == pytest.approx(math.log(2.5) / 2, abs=1e-8)


def test_alpha_max_no_feasible_alpha():
    prof = _profile(KappaModel((1,), complete=True), 0.4, 1.0, lambda a: 10.0)
    with pytest.raises(NoFeasibleAlpha):
        alpha_max(prof)


def test_alpha_max_detects_non_monotone_constituents():
    prof = _profile(KappaModel((1,), complete=True), 0.4, 1.0, lambda a: 1.0 + 1.0 / (1.0 + a))
    with pytest.raises(NonMonotoneFeasibility):
        alpha_max(prof, upper=1.0)


def test_truncated_alpha_max(truncated_profile):
    assert alpha_max(truncated_profile) == pytest.approx(0.0575530, abs=1e-6)
