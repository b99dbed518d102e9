from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markovup import (
    DescentLaw,
    ExampleLaw,
    ExampleLawParams,
    FunctionLaw,
    epochs,
    law_example,
    law_tabular,
    memory_update,
    simulate,
    stat_chi,
    stat_xi,
    stat_zeta,
)
from markovup.errors import (
    InvalidDistribution,
    InvalidParams,
    MemoryCapExceeded,
    RunExceedsTrajectory,
)
from markovup.process import check_memory

F = Fraction


# -- memory -------------------------------------------------------------------

@pytest.mark.parametrize("m, x, expected", [
    ((5, 3), 2, (5, 3, 2)),
    ((5, 3, 2), 7, (7,)),
    ((4,), 4, (4,)),
])
def test_memory_update_examples(m, x, expected):
    assert memory_update(m, x) == expected


@given(st.lists(st.integers(0, 20), min_size=1, max_size=40))
def test_memory_update_keeps_strict_descent(xs):
    m = (xs[0],)
    for x in xs[1:]:
        m = memory_update(m, x)
        check_memory(m)
        assert m[-1] == x


def test_check_memory_rejects_non_descending():
    with pytest.raises(ValueError):
        check_memory([3, 3])
    with pytest.raises(ValueError):
        check_memory([])


# -- laws ---------------------------------------------------------------------

def test_example_law_reference_distributions():
    law = law_example()
    assert law((4,)) == {3: F(3, 5), 4: F(1, 5), 5: F(1, 5)}
    assert law((5, 4)) == {3: F(4, 5), 4: F(1, 10), 5: F(1, 10)}
    assert law((0,)) == {0: F(1, 2), 1: F(1, 2)}


@pytest.mark.parametrize("k", range(8))
def test_example_law_matches_perturbation_formulas(k):
    law = ExampleLaw()
    x = 3
    run = tuple(range(x + k, x - 1, -1))
    d = law(run)
    assert d[x - 1] == F(3, 5) + F(2, 5) * sum(F(1, 2 ** j) for j in range(1, k + 1))
    assert d[x] == d[x + 1] == F(1, 5 * 2 ** k)


def test_example_law_ceiling_redirects_up_mass():
    law = ExampleLaw(ceiling=4)
    assert law((4,)) == {3: F(3, 5), 4: F(2, 5)}
    assert max(law((3,))) == 4


def test_example_law_invalid_params():
    with pytest.raises(InvalidParams):
        ExampleLaw(ExampleLawParams(p_up=F(1, 2), p_stay=F(1, 2), p_down=F(1, 2)))
    with pytest.raises(InvalidParams):
        ExampleLaw(ExampleLawParams(floor_up=F(1, 3)))


def test_tabular_direct_lookup_and_fallback():
    law = law_tabular({(1,): {0: 1}})
    assert law((1,)) == {0: 1}
    fb = law_tabular({}, fallback=law_example())
    assert fb((3,)) == {2: F(3, 5), 3: F(1, 5), 4: F(1, 5)}


def test_tabular_rejects_bad_mass():
    with pytest.raises(InvalidDistribution) as info:
        law_tabular({(2,): {2: 0.5, 3: 0.6}})
    assert info.value.run == (2,)


def test_tabular_without_fallback_raises_for_missing_state():
    with pytest.raises(KeyError):
        law_tabular({(1,): {0: 1}})((2,))


def test_function_law_validates_output():
    law = FunctionLaw(lambda run: {run[-1]: 0.7})
    with pytest.raises(InvalidDistribution):
        law((3,))


def test_memory_cap_guard():
    law = FunctionLaw(lambda run: {max(run[-1] - 1, 0): 1}, memory="length")
    law.memory_cap = 2
    law((2, 1))
    with pytest.raises(MemoryCapExceeded):
        law((3, 2, 1))


def test_markov_on_rise_law_depends_only_on_memory_state():
    law = ExampleLaw()
    seen = {}
    for seed in range(300):
        traj = simulate(law, 4, 60, seed, stop_at_floor=False)
        run = (traj.states[0],)
        for x in traj.states[1:]:
            d = tuple(sorted(law(run).items()))
            assert seen.setdefault(run, d) == d
            if len(run) == 1:
                assert d == tuple(sorted(law((run[0],)).items()))
            run = memory_update(run, x)
    assert any(len(r) == 1 for r in seen) and any(len(r) > 2 for r in seen)


# -- simulation -----------------------------------------------------------------

def test_start_at_or_below_floor_has_tau_zero():
    law = ExampleLaw(floor=2)
    for seed in range(5):
        traj = simulate(law, 2, 100, seed)
        assert traj.tau == 0 and traj.states == (2,)


def test_deterministic_descent_path():
    traj = simulate(DescentLaw(), 3, 100, seed=0)
    assert traj.states == (3, 2, 1, 0)
    assert traj.tau == 3
    assert traj.run_lengths == (1, 2, 3, 4)


def test_horizon_reports_not_hit():
    law = FunctionLaw(lambda run: {run[-1] + 1: 1})
    traj = simulate(law, 2, 5, seed=1)
    assert traj.tau is None and not traj.hit
    assert len(traj) == 6


def test_simulate_is_deterministic():
    law = ExampleLaw()
    a = simulate(law, 5, 500, seed=42, stop_at_floor=False)
    b = simulate(ExampleLaw(), 5, 500, seed=42, stop_at_floor=False)
    assert a == b
    assert a != simulate(law, 5, 500, seed=43, stop_at_floor=False)


def test_simulate_respects_ceiling():
    law = ExampleLaw(ceiling=3)
    traj = simulate(law, 3, 2000, seed=3, stop_at_floor=False)
    assert max(traj.states) <= 3
    with pytest.raises(ValueError):
        simulate(law, 4, 10, seed=0)


def test_example_always_hits_floor():
    law = ExampleLaw()
    hits = sum(simulate(law, 5, 10**6, seed).hit for seed in range(10**5))
    assert hits == 10**5


def test_tau_is_first_floor_visit():
    law = ExampleLaw(floor=1)
    for seed in range(200):
        traj = simulate(law, 4, 10_000, seed, stop_at_floor=False)
        assert traj.states[traj.tau] <= 1
        assert all(x > 1 for x in traj.states[:traj.tau])


# -- path statistics ------------------------------------------------------------

def test_statistic_examples():
    assert stat_xi([2, 3, 3, 1], 0) == 2
    assert stat_chi([5, 4, 3, 3], 0) == 2
    assert stat_zeta([5, 4, 3], 2) == 0
    assert stat_xi([5, 4, 6], 0) == 0
    assert stat_chi([5, 6, 4], 0) == 0


def test_unterminated_runs_raise():
    with pytest.raises(RunExceedsTrajectory):
        stat_xi([1, 2, 3], 0)
    with pytest.raises(RunExceedsTrajectory):
        stat_chi([3, 2, 1], 0)


def _brute(xs, n):
    """Set-based evaluation of the run statistics, straight from their definitions."""
    d = [xs[i + 1] - xs[i] for i in range(len(xs) - 1)]
    last = len(xs) - 1
    zeta = min(k for k in range(n + 1) if all(d[i] < 0 for i in range(k, n)))
    rise = [k for k in range(n, last + 1) if all(d[i] >= 0 for i in range(n, k))]
    fall = [k for k in range(n, last + 1) if all(d[i] < 0 for i in range(n, k))]
    xi = None if last in rise else max(rise)
    chi = None if last in fall else max(fall)
    return zeta, xi, chi


@settings(max_examples=300)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=15), st.data())
def test_statistics_match_set_definitions(xs, data):
    n = data.draw(st.integers(0, len(xs) - 1))
    zeta, xi, chi = _brute(xs, n)
    assert stat_zeta(xs, n) == zeta
    for fn, want in ((stat_xi, xi), (stat_chi, chi)):
        if want is None:
            with pytest.raises(RunExceedsTrajectory):
                fn(xs, n)
        else:
            assert fn(xs, n) == want


def test_incremental_memory_matches_recomputed_run():
    law = ExampleLaw()
    rng = np.random.default_rng(7)
    for seed in rng.integers(0, 2**31, size=10_000):
        traj = simulate(law, int(rng.integers(1, 8)), 40, int(seed), stop_at_floor=False)
        run = (traj.states[0],)
        for n in range(len(traj)):
            if n:
                run = memory_update(run, traj.states[n])
            z = stat_zeta(traj, n)
            assert run == tuple(traj.states[z:n + 1])
            assert traj.run_lengths[n] == len(run)


# -- epochs -----------------------------------------------------------------------

def test_epoch_examples():
    e = epochs([5, 4, 6, 3, 2, 5])
    assert e.case_tag == "I" and e.T[:2] == (0, 1) and e.t[:2] == (0, 2) and e.T[2] >= 3

    e = epochs([5, 6, 4, 5])
    assert e.case_tag == "II" and e.T[0] == 0 and e.t[0] == 1 and e.T[1] == 2

    traj = simulate(DescentLaw(), 5, 100, seed=0)
    e = epochs(traj)
    assert e.case_tag == "I" and e.T == (0, 5) and e.t == (0,) and e.hit
    assert e.attempts(traj.states, 0) == [True]


def test_epochs_need_two_states():
    with pytest.raises(ValueError):
        epochs([3])


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_epoch_interleaving_and_monotonicity(x0, seed):
    traj = simulate(ExampleLaw(), x0, 400, seed, stop_at_floor=True)
    if len(traj) < 2:
        return
    xs, e = traj.states, epochs(traj)
    assert e.T[0] == 0
    if e.case_tag == "I":
        assert e.t[0] == 0
    else:
        k = 0
        while k < e.end and xs[k + 1] >= xs[k]:
            k += 1
        assert e.t[0] == k
    merged = []
    for i, T in enumerate(e.T):
        merged.append(T)
        if i < len(e.t):
            merged.append(e.t[i])
    assert merged == sorted(merged)
    for kind, a, b in e.intervals():
        seg = xs[a:b + 1]
        if kind == "fall":
            assert all(u > v for u, v in zip(seg, seg[1:]))
        else:
            assert all(u <= v for u, v in zip(seg, seg[1:]))
    assert max(merged) == e.end
    if traj.hit:
        outcomes = e.attempts(xs, traj.floor)
        assert outcomes[-1] and not any(outcomes[:-1])
