"""Empirical and exact checks of the lemma and theorem bounds.

Monte Carlo estimators run in fixed-size batches, each with its own stream
``SeedSequence(seed, spawn_key=(batch,))``, and are reduced in batch order,
so results do not depend on how many workers ran them.  The exact oracle
solves the absorbing linear system of the extended (run-valued) chain on a
ceiling-truncated state space.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from statistics import NormalDist
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .audit import AssumptionProfile, audit
from .bounds import m1, m2, m3, theorem_bound
from .errors import (
    AlphaTooLarge,
    CeilingRequired,
    InfeasibleAlpha,
    MarkovUpError,
    StateBudgetExceeded,
    VarianceWarning,
)
from .process import TransitionLaw, UniformStream, memory_update, sample_next

BATCH_SIZE = 1000
DENSE_LIMIT = 2000


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    std_error: float
    n_samples: int
    ci95: tuple
    censored_fraction: float = 0.0
    flags: tuple = ()

    @property
    def lower_bound_only(self) -> bool:
        return self.censored_fraction > 0

    def ci(self, level: float = 0.95) -> tuple:
        z = NormalDist().inv_cdf(0.5 + level / 2)
        return (self.mean - z * self.std_error, self.mean + z * self.std_error)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ci95"] = list(self.ci95)
        d["flags"] = list(self.flags)
        return d


def _estimate(samples: np.ndarray, censored: int, flags=()) -> EstimateWithCI:
    n = len(samples)
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    flags = tuple(flags)
    if censored:
        flags += ("censored: lower bound only",)
    z = NormalDist().inv_cdf(0.975)
    return EstimateWithCI(mean, se, n, (mean - z * se, mean + z * se), censored / n, flags)


# -- per-path samplers (pure functions of a uniform stream) -----------------

def _sample_tau(law, x0, alpha, horizon, u):
    run, x, N = (x0,), x0, law.floor
    t = 0
    while x > N:
        if t == horizon:
            return math.exp(alpha * horizon), True
        x = sample_next(law, run, u())
        run = memory_update(run, x)
        t += 1
    return math.exp(alpha * t), False


def _sample_rise_time(law, x0, alpha, horizon, u):
    # xi_0: number of steps before the first strict down-move
    run, x, k = (x0,), x0, 0
    while True:
        if k == horizon:
            return math.exp(alpha * horizon), True
        y = sample_next(law, run, u())
        if y < x:
            return math.exp(alpha * k), False
        run, x, k = (y,), y, k + 1


def _sample_fall_time(law, x0, alpha, horizon, u):
    # e^{a chi_0} 1(chi_0 < tau); a descent cannot outlast x0 - N steps
    run, x, k, N = (x0,), x0, 0, law.floor
    while True:
        y = sample_next(law, run, u())
        if y >= x:
            return math.exp(alpha * k), False
        run, x, k = run + (y,), y, k + 1
        if x <= N:
            return 0.0, False


def _sample_rise_height(law, x0, alpha, horizon, u):
    run, x, k = (x0,), x0, 0
    while True:
        if k == horizon:
            return math.exp(alpha * (x - x0)), True
        y = sample_next(law, run, u())
        if y < x:
            return math.exp(alpha * (x - x0)), False
        run, x, k = (y,), y, k + 1


_SAMPLERS = {
    "exp_tau": _sample_tau,
    "lemma1": _sample_rise_time,
    "lemma2": _sample_fall_time,
    "lemma3": _sample_rise_height,
}


def _run_batch(kind, law, x0, alpha, horizon, seed, batch, size):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(batch,)))
    u = UniformStream(rng)
    sampler = _SAMPLERS[kind]
    out = np.empty(size)
    censored = 0
    for i in range(size):
        out[i], c = sampler(law, x0, alpha, horizon, u)
        censored += c
    return out, censored


def _monte_carlo(kind, law, x0, alpha, n_traj, horizon, seed, threads=1, flags=()):
    if n_traj < 2:
        raise ValueError("need at least two samples")
    sizes = [BATCH_SIZE] * (n_traj // BATCH_SIZE)
    if n_traj % BATCH_SIZE:
        sizes.append(n_traj % BATCH_SIZE)
    args = [(kind, law, x0, alpha, horizon, seed, b, s) for b, s in enumerate(sizes)]
    if threads and threads > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_batch, *zip(*args)))
    else:
        parts = [_run_batch(*a) for a in args]
    samples = np.concatenate([p[0] for p in parts])
    censored = sum(p[1] for p in parts)
    return _estimate(samples, censored, flags)


def _require_above_floor(law, x0):
    if x0 <= law.floor:
        raise ValueError(f"x0={x0} must lie above the floor {law.floor}")


def mc_exp_tau(law: TransitionLaw, x0: int, alpha: float, n_traj: int, horizon: int,
               seed: int, profile: Optional[AssumptionProfile] = None,
               threads: int = 1) -> EstimateWithCI:
    """Estimate ``E_x0 exp(alpha * tau)``.

    Censored paths count as ``exp(alpha * horizon)``.  When a profile is given
    and ``2 * alpha`` is infeasible for the theorem, the variance is not
    certified: a :class:`VarianceWarning` is issued and the estimate flagged.
    """
    if x0 <= law.floor:
        return EstimateWithCI(1.0, 0.0, n_traj, (1.0, 1.0))
    flags = ()
    if profile is not None and not theorem_bound(2 * alpha, profile).feasible:
        warnings.warn(f"2*alpha={2 * alpha} is infeasible; variance not certified",
                      VarianceWarning, stacklevel=2)
        flags = ("variance not certified",)
    return _monte_carlo("exp_tau", law, x0, alpha, n_traj, horizon, seed, threads, flags)


def mc_lemma1(law, x0, alpha, n_traj, seed, horizon=10_000, threads=1) -> EstimateWithCI:
    """Estimate ``E exp(alpha * xi_0)``, the exponential moment of the first rise duration."""
    _require_above_floor(law, x0)
    return _monte_carlo("lemma1", law, x0, alpha, n_traj, horizon, seed, threads)


def mc_lemma2(law, x0, alpha, n_traj, seed, horizon=10_000, threads=1) -> EstimateWithCI:
    """Estimate ``E exp(alpha * chi_0) 1(chi_0 < tau)``.

    A first step that is not strictly down gives ``chi_0 = 0`` and contributes 1.
    """
    _require_above_floor(law, x0)
    return _monte_carlo("lemma2", law, x0, alpha, n_traj, horizon, seed, threads)


def mc_lemma3(law, x0, alpha, n_traj, seed, horizon=10_000, threads=1) -> EstimateWithCI:
    """Estimate ``E exp(alpha * (X_{xi_0} - X_0))``."""
    _require_above_floor(law, x0)
    return _monte_carlo("lemma3", law, x0, alpha, n_traj, horizon, seed, threads)


# -- exact oracle -------------------------------------------------------------

@dataclass
class ExtendedChain:
    """Transient part of the extended chain on runs above the floor."""

    states: list
    index: dict
    P: object  # dense ndarray or scipy sparse matrix
    absorb: np.ndarray
    collapsed: bool

    def key(self, run: tuple):
        return (len(run) - 1, run[-1]) if self.collapsed else run


def extended_states(law: TransitionLaw, budget: int = 200_000) -> tuple:
    """Enumerate transient extended states; returns ``(states, collapsed)``."""
    if law.ceiling is None:
        raise CeilingRequired("the exact oracle needs a finite ceiling")
    N, top = law.floor, law.ceiling
    if top <= N:
        return [], law.memory == "length"
    if law.memory == "length":
        n = (top - N) * (top - N + 1) // 2
        if n > budget:
            raise StateBudgetExceeded(f"{n} collapsed states exceed budget {budget}")
        return [(k, x) for x in range(N + 1, top + 1) for k in range(0, top - x + 1)], True
    n = 2 ** (top - N) - 1
    if n > budget:
        raise StateBudgetExceeded(f"{n} extended states exceed budget {budget}")
    values = list(range(top, N, -1))
    states = []
    for mask in range(1, 2 ** len(values)):
        states.append(tuple(v for i, v in enumerate(values) if mask >> i & 1))
    return states, False


def build_chain(law: TransitionLaw, budget: int = 200_000) -> ExtendedChain:
    states, collapsed = extended_states(law, budget)
    index = {s: i for i, s in enumerate(states)}
    n = len(states)
    rows, cols, vals = [], [], []
    absorb = np.zeros(n)
    N = law.floor
    for i, s in enumerate(states):
        run = tuple(range(s[1] + s[0], s[1] - 1, -1)) if collapsed else s
        for y, p in law(run).items():
            p = float(p)
            if y <= N:
                absorb[i] += p
                continue
            nxt = memory_update(run, y)
            rows.append(i)
            cols.append(index[(len(nxt) - 1, y) if collapsed else nxt])
            vals.append(p)
    P = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    if n <= DENSE_LIMIT:
        P = P.toarray()
    return ExtendedChain(states, index, P, absorb, collapsed)


def _spectral_radius(P) -> float:
    if isinstance(P, np.ndarray):
        return float(np.max(np.abs(np.linalg.eigvals(P)))) if P.size else 0.0
    try:
        vals = scipy.sparse.linalg.eigs(P, k=1, which="LM", return_eigenvectors=False)
        return float(np.abs(vals[0]))
    except scipy.sparse.linalg.ArpackNoConvergence:
        v = np.ones(P.shape[0])
        r = 0.0
        for _ in range(5000):
            w = P @ v
            r = float(np.max(w))
            if r == 0:
                return 0.0
            v = w / r
        return r


def solve_exp_moments(chain: ExtendedChain, alpha: float) -> np.ndarray:
    """``h = E exp(alpha * tau)`` for every transient extended state."""
    n = len(chain.states)
    if n == 0:
        return np.zeros(0)
    e = math.exp(alpha)
    radius = e * _spectral_radius(chain.P)
    if radius >= 1 - 1e-12:
        raise AlphaTooLarge(f"e^alpha * spectral radius = {radius:.6g} >= 1")
    b = e * chain.absorb
    if isinstance(chain.P, np.ndarray):
        A = np.eye(n) - e * chain.P
        try:
            h = scipy.linalg.solve(A, b)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise AlphaTooLarge(str(exc)) from exc
    else:
        A = (scipy.sparse.identity(n, format="csc") - e * chain.P.tocsc())
        lu = scipy.sparse.linalg.splu(A)
        h = lu.solve(b)
        for _ in range(3):
            h = h + lu.solve(b - A @ h)
    if not np.all(np.isfinite(h)) or np.any(h < 1 - 1e-9):
        raise AlphaTooLarge("linear solve produced a non-finite or sub-unit moment")
    return h


def exact_oracle(law: TransitionLaw, alpha: float, x0: int, budget: int = 200_000) -> float:
    """Exact ``E_x0 exp(alpha * tau)`` on the ceiling-truncated extended chain."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if law.ceiling is not None and x0 > law.ceiling:
        raise ValueError(f"x0={x0} above the ceiling {law.ceiling}")
    if x0 <= law.floor:
        return 1.0
    chain = build_chain(law, budget)
    h = solve_exp_moments(chain, alpha)
    return float(h[chain.index[chain.key((x0,))]])


def hitting_series(law: TransitionLaw, alpha: float, x0: int, t_max: int = 10_000,
                   window: int = 50) -> tuple:
    """``sum_t exp(alpha t) P(tau = t)`` by forward propagation over runs.

    Independent of :func:`exact_oracle`: it iterates the law directly instead
    of building a matrix.  Returns ``(value, tail_estimate)``; the tail is
    bounded by the mass left after ``t_max`` steps times a geometric factor
    taken from the slowest per-step decay over the last ``window`` steps.
    """
    if x0 <= law.floor:
        return 1.0, 0.0
    e = math.exp(alpha)
    dist = {(int(x0),): 1.0}
    terms = []
    masses = [1.0]
    weight = 1.0
    for _ in range(t_max):
        weight *= e
        nxt: dict = {}
        hit = 0.0
        for run, p in dist.items():
            for y, q in law(run).items():
                pq = p * float(q)
                if y <= law.floor:
                    hit += pq
                else:
                    r = memory_update(run, y)
                    nxt[r] = nxt.get(r, 0.0) + pq
        terms.append(weight * hit)
        dist = nxt
        mass = math.fsum(dist.values())
        masses.append(mass)
        if mass < 1e-300:
            return math.fsum(terms), 0.0
    ratios = [b / a for a, b in zip(masses[-window - 1:-1], masses[-window:]) if a > 0]
    c = max(ratios) if ratios else 1.0
    if c * e >= 1:
        return math.fsum(terms), math.inf
    return math.fsum(terms), weight * masses[-1] * e / (1 - c * e)


# -- dominance report ---------------------------------------------------------

REPORT_COLUMNS = ("quantity", "x0", "alpha", "mc_mean", "mc_ci_lo", "mc_ci_hi",
                  "exact", "bound", "pass")
QUANTITIES = ("lemma1", "lemma2", "lemma3", "exp_tau")


@dataclass
class MCBudget:
    n_traj: int = 100_000
    horizon: int = 10_000
    seed: int = 0
    threads: int = 1
    state_budget: int = 200_000


@dataclass
class DominanceReport:
    alpha: float
    rows: list
    profile: AssumptionProfile
    bound_report: object
    budget: MCBudget = field(default_factory=MCBudget)

    @property
    def all_pass(self) -> bool:
        return all(r["pass"] is True for r in self.rows)

    def csv_rows(self) -> list:
        return [{c: r.get(c) for c in REPORT_COLUMNS} for r in self.rows]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "budget": asdict(self.budget),
            "profile": self.profile.to_dict(),
            "bound_report": self.bound_report.to_dict(),
            "rows": self.rows,
        }


def _lemma_bound(quantity, alpha, profile):
    if quantity == "lemma1":
        return m1(alpha, profile.q)
    if quantity == "lemma2":
        return m2(alpha, profile.kappa)
    return m3(alpha, profile.q, profile.exp_moment(2 * alpha))[1]


def dominance_report(law: TransitionLaw, x0_list: Sequence[int], alpha: float,
                     budget: MCBudget = MCBudget(),
                     profile: Optional[AssumptionProfile] = None) -> DominanceReport:
    """Compare MC estimates and exact values against the certified bounds.

    One row per ``(x0, quantity)``.  A row passes when the upper 95% CI (and
    the exact value, when available) lies at or below the bound.  Errors are
    recorded in the row's ``note``; they never abort the report.
    """
    profile = audit(law) if profile is None else profile
    rep = theorem_bound(alpha, profile)
    rows = []
    for x0 in x0_list:
        for qi, quantity in enumerate(QUANTITIES):
            row = {"quantity": quantity, "x0": x0, "alpha": alpha, "mc_mean": None,
                   "mc_ci_lo": None, "mc_ci_hi": None, "exact": None, "bound": None,
                   "pass": None, "note": ""}
            notes = []
            seed = [budget.seed, int(x0), qi]
            try:
                if quantity == "exp_tau":
                    est = mc_exp_tau(law, x0, alpha, budget.n_traj, budget.horizon, seed,
                                     threads=budget.threads)
                else:
                    fn = {"lemma1": mc_lemma1, "lemma2": mc_lemma2, "lemma3": mc_lemma3}[quantity]
                    est = fn(law, x0, alpha, budget.n_traj, seed, horizon=budget.horizon,
                             threads=budget.threads)
                row.update(mc_mean=est.mean, mc_ci_lo=est.ci95[0], mc_ci_hi=est.ci95[1])
                notes.extend(est.flags)
            except (MarkovUpError, ValueError) as exc:
                notes.append(f"mc: {type(exc).__name__}: {exc}")
            if quantity == "exp_tau" and law.ceiling is not None:
                try:
                    row["exact"] = exact_oracle(law, alpha, x0, budget.state_budget)
                except MarkovUpError as exc:
                    notes.append(f"exact: {type(exc).__name__}: {exc}")
            if not rep.feasible:
                notes.append("infeasible alpha: " + "; ".join(rep.violated_conditions))
            else:
                try:
                    if quantity == "exp_tau":
                        row["bound"] = rep.bound(x0)
                    else:
                        row["bound"] = _lemma_bound(quantity, alpha, profile)
                except (MarkovUpError, ValueError) as exc:
                    notes.append(f"bound: {type(exc).__name__}: {exc}")
            if row["bound"] is not None and row["mc_ci_hi"] is not None:
                ok = row["mc_ci_hi"] <= row["bound"]
                if row["exact"] is not None:
                    ok = ok and row["exact"] <= row["bound"]
                row["pass"] = ok
            row["note"] = "; ".join(notes)
            rows.append(row)
    return DominanceReport(alpha, rows, profile, rep, budget)
