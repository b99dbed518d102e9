"""Lemma constants, the theorem constant ``C1`` and the largest feasible alpha.

Every constant is an upper bound: infinite tails are bounded analytically,
never truncated.  The theorem works at ``2*alpha`` for all three lemma
constants, and the rise-height constant at argument ``b`` consumes the jump
moment at ``2*b``, so ``C1(alpha)`` needs ``M_{4 alpha}``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .audit import AssumptionProfile, KappaModel
from .errors import (
    Diverged,
    InfeasibleAlpha,
    NoFeasibleAlpha,
    NonMonotoneFeasibility,
    SeriesDiverges,
    TailUnknown,
)


def m1(alpha: float, q: float) -> float:
    """Rise-duration constant ``e^a q / (1 - e^a q)``."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    r = math.exp(alpha) * q
    if r >= 1:
        raise InfeasibleAlpha(f"e^alpha * q = {r:.6g} >= 1")
    return r / (1 - r)


def m2(alpha: float, kappa: KappaModel) -> float:
    """Fall-duration constant ``sum_{i>=1} e^{a i} (1 - kappa_{i-1})``.

    ``kappa`` is indexed by completed down-steps, so the ``i``-th term pairs the
    weight of an ``i``-step fall with the failure mass after ``i - 1`` steps.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    e = math.exp(alpha)
    head = math.fsum(math.exp(alpha * j) * float(1 - v) for j, v in enumerate(kappa.head))
    if kappa.settled():
        return e * head
    if kappa.tail is None:
        raise TailUnknown("fall-duration series needs a kappa tail model")
    r = e * float(kappa.tail.theta)
    if r >= 1:
        raise SeriesDiverges(f"e^alpha * theta = {r:.6g} >= 1")
    tail = float(kappa.tail.C) * r ** (kappa.K + 1) / (1 - r)
    return e * (head + tail)


def m3(alpha: float, q: float, m_2alpha: float) -> tuple:
    """Rise-height constant: returns ``(mu, mu / (1 - mu))`` with ``mu = sqrt(q M_{2a})``."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if m_2alpha < 1:
        raise ValueError(f"an exponential jump moment is at least 1, got {m_2alpha!r}")
    mu = math.sqrt(q * m_2alpha)
    if mu >= 1:
        raise InfeasibleAlpha(f"mu = sqrt(q * M) = {mu:.6g} >= 1")
    return mu, mu / (1 - mu)


@dataclass
class BoundReport:
    alpha: float
    q: float
    q_bar: Optional[float]
    m1_2a: Optional[float] = None
    m2_2a: Optional[float] = None
    m_4a: Optional[float] = None
    mu_2a: Optional[float] = None
    m3_2a: Optional[float] = None
    product: Optional[float] = None
    c1: Optional[float] = None
    c1_at_least_one: Optional[bool] = None
    feasible: bool = False
    violated_conditions: list = field(default_factory=list)

    def bound(self, x: int) -> float:
        """Upper bound on ``E_x exp(alpha * tau)``."""
        if not self.feasible:
            raise InfeasibleAlpha(f"alpha={self.alpha} violates {self.violated_conditions}")
        return math.exp(self.alpha * x) * self.c1

    def to_dict(self) -> dict:
        return asdict(self)


def theorem_bound(alpha: float, profile: AssumptionProfile) -> BoundReport:
    """Evaluate ``C1(alpha)`` and every feasibility condition behind it.

    Never raises for infeasibility; the report names each violated condition.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    a2 = 2 * alpha
    rep = BoundReport(alpha=alpha, q=profile.q, q_bar=profile.q_bar)
    bad = rep.violated_conditions
    try:
        rep.m1_2a = m1(a2, profile.q)
    except InfeasibleAlpha:
        bad.append("m1_geometric: e^(2a) q >= 1")
    try:
        rep.m2_2a = m2(a2, profile.kappa)
    except SeriesDiverges:
        bad.append("m2_series: e^(2a) theta >= 1")
    except TailUnknown:
        bad.append("m2_tail_unknown: no kappa tail model")
    if 2 * a2 > profile.moment_limit:
        bad.append("m4a_range: 4a outside the jump-moment validity range")
    else:
        try:
            rep.m_4a = profile.exp_moment(2 * a2)
            rep.mu_2a, rep.m3_2a = m3(a2, profile.q, rep.m_4a)
        except InfeasibleAlpha:
            bad.append("m3_mu: sqrt(q M_4a) >= 1")
        except (Diverged, OverflowError) as exc:
            bad.append(f"m4a_moment: {type(exc).__name__}")
    if profile.q_bar is None:
        bad.append("q_bar_unknown: kappa product not certified")
    if bad:
        return rep
    rep.product = rep.m1_2a * rep.m2_2a * rep.m3_2a * rep.q_bar
    root = math.sqrt(rep.product)
    if root >= 1:
        bad.append("denominator: sqrt(M1 M2 M3 q_bar) >= 1")
        return rep
    rep.c1 = math.sqrt(rep.m1_2a * rep.m3_2a) / (1 - root)
    rep.c1_at_least_one = rep.c1 >= 1
    rep.feasible = True
    return rep


def sweep(profile: AssumptionProfile, alphas: Sequence[float]) -> list:
    return [theorem_bound(a, profile) for a in alphas]


SWEEP_COLUMNS = ("alpha", "m1", "m2", "m3", "mu", "c1", "feasible")


def sweep_rows(reports: Sequence[BoundReport]) -> list:
    return [
        {"alpha": r.alpha, "m1": r.m1_2a, "m2": r.m2_2a, "m3": r.m3_2a,
         "mu": r.mu_2a, "c1": r.c1, "feasible": r.feasible}
        for r in reports
    ]


_MONOTONE_FIELDS = ("m1_2a", "m2_2a", "m3_2a", "m_4a", "c1")


def _check_monotone(lo: BoundReport, hi: BoundReport) -> None:
    for name in _MONOTONE_FIELDS:
        a, b = getattr(lo, name), getattr(hi, name)
        if a is not None and b is not None and b < a * (1 - 1e-12):
            raise NonMonotoneFeasibility(
                f"{name} decreases from {a!r} at alpha={lo.alpha} to {b!r} at alpha={hi.alpha}"
            )


def default_upper(profile: AssumptionProfile) -> float:
    cap = 10.0
    if profile.q > 0:
        cap = min(cap, math.log(1 / profile.q) / 2)
    if math.isfinite(profile.moment_limit):
        cap = min(cap, profile.moment_limit / 4)
    return cap


def alpha_max(profile: AssumptionProfile, tolerance: float = 1e-6,
              upper: Optional[float] = None) -> float:
    """Largest feasible alpha, by bisection, to within ``tolerance``.

    Both bracket ends are re-evaluated every iteration; a feasible upper end
    or infeasible lower end aborts instead of returning a wrong answer.  If the
    whole search interval is feasible, its upper end is returned.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    lo, hi = tolerance, default_upper(profile) if upper is None else upper
    rep_lo = theorem_bound(lo, profile)
    if not rep_lo.feasible:
        raise NoFeasibleAlpha(f"infeasible already at alpha={lo}: {rep_lo.violated_conditions}")
    if theorem_bound(hi, profile).feasible:
        return hi
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        rep_mid = theorem_bound(mid, profile)
        if rep_mid.feasible:
            _check_monotone(rep_lo, rep_mid)
            lo, rep_lo = mid, rep_mid
        else:
            hi = mid
        if not theorem_bound(lo, profile).feasible or theorem_bound(hi, profile).feasible:
            raise NonMonotoneFeasibility(f"feasibility is not monotone on [{lo}, {hi}]")
    return lo
