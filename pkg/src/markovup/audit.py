"""Quantitative assumption data for a transition law.

Computes the floor mixing constant ``rho``, the down-probability sequence
``kappa_k`` (indexed by the number ``k`` of completed down-steps), its infinite
product with a certified error, and the uniform exponential moment of an
up-jump ``M_alpha``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence

from .errors import CeilingRequired, Diverged, StateBudgetExceeded, TailUnknown
from .process import ExampleLaw, ExampleLawParams, GeometricTail, TransitionLaw

EPS = 2.0 ** -52
DEFAULT_EXPLORATION = 12


@dataclass(frozen=True)
class KappaModel:
    """Lower bounds ``kappa_0..kappa_K`` plus what is known beyond ``K``.

    ``complete`` means every ``kappa_k`` with ``k > K`` equals 1 (no run of that
    length exists, or ``kappa_K`` already reached 1).  Otherwise ``tail``
    certifies ``1 - kappa_k <= C * theta**k`` for ``k > K``.
    """

    head: tuple
    tail: Optional[GeometricTail] = None
    complete: bool = False

    def __post_init__(self):
        if not self.head:
            raise ValueError("kappa head must contain at least kappa_0")

    @property
    def K(self) -> int:
        return len(self.head) - 1

    def settled(self) -> bool:
        """True when values beyond the head are known to be exactly 1."""
        return self.complete or self.head[-1] == 1

    def __getitem__(self, k: int):
        if k <= self.K:
            return self.head[k]
        if self.settled():
            return 1
        raise TailUnknown(f"kappa_{k} lies beyond the enumerated head (K={self.K})")

    def violations(self) -> list:
        out = []
        if self.head[0] <= 0:
            out.append("A3: kappa_0 = 0 (no down mass above the floor)")
        for k, v in enumerate(self.head):
            if v > 1:
                out.append(f"kappa_{k} > 1")
        for k in range(1, len(self.head)):
            if self.head[k] < self.head[k - 1]:
                out.append(f"monotonicity: kappa_{k} < kappa_{k - 1}")
        if self.tail is None and not self.settled():
            out.append("A4: TailUnknown (no tail model declared)")
        return out

    def to_dict(self) -> dict:
        return {
            "head": [float(v) for v in self.head],
            "tail": None if self.tail is None else
            {"C": float(self.tail.C), "theta": float(self.tail.theta)},
            "complete": self.complete,
        }


@dataclass
class AssumptionProfile:
    """Everything the lemma and theorem constants consume."""

    floor: int
    ceiling: Optional[int]
    rho: float
    kappa: KappaModel
    q: float
    kappa_bar_inf: Optional[float]
    kappa_bar_error: Optional[float]
    exp_moment: Callable[[float], float] = field(repr=False)
    moment_limit: float = math.inf
    closed_form: bool = False
    bounds: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def q_bar(self) -> Optional[float]:
        """Upper bound on ``1 - kappa_bar_inf`` including its certified error."""
        if self.kappa_bar_inf is None:
            return None
        return min(1.0, 1.0 - self.kappa_bar_inf + self.kappa_bar_error)

    def to_dict(self, alphas: Sequence[float] = (0.0, 0.05, 0.1, 0.2)) -> dict:
        moments = {}
        for a in alphas:
            try:
                moments[repr(float(a))] = self.exp_moment(a)
            except Exception as exc:  # reported, not raised
                moments[repr(float(a))] = f"{type(exc).__name__}: {exc}"
        return {
            "floor": self.floor,
            "ceiling": self.ceiling,
            "rho": float(self.rho),
            "q": float(self.q),
            "kappa": self.kappa.to_dict(),
            "kappa_bar_inf": self.kappa_bar_inf if self.kappa_bar_inf is not None else "TailUnknown",
            "kappa_bar_error": self.kappa_bar_error,
            "q_bar": self.q_bar if self.q_bar is not None else "TailUnknown",
            "exp_moment": moments,
            "moment_limit": None if math.isinf(self.moment_limit) else self.moment_limit,
            "closed_form": self.closed_form,
            "enumeration_bounds": self.bounds,
            "violations": list(self.violations),
        }


# -- kappa --------------------------------------------------------------------

def kappa_closed_form_example(params: ExampleLawParams = ExampleLawParams(),
                              m_max: int = 60) -> KappaModel:
    c = params.p_up + params.p_stay
    head = tuple(1 - c * Fraction(1, 2 ** k) for k in range(m_max + 1))
    return KappaModel(head, tail=GeometricTail(C=c, theta=Fraction(1, 2)))


def _descending_runs(lo: int, hi: int, length: int, law: TransitionLaw) -> Iterator[tuple]:
    """Strictly decreasing runs of ``length`` values in ``[lo, hi]``.

    Length-memory laws only need one canonical run per end value.
    """
    if law.memory == "length":
        for x in range(lo, hi - length + 2):
            yield tuple(range(x + length - 1, x - 1, -1))
    else:
        yield from itertools.combinations(range(hi, lo - 1, -1), length)


def _down_mass(law: TransitionLaw, run: tuple):
    x = run[-1]
    return sum((p for y, p in law(run).items() if y < x), 0)


def kappa_enumerate(law: TransitionLaw, N: Optional[int] = None, ceiling: Optional[int] = None,
                    m_max: int = 60, budget: int = 2_000_000) -> KappaModel:
    """Infimum of the down probability over every run with ``k`` down-steps above ``N``."""
    N = law.floor if N is None else N
    ceiling = law.ceiling if ceiling is None else ceiling
    if ceiling is None:
        raise CeilingRequired("kappa enumeration needs a finite ceiling")
    if law.memory != "length":
        total = sum(math.comb(ceiling - N, k + 1) for k in range(min(m_max, ceiling - N - 1) + 1))
        if total > budget:
            raise StateBudgetExceeded(f"{total} runs exceed the enumeration budget {budget}")
    head = []
    complete = False
    for k in range(m_max + 1):
        if k > ceiling - N - 1:
            complete = True
            break
        head.append(min(_down_mass(law, run) for run in _descending_runs(N + 1, ceiling, k + 1, law)))
    if not head:
        # nothing lies above the floor: the condition is vacuous
        return KappaModel((1,), complete=True)
    return KappaModel(tuple(head), tail=None if complete else law.kappa_tail, complete=complete)


def kappa_bar(kappa: KappaModel) -> tuple:
    """Infinite product of ``kappa`` with a certified absolute error bound.

    The head product is taken in log space.  For a geometric tail,
    ``-log(1 - x) <= x / (1 - x)`` bounds the missing log mass by ``L``, so the
    true product lies in ``[P exp(-L), P]``; the midpoint ``P exp(-L/2)`` is
    returned with the half-width plus a rounding allowance.
    """
    head = kappa.head
    if any(v <= 0 for v in head):
        return 0.0, 0.0
    logs = math.fsum(math.log(v) for v in head)
    P = math.exp(logs)
    rounding = (len(head) + 4) * EPS * P
    if kappa.settled():
        return P, (0.0 if all(v == 1 for v in head) else rounding)
    if kappa.tail is None:
        raise TailUnknown("infinite product needs a tail model or a complete head")
    C, theta = float(kappa.tail.C), float(kappa.tail.theta)
    first = C * theta ** (kappa.K + 1)
    if first >= 1:
        raise TailUnknown("tail bound too weak at the end of the head; enlarge m_max")
    L = first / ((1 - theta) * (1 - first))
    value = P * math.exp(-L / 2)
    return value, P * -math.expm1(-L / 2) + rounding


# -- exponential moment and rho ---------------------------------------------

def _jump_moment(law: TransitionLaw, run: tuple, alpha: float) -> float:
    x = run[-1]
    total = 0.0
    for y, p in law(run).items():
        up = max(y - x, 0)
        try:
            total += float(p) * math.exp(alpha * up)
        except OverflowError as exc:
            raise Diverged(f"e^(alpha*{up}) overflows at memory {list(run)}") from exc
    if not math.isfinite(total):
        raise Diverged(f"moment sum is not finite at memory {list(run)}")
    return total


def example_exp_moment(params: ExampleLawParams, alpha: float, ceiling: Optional[int] = None) -> float:
    """Closed form of ``M_alpha`` for the example law (worst case over its states)."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    e = math.exp(alpha)
    candidates = [1.0]
    if ceiling is None or ceiling > 0:
        candidates.append(float(params.floor_up) * e + float(params.floor_stay))
    if ceiling is None or ceiling >= 2:
        candidates.append(float(params.p_up) * e + 1 - float(params.p_up))
    return max(candidates)


def exp_moment(law: TransitionLaw, alpha: float, height: Optional[int] = None,
               max_run: Optional[int] = None, method: str = "auto") -> float:
    """Worst-case ``E exp(alpha * (X_{n+1} - X_n)_+)`` over memory states.

    ``method="enumerate"`` evaluates the sum over every strictly decreasing run
    with values in ``[0, height]`` and at most ``max_run`` entries.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if method not in ("auto", "closed", "enumerate"):
        raise ValueError(method)
    if alpha == 0:
        return 1.0
    if method == "closed" or (method == "auto" and type(law) is ExampleLaw):
        if type(law) is not ExampleLaw:
            raise ValueError("closed form only exists for the example law")
        return example_exp_moment(law.params, alpha, law.ceiling)
    height = _exploration_height(law, height)
    longest = height + 1 if max_run is None else max_run
    best = 1.0
    for length in range(1, longest + 1):
        for run in _descending_runs(0, height, length, law):
            best = max(best, _jump_moment(law, run, alpha))
    return best


def _exploration_height(law: TransitionLaw, height: Optional[int]) -> int:
    if height is not None:
        return height if law.ceiling is None else min(height, law.ceiling)
    if law.ceiling is not None:
        return law.ceiling
    return law.floor + DEFAULT_EXPLORATION


def rho_check(law: TransitionLaw, N: Optional[int] = None, height: Optional[int] = None) -> float:
    """Smallest probability of staying or stepping up by one from a state ``x <= N``."""
    N = law.floor if N is None else N
    height = _exploration_height(law, height)
    rho = 1.0
    for x in range(0, min(N, height) + 1):
        above = list(range(height, x, -1))
        if law.memory == "length":
            runs = (tuple(range(x + k, x - 1, -1)) for k in range(0, height - x + 1))
        else:
            runs = (tuple(c) + (x,) for r in range(len(above) + 1)
                    for c in itertools.combinations(above, r))
        for run in runs:
            d = law(run)
            rho = min(rho, float(d.get(x, 0)), float(d.get(x + 1, 0)))
    return rho


# -- profile ------------------------------------------------------------------

def audit(law: TransitionLaw, m_max: int = 60, height: Optional[int] = None,
          method: str = "auto") -> AssumptionProfile:
    """Build the assumption profile of ``law``.

    ``method="auto"`` uses the closed forms for an unbounded example law and
    enumeration whenever the law has a finite ceiling.
    """
    closed = method == "closed" or (method == "auto" and type(law) is ExampleLaw
                                    and law.ceiling is None)
    bounds = {"m_max": m_max, "floor": law.floor, "ceiling": law.ceiling,
              "memory": law.memory}
    if closed:
        if type(law) is not ExampleLaw:
            raise ValueError("closed-form audit only exists for the example law")
        kappa = kappa_closed_form_example(law.params, m_max)
        moment = lambda a, _law=law: exp_moment(_law, a, method="closed")  # noqa: E731
    else:
        kappa = kappa_enumerate(law, m_max=m_max)
        h = _exploration_height(law, height)
        bounds["exploration_height"] = h
        if type(law) is ExampleLaw:
            moment = lambda a, _law=law: exp_moment(_law, a, method="closed")  # noqa: E731
        else:
            moment = lambda a, _law=law, _h=h: exp_moment(_law, a, height=_h, method="enumerate")  # noqa: E731
    rho = rho_check(law, height=height)
    violations = kappa.violations()
    if rho <= 0:
        violations.append("A2: rho = 0 (no local mixing at the floor)")
    try:
        kb, kb_err = kappa_bar(kappa)
    except TailUnknown:
        kb = kb_err = None
    if kb is not None and kb <= 0:
        violations.append("A4: kappa_bar_inf = 0")
    q = float(1 - kappa.head[0])
    return AssumptionProfile(
        floor=law.floor, ceiling=law.ceiling, rho=rho, kappa=kappa, q=q,
        kappa_bar_inf=kb, kappa_bar_error=kb_err, exp_moment=moment,
        closed_form=closed, bounds=bounds, violations=violations,
    )
