"""Memory states, transition laws, trajectory simulation and path statistics.

A memory state is the current strictly decreasing run ``(X_zeta, ..., X_n)``
stored as a plain tuple of ints.  A singleton means the last move was flat or
up (or the path just started), so the next step may only depend on ``X_n``.
Because a law only ever sees this tuple, kernels are Markov on the way up and
run-dependent on the way down by construction.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Callable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    InvalidDistribution,
    InvalidParams,
    MemoryCapExceeded,
    RunExceedsTrajectory,
)

MemoryState = tuple  # tuple[int, ...], strictly decreasing, nonempty
Distribution = dict  # dict[int, probability]

PROB_TOL = 1e-12


def check_memory(run: Sequence[int]) -> MemoryState:
    run = tuple(int(v) for v in run)
    if not run:
        raise ValueError("memory state must be nonempty")
    if run[-1] < 0:
        raise ValueError("states must be nonnegative")
    if any(a <= b for a, b in zip(run, run[1:])):
        raise ValueError(f"memory state {list(run)} is not strictly decreasing")
    return run


def memory_update(m: MemoryState, x_next: int) -> MemoryState:
    """Advance the descent run by one observed value.

    A strict down-move extends the run; a flat or up move resets it to a
    singleton.
    """
    if x_next < m[-1]:
        return m + (x_next,)
    return (x_next,)


def descent_length(m: MemoryState) -> int:
    """Number of completed strict down-steps in the run (0 for a singleton)."""
    return len(m) - 1


def check_distribution(run: MemoryState, dist: Mapping[int, Real]) -> None:
    total = 0
    for y, p in dist.items():
        if p < 0 or y < 0:
            raise InvalidDistribution(run)
        total += p
    if abs(total - 1) > PROB_TOL:
        raise InvalidDistribution(run, f"probabilities sum to {float(total)!r}, not 1")


@dataclass(frozen=True)
class GeometricTail:
    """Declared tail ``1 - kappa_k <= C * theta**k`` for every ``k``."""

    C: Real
    theta: Real

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise InvalidParams("tail ratio theta must lie in (0, 1)")
        if self.C < 0:
            raise InvalidParams("tail constant C must be nonnegative")


class TransitionLaw:
    """Map from a memory state to a finite distribution over next states.

    Subclasses implement :meth:`distribution`.  ``memory`` is ``"run"`` for
    laws that may look at the whole descent run and ``"length"`` for laws that
    depend only on ``(len(run), run[-1])``; the latter lets enumeration and the
    exact oracle collapse runs of equal length.  Instances are treated as
    immutable; results are cached per memory key.
    """

    memory = "run"
    kappa_tail = None  # optional GeometricTail declared by the law

    def __init__(self, floor: int = 0, ceiling: Optional[int] = None,
                 memory_cap: Optional[int] = None):
        if floor < 0:
            raise InvalidParams("floor must be nonnegative")
        if ceiling is not None and ceiling < 0:
            raise InvalidParams("ceiling must be nonnegative")
        self.floor = int(floor)
        self.ceiling = None if ceiling is None else int(ceiling)
        self.memory_cap = memory_cap
        self._cache: dict = {}
        self._tables: dict = {}

    def distribution(self, run: MemoryState) -> Distribution:
        raise NotImplementedError

    def _key(self, run: MemoryState):
        if self.memory == "length":
            return (len(run), run[-1])
        return run

    def __call__(self, run: Sequence[int]) -> Distribution:
        run = tuple(run)
        key = self._key(run)
        try:
            return dict(self._cache[key])
        except KeyError:
            pass
        if self.memory_cap is not None and len(run) > self.memory_cap:
            raise MemoryCapExceeded(f"run of length {len(run)} exceeds cap {self.memory_cap}")
        dist = {y: p for y, p in self.distribution(run).items() if p != 0}
        check_distribution(run, dist)
        if self.ceiling is not None and any(y > self.ceiling for y in dist):
            raise InvalidDistribution(run, f"law moves above ceiling {self.ceiling}")
        self._cache[key] = dist
        return dict(dist)

    def table(self, run: MemoryState):
        """Sampling table ``(targets, cumulative)`` with ``cumulative[-1] == 1``."""
        key = self._key(run)
        tab = self._tables.get(key)
        if tab is None:
            dist = self(run)
            targets = sorted(dist)
            cum, acc = [], 0.0
            for y in targets:
                acc += float(dist[y])
                cum.append(acc)
            cum[-1] = 1.0
            tab = (targets, cum)
            self._tables[key] = tab
        return tab

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_cache"] = {}
        state["_tables"] = {}
        return state

    def describe(self) -> dict:
        return {"kind": type(self).__name__, "floor": self.floor, "ceiling": self.ceiling}


@dataclass(frozen=True)
class ExampleLawParams:
    """Perturbed birth-death kernel; defaults are the reference example."""

    p_up: Real = Fraction(1, 5)
    p_stay: Real = Fraction(1, 5)
    p_down: Real = Fraction(3, 5)
    floor_up: Real = Fraction(1, 2)
    floor_stay: Real = Fraction(1, 2)
    ceiling: Optional[int] = None

    def validate(self) -> None:
        probs = (self.p_up, self.p_stay, self.p_down, self.floor_up, self.floor_stay)
        if any(p < 0 or p > 1 for p in probs):
            raise InvalidParams("probabilities must lie in [0, 1]")
        if abs(self.p_up + self.p_stay + self.p_down - 1) > PROB_TOL:
            raise InvalidParams("p_up + p_stay + p_down must equal 1")
        if abs(self.floor_up + self.floor_stay - 1) > PROB_TOL:
            raise InvalidParams("floor_up + floor_stay must equal 1")
        if self.ceiling is not None and self.ceiling < 0:
            raise InvalidParams("ceiling must be nonnegative")


class ExampleLaw(TransitionLaw):
    """The reference perturbed kernel.

    With ``k`` completed down-steps at ``x > 0`` the up and stay masses are
    scaled by ``2**-k`` and the removed mass goes to the down move.  State 0
    uses the fixed floor distribution.  At the ceiling, up-mass stays put.
    """

    memory = "length"

    def __init__(self, params: ExampleLawParams = ExampleLawParams(), floor: int = 0,
                 ceiling: Optional[int] = None):
        params.validate()
        if ceiling is None:
            ceiling = params.ceiling
        super().__init__(floor=floor, ceiling=ceiling)
        self.params = params
        self.kappa_tail = GeometricTail(C=params.p_up + params.p_stay, theta=Fraction(1, 2))

    def distribution(self, run: MemoryState) -> Distribution:
        p = self.params
        x = run[-1]
        at_ceiling = self.ceiling is not None and x >= self.ceiling
        if x == 0:
            up, stay, dist = p.floor_up, p.floor_stay, {}
        else:
            scale = Fraction(1, 2 ** descent_length(run))
            up, stay = p.p_up * scale, p.p_stay * scale
            dist = {x - 1: 1 - up - stay}
        if at_ceiling:
            dist[x] = up + stay
        else:
            dist[x] = stay
            dist[x + 1] = up
        return dist

    def describe(self) -> dict:
        p = self.params
        return {
            "kind": "example", "floor": self.floor, "ceiling": self.ceiling,
            "params": {k: float(getattr(p, k)) for k in
                       ("p_up", "p_stay", "p_down", "floor_up", "floor_stay")},
        }


class DescentLaw(TransitionLaw):
    """Deterministic descent: ``x -> x - 1`` above 0, absorbing at 0."""

    memory = "length"

    def distribution(self, run: MemoryState) -> Distribution:
        x = run[-1]
        return {x - 1: 1} if x > 0 else {0: 1}

    def describe(self) -> dict:
        return {"kind": "descent", "floor": self.floor, "ceiling": self.ceiling}


class FunctionLaw(TransitionLaw):
    """Wrap a plain ``run -> {state: prob}`` callable."""

    def __init__(self, fn: Callable[[MemoryState], Mapping[int, Real]], floor: int = 0,
                 ceiling: Optional[int] = None, memory: str = "run", kappa_tail=None):
        super().__init__(floor=floor, ceiling=ceiling)
        if memory not in ("run", "length"):
            raise InvalidParams("memory must be 'run' or 'length'")
        self.fn = fn
        self.memory = memory
        self.kappa_tail = kappa_tail

    def distribution(self, run: MemoryState) -> Distribution:
        return dict(self.fn(run))


class TabularLaw(TransitionLaw):
    """Explicit table of memory states with an optional fallback law."""

    def __init__(self, table: Mapping[Sequence[int], Mapping[int, Real]],
                 fallback: Optional[TransitionLaw] = None, floor: Optional[int] = None,
                 ceiling: Optional[int] = None):
        if floor is None:
            floor = fallback.floor if fallback is not None else 0
        if ceiling is None and fallback is not None:
            ceiling = fallback.ceiling
        super().__init__(floor=floor, ceiling=ceiling)
        self.entries = {}
        for run, dist in table.items():
            run = check_memory(run)
            dist = {int(y): p for y, p in dist.items()}
            check_distribution(run, dist)
            self.entries[run] = dist
        self.fallback = fallback

    def distribution(self, run: MemoryState) -> Distribution:
        if run in self.entries:
            return dict(self.entries[run])
        if self.fallback is None:
            raise KeyError(f"no table entry for memory state {list(run)} and no fallback")
        return self.fallback(run)

    def describe(self) -> dict:
        return {
            "kind": "tabular", "floor": self.floor, "ceiling": self.ceiling,
            "entries": len(self.entries),
            "fallback": None if self.fallback is None else self.fallback.describe(),
        }


def law_example(params: ExampleLawParams = ExampleLawParams(), floor: int = 0,
                ceiling: Optional[int] = None) -> ExampleLaw:
    return ExampleLaw(params, floor=floor, ceiling=ceiling)


def law_tabular(table, fallback: Optional[TransitionLaw] = None, **kw) -> TabularLaw:
    return TabularLaw(table, fallback=fallback, **kw)


# -- simulation ---------------------------------------------------------------

class UniformStream:
    """Buffered uniforms from a numpy Generator."""

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self.rng = rng
        self.block = block
        self._buf = rng.random(block).tolist()
        self._i = 0

    def __call__(self) -> float:
        if self._i == self.block:
            self._buf = self.rng.random(self.block).tolist()
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        return u


def sample_next(law: TransitionLaw, run: MemoryState, u: float) -> int:
    targets, cum = law.table(run)
    return targets[bisect_right(cum, u)]


@dataclass(frozen=True)
class Trajectory:
    states: tuple
    floor: int
    tau: Optional[int]
    horizon: int
    run_lengths: tuple = field(default=(), repr=False)

    @property
    def hit(self) -> bool:
        return self.tau is not None

    def __len__(self) -> int:
        return len(self.states)


def simulate(law: TransitionLaw, x0: int, horizon: int, seed: int,
             stop_at_floor: bool = True) -> Trajectory:
    """Sample one path from ``[x0]`` until it enters ``[0, floor]`` or ``horizon`` steps.

    With ``stop_at_floor=False`` the path runs the full horizon; ``tau`` is
    still the first floor hit.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if x0 < 0 or (law.ceiling is not None and x0 > law.ceiling):
        raise ValueError(f"x0={x0} outside the state space")
    u = UniformStream(np.random.default_rng(seed), block=1024)
    run = (int(x0),)
    states, lengths = [run[-1]], [1]
    tau = 0 if x0 <= law.floor else None
    t = 0
    while t < horizon and not (stop_at_floor and tau is not None):
        y = sample_next(law, run, u())
        run = memory_update(run, y)
        states.append(y)
        lengths.append(len(run))
        t += 1
        if tau is None and y <= law.floor:
            tau = t
    return Trajectory(tuple(states), law.floor, tau, horizon, tuple(lengths))


# -- path statistics ----------------------------------------------------------

def _states(path) -> Sequence[int]:
    return path.states if isinstance(path, Trajectory) else path


def stat_zeta(path, n: int) -> int:
    """Start index of the strict descent run ending at ``n``."""
    xs = _states(path)
    if not 0 <= n < len(xs):
        raise IndexError(n)
    k = n
    while k > 0 and xs[k - 1] > xs[k]:
        k -= 1
    return k


def _run_end(xs: Sequence[int], n: int, falling: bool) -> int:
    if not 0 <= n < len(xs):
        raise IndexError(n)
    k = n
    while k + 1 < len(xs):
        down = xs[k + 1] < xs[k]
        if down != falling:
            return k
        k += 1
    raise RunExceedsTrajectory(
        f"{'descent' if falling else 'rise'} from index {n} reaches the end of the path"
    )


def stat_xi(path, n: int) -> int:
    """End index of the nondecreasing run starting at ``n`` (``n`` if the first step falls)."""
    return _run_end(_states(path), n, falling=False)


def stat_chi(path, n: int) -> int:
    """End index of the strict descent starting at ``n`` (``n`` if the first step is >= 0)."""
    return _run_end(_states(path), n, falling=True)


@dataclass(frozen=True)
class EpochDecomposition:
    """Alternating fall-end (``T``) and rise-end (``t``) epochs of a path."""

    case_tag: str
    T: tuple
    t: tuple
    end: int
    hit: bool

    def attempts(self, states: Sequence[int], floor: int) -> list:
        """Success flag of each descent ``t[j-1] -> T[j]`` for ``j >= 1``."""
        return [states[T] <= floor for T in self.T[1:]]

    def intervals(self) -> Iterator[tuple]:
        """Yield ``("rise"|"fall", start, stop)`` segments in path order."""
        for i, T in enumerate(self.T):
            if i > 0:
                yield ("fall", self.t[i - 1], T)
            if i < len(self.t):
                yield ("rise", T, self.t[i])


def epochs(path) -> EpochDecomposition:
    """Alternately apply the descent and rise stopping rules, stopping at tau."""
    xs = _states(path)
    if len(xs) < 2:
        raise ValueError("epoch decomposition needs at least two states")
    if isinstance(path, Trajectory) and path.tau is not None:
        end, hit = path.tau, True
    else:
        end, hit = len(xs) - 1, False

    def run_end(i, falling):
        k = i
        while k < end and (xs[k + 1] < xs[k]) == falling:
            k += 1
        return k

    case = "I" if xs[1] < xs[0] else "II"
    T = [0]
    t = [0 if case == "I" else run_end(0, False)]
    if end == 0:
        return EpochDecomposition(case, (0,), (0,), end, hit)
    while t[-1] < end:
        T.append(run_end(t[-1], True))
        if T[-1] >= end:
            break
        t.append(run_end(T[-1], False))
    return EpochDecomposition(case, tuple(T), tuple(t), end, hit)

