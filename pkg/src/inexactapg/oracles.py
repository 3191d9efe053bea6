"""Oracle abstractions, query accounting and stationarity measures.

A smooth oracle counts one query per ``value``, ``gradient`` or ``joint``
call, so a joint (value, gradient) evaluation costs the same as either half.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SmoothOracle",
    "CallableSmooth",
    "ZeroSmooth",
    "SumSmooth",
    "ProxOracle",
    "CompositeProblem",
    "Diagnostics",
    "uncounted",
    "objective",
    "smooth_joint",
    "prox_grad_residual",
    "stationarity",
]


class SmoothOracle:
    """Base class for a smooth convex function with a query counter.

    Subclasses implement ``_value`` and ``_gradient`` and may override
    ``_joint`` when the pair shares work.

    Parameters
    ----------
    mu : float
        Advertised strong convexity modulus (0 if merely convex).
    L : float or None
        Advertised Lipschitz constant of the gradient, if known.
    """

    _counted_parts: tuple = ()

    def __init__(self, mu: float = 0.0, L: float | None = None):
        if mu < 0:
            raise ValueError("mu must be nonnegative")
        if L is not None and L < 0:
            raise ValueError("L must be nonnegative")
        self.mu = float(mu)
        self.L = None if L is None else float(L)
        self.count = 0

    def value(self, x) -> float:
        self.count += 1
        return self._value(x)

    def gradient(self, x) -> np.ndarray:
        self.count += 1
        return self._gradient(x)

    def joint(self, x) -> tuple[float, np.ndarray]:
        self.count += 1
        return self._joint(x)

    def _value(self, x):
        raise NotImplementedError

    def _gradient(self, x):
        raise NotImplementedError

    def _joint(self, x):
        return self._value(x), self._gradient(x)

    def counted_objects(self):
        """Yield this oracle and every counted object it delegates to."""
        yield self
        for part in self._counted_parts:
            if hasattr(part, "counted_objects"):
                yield from part.counted_objects()
            else:
                yield part


class CallableSmooth(SmoothOracle):
    """Smooth oracle built from plain callables."""

    def __init__(self, value, gradient, mu=0.0, L=None, joint=None):
        super().__init__(mu, L)
        self._f = value
        self._g = gradient
        self._j = joint

    def _value(self, x):
        return float(self._f(x))

    def _gradient(self, x):
        return np.asarray(self._g(x), dtype=float)

    def _joint(self, x):
        if self._j is not None:
            val, grad = self._j(x)
            return float(val), np.asarray(grad, dtype=float)
        return self._value(x), self._gradient(x)


class ZeroSmooth(SmoothOracle):
    """The zero function. Solvers skip it entirely, so its counter stays at 0."""

    def __init__(self):
        super().__init__(0.0, 0.0)

    def _value(self, x):
        return 0.0

    def _gradient(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


class SumSmooth(SmoothOracle):
    """``a + b`` queried jointly.

    One query of the sum costs one query on each summand and one on the
    sum's own counter, so the sum counter reports joint ``(a, b)`` queries.
    """

    def __init__(self, a: SmoothOracle, b: SmoothOracle):
        L = None if a.L is None or b.L is None else a.L + b.L
        super().__init__(a.mu + b.mu, L)
        self.a = a
        self.b = b
        self._counted_parts = (a, b)

    def _value(self, x):
        return self.a.value(x) + self.b.value(x)

    def _gradient(self, x):
        return self.a.gradient(x) + self.b.gradient(x)

    def _joint(self, x):
        fa, ga = self.a.joint(x)
        fb, gb = self.b.joint(x)
        return fa + fb, ga + gb


class ProxOracle:
    """Base class for a closed convex function with a cheap proximal map.

    ``prox(z, eta)`` returns ``argmin_u 0.5*||u - z||^2 + eta*value(u)``.
    Subclasses with a closed-form subdifferential set
    ``has_subdiff_distance = True`` and implement ``subdiff_distance``.
    """

    has_subdiff_distance = False

    def value(self, x) -> float:
        raise NotImplementedError

    def prox(self, z, eta: float) -> np.ndarray:
        raise NotImplementedError

    def subdiff_distance(self, x, v) -> float:
        """Return ``min ||v + xi||`` over subgradients ``xi`` at ``x``."""
        raise NotImplementedError(f"{type(self).__name__} has no exact subdifferential distance")


@dataclass
class CompositeProblem:
    """Composite objective ``g + h + r``.

    ``g`` and ``h`` are smooth; ``r`` is prox-friendly. ``operators`` lists
    counted linear operators whose applications are tallied as ``qa``;
    ``dim`` is the variable length, used for the default zero start.
    """

    g: SmoothOracle
    h: SmoothOracle
    r: ProxOracle
    operators: tuple = ()
    dim: int | None = None

    def qa_count(self) -> int:
        return sum(op.count for op in self.operators)


@dataclass
class Diagnostics:
    """Test-only knowledge of the optimum.

    Attributes
    ----------
    x_star, F_star : optional
        Known minimizer and optimal value. When both are set every trace
        row also carries the Lyapunov pair.
    keep_iterates : bool
        Store copies of ``x`` and ``z`` per iteration (small problems only).
    """

    x_star: np.ndarray | None = None
    F_star: float | None = None
    keep_iterates: bool = False
    iterates: list = field(default_factory=list)

    @property
    def has_optimum(self) -> bool:
        return self.x_star is not None and self.F_star is not None


@contextlib.contextmanager
def uncounted(*objs):
    """Evaluate oracles without charging their counters.

    Counters of the given objects (and everything they delegate to) are
    restored on exit.
    """
    seen = {}
    for obj in objs:
        parts = obj.counted_objects() if hasattr(obj, "counted_objects") else [obj]
        for p in parts:
            if hasattr(p, "count"):
                seen[id(p)] = (p, p.count)
    try:
        yield
    finally:
        for p, c in seen.values():
            p.count = c


def _problem_objects(problem: CompositeProblem):
    return (problem.g, problem.h) + tuple(problem.operators)


def objective(problem: CompositeProblem, x) -> float:
    """Uncounted ``g(x) + h(x) + r(x)``."""
    with uncounted(*_problem_objects(problem)):
        val = problem.g.value(x)
        if not isinstance(problem.h, ZeroSmooth):
            val += problem.h.value(x)
    return val + problem.r.value(x)


def smooth_joint(g: SmoothOracle, h: SmoothOracle, x):
    """Joint value and gradient of ``g + h``; ``h`` is skipped when it is zero."""
    fv, gv = g.joint(x)
    if not isinstance(h, ZeroSmooth):
        hv, hg = h.joint(x)
        fv = fv + hv
        gv = gv + hg
    return fv, gv


def _smooth_grad(problem, x):
    grad = problem.g.gradient(x)
    if not isinstance(problem.h, ZeroSmooth):
        grad = grad + problem.h.gradient(x)
    return grad


def prox_grad_residual(problem: CompositeProblem, x, xt, eta: float) -> float:
    """Upper bound on ``dist(0, dF(xt))`` after one prox-gradient step.

    ``xt`` must be ``prox(x - eta * grad(x), eta)``. Costs one gradient
    query on each of ``g`` and ``h`` at ``x`` and at ``xt``.

    Returns
    -------
    float
        ``||grad(xt) - grad(x) + (x - xt)/eta||`` for the smooth part ``g + h``.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = np.asarray(x, dtype=float)
    xt = np.asarray(xt, dtype=float)
    res = _smooth_grad(problem, xt) - _smooth_grad(problem, x) + (x - xt) / eta
    return float(np.linalg.norm(res))


def stationarity(problem: CompositeProblem, x, eta: float | None = None, strategy: str = "auto") -> float:
    """Distance from zero to the subdifferential of ``g + h + r`` at ``x``.

    Parameters
    ----------
    problem : CompositeProblem
    x : array_like
        Point in the domain of ``r``.
    eta : float, optional
        Step length of the auxiliary prox-gradient step used by the
        surrogate. Defaults to ``1/(L_g + L_h)`` when both are advertised.
    strategy : {"auto", "exact", "surrogate"}
        ``auto`` uses the exact distance when ``r`` provides it.

    Returns
    -------
    float
    """
    x = np.asarray(x, dtype=float)
    exact = problem.r.has_subdiff_distance if strategy == "auto" else strategy == "exact"
    if exact:
        return float(problem.r.subdiff_distance(x, _smooth_grad(problem, x)))
    if eta is None:
        if problem.g.L is None or problem.h.L is None:
            raise ValueError("surrogate stationarity needs eta or advertised smoothness constants")
        eta = 1.0 / (problem.g.L + problem.h.L)
    xt = problem.r.prox(x - eta * _smooth_grad(problem, x), eta)
    return prox_grad_residual(problem, x, xt, eta)
