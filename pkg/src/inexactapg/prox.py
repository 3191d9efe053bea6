"""Concrete proximal operators, projections and subdifferential distances.

The coordinatewise kernels come from the compiled ``_kernels`` extension
when it is importable and from ``_kernels_py`` otherwise. Setting the
environment variable ``INEXACTAPG_PURE=1`` forces the numpy versions.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .oracles import ProxOracle

if os.environ.get("INEXACTAPG_PURE", "") not in ("", "0"):
    from . import _kernels_py as _k
else:
    try:
        from . import _kernels as _k
    except ImportError:  # extension not built
        from . import _kernels_py as _k

BACKEND = "compiled" if _k.__name__.endswith("._kernels") else "python"

__all__ = [
    "BACKEND",
    "soft_threshold",
    "l1_subdiff_distance",
    "nonneg_subdiff_distance",
    "box_subdiff_distance",
    "project_simplex",
    "simplex_subdiff_distance",
    "L1Norm",
    "NonnegIndicator",
    "BoxIndicator",
    "LinfBallIndicator",
    "SimplexIndicator",
    "ZeroFunction",
]


def soft_threshold(z, t: float) -> np.ndarray:
    """Coordinatewise ``sign(z) * max(|z| - t, 0)``.

    Parameters
    ----------
    z : array_like
    t : float
        Threshold, must be nonnegative.
    """
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    return _k.soft_threshold(np.asarray(z, dtype=float), float(t))


def l1_subdiff_distance(x, v, lam: float) -> float:
    """``min ||v + xi||`` over ``xi`` in the subdifferential of ``lam*||.||_1`` at ``x``."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    return float(_k.l1_subdiff_distance(np.asarray(x, dtype=float), np.asarray(v, dtype=float), float(lam)))


def nonneg_subdiff_distance(x, v) -> float:
    """Distance from ``-v`` to the normal cone of the nonnegative orthant at ``x``.

    Raises
    ------
    ValueError
        If ``x`` has a negative entry.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    return float(_k.box_subdiff_distance(x, np.asarray(v, dtype=float), 0.0, np.inf))


def box_subdiff_distance(x, v, lower, upper) -> float:
    """Distance from ``-v`` to the normal cone of the box ``[lower, upper]`` at ``x``."""
    x = np.asarray(x, dtype=float)
    lo = np.broadcast_to(np.asarray(lower, dtype=float), x.shape)
    hi = np.broadcast_to(np.asarray(upper, dtype=float), x.shape)
    if np.any(x < lo) or np.any(x > hi):
        raise ValueError("x must lie in the box")
    return float(_k.box_subdiff_distance(x, np.asarray(v, dtype=float), lo, hi))


def project_simplex(z, s: float = 1.0) -> np.ndarray:
    """Euclidean projection onto ``{y >= 0, sum(y) = s}`` by the sorted threshold rule."""
    if s <= 0:
        raise ValueError("simplex radius must be positive")
    return _k.project_simplex(np.asarray(z, dtype=float), float(s))


def simplex_subdiff_distance(y, v) -> float:
    """Distance from ``-v`` to the normal cone of the simplex at ``y``.

    The normal cone at ``y`` is ``{t*1 + nu : nu <= 0, nu_i = 0 where y_i > 0}``.
    Eliminating ``nu`` leaves the convex piecewise quadratic
    ``sum_P (v_i + t)^2 + sum_Z min(v_i + t, 0)^2`` in ``t``, minimized exactly
    by trying each prefix of the sorted zero-coordinate entries.
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    pos = y > 0
    vp = v[pos]
    if vp.size == 0:
        return 0.0
    vz = np.sort(v[~pos])
    total, cnt = float(vp.sum()), vp.size
    t = -total / cnt
    # zero coordinates with v_i < -t pull t upward; admit them smallest first
    for vk in vz:
        if vk + t >= 0:
            break
        total += vk
        cnt += 1
        t = -total / cnt
    d = np.concatenate([vp + t, np.minimum(v[~pos] + t, 0.0)])
    return float(np.sqrt(d @ d))


class L1Norm(ProxOracle):
    """``weight * ||x||_1``."""

    has_subdiff_distance = True

    def __init__(self, weight: float = 1.0):
        if weight < 0:
            raise ValueError("weight must be nonnegative")
        self.weight = float(weight)

    def value(self, x):
        return self.weight * float(np.abs(x).sum())

    def prox(self, z, eta):
        return _k.soft_threshold(np.asarray(z, dtype=float), eta * self.weight)

    def subdiff_distance(self, x, v):
        return float(_k.l1_subdiff_distance(x, v, self.weight))


class BoxIndicator(ProxOracle):
    """Indicator of ``{lower <= x <= upper}`` (bounds may be scalars or arrays)."""

    has_subdiff_distance = True

    def __init__(self, lower=-np.inf, upper=np.inf):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    def value(self, x):
        x = np.asarray(x)
        return 0.0 if np.all(x >= self.lower) and np.all(x <= self.upper) else math.inf

    def prox(self, z, eta):
        return np.clip(np.asarray(z, dtype=float), self.lower, self.upper)

    def subdiff_distance(self, x, v):
        return box_subdiff_distance(x, v, self.lower, self.upper)

    def support(self, w) -> float:
        """``max <y, w>`` over the box (bounded boxes only)."""
        w = np.asarray(w, dtype=float)
        lo = np.broadcast_to(self.lower, w.shape)
        hi = np.broadcast_to(self.upper, w.shape)
        return float(np.sum(np.where(w > 0, hi * w, np.where(w < 0, lo * w, 0.0))))


class NonnegIndicator(BoxIndicator):
    """Indicator of the nonnegative orthant."""

    def __init__(self):
        super().__init__(0.0, np.inf)

    def prox(self, z, eta):
        return np.maximum(np.asarray(z, dtype=float), 0.0)

    def subdiff_distance(self, x, v):
        return nonneg_subdiff_distance(x, v)


class LinfBallIndicator(BoxIndicator):
    """Indicator of ``{||y||_inf <= radius}``."""

    def __init__(self, radius: float = 1.0):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        super().__init__(-self.radius, self.radius)

    def diameter(self, m: int) -> float:
        """Euclidean diameter of the ball in dimension ``m``."""
        return 2.0 * self.radius * math.sqrt(m)

    def support(self, w):
        return self.radius * float(np.abs(w).sum())


class SimplexIndicator(ProxOracle):
    """Indicator of ``{y >= 0, sum(y) = radius}``.

    ``fixed_sum`` advertises that every feasible point has coordinate sum
    ``radius``, so callers may recentre linear terms by a constant.
    """

    has_subdiff_distance = True

    def __init__(self, radius: float = 1.0, atol: float = 1e-9):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.fixed_sum = self.radius
        self.atol = atol

    def value(self, x):
        x = np.asarray(x)
        ok = np.all(x >= 0) and abs(x.sum() - self.radius) <= self.atol * max(1.0, self.radius)
        return 0.0 if ok else math.inf

    def prox(self, z, eta):
        return project_simplex(z, self.radius)

    def subdiff_distance(self, x, v):
        return simplex_subdiff_distance(x, v)

    def diameter(self, m: int | None = None) -> float:
        return self.radius * math.sqrt(2.0)

    def support(self, w):
        return self.radius * float(np.max(w))


class ZeroFunction(ProxOracle):
    """The zero function; its prox is the identity."""

    has_subdiff_distance = True

    def value(self, x):
        return 0.0

    def prox(self, z, eta):
        return np.array(z, dtype=float)

    def subdiff_distance(self, x, v):
        return float(np.linalg.norm(v))
