"""Smoothing of bilinear saddle-point problems.

For ``min_x max_y f(x) + r(x) + <y, A x> - phi(y)`` with bounded ``dom(phi)``,
the inner maximum is regularized by ``(rho/2)||y - y0||^2``. The result
``h_rho`` is smooth with gradient ``A^T y(x)``, so the primal problem
becomes ``f + h_rho + r`` and is handed to the inexact accelerated solver.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .iapg import IapgConfig, SolverFailure, apg_solve, iapg_solve
from .numkit import LinearOperator, op_norm_sq
from .oracles import CallableSmooth, CompositeProblem, ProxOracle, SmoothOracle, ZeroSmooth, uncounted

__all__ = [
    "SaddleProblem",
    "SaddleResidual",
    "SmoothedMax",
    "y_of_x",
    "smoothed_oracle",
    "saddle_residuals",
    "smoothed_solve",
    "duality_gap",
]


@dataclass
class SaddleProblem:
    """Bilinear saddle problem data.

    Attributes
    ----------
    f : SmoothOracle
        Strongly convex smooth part of the primal objective.
    r : ProxOracle
    A : LinearOperator
        Coupling matrix of shape ``(m, n)``.
    phi : ProxOracle
        Dual penalty with bounded domain; must expose ``support(w)`` for the
        duality gap evaluator.
    D_phi : float
        Euclidean diameter of ``dom(phi)``.
    y0 : ndarray
        Dual prox center inside ``dom(phi)``.
    A_norm_sq : float, optional
        ``||A||^2``; estimated by power iteration when absent.
    """

    f: SmoothOracle
    r: ProxOracle
    A: LinearOperator
    phi: ProxOracle
    D_phi: float
    y0: np.ndarray
    A_norm_sq: float | None = None

    def __post_init__(self):
        if not isinstance(self.A, LinearOperator):
            self.A = LinearOperator(self.A)
        self.y0 = np.asarray(self.y0, dtype=float)
        if not 0 < self.D_phi < np.inf:
            raise ValueError("D_phi must be positive and finite")
        if self.y0.shape != (self.A.shape[0],):
            raise ValueError("y0 has the wrong dimension")
        if not np.isfinite(self.phi.value(self.y0)):
            raise ValueError("y0 must lie in dom(phi)")

    @property
    def dim(self) -> int:
        return self.A.shape[1]


@dataclass
class SaddleResidual:
    primal_stat: float
    dual_stat: float
    dual_from_bound: bool = False


def _check_rho(rho):
    if rho <= 0:
        raise ValueError("rho must be positive")


def _centred(phi, w):
    """Split ``w = w_c + m`` when dom(phi) has a fixed coordinate sum.

    The maximizer is unchanged by the shift, and keeping ``w_c / rho``
    small avoids cancellation in the projection when rho is tiny.
    """
    s = getattr(phi, "fixed_sum", None)
    if s is None:
        return w, 0.0
    m = float(np.mean(w))
    return w - m, m * s


def _maximizer(sp, rho, Ax):
    w, offset = _centred(sp.phi, Ax)
    return sp.phi.prox(sp.y0 + w / rho, 1.0 / rho), w, offset


def y_of_x(sp: SaddleProblem, rho: float, x) -> np.ndarray:
    """Maximizer of ``<y, A x> - phi(y) - (rho/2)||y - y0||^2`` (one forward application)."""
    _check_rho(rho)
    return _maximizer(sp, rho, sp.A.apply(np.asarray(x, dtype=float)))[0]


class SmoothedMax(SmoothOracle):
    """``h_rho(x) = max_y <y, A x> - phi(y) - (rho/2)||y - y0||^2``.

    A value query costs one forward application of ``A``; a gradient or
    joint query adds one adjoint application.
    """

    def __init__(self, sp: SaddleProblem, rho: float, A_norm_sq: float):
        _check_rho(rho)
        super().__init__(0.0, A_norm_sq / rho)
        self.sp, self.rho = sp, rho
        self._counted_parts = (sp.A,)

    def _dual(self, x):
        sp = self.sp
        y, w, offset = _maximizer(sp, self.rho, sp.A.apply(x))
        d = y - sp.y0
        return float(y @ w) + offset - sp.phi.value(y) - 0.5 * self.rho * float(d @ d), y

    def _value(self, x):
        return self._dual(x)[0]

    def _gradient(self, x):
        return self.sp.A.adjoint(self._dual(x)[1])

    def _joint(self, x):
        val, y = self._dual(x)
        return val, self.sp.A.adjoint(y)


def smoothed_oracle(sp: SaddleProblem, rho: float) -> SmoothedMax:
    """Smooth surrogate of the inner maximum with smoothness ``||A||^2 / rho``."""
    _check_rho(rho)
    if sp.A_norm_sq is None:
        sp.A_norm_sq = op_norm_sq(sp.A)
    return SmoothedMax(sp, rho, sp.A_norm_sq)


def saddle_residuals(sp: SaddleProblem, x, y, rho: float | None = None) -> SaddleResidual:
    """Partial stationarity residuals of a primal-dual pair.

    ``dual_stat`` uses the exact normal-cone distance when ``phi`` provides
    it; otherwise ``rho * ||y - y0||``, which is valid only when
    ``y = y_of_x(sp, rho, x)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.isfinite(sp.phi.value(y)):
        raise ValueError("y must lie in dom(phi)")
    v = sp.f.gradient(x) + sp.A.adjoint(y)
    if sp.r.has_subdiff_distance:
        primal = float(sp.r.subdiff_distance(x, v))
    else:
        eta = 1.0 / sp.f.L if sp.f.L else 1.0
        xt = sp.r.prox(x - eta * v, eta)
        primal = float(np.linalg.norm(sp.f.gradient(xt) + sp.A.adjoint(y) - v + (x - xt) / eta))
    if sp.phi.has_subdiff_distance:
        return SaddleResidual(primal, float(sp.phi.subdiff_distance(y, -sp.A.apply(x))))
    if rho is None:
        raise ValueError("rho is needed when phi has no exact subdifferential distance")
    return SaddleResidual(primal, rho * float(np.linalg.norm(y - sp.y0)), True)


def smoothed_solve(sp: SaddleProblem, eps: float, cfg: IapgConfig | None = None, x0=None):
    """Approximate saddle point with both residuals at most ``eps``.

    Returns
    -------
    x_bar, y_bar : ndarray
    residual : SaddleResidual
    result : SolveResult
        The underlying primal solve.

    Raises
    ------
    SolverFailure
        If the primal solve does not converge.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if sp.f.mu <= 0:
        raise ValueError("f must be strongly convex")
    rho = eps / sp.D_phi
    h = smoothed_oracle(sp, rho)
    problem = CompositeProblem(sp.f, h, sp.r, (sp.A,), sp.dim)
    cfg = cfg or IapgConfig()
    res = iapg_solve(problem, replace(cfg, target_eps=eps), x0=x0)
    if not res.converged:
        raise SolverFailure(f"smoothed solve ended with status {res.status}")
    x_bar = res.x_out
    y_bar = y_of_x(sp, rho, x_bar)
    resid = saddle_residuals(sp, x_bar, y_bar, rho)
    return x_bar, y_bar, resid, res


def duality_gap(sp: SaddleProblem, x, y, tol: float = 1e-10) -> float:
    """Upper estimate of ``p(x) - d(y)``.

    ``p(x)`` uses the support function of ``dom(phi)`` (``phi`` must be an
    indicator exposing ``support``). ``d(y)`` needs a strongly convex
    minimization, solved to stationarity ``tol``; the returned gap is
    shifted by ``tol**2 / (2 mu)`` so that it never underestimates.
    Oracle queries made here are not charged.
    """
    mu = sp.f.mu
    if mu <= 0:
        raise ValueError("the dual function needs a strongly convex f")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.isfinite(sp.phi.value(y)):
        raise ValueError("y must lie in dom(phi)")
    f = sp.f
    with uncounted(f, sp.A):
        p = f.value(x) + sp.r.value(x) + sp.phi.support(sp.A.apply(x))
        c = sp.A.adjoint(y)
        shifted = CallableSmooth(
            lambda u: f.value(u) + float(c @ u),
            lambda u: f.gradient(u) + c,
            mu=f.mu, L=f.L,
        )
        prob = CompositeProblem(shifted, ZeroSmooth(), sp.r, dim=sp.dim)
        res = apg_solve(prob, IapgConfig(target_eps=tol, max_outer=100000, L_lower=f.L or f.mu), x0=x)
        if not res.converged:
            raise SolverFailure("dual evaluation did not converge")
        u = res.x_out
        d = f.value(u) + float(c @ u) + sp.r.value(u) - sp.phi.value(y)
    return p - (d - tol * tol / (2 * mu))
