"""Inexact proximal augmented Lagrangian method for affine constraints.

Solves ``min f(x) + r(x)`` subject to ``A_E x = b_E`` and ``A_I x <= b_I``.
Each outer step minimizes, to a geometrically shrinking tolerance, the
proximal augmented Lagrangian split as ``g_k + h_k + r``: ``g_k`` is the
objective plus the proximal term (queried rarely by the inexact solver) and
``h_k`` carries the constraint penalty (cheap, queried often).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .iapg import IapgConfig, SolverFailure, apg_solve, iapg_solve
from .numkit import LinearOperator, op_norm_sq
from .oracles import CompositeProblem, ProxOracle, SmoothOracle

__all__ = [
    "AffineConstrainedProblem",
    "MultiplierState",
    "IpalmConfig",
    "KktResidual",
    "IpalmRow",
    "IpalmResult",
    "schedule_params",
    "build_subproblem",
    "multiplier_update",
    "kkt_residuals",
    "ipalm_solve",
]


def _block(A, b, n):
    if A is None:
        return LinearOperator(np.zeros((0, n))), np.zeros(0)
    if not isinstance(A, LinearOperator):
        A = LinearOperator(A)
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
    return A, b


@dataclass
class AffineConstrainedProblem:
    """Objective ``f + r`` with equality block ``(A_E, b_E)`` and inequality block ``(A_I, b_I)``.

    A block passed as ``None`` is empty. ``A_norm_sq`` optionally supplies
    an upper bound on the squared norm of the stacked constraint matrix;
    it is only needed for fixed-step subproblem solves.
    """

    f: SmoothOracle
    r: ProxOracle
    dim: int
    A_E: LinearOperator | None = None
    b_E: np.ndarray | None = None
    A_I: LinearOperator | None = None
    b_I: np.ndarray | None = None
    A_norm_sq: float | None = None

    def __post_init__(self):
        n = self.dim
        self.A_E, self.b_E = _block(self.A_E, self.b_E, n)
        self.A_I, self.b_I = _block(self.A_I, self.b_I, n)
        for A, b in ((self.A_E, self.b_E), (self.A_I, self.b_I)):
            if A.shape[1] != n or b.shape != (A.shape[0],):
                raise ValueError("constraint block dimensions are inconsistent")
        if self.A_E.shape[0] + self.A_I.shape[0] == 0:
            raise ValueError("at least one constraint block must be nonempty")

    @property
    def has_eq(self) -> bool:
        return self.A_E.shape[0] > 0

    @property
    def has_ineq(self) -> bool:
        return self.A_I.shape[0] > 0

    @property
    def operators(self) -> tuple:
        return tuple(A for A in (self.A_E, self.A_I) if A.shape[0] > 0)

    def qa_count(self) -> int:
        return sum(A.count for A in self.operators)


@dataclass
class MultiplierState:
    lam_E: np.ndarray
    lam_I: np.ndarray

    def __post_init__(self):
        self.lam_E = np.asarray(self.lam_E, dtype=float)
        self.lam_I = np.asarray(self.lam_I, dtype=float)
        if np.any(self.lam_I < 0):
            raise ValueError("inequality multipliers must be nonnegative")

    @classmethod
    def zeros(cls, problem: AffineConstrainedProblem):
        return cls(np.zeros(problem.A_E.shape[0]), np.zeros(problem.A_I.shape[0]))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.lam_E, self.lam_I])


@dataclass
class IpalmConfig:
    """Outer parameters.

    ``beta_k = beta0 * sigma**k`` and ``rho_k = rho0 / sigma**k``. The
    subproblem solver starts from ``inner`` with the strong convexity,
    lower smoothness estimate and target overridden per outer step.

    Attributes
    ----------
    beta0, rho0, sigma : float
    target_eps : float
        KKT tolerance.
    eps0 : float
        Initial tolerance of the subproblem solver's inner schedule.
    inner : IapgConfig
    max_outer : int
    line_search : bool
        Backtracking in the subproblem solver.
    warm_step : bool
        Start each subproblem solve from the previous terminal step length.
    L_lower_factor : float
        ``L_lower = L_lower_factor * L_f + rho_k`` when ``f`` advertises ``L_f``.
    """

    beta0: float = 1.0
    rho0: float = 1e-3
    sigma: float = 3.0
    target_eps: float = 1e-6
    eps0: float = 1e-5
    inner: IapgConfig = field(default_factory=lambda: IapgConfig(gamma_inc=3.0, gamma_dec=0.5, max_outer=1_000_000))
    max_outer: int = 100
    line_search: bool = True
    warm_step: bool = False
    L_lower_factor: float = 1.0

    def __post_init__(self):
        if self.beta0 <= 0 or self.rho0 <= 0 or self.sigma <= 1:
            raise ValueError("need beta0 > 0, rho0 > 0 and sigma > 1")


@dataclass
class KktResidual:
    dual: float
    primal: float
    compl: float

    def worst(self) -> float:
        return max(self.dual, self.primal, self.compl)


def schedule_params(cfg: IpalmConfig, k: int):
    """Penalty, proximal weight and subproblem tolerance of outer step ``k``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    s = cfg.sigma
    beta = cfg.beta0 * s ** k
    rho = cfg.rho0 * s ** (-k)
    epsbar = cfg.target_eps * (s - 1) / (8 * (s + 1)) * min(1.0, math.sqrt(cfg.beta0 * cfg.rho0))
    return beta, rho, min(epsbar, math.sqrt(cfg.rho0 / (20 * s)) * s ** (-k))


class _ProximalObjective(SmoothOracle):
    """``f(x) + (rho/2)||x - center||^2``; one query costs one query of ``f``."""

    def __init__(self, f: SmoothOracle, rho: float, center):
        super().__init__(f.mu + rho, None if f.L is None else f.L + rho)
        self.f, self.rho, self.center = f, rho, np.array(center, dtype=float)
        self._counted_parts = (f,)

    def _value(self, x):
        d = x - self.center
        return self.f.value(x) + 0.5 * self.rho * float(d @ d)

    def _gradient(self, x):
        return self.f.gradient(x) + self.rho * (x - self.center)

    def _joint(self, x):
        d = x - self.center
        v, gr = self.f.joint(x)
        return v + 0.5 * self.rho * float(d @ d), gr + self.rho * d


class _PenaltyTerm(SmoothOracle):
    """Augmented Lagrangian penalty of both constraint blocks."""

    def __init__(self, problem: AffineConstrainedProblem, lam: MultiplierState, beta: float,
                 A_norm_sq: float | None = None):
        super().__init__(0.0, None if A_norm_sq is None else beta * A_norm_sq)
        self.p, self.lam, self.beta = problem, lam, beta
        self._counted_parts = problem.operators

    def _parts(self, x):
        p, lam, beta = self.p, self.lam, self.beta
        val = 0.0
        rE = tI = None
        if p.has_eq:
            rE = p.A_E.apply(x) - p.b_E
            val += float(lam.lam_E @ rE) + 0.5 * beta * float(rE @ rE)
        if p.has_ineq:
            tI = np.maximum(beta * (p.A_I.apply(x) - p.b_I) + lam.lam_I, 0.0)
            val += (float(tI @ tI) - float(lam.lam_I @ lam.lam_I)) / (2 * beta)
        return val, rE, tI

    def _grad_from(self, x, rE, tI):
        p = self.p
        grad = np.zeros_like(x)
        if rE is not None:
            grad += p.A_E.adjoint(self.lam.lam_E + self.beta * rE)
        if tI is not None:
            grad += p.A_I.adjoint(tI)
        return grad

    def _value(self, x):
        return self._parts(x)[0]

    def _gradient(self, x):
        _, rE, tI = self._parts(x)
        return self._grad_from(x, rE, tI)

    def _joint(self, x):
        val, rE, tI = self._parts(x)
        return val, self._grad_from(x, rE, tI)


def build_subproblem(problem: AffineConstrainedProblem, x_k, lam: MultiplierState, beta_k: float,
                     rho_k: float, A_norm_sq: float | None = None) -> CompositeProblem:
    """Split of the proximal augmented Lagrangian at ``x_k`` into ``(g_k, h_k, r)``."""
    x_k = np.asarray(x_k, dtype=float)
    if x_k.shape != (problem.dim,):
        raise ValueError("x_k has the wrong dimension")
    if lam.lam_E.shape != problem.b_E.shape or lam.lam_I.shape != problem.b_I.shape:
        raise ValueError("multiplier dimensions do not match the constraints")
    if A_norm_sq is None:
        A_norm_sq = problem.A_norm_sq
    g_k = _ProximalObjective(problem.f, rho_k, x_k)
    h_k = _PenaltyTerm(problem, lam, beta_k, A_norm_sq)
    return CompositeProblem(g_k, h_k, problem.r, problem.operators, problem.dim)


def multiplier_update(lam: MultiplierState, x_next, problem: AffineConstrainedProblem,
                      beta_k: float) -> MultiplierState:
    """Dual ascent step; inequality multipliers are clipped at zero."""
    lam_E, lam_I = lam.lam_E, lam.lam_I
    if problem.has_eq:
        lam_E = lam_E + beta_k * (problem.A_E.apply(x_next) - problem.b_E)
    if problem.has_ineq:
        lam_I = np.maximum(lam_I + beta_k * (problem.A_I.apply(x_next) - problem.b_I), 0.0)
    return MultiplierState(lam_E, lam_I)


def kkt_residuals(problem: AffineConstrainedProblem, x, lam: MultiplierState) -> KktResidual:
    """Dual stationarity, primal feasibility and complementarity residuals (queries counted)."""
    if np.any(lam.lam_I < 0):
        raise ValueError("inequality multipliers must be nonnegative")
    x = np.asarray(x, dtype=float)
    grad = problem.f.gradient(x)
    v = grad.copy()
    primal_sq = 0.0
    compl = 0.0
    if problem.has_eq:
        rE = problem.A_E.apply(x) - problem.b_E
        v += problem.A_E.adjoint(lam.lam_E)
        primal_sq += float(rE @ rE)
    if problem.has_ineq:
        rI = problem.A_I.apply(x) - problem.b_I
        v += problem.A_I.adjoint(lam.lam_I)
        pos = np.maximum(rI, 0.0)
        primal_sq += float(pos @ pos)
        compl = float(np.linalg.norm(lam.lam_I * rI))
    r = problem.r
    if r.has_subdiff_distance:
        dual = float(r.subdiff_distance(x, v))
    else:
        # one prox-gradient step on f + r + <lam, A x>; the linear part cancels
        eta = 1.0 / problem.f.L if problem.f.L else 1.0
        xt = r.prox(x - eta * v, eta)
        dual = float(np.linalg.norm(problem.f.gradient(xt) - grad + (x - xt) / eta))
    return KktResidual(dual, math.sqrt(primal_sq), compl)


@dataclass
class IpalmRow:
    k: int
    beta: float
    rho: float
    epsbar: float
    inner_iters: int
    inner_stat: float
    n_f: int
    n_h: int
    n_joint: int
    n_qa: int
    n_f_kkt: int
    n_qa_kkt: int
    dual: float
    primal: float
    compl: float
    step_x: float
    step_lam: float


@dataclass
class IpalmResult:
    x: np.ndarray
    lam: MultiplierState
    kkt: KktResidual
    status: str
    rows: list
    counts: dict

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def ipalm_solve(problem: AffineConstrainedProblem, cfg: IpalmConfig | None = None,
                mode: str = "inexact_subsolver", x0=None, lam0: MultiplierState | None = None,
                keep_iterates: bool = False) -> IpalmResult:
    """Run the augmented Lagrangian outer loop until the KKT residuals are all below ``target_eps``.

    Parameters
    ----------
    problem : AffineConstrainedProblem
    cfg : IpalmConfig, optional
    mode : {"inexact_subsolver", "exact_subsolver"}
        ``inexact_subsolver`` splits each subproblem as ``g_k + h_k`` for
        :func:`iapg_solve`; ``exact_subsolver`` hands ``g_k + h_k`` jointly
        to :func:`apg_solve`.
    x0 : array_like, optional
        Start point in the domain of ``r`` (zeros by default).
    lam0 : MultiplierState, optional
    keep_iterates : bool
        Attach the list of primal-dual iterates to ``counts["iterates"]``.

    Returns
    -------
    IpalmResult
        ``counts`` holds gross totals (``f``, ``h``, ``joint``, ``qa``) and
        the same totals with the KKT checks removed (``*_net``).

    Raises
    ------
    SolverFailure
        If a subproblem solve fails.
    """
    if mode not in ("inexact_subsolver", "exact_subsolver"):
        raise ValueError(f"unknown mode {mode!r}")
    cfg = cfg or IpalmConfig()
    f = problem.f
    x = np.zeros(problem.dim) if x0 is None else np.array(x0, dtype=float)
    lam = lam0 or MultiplierState.zeros(problem)
    base_f, base_qa = f.count, problem.qa_count()
    A_norm_sq = problem.A_norm_sq
    if not cfg.line_search and A_norm_sq is None:
        A_norm_sq = sum(op_norm_sq(A) for A in problem.operators)
    kkt_f = kkt_qa = 0
    n_h = n_joint = 0

    def check(xc, lc):
        nonlocal kkt_f, kkt_qa
        f0, q0 = f.count, problem.qa_count()
        res = kkt_residuals(problem, xc, lc)
        kkt_f += f.count - f0
        kkt_qa += problem.qa_count() - q0
        return res

    kkt = check(x, lam)
    rows = []
    iterates = [(x.copy(), lam.vector())] if keep_iterates else None
    eta_warm = None
    L_lower_first = None
    status = "max_outer"
    for k in range(cfg.max_outer):
        if kkt.worst() <= cfg.target_eps:
            status = "converged"
            break
        beta, rho, epsbar = schedule_params(cfg, k)
        mu_k = f.mu + rho
        if f.L is not None:
            L_lower = cfg.L_lower_factor * f.L + rho
        else:
            L_lower = L_lower_first if L_lower_first is not None else mu_k
        eta_init = 1.0 / (f.mu + cfg.rho0)
        if cfg.warm_step and eta_warm is not None:
            eta_init = min(eta_warm, 1.0 / mu_k)
        icfg = replace(cfg.inner, mu=mu_k, L_lower=max(L_lower, mu_k), target_eps=epsbar,
                       eta_init=eta_init, gamma0=mu_k, eps0=cfg.eps0, schedule=None,
                       line_search=cfg.line_search)
        sub = build_subproblem(problem, x, lam, beta, rho, A_norm_sq)
        if mode == "inexact_subsolver":
            res = iapg_solve(sub, icfg, x0=x)
            n_h += res.counts["h"]
        else:
            res = apg_solve(sub, icfg, x0=x)
            n_h += res.counts["h"]
            n_joint += res.counts["gh"]
        if not res.converged:
            raise SolverFailure(f"subproblem {k} ended with status {res.status} "
                                f"(stationarity {res.stationarity:.3e}, target {epsbar:.3e})")
        if res.trace.rows:
            eta_warm = res.trace.rows[-1].eta
            if L_lower_first is None and f.L is None:
                L_lower_first = 1.0 / res.trace.rows[0].eta
        x_new = res.x_out
        lam_new = multiplier_update(lam, x_new, problem, beta)
        step_x = float(np.linalg.norm(x_new - x))
        step_lam = float(np.linalg.norm(lam_new.vector() - lam.vector()))
        x, lam = x_new, lam_new
        kkt = check(x, lam)
        if keep_iterates:
            iterates.append((x.copy(), lam.vector()))
        rows.append(IpalmRow(k, beta, rho, epsbar, res.iterations, res.stationarity,
                             f.count - base_f, n_h, n_joint, problem.qa_count() - base_qa,
                             kkt_f, kkt_qa, kkt.dual, kkt.primal, kkt.compl, step_x, step_lam))
    else:
        if kkt.worst() <= cfg.target_eps:
            status = "converged"
    n_f = f.count - base_f
    n_qa = problem.qa_count() - base_qa
    counts = {"f": n_f, "h": n_h, "joint": n_joint, "qa": n_qa,
              "f_net": n_f - kkt_f, "qa_net": n_qa - kkt_qa, "outer": len(rows)}
    if keep_iterates:
        counts["iterates"] = iterates
    return IpalmResult(x, lam, kkt, status, rows, counts)
