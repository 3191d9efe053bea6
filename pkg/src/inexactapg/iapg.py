"""Inexact accelerated proximal gradient method with line search.

The solver minimizes ``g + h + r`` where ``g`` and ``h`` are smooth and
``r`` has a cheap prox. Each outer step queries ``g`` only at the
extrapolated point and the candidate point; the proximal subproblem
involving ``h + r`` is solved inexactly by a nested accelerated loop that
queries only ``h`` and the prox of ``r``. With ``h = 0`` that subproblem is
a single exact prox step, which is how :func:`apg_solve` (the exact
baseline on ``g + h`` jointly) shares the same code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .oracles import (
    CompositeProblem,
    Diagnostics,
    SmoothOracle,
    SumSmooth,
    ZeroSmooth,
    objective,
    smooth_joint,
)

__all__ = [
    "ToleranceSchedule",
    "IapgConfig",
    "IapgState",
    "TraceRow",
    "SolverTrace",
    "SolveResult",
    "StepOutcome",
    "SolverFailure",
    "LineSearchFailure",
    "InnerSolveError",
    "solve_alpha_gamma",
    "schedule_next",
    "line_search_step",
    "inner_solve",
    "seek_stationary",
    "iapg_solve",
    "apg_solve",
]

# relative rounding allowance in the sufficient-decrease tests
_FP_SLACK = 64 * np.finfo(float).eps
_ZERO = ZeroSmooth()


class SolverFailure(RuntimeError):
    """A solve could not produce a certified point."""


class LineSearchFailure(SolverFailure):
    """The step length underflowed while backtracking."""


class InnerSolveError(SolverFailure):
    """The proximal subproblem did not reach its tolerance within the iteration cap."""


@dataclass
class ToleranceSchedule:
    """Inner tolerance sequence.

    Attributes
    ----------
    regime : {"strongly_convex", "convex", "exact"}
    eps0 : float
        Initial tolerance.
    c : float
        Weight of the momentum product, in ``[0, 1)``.
    delta : float
        Extra decay exponent of the convex regime.
    running_product : float
        Current value of ``prod_j (1 - c * alpha_j)``.
    k : int
        Index of the next tolerance to emit.
    """

    regime: str = "strongly_convex"
    eps0: float = 1e-3
    c: float = 0.5
    delta: float = 1.0
    running_product: float = 1.0
    k: int = 0

    def __post_init__(self):
        if self.regime not in ("strongly_convex", "convex", "exact"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if not 0.0 <= self.c < 1.0:
            raise ValueError("c must lie in [0, 1)")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


def schedule_next(s: ToleranceSchedule, alpha_prev: float | None = None):
    """Emit the next tolerance.

    Parameters
    ----------
    s : ToleranceSchedule
    alpha_prev : float or None
        Momentum coefficient of the previous outer step (ignored at ``k = 0``).

    Returns
    -------
    tol : float
    s_next : ToleranceSchedule
    """
    k = s.k
    prod = s.running_product
    if s.regime == "exact":
        return 0.0, replace(s, k=k + 1)
    if s.regime == "convex":
        return s.eps0 / (k + 1) ** (2.0 + s.delta), replace(s, k=k + 1)
    if k > 0:
        if alpha_prev is None or not 0.0 < alpha_prev <= 1.0:
            raise ValueError("alpha_prev must lie in (0, 1]")
        prod *= 1.0 - s.c * alpha_prev
    return s.eps0 / (k + 1) * math.sqrt(prod), replace(s, k=k + 1, running_product=prod)


def solve_alpha_gamma(gamma: float, mu: float, eta: float):
    """Momentum coefficient and next curvature estimate.

    Solves ``alpha**2 / eta = (1 - alpha) * gamma + alpha * mu`` for the
    positive root, written in the cancellation-free form.

    Returns
    -------
    alpha : float
        In ``(0, 1]``.
    gamma_next : float
        ``alpha**2 / eta``, never below ``mu``.
    """
    tol = 1e-12 * max(1.0, abs(mu))
    if eta <= 0 or mu < 0 or gamma < mu - tol or mu * eta > 1.0 + 1e-12:
        raise ValueError(f"invalid inputs gamma={gamma}, mu={mu}, eta={eta}")
    gm = max(gamma - mu, 0.0)
    alpha = 2.0 * gamma / (gm + math.sqrt(gm * gm + 4.0 * gamma / eta))
    alpha = min(alpha, 1.0)
    return alpha, max(alpha * alpha / eta, mu)


@dataclass
class IapgConfig:
    """Solver parameters.

    Unset fields are filled from the problem's advertised constants:
    ``mu`` from ``g.mu``, ``L_lower`` from ``g.L``, ``eta_init`` as
    ``1/L_lower`` and ``gamma0`` as ``mu`` (or ``1/eta_init`` when ``mu = 0``).

    Attributes
    ----------
    eta_init : float, optional
        Step length of the virtual step before the first iteration.
    gamma0 : float, optional
    mu : float, optional
        Strong convexity modulus used by the momentum recursion.
    L_lower : float, optional
        Lower estimate of the smoothness constant of ``g``; caps the step at ``1/L_lower``.
    gamma_dec, gamma_inc : float
        Backtracking shrink factor and the growth factor of the next entry step.
    schedule : ToleranceSchedule or str, optional
        Default: strongly convex regime when ``mu > 0``, convex otherwise, both with ``eps0``.
        A regime name builds a schedule with ``eps0``.
    eps0 : float
    target_eps : float
        Stationarity at which the solve returns.
    check_every : int
        Frequency of the stationarity check.
    max_outer : int
    line_search : bool
        When False the steps are fixed at ``1/L_g`` (outer), ``1/(L_g + L_h)``
        (stationarity check) and ``1/(1/eta + L_h)`` (inner), which needs
        advertised constants.
    stationarity : {"auto", "exact", "surrogate"}
    inner_max_iter : int
    eta_floor : float
    warm_start_trials : bool
        Start each backtracking trial's inner solve at the previous trial's output.
    seek_backtrack : bool
        Let the stationarity check backtrack from ``1/L_lower`` even when
        ``line_search`` is off. When False and ``line_search`` is off it
        uses the fixed step ``1/(L_g + L_h)``.
    """

    eta_init: float | None = None
    gamma0: float | None = None
    mu: float | None = None
    L_lower: float | None = None
    gamma_dec: float = 0.5
    gamma_inc: float = 2.0
    schedule: ToleranceSchedule | str | None = None
    eps0: float = 1e-3
    target_eps: float = 1e-6
    check_every: int = 1
    max_outer: int = 10000
    line_search: bool = True
    stationarity: str = "auto"
    inner_max_iter: int = 100000
    eta_floor: float = 1e-300
    warm_start_trials: bool = True
    seek_backtrack: bool = True


@dataclass
class IapgState:
    """Iterates carried between outer steps."""

    x: np.ndarray
    z: np.ndarray
    gamma: float
    eta_prev: float
    k: int = 0
    eta_tilde: float = math.inf


@dataclass(slots=True)
class TraceRow:
    k: int
    eta: float
    alpha: float
    gamma: float
    gamma_next: float
    eps: float
    eps_used: float
    trials: int
    inner_iters: int
    seek_trials: int
    eta_tilde: float
    stationarity: float | None
    n_g: int
    n_h: int
    n_qa: int
    F: float | None = None
    lyap_lhs: float | None = None
    lyap_rhs: float | None = None


@dataclass
class SolverTrace:
    """Per-iteration records plus the constants needed to audit them."""

    rows: list = field(default_factory=list)
    mu: float = 0.0
    L_lower: float = math.nan
    L_g: float | None = None
    L_h: float | None = None
    gamma_dec: float = 0.5
    line_search: bool = True
    F0: float | None = None

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return [getattr(r, name) for r in self.rows]

    def as_records(self):
        return [{k: getattr(r, k) for k in TraceRow.__slots__} for r in self.rows]


@dataclass
class SolveResult:
    """Outcome of a solve.

    ``x_out`` is the last certified point (the output of the stationarity
    check), ``x_last`` the last momentum iterate.
    """

    x_out: np.ndarray
    stationarity: float
    status: str
    trace: SolverTrace
    iterations: int
    counts: dict
    x_last: np.ndarray | None = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"


@dataclass
class StepOutcome:
    x_next: np.ndarray
    y: np.ndarray
    gamma_next: float
    eta: float
    alpha: float
    trials: int
    inner_iters: int = 0
    eps_used: float = 0.0
    g_next: tuple | None = None


@dataclass
class _Params:
    mu: float
    L_lower: float
    L_g: float | None
    L_h: float | None
    eta_init: float
    gamma0: float
    gamma_dec: float
    gamma_inc: float
    schedule: ToleranceSchedule
    target_eps: float
    check_every: int
    max_outer: int
    line_search: bool
    exact_stat: bool
    inner_max_iter: int
    eta_floor: float
    warm_start: bool
    eta_tilde0: float
    seek_backtrack: bool = True


def _resolve(problem: CompositeProblem, cfg: IapgConfig) -> _Params:
    g, h = problem.g, problem.h
    h_zero = isinstance(h, ZeroSmooth)
    mu = g.mu if cfg.mu is None else float(cfg.mu)
    L_g = g.L
    L_h = 0.0 if h_zero else h.L
    L_lower = cfg.L_lower if cfg.L_lower is not None else L_g
    if L_lower is None:
        raise ValueError("L_lower is required when g advertises no smoothness constant")
    if not 0 < L_lower:
        raise ValueError("L_lower must be positive")
    if mu > L_lower * (1 + 1e-12):
        raise ValueError("need mu <= L_lower")
    if L_g is not None and L_lower > L_g * (1 + 1e-12):
        raise ValueError("need L_lower <= L_g")
    if not 0 < cfg.gamma_dec < 1 or cfg.gamma_inc < 1:
        raise ValueError("need 0 < gamma_dec < 1 <= gamma_inc")
    eta_init = 1.0 / L_lower if cfg.eta_init is None else float(cfg.eta_init)
    if eta_init <= 0 or (mu > 0 and eta_init > (1 + 1e-12) / mu):
        raise ValueError("need 0 < eta_init <= 1/mu")
    if cfg.gamma0 is None:
        gamma0 = mu if mu > 0 else 1.0 / eta_init
    else:
        gamma0 = float(cfg.gamma0)
    if gamma0 > (1 + 1e-12) / eta_init or gamma0 < mu or gamma0 <= 0:
        raise ValueError("gamma0 must lie in [mu, 1/eta_init] and be positive")
    sched = cfg.schedule
    if sched is None:
        sched = ToleranceSchedule("strongly_convex" if mu > 0 else "convex", cfg.eps0)
    elif isinstance(sched, str):
        sched = ToleranceSchedule(sched, cfg.eps0)
    sched = replace(sched)
    if sched.regime == "exact" and not h_zero:
        raise ValueError("the exact schedule needs h = 0")
    if cfg.stationarity not in ("auto", "exact", "surrogate"):
        raise ValueError(f"unknown stationarity strategy {cfg.stationarity!r}")
    exact_stat = problem.r.has_subdiff_distance if cfg.stationarity == "auto" else cfg.stationarity == "exact"
    seek_backtrack = cfg.line_search or cfg.seek_backtrack
    if not cfg.line_search and (L_g is None or L_h is None):
        raise ValueError("fixed steps need advertised L_g and L_h")
    eta_tilde0 = 1.0 / L_lower if seek_backtrack else 1.0 / (L_g + L_h)
    if cfg.check_every < 1 or cfg.max_outer < 1:
        raise ValueError("check_every and max_outer must be positive")
    return _Params(
        mu, L_lower, L_g, L_h, eta_init, gamma0, cfg.gamma_dec, cfg.gamma_inc, sched,
        cfg.target_eps, cfg.check_every, cfg.max_outer, cfg.line_search, exact_stat,
        cfg.inner_max_iter, cfg.eta_floor, cfg.warm_start_trials, eta_tilde0, seek_backtrack,
    )


class _ProxSubproblem(SmoothOracle):
    """Smooth part of the proximal subproblem.

    ``<gy, x - y> + ||x - y||^2 / (2 eta) + h(x)``; every query is one query of ``h``.
    """

    def __init__(self, gy, y, eta, h):
        L = None if h.L is None else 1.0 / eta + h.L
        super().__init__(1.0 / eta + h.mu, L)
        self.gy, self.y, self.eta, self.h = gy, y, eta, h
        self._counted_parts = (h,)

    def _value(self, x):
        d = x - self.y
        return float(self.gy @ d + (d @ d) / (2 * self.eta)) + self.h.value(x)

    def _gradient(self, x):
        return self.gy + (x - self.y) / self.eta + self.h.gradient(x)

    def _joint(self, x):
        d = x - self.y
        hv, hg = self.h.joint(x)
        return float(self.gy @ d + (d @ d) / (2 * self.eta)) + hv, self.gy + d / self.eta + hg


def _inner(gy, y, eta, h, r, x_start, tol, p: _Params):
    """Solve the proximal subproblem to ``tol``; return (x, measured stationarity, iterations)."""
    if isinstance(h, ZeroSmooth):
        return r.prox(y - eta * gy, eta), 0.0, 0
    phi = _ProxSubproblem(gy, y, eta, h)
    sub = CompositeProblem(phi, _ZERO, r)
    inv = 1.0 / eta
    ip = _Params(
        mu=inv, L_lower=inv, L_g=phi.L, L_h=0.0, eta_init=eta, gamma0=inv,
        gamma_dec=p.gamma_dec, gamma_inc=p.gamma_inc, schedule=ToleranceSchedule("exact"),
        target_eps=tol, check_every=1, max_outer=p.inner_max_iter,
        line_search=p.line_search, exact_stat=p.exact_stat, inner_max_iter=p.inner_max_iter,
        eta_floor=p.eta_floor, warm_start=p.warm_start,
        eta_tilde0=eta if p.seek_backtrack else 1.0 / phi.L, seek_backtrack=p.seek_backtrack,
    )
    res = _run(sub, x_start, ip, counters=(h, _ZERO), record=False)
    if res.status == "line_search_failed":
        raise LineSearchFailure("step underflow inside the proximal subproblem")
    if res.status != "converged":
        raise InnerSolveError(f"proximal subproblem stalled at stationarity {res.stationarity:.3e} > {tol:.3e}")
    return res.x_out, res.stationarity, res.iterations


def _line_search(problem: CompositeProblem, st: IapgState, p: _Params, tol: float) -> StepOutcome:
    g = problem.g
    if p.line_search:
        eta = min(1.0 / (p.gamma_dec * p.L_lower), p.gamma_inc * st.eta_prev)
    else:
        eta = 1.0 / p.L_g
    x_start = st.x
    trials = 0
    inner_total = 0
    while True:
        if p.line_search:
            eta *= p.gamma_dec
        if eta < p.eta_floor:
            raise LineSearchFailure(f"step length underflow (eta={eta:.3e})")
        trials += 1
        alpha, gamma_next = solve_alpha_gamma(st.gamma, p.mu, eta)
        wz = alpha * st.gamma
        y = (wz * st.z + gamma_next * st.x) / (wz + gamma_next)
        gy_val, gy = g.joint(y)
        x_next, eps_used, iters = _inner(gy, y, eta, problem.h, problem.r, x_start, tol, p)
        inner_total += iters
        if not p.line_search:
            return StepOutcome(x_next, y, gamma_next, eta, alpha, trials, inner_total, eps_used)
        gx_val, gx = g.joint(x_next)
        if _descent_ok(gy_val, gy, gx_val, gx, x_next - y, eta):
            return StepOutcome(x_next, y, gamma_next, eta, alpha, trials, inner_total, eps_used, (gx_val, gx))
        if p.warm_start:
            x_start = x_next


def _descent_ok(f0, g0, f1, g1, d, eta) -> bool:
    """Upper quadratic model test between two points ``d`` apart.

    For convex functions the curvature form ``<g1 - g0, d> <= ||d||^2 / eta``
    implies the value form and holds whenever ``eta <= 1/L``. The value form
    is consulted only while its margin ``||d||^2 / (2 eta)`` stands well above
    the rounding noise of the function values; near a minimizer the values
    carry no information and only the curvature form is trusted.
    """
    dd = float(d @ d)
    if float((g1 - g0) @ d) <= dd / eta:
        return True
    noise = _FP_SLACK * (abs(f0) + abs(f1))
    margin = dd / (2 * eta)
    return margin > 100 * noise and f1 - f0 - float(g0 @ d) <= margin + noise


def _seek(problem: CompositeProblem, x, eta_tilde, p: _Params, g_at_x=None):
    """Prox-gradient step on ``g + h`` from ``x``; returns (x_tilde, eta_tilde, trials, stationarity)."""
    g, h, r = problem.g, problem.h, problem.r
    if g_at_x is None:
        fx, gx = smooth_joint(g, h, x)
    else:
        fx, gx = g_at_x
        if not isinstance(h, ZeroSmooth):
            hv, hg = h.joint(x)
            fx, gx = fx + hv, gx + hg
    trials = 0
    if p.seek_backtrack:
        et = eta_tilde / p.gamma_dec
        while True:
            et *= p.gamma_dec
            if et < p.eta_floor:
                raise LineSearchFailure(f"step length underflow in the stationarity check (eta={et:.3e})")
            trials += 1
            xt = r.prox(x - et * gx, et)
            ft, gt = smooth_joint(g, h, xt)
            if _descent_ok(fx, gx, ft, gt, xt - x, et):
                break
    else:
        et = eta_tilde
        trials = 1
        xt = r.prox(x - et * gx, et)
        ft, gt = smooth_joint(g, h, xt)
    if p.exact_stat:
        stat = float(r.subdiff_distance(xt, gt))
    else:
        stat = float(np.linalg.norm(gt - gx + (x - xt) / et))
    return xt, et, trials, stat


def _run(problem: CompositeProblem, x0, p: _Params, counters=None, diag: Diagnostics | None = None,
         record: bool = True) -> SolveResult:
    cg, ch = counters if counters is not None else (problem.g, problem.h)
    base = (cg.count, ch.count, problem.qa_count())
    x = np.array(x0, dtype=float)
    z = x.copy()
    st = IapgState(x, z, p.gamma0, p.eta_init, 0, p.eta_tilde0)
    sched = p.schedule
    trace = SolverTrace(mu=p.mu, L_lower=p.L_lower, L_g=p.L_g, L_h=p.L_h,
                        gamma_dec=p.gamma_dec, line_search=p.line_search)
    lyap = record and diag is not None and diag.has_optimum
    if lyap:
        F_cur = objective(problem, x)
        trace.F0 = F_cur
        dz_cur = float(np.linalg.norm(diag.x_star - z))
    if record and diag is not None and diag.keep_iterates:
        diag.iterates.append((x.copy(), z.copy()))
    alpha_prev = None
    x_out, stat_out = x, math.inf
    status = "max_iters"
    k = 0
    for k in range(p.max_outer):
        tol, sched = schedule_next(sched, alpha_prev)
        try:
            step = _line_search(problem, st, p, tol)
        except LineSearchFailure:
            status = "line_search_failed"
            break
        x_next = step.x_next
        z_next = st.x + (x_next - st.x) / step.alpha
        stat = None
        seek_trials = 0
        if (k + 1) % p.check_every == 0:
            try:
                xt, st.eta_tilde, seek_trials, stat = _seek(problem, x_next, st.eta_tilde, p, step.g_next)
            except LineSearchFailure:
                status = "line_search_failed"
                break
            x_out, stat_out = xt, stat
        if record:
            row = TraceRow(k, step.eta, step.alpha, st.gamma, step.gamma_next, tol, step.eps_used,
                           step.trials, step.inner_iters, seek_trials, st.eta_tilde, stat,
                           cg.count - base[0], ch.count - base[1], problem.qa_count() - base[2])
            if lyap:
                F_next = objective(problem, x_next)
                dz_next = float(np.linalg.norm(diag.x_star - z_next))
                Fs = diag.F_star
                row.F = F_next
                row.lyap_lhs = F_next - Fs + 0.5 * step.gamma_next * dz_next ** 2
                row.lyap_rhs = ((1 - step.alpha) * (F_cur - Fs + 0.5 * st.gamma * dz_cur ** 2)
                                + step.eps_used * step.alpha * dz_next)
                F_cur, dz_cur = F_next, dz_next
            trace.rows.append(row)
            if diag is not None and diag.keep_iterates:
                diag.iterates.append((x_next.copy(), z_next.copy()))
        st.x, st.z, st.gamma, st.eta_prev, st.k = x_next, z_next, step.gamma_next, step.eta, k + 1
        alpha_prev = step.alpha
        if stat is not None and stat <= p.target_eps:
            status = "converged"
            break
    counts = {"g": cg.count - base[0], "h": ch.count - base[1], "qa": problem.qa_count() - base[2]}
    return SolveResult(x_out, stat_out, status, trace, st.k, counts, st.x)


def line_search_step(problem: CompositeProblem, state: IapgState, cfg: IapgConfig, tol: float) -> StepOutcome:
    """One backtracking step from ``state``.

    Raises
    ------
    LineSearchFailure
        If the step length drops below ``cfg.eta_floor``.
    """
    return _line_search(problem, state, _resolve(problem, cfg), tol)


def inner_solve(grad_g_at_y, y_k, eta_k: float, h: SmoothOracle, r, x_start, eps_k: float,
                cfg: IapgConfig | None = None) -> np.ndarray:
    """Approximate minimizer of the proximal subproblem.

    Returns ``x`` with ``dist(0, grad_g_at_y + (x - y_k)/eta_k + grad h(x) + dr(x)) <= eps_k``.
    Only ``h`` and the prox of ``r`` are queried.

    Raises
    ------
    InnerSolveError
        If the iteration cap is reached first.
    """
    if eps_k < 0 or eta_k <= 0:
        raise ValueError("need eps_k >= 0 and eta_k > 0")
    cfg = cfg or IapgConfig()
    y_k = np.asarray(y_k, dtype=float)
    p = _Params(0.0, 1.0 / eta_k, None, None, eta_k, 1.0 / eta_k, cfg.gamma_dec, cfg.gamma_inc,
                ToleranceSchedule("exact"), cfg.target_eps, 1, cfg.max_outer, cfg.line_search,
                r.has_subdiff_distance if cfg.stationarity == "auto" else cfg.stationarity == "exact",
                cfg.inner_max_iter, cfg.eta_floor, cfg.warm_start_trials, eta_k,
                cfg.line_search or cfg.seek_backtrack)
    x, _, _ = _inner(np.asarray(grad_g_at_y, dtype=float), y_k, eta_k, h, r,
                     np.asarray(x_start, dtype=float), eps_k, p)
    return x


def seek_stationary(problem: CompositeProblem, x, eta: float, gamma_dec: float = 0.5):
    """Backtracked prox-gradient step on ``g + h`` whose first trial uses ``eta``.

    Returns
    -------
    x_tilde : ndarray
    eta_tilde : float
        Accepted step length, at most ``eta``.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    p = _Params(0.0, 1.0 / eta, None, None, eta, 1.0 / eta, gamma_dec, 1.0, ToleranceSchedule("exact"),
                0.0, 1, 1, True, problem.r.has_subdiff_distance, 1, 1e-300, True, eta)
    xt, et, _, _ = _seek(problem, np.asarray(x, dtype=float), eta, p)
    return xt, et


def _start(problem, x0):
    if x0 is None:
        n = getattr(problem, "dim", None)
        if n is None:
            raise ValueError("x0 is required when the problem does not declare its dimension")
        return np.zeros(n)
    return np.asarray(x0, dtype=float)


def iapg_solve(problem: CompositeProblem, cfg: IapgConfig | None = None, diag: Diagnostics | None = None,
               x0=None) -> SolveResult:
    """Minimize ``g + h + r`` with the inexact accelerated method.

    Parameters
    ----------
    problem : CompositeProblem
    cfg : IapgConfig, optional
    diag : Diagnostics, optional
        Known optimum for per-iteration Lyapunov records.
    x0 : array_like, optional
        Starting point in the domain of ``r``. Defaults to zeros when the
        problem has a ``dim`` attribute.

    Returns
    -------
    SolveResult
        ``counts`` holds the queries to ``g`` and ``h`` and the linear operator applications.
    """
    cfg = cfg or IapgConfig()
    p = _resolve(problem, cfg)
    return _run(problem, _start(problem, x0), p, diag=diag)


def apg_solve(problem: CompositeProblem, cfg: IapgConfig | None = None, diag: Diagnostics | None = None,
              x0=None) -> SolveResult:
    """Exact accelerated proximal gradient on ``(g + h) + r``.

    ``g`` and ``h`` are queried together at every point; ``counts["gh"]``
    reports those joint queries. Unset config constants are taken from the
    sum ``g + h``.
    """
    cfg = cfg or IapgConfig()
    g, h = problem.g, problem.h
    joint = g if isinstance(h, ZeroSmooth) else SumSmooth(g, h)
    sub = CompositeProblem(joint, _ZERO, problem.r, problem.operators, problem.dim)
    sched = cfg.schedule if cfg.schedule is not None else "exact"
    p = _resolve(sub, replace(cfg, schedule=sched))
    before = joint.count
    res = _run(sub, _start(problem, x0), p, counters=(g, h), diag=diag)
    res.counts["gh"] = joint.count - before
    return res
