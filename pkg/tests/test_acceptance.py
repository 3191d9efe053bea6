"""Acceptance criteria C1 to C11.

Each test prints one ``PASS``/``FAIL`` line (collected again in the
terminal summary). Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time

import numpy as np
import pytest

from inexactapg.bench.runner import PRESETS, config_from_dict, run_config
from inexactapg.iapg import IapgConfig, apg_solve, iapg_solve
from inexactapg.ipalm import IpalmConfig, MultiplierState, ipalm_solve, kkt_residuals
from inexactapg.numkit import LinearOperator, make_rng
from inexactapg.oracles import CompositeProblem, Diagnostics, ZeroSmooth, uncounted
from inexactapg.problems import (
    LassoSpec,
    LeastSquares,
    MultitaskSpec,
    PortfolioSpec,
    QuadraticOracle,
    gen_constrained_lasso,
    gen_multitask,
    gen_portfolio,
    matrix_game_fixture,
    quadratic_l1_fixture,
    zero_sum_fixture,
)
from inexactapg.prox import L1Norm, LinfBallIndicator, NonnegIndicator, ZeroFunction
from inexactapg.smoothing import SaddleProblem, duality_gap, saddle_residuals, smoothed_oracle, smoothed_solve

from checks import bound_violations, counters_monotone, lyapunov_violations, verdict
from conftest import fd_gradient, rel_err

pytestmark = pytest.mark.slow

EPS = 1e-6
TRACES = []  # every iAPG/APG trace produced here, audited by C4


def _keep(res):
    TRACES.append(res.trace)
    return res


# --- shared runs -----------------------------------------------------------------

@pytest.fixture(scope="module")
def table1():
    cfg = config_from_dict({**PRESETS["table1-small"], "seed": 1000})
    t0 = time.perf_counter()
    out = run_config(cfg)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def lasso_runs():
    runs = []
    for mode in ("inexact_subsolver", "exact_subsolver"):
        for ls in (False, True):
            prob = gen_constrained_lasso(LassoSpec(m=200, n=500, seed=2000))
            res = ipalm_solve(prob, IpalmConfig(line_search=ls, target_eps=EPS), mode, keep_iterates=True)
            runs.append((mode, ls, prob, res))
    return runs


def _mean(trials, key):
    return float(np.mean([t[key] for t in trials]))


# --- criteria ----------------------------------------------------------------------

def test_c01_oracle_count_separation(table1):
    out, elapsed = table1
    means = {(m, s["lambda1"]): _mean(tr, "n_g") for m, _, s, tr in out}
    joint = {(m, s["lambda1"]): _mean(tr, "n_joint") for m, _, s, tr in out}
    iapg_ok = all(means[("iapg", lam)] <= 100 for lam in (1.0, 10.0, 100.0))
    ratio = joint[("apg", 100.0)] / means[("iapg", 100.0)]
    detail = (", ".join(f"lambda1={lam:g} iAPG #g={means[('iapg', lam)]:.1f} APG #(g,h)={joint[('apg', lam)]:.0f}"
                        for lam in (1.0, 10.0, 100.0))
              + f"; ratio at 100 = {ratio:.1f}; {elapsed:.1f}s")
    verdict("C1", "oracle-count separation", iapg_ok and ratio >= 5 and elapsed <= 60, detail)


def test_c02_stationarity_certification(table1, lasso_runs):
    worst = 0.0
    checked = 0
    for _, _, _, trials in table1[0]:
        for t in trials:
            if t["status"] == "converged":
                worst = max(worst, t["stat_viol"])
                checked += 1
    # KKT residuals recomputed from scratch on the returned pairs
    problems = [(prob, res) for _, _, prob, res in lasso_runs]
    for mu in (0.001, 0.1):
        prob = gen_portfolio(PortfolioSpec(n=200, m=100, mu=mu, seed=2001))
        problems.append((prob, ipalm_solve(prob, IpalmConfig(target_eps=EPS))))
    all_converged = all(res.converged for _, res in problems)
    for prob, res in problems:
        with uncounted(prob.f, *prob.operators):
            kkt = kkt_residuals(prob, res.x, res.lam)
        worst = max(worst, kkt.dual, kkt.primal, kkt.compl)
        checked += 1
    verdict("C2", "stationarity certification", all_converged and worst <= EPS,
            f"{checked} solves, worst residual {worst:.2e} (target {EPS:g})")


def test_c03_lyapunov_inequality():
    bad, rows = 0, 0
    for seed in range(5):
        fx = quadratic_l1_fixture(seed)
        Lg = fx.problem.g.L
        for ls in (False, True):
            diag = Diagnostics(x_star=fx.x_star, F_star=fx.F_star)
            cfg = IapgConfig(target_eps=1e-8, line_search=ls, L_lower=0.3 * Lg if ls else None)
            res = _keep(iapg_solve(fx.problem, cfg, diag))
            bad += len(lyapunov_violations(res.trace, fx.F_star))
            rows += len(res.trace)
    verdict("C3", "per-step Lyapunov inequality", bad == 0 and rows > 0,
            f"{rows - bad}/{rows} iterations satisfied over 5 seeds")


def _rate_problem(kappa, n=40, seed=0):
    rng = make_rng(seed)
    Qo, _ = np.linalg.qr(rng.standard_normal((n, n)))
    ev = np.geomspace(1.0, kappa, n)
    Q = (Qo * ev) @ Qo.T
    x_star = rng.standard_normal(n)
    c = -Q @ x_star
    f = QuadraticOracle(Q, c=c, const=0.5 * float(x_star @ Q @ x_star), mu=1.0, L=kappa)
    return CompositeProblem(f, ZeroSmooth(), ZeroFunction(), dim=n), x_star


def test_c05_geometric_rate():
    gd = 0.5
    worst, details = -math.inf, []
    for kappa in (25.0, 100.0):
        bound = (1 - math.sqrt(gd / kappa)) * 1.05
        for ls in (False, True):
            prob, x_star = _rate_problem(kappa)
            diag = Diagnostics(x_star=x_star, F_star=0.0)
            cfg = IapgConfig(target_eps=1e-13, gamma_dec=gd, line_search=ls, L_lower=0.25 * kappa if ls else None)
            res = _keep(apg_solve(prob, cfg, diag))
            lyap = [r.lyap_lhs for r in res.trace.rows]
            # row k holds the potential after step k, i.e. at iterate k + 1
            rate = (lyap[29] / lyap[4]) ** (1 / 25)
            worst = max(worst, rate / bound)
            details.append(f"kappa={kappa:g} ls={ls}: {rate:.4f} vs {bound:.4f}")
    verdict("C5", "geometric rate of exact APG", worst <= 1.0, "; ".join(details))


def test_c06_ipalm_zero_sum_fixture():
    worst_err, worst_res, worst_outer, ok = 0.0, 0.0, 0, True
    for seed in range(3):
        for mode in ("inexact_subsolver", "exact_subsolver"):
            fx = zero_sum_fixture(n=50, seed=seed)
            res = ipalm_solve(fx.problem, IpalmConfig(sigma=3.0, beta0=1.0, rho0=1e-3, target_eps=EPS), mode)
            ok &= res.converged
            worst_err = max(worst_err, float(np.linalg.norm(res.x - fx.x_star)))
            worst_res = max(worst_res, res.kkt.worst())
            worst_outer = max(worst_outer, res.counts["outer"])
    ok &= worst_err <= 1e-5 and worst_res <= EPS and worst_outer <= 20
    verdict("C6", "iPALM on the zero-sum fixture", ok,
            f"max error {worst_err:.1e}, max residual {worst_res:.1e}, max outer {worst_outer}")


def test_c07_telescoping_bounds(lasso_runs):
    bad, steps = 0, 0
    for mode, ls, prob, res in lasso_runs:
        nE = prob.A_E.shape[0]
        its = res.counts["iterates"]
        for row, (x0, l0), (x1, l1) in zip(res.rows, its, its[1:]):
            with uncounted(prob.f, *prob.operators):
                kkt = kkt_residuals(prob, x1, MultiplierState(l1[:nE], l1[nE:]))
            steps += 1
            if kkt.dual > row.epsbar + row.rho * np.linalg.norm(x1 - x0) + 1e-9:
                bad += 1
            elif kkt.primal > np.linalg.norm(l1 - l0) / row.beta + 1e-12:
                bad += 1
    verdict("C7", "iPALM telescoping residual bounds", bad == 0 and steps > 0,
            f"{steps - bad}/{steps} outer steps within both bounds")


def test_c08_initial_penalty_robustness():
    cfg = config_from_dict({**PRESETS["fig1-small"], "seed": 3000})
    out = run_config(cfg)
    obj = {s["beta0"]: _mean(tr, "n_g") for m, _, s, tr in out if m == "ipalm_iapg"}
    joint = {s["beta0"]: _mean(tr, "n_joint") for m, _, s, tr in out if m == "ipalm_apg"}
    spread = max(obj.values()) / min(obj.values())
    growth = joint[100.0] / joint[0.1]
    detail = (f"iPALM_iAPG #query_obj {', '.join(f'{b:g}:{v:.0f}' for b, v in sorted(obj.items()))} "
              f"(spread {spread:.2f}x, need < 2x); iPALM_APG joint {joint[0.1]:.0f} -> {joint[100.0]:.0f} "
              f"(growth {growth:.2f}x, need >= 2x)")
    verdict("C8", "initial-penalty robustness", spread < 2 and growth >= 2, detail)


def test_c09_smoothed_gradient():
    rng = make_rng(9)
    A = rng.standard_normal((8, 12))
    phi = LinfBallIndicator(1.0)
    f = QuadraticOracle(np.eye(12), mu=1.0, L=1.0)
    sp = SaddleProblem(f, ZeroFunction(), LinearOperator(A), phi, phi.diameter(8), np.zeros(8))
    worst = 0.0
    for rho in (1.0, 0.1):
        h = smoothed_oracle(sp, rho)
        for _ in range(10):
            x = rng.standard_normal(12)
            worst = max(worst, rel_err(fd_gradient(h.value, x), h.gradient(x)))
    verdict("C9", "smoothed gradient vs finite differences", worst <= 1e-5, f"max rel. error {worst:.1e}")


def test_c10_saddle_certificates():
    ok, worst_res, worst_gap = True, 0.0, -math.inf
    for seed in range(5):
        for eps in (1e-3, 1e-4):
            for ls in (True, False):
                sp = matrix_game_fixture(seed, mu=0.1).problem
                x, y, _, res = smoothed_solve(sp, eps, IapgConfig(line_search=ls))
                _keep(res)
                with uncounted(sp.f, sp.A):
                    chk = saddle_residuals(sp, x, y)
                    gap = duality_gap(sp, x, y, tol=1e-10)
                bound = 2 * eps * sp.D_phi + 3 * eps ** 2 / (2 * sp.f.mu)
                ok &= max(chk.primal_stat, chk.dual_stat) <= eps and gap <= bound
                worst_res = max(worst_res, max(chk.primal_stat, chk.dual_stat) / eps)
                worst_gap = max(worst_gap, gap / bound)
    verdict("C10", "saddle certificates and gap bound", ok,
            f"max residual/eps {worst_res:.2f}, max gap/bound {worst_gap:.2e}")


def _degeneration_problems():
    fx = quadratic_l1_fixture(4)
    yield "quadratic_l1", CompositeProblem(fx.problem.g, ZeroSmooth(), fx.problem.r, dim=fx.problem.dim)
    rng = make_rng(11)
    M = rng.standard_normal((30, 20))
    yield "least_squares_l1", CompositeProblem(LeastSquares(M, rng.standard_normal(30), ridge=0.01),
                                               ZeroSmooth(), L1Norm(0.1), dim=20)
    Q = gen_portfolio(PortfolioSpec(n=30, m=10, seed=11)).f.Q
    f = QuadraticOracle(Q, c=rng.standard_normal(30))
    yield "nonneg_quadratic", CompositeProblem(f, ZeroSmooth(), NonnegIndicator(), dim=30)


def test_c11_exactness_degeneration():
    ok, details = True, []
    for name, prob in _degeneration_problems():
        for ls in (False, True):
            d1, d2 = Diagnostics(keep_iterates=True), Diagnostics(keep_iterates=True)
            cfg = IapgConfig(target_eps=1e-9, line_search=ls)
            r1 = _keep(iapg_solve(prob, IapgConfig(**{**cfg.__dict__, "schedule": "exact"}), d1))
            r2 = _keep(apg_solve(prob, cfg, d2))
            same = len(d1.iterates) == len(d2.iterates) and all(
                x1.tobytes() == x2.tobytes() and z1.tobytes() == z2.tobytes()
                for (x1, z1), (x2, z2) in zip(d1.iterates, d2.iterates))
            same &= r1.x_out.tobytes() == r2.x_out.tobytes()
            ok &= same
            details.append(f"{name}/{'ls' if ls else 'fixed'}:{len(d1.iterates) - 1} its {'equal' if same else 'DIFFER'}")
    verdict("C11", "exactness degeneration", ok, "; ".join(details))


def test_c04_bound_invariants():
    # also audits the traces recorded by C3, C5, C10 and C11 when they ran first
    for lam in (1.0, 100.0):
        prob = gen_multitask(MultitaskSpec(n=200, N_l=500, mu=0.1, lambda1=lam, seed=4000))
        for ls in (False, True):
            cfg = IapgConfig(target_eps=EPS, eps0=1e-3, gamma_inc=2.0, line_search=ls,
                             L_lower=prob.g.mu if ls else None)
            _keep(iapg_solve(prob, cfg))
            _keep(apg_solve(prob, cfg))
    fx = quadratic_l1_fixture(0)
    _keep(iapg_solve(fx.problem, IapgConfig(target_eps=1e-9, L_lower=0.3 * fx.problem.g.L)))
    bad = [(i, v) for i, tr in enumerate(TRACES) for v in bound_violations(tr)]
    monotone = all(counters_monotone(tr) for tr in TRACES)
    rows = sum(len(tr) for tr in TRACES)
    verdict("C4", "step, momentum and trial-count bounds", not bad and monotone,
            f"{len(TRACES)} traces, {rows} rows, {len(bad)} violations")
