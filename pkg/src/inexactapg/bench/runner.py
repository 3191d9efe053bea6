"""Run configurations, presets and single-trial execution."""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np
import yaml

from ..iapg import IapgConfig, SolverFailure, apg_solve, iapg_solve
from ..ipalm import IpalmConfig, ipalm_solve, kkt_residuals
from ..oracles import objective, stationarity, uncounted
from ..problems import (
    LassoSpec,
    MultitaskSpec,
    PortfolioSpec,
    analytic_fixtures,
    gen_constrained_lasso,
    gen_multitask,
    gen_portfolio,
    matrix_game_fixture,
)
from ..smoothing import duality_gap, saddle_residuals, smoothed_solve

EXPERIMENTS = {
    "multitask": ("iapg", "apg"),
    "lasso": ("ipalm_iapg", "ipalm_apg"),
    "portfolio": ("ipalm_iapg", "ipalm_apg"),
    "saddle": ("smoothed",),
    "fixtures": ("fixtures",),
}

# solver knobs shared by every experiment, with defaults
SOLVER_KEYS = {
    "multitask": {"eps": 1e-6, "eps0": 1e-3, "gamma_inc": 2.0, "gamma_dec": 0.5, "max_outer": 100000},
    "lasso": {"eps": 1e-6, "eps0": 1e-5, "gamma_inc": 3.0, "gamma_dec": 0.5, "beta0": 1.0, "rho0": 1e-3,
              "sigma": 3.0, "max_outer": 100},
    "portfolio": {"eps": 1e-6, "eps0": 1e-5, "gamma_inc": 3.0, "gamma_dec": 0.5, "beta0": 1.0, "rho0": 1e-3,
                  "sigma": 3.0, "max_outer": 100},
    "saddle": {"eps": 1e-3, "eps0": 1e-3, "gamma_inc": 2.0, "gamma_dec": 0.5, "mu": 0.1, "rows": 4,
               "cols": 6, "gap_tol": 1e-10},
    "fixtures": {},
}
SPEC_TYPES = {"multitask": MultitaskSpec, "lasso": LassoSpec, "portfolio": PortfolioSpec}
TOP_KEYS = {"experiment", "methods", "line_search", "trials", "seed", "output", "format", "workers"}


class ConfigError(ValueError):
    """Malformed or unrecognized run configuration."""


def _param_keys(experiment):
    keys = set(SOLVER_KEYS[experiment])
    spec = SPEC_TYPES.get(experiment)
    if spec is not None:
        keys |= {f.name for f in fields(spec) if f.name != "seed"}
    return keys


@dataclass
class RunConfig:
    """A benchmark run.

    Any entry of ``params`` (or ``line_search``) given as a list is swept;
    several lists give their Cartesian product.
    """

    experiment: str
    methods: tuple = ()
    line_search: object = False
    trials: int = 1
    seed: int = 0
    params: dict = field(default_factory=dict)
    output: str | None = None
    format: str = "csv"
    workers: int | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {sorted(EXPERIMENTS)}")
        if not self.methods:
            self.methods = EXPERIMENTS[self.experiment]
        self.methods = tuple(self.methods)
        bad = [m for m in self.methods if m not in EXPERIMENTS[self.experiment]]
        if bad:
            raise ConfigError(f"methods {bad} are not available for {self.experiment}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        unknown = set(self.params) - _param_keys(self.experiment)
        if unknown:
            raise ConfigError(f"unrecognized keys for {self.experiment}: {sorted(unknown)}")
        ls = self.line_search
        vals = ls.values() if isinstance(ls, dict) else ls if isinstance(ls, list) else [ls]
        if not all(isinstance(v, bool) for v in vals):
            raise ConfigError("line_search must be a boolean, a list of booleans or a per-method mapping")
        if isinstance(ls, dict) and set(ls) - set(self.methods):
            raise ConfigError("line_search mapping names unknown methods")

    def settings(self):
        """Expand sweeps into a list of (method, line_search, params) triples."""
        base = dict(SOLVER_KEYS[self.experiment])
        base.update(self.params)
        swept = [k for k, v in base.items() if isinstance(v, list)]
        combos = itertools.product(*[base[k] for k in swept]) if swept else [()]
        out = []
        for combo in combos:
            p = dict(base)
            p.update(zip(swept, combo))
            for method in self.methods:
                ls = self.line_search
                if isinstance(ls, dict):
                    ls = ls.get(method, False)
                for flag in (ls if isinstance(ls, list) else [ls]):
                    out.append((method, flag, p, {k: p[k] for k in swept}))
        return out


def load_config(path) -> RunConfig:
    """Parse a flat YAML mapping into a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        On syntax errors or unknown keys.
    OSError
        If the file cannot be read.
    """
    with open(path) as fh:
        text = fh.read()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a key-value mapping")
    return config_from_dict(data)


def config_from_dict(data: dict) -> RunConfig:
    data = dict(data)
    if "experiment" not in data:
        raise ConfigError("missing required key 'experiment'")
    top = {k: data.pop(k) for k in list(data) if k in TOP_KEYS}
    if "methods" in top and isinstance(top["methods"], str):
        top["methods"] = [top["methods"]]
    try:
        return RunConfig(params=data, **top)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


PRESETS = {
    "table1-small": {"experiment": "multitask", "methods": ["iapg", "apg"], "line_search": False,
                     "trials": 10, "n": 200, "N_l": 500, "mu": 0.1, "lambda1": [1.0, 10.0, 100.0]},
    "table1-small-ls": {"experiment": "multitask", "methods": ["iapg", "apg"], "line_search": True,
                        "trials": 10, "n": 200, "N_l": 500, "mu": 0.1, "lambda1": [1.0, 10.0, 100.0]},
    "table2-small": {"experiment": "lasso", "methods": ["ipalm_iapg", "ipalm_apg"], "line_search": [False, True],
                     "trials": 3, "m": 200, "n": 500},
    "fig1-small": {"experiment": "lasso", "methods": ["ipalm_iapg", "ipalm_apg"], "line_search": False,
                   "trials": 5, "m": 200, "n": 500, "beta0": [0.1, 1.0, 10.0, 100.0]},
    "table3-small": {"experiment": "portfolio", "methods": ["ipalm_iapg"], "line_search": [False, True],
                     "trials": 3, "n": 200, "m": 100, "mu": [0.001, 0.1]},
    "saddle-small": {"experiment": "saddle", "trials": 3, "eps": [1e-3, 1e-4], "line_search": True},
    "fixtures": {"experiment": "fixtures", "trials": 1},
}


def _spec(experiment, p, seed):
    cls = SPEC_TYPES[experiment]
    kw = {f.name: p[f.name] for f in fields(cls) if f.name in p}
    return cls(seed=seed, **kw)


def _ipalm_cfg(p, ls):
    inner = IapgConfig(gamma_inc=p["gamma_inc"], gamma_dec=p["gamma_dec"], max_outer=1_000_000)
    return IpalmConfig(beta0=p["beta0"], rho0=p["rho0"], sigma=p["sigma"], target_eps=p["eps"],
                       eps0=p["eps0"], inner=inner, max_outer=p["max_outer"], line_search=ls)


def run_trial(experiment, method, line_search, params, seed) -> dict:
    """Generate one instance, solve it and certify the output independently.

    Returns a flat dict of counts, residuals, wall time and status.
    Generation time is excluded from ``time``.
    """
    p = params
    out = {"seed": seed, "n_g": 0, "n_h": 0, "n_joint": 0, "qa": 0, "stat_viol": math.nan, "pres": math.nan,
           "dres": math.nan, "cmpl": math.nan, "gap": math.nan, "gap_bound": math.nan}
    if experiment == "multitask":
        prob = gen_multitask(_spec(experiment, p, seed))
        cfg = IapgConfig(target_eps=p["eps"], eps0=p["eps0"], gamma_inc=p["gamma_inc"], gamma_dec=p["gamma_dec"],
                         max_outer=p["max_outer"], line_search=line_search,
                         L_lower=prob.g.mu if line_search else None)
        solve = iapg_solve if method == "iapg" else apg_solve
        t0 = time.perf_counter()
        res = solve(prob, cfg)
        out["time"] = time.perf_counter() - t0
        out.update(n_g=res.counts["g"], n_h=res.counts["h"], n_joint=res.counts.get("gh", 0), qa=res.counts["qa"])
        with uncounted(prob.g, prob.h):
            out["stat_viol"] = stationarity(prob, res.x_out)
        out["status"] = res.status
        out["objective"] = objective(prob, res.x_out)
        return out
    if experiment in ("lasso", "portfolio"):
        gen = gen_constrained_lasso if experiment == "lasso" else gen_portfolio
        prob = gen(_spec(experiment, p, seed))
        mode = "inexact_subsolver" if method == "ipalm_iapg" else "exact_subsolver"
        t0 = time.perf_counter()
        res = ipalm_solve(prob, _ipalm_cfg(p, line_search), mode=mode)
        out["time"] = time.perf_counter() - t0
        c = res.counts
        out.update(n_g=c["f"], n_h=c["h"], n_joint=c["joint"], qa=c["qa"], n_g_net=c["f_net"],
                   qa_net=c["qa_net"], outer=c["outer"])
        with uncounted(prob.f, *prob.operators):
            kkt = kkt_residuals(prob, res.x, res.lam)
        out.update(pres=kkt.primal, dres=kkt.dual, cmpl=kkt.compl, stat_viol=kkt.worst(), status=res.status)
        return out
    if experiment == "saddle":
        fx = matrix_game_fixture(seed, mu=p["mu"], m=p["rows"], n=p["cols"])
        sp = fx.problem
        cfg = IapgConfig(eps0=p["eps0"], gamma_inc=p["gamma_inc"], gamma_dec=p["gamma_dec"],
                         line_search=line_search)
        t0 = time.perf_counter()
        x, y, resid, res = smoothed_solve(sp, p["eps"], cfg)
        out["time"] = time.perf_counter() - t0
        out.update(n_g=res.counts["g"], n_h=res.counts["h"], qa=res.counts["qa"])
        with uncounted(sp.f, sp.A):
            chk = saddle_residuals(sp, x, y)
            out["gap"] = duality_gap(sp, x, y, p["gap_tol"])
        eps = p["eps"]
        out.update(pres=chk.primal_stat, dres=chk.dual_stat, stat_viol=max(chk.primal_stat, chk.dual_stat),
                   gap_bound=2 * eps * sp.D_phi + 3 * eps ** 2 / (2 * sp.f.mu), status=res.status)
        return out
    if experiment == "fixtures":
        return _fixtures_trial(seed, out)
    raise ConfigError(f"unknown experiment {experiment!r}")


def _fixtures_trial(seed, out):
    errs = {}
    t0 = time.perf_counter()
    for fx in analytic_fixtures(seed):
        if fx.kind == "composite":
            res = iapg_solve(fx.problem, IapgConfig(target_eps=1e-9))
            errs[fx.name] = float(np.linalg.norm(res.x_out - fx.x_star))
        elif fx.kind == "constrained":
            res = ipalm_solve(fx.problem)
            errs[fx.name] = float(np.linalg.norm(res.x - fx.x_star))
        else:
            x, _, _, _ = smoothed_solve(fx.problem, 1e-6)
            errs[fx.name] = float(np.linalg.norm(x - fx.x_star))
    out["time"] = time.perf_counter() - t0
    out["stat_viol"] = max(errs.values())
    out["errors"] = errs
    out["status"] = "converged"
    return out


def _trial_job(args):
    return run_trial(*args)


def run_config(cfg: RunConfig, progress=None):
    """Execute every setting and trial of ``cfg``.

    Returns
    -------
    list of (method, line_search, sweep dict, list of trial dicts)

    Raises
    ------
    SolverFailure
        Propagated from the first failing trial.
    """
    workers = cfg.workers or min(cfg.trials, os.cpu_count() or 1)
    results = []
    for method, ls, params, sweep in cfg.settings():
        jobs = [(cfg.experiment, method, ls, params, cfg.seed + i) for i in range(cfg.trials)]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                trials = list(ex.map(_trial_job, jobs))
        else:
            trials = [_trial_job(j) for j in jobs]
        results.append((method, ls, sweep, trials))
        if progress is not None:
            progress(method, ls, sweep, trials)
    return results


__all__ = ["ConfigError", "RunConfig", "PRESETS", "load_config", "config_from_dict", "run_trial",
           "run_config", "SolverFailure"]
