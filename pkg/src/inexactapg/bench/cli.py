"""``bench`` command line entry point.

Exit status: 0 on success, 2 for a malformed configuration or mismatched
reports, 3 when a solve fails or does not converge, 4 for I/O errors.
"""

from __future__ import annotations

import argparse
import sys

from ..iapg import SolverFailure
from .report import ReportMismatch, aggregate, compare_reports, format_table, read_report, write_report
from .runner import PRESETS, ConfigError, config_from_dict, load_config, run_config

EXIT_PARSE, EXIT_SOLVER, EXIT_IO = 2, 3, 4

CONFIG_HELP = """\
Config files are flat YAML mappings, for example

    experiment: lasso          # multitask | lasso | portfolio | saddle | fixtures
    methods: [ipalm_iapg, ipalm_apg]
    line_search: false         # bool, list of bools (swept) or {method: bool}
    trials: 5
    seed: 0
    output: sweep.csv
    format: csv                # csv | json
    workers: 1
    m: 200
    n: 500
    beta0: [0.1, 1, 10, 100]   # any list value is swept

Problem keys: multitask n m N_l mu lambda1 lambda2 block corr normalize_samples;
lasso m n lam nnz noise noise_relative; portfolio n m mu c frobenius data_path;
saddle mu rows cols gap_tol. Solver keys: eps eps0 gamma_inc gamma_dec max_outer,
and beta0 rho0 sigma for lasso/portfolio.

A portfolio data_path file holds n on the first line, then n lines of n
covariance entries, then one line of n mean returns.
"""

SUMMARY_COLS = ["method", "line_search", "setting", "trials", "n_g", "n_h", "n_joint", "qa",
                "stat_viol", "pres", "dres", "cmpl", "time", "converged"]


def _execute(cfg, out=None, fmt=None):
    rows = []
    for method, ls, sweep, trials in run_config(cfg):
        rows.append(aggregate(cfg.experiment, method, ls, sweep, trials, cfg.seed))
    print(format_table(rows, [c for c in SUMMARY_COLS if c in rows[0]]))
    path = out or cfg.output
    if path:
        write_report(rows, path, fmt or cfg.format)
        print(f"report written to {path}")
    failed = [r for r in rows if r["converged"] < r["trials"]]
    if failed:
        print(f"{len(failed)} row(s) with non-converged trials", file=sys.stderr)
        return EXIT_SOLVER
    return 0


def _guard(fn):
    try:
        return fn()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ReportMismatch as exc:
        print(f"report mismatch: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def build_parser():
    ap = argparse.ArgumentParser(prog="bench", description="Seeded benchmarks of the inexact solvers.",
                                 epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a config file", epilog=CONFIG_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    r.add_argument("config")
    r.add_argument("--out")
    r.add_argument("--format", choices=["csv", "json"])
    p = sub.add_parser("preset", help="run a named preset")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    c = sub.add_parser("compare", help="ratios b/a of two reports")
    c.add_argument("a")
    c.add_argument("b")
    sub.add_parser("fixtures", help="solve the analytic fixtures and report errors")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else 0

    if args.cmd == "run":
        return _guard(lambda: _execute(load_config(args.config), args.out, args.format))
    if args.cmd == "preset":
        def go():
            data = dict(PRESETS[args.name])
            for key in ("trials", "seed", "workers"):
                if getattr(args, key) is not None:
                    data[key] = getattr(args, key)
            return _execute(config_from_dict(data), args.out, args.format)
        return _guard(go)
    if args.cmd == "compare":
        def go():
            ratios = compare_reports(read_report(args.a), read_report(args.b))
            print(format_table(ratios, ["method", "line_search", "setting", "n_g", "n_h", "n_joint", "qa", "time"]))
            return 0
        return _guard(go)
    if args.cmd == "fixtures":
        return _guard(lambda: _execute(config_from_dict(PRESETS["fixtures"])))
    return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
