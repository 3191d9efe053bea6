"""Aggregated report rows, CSV/JSON output and report comparison.

CSV columns appear in the order of :data:`COLUMNS`; the ``*_std`` columns
are written only when a report has more than one trial per row. JSON
reports hold ``{"experiment": ..., "rows": [...]}`` with the same keys.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

COUNT_FIELDS = ("n_g", "n_h", "n_joint", "qa", "time")
COLUMNS = (
    "experiment", "method", "line_search", "setting", "trials", "seed",
    "n_g", "n_g_std", "n_h", "n_h_std", "n_joint", "n_joint_std", "qa", "qa_std",
    "stat_viol", "pres", "dres", "cmpl", "gap", "gap_bound", "time", "time_std", "converged",
)
RATIO_FIELDS = ("n_g", "n_h", "n_joint", "qa", "time")


def _setting_label(sweep: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in sorted(sweep.items())) or "-"


def aggregate(experiment, method, line_search, sweep, trials, seed) -> dict:
    """Mean (and std across trials when there are several) of each count.

    Residual columns report the worst value over trials.
    """
    row = {"experiment": experiment, "method": method, "line_search": bool(line_search),
           "setting": _setting_label(sweep), "trials": len(trials), "seed": seed}
    for key in COUNT_FIELDS:
        vals = np.array([t[key] for t in trials], dtype=float)
        row[key] = float(vals.mean())
        if len(trials) > 1:
            row[f"{key}_std"] = float(vals.std(ddof=1))
    for key in ("stat_viol", "pres", "dres", "cmpl", "gap", "gap_bound"):
        vals = [t[key] for t in trials if not math.isnan(t[key])]
        row[key] = max(vals) if vals else math.nan
    row["converged"] = sum(t.get("status") == "converged" for t in trials)
    return row


def columns_for(rows) -> list:
    multi = any(r["trials"] > 1 for r in rows)
    return [c for c in COLUMNS if multi or not c.endswith("_std")]


def write_report(rows, path, fmt="csv"):
    """Write aggregated rows; raises ``OSError`` on I/O failure."""
    cols = columns_for(rows)
    if fmt == "json":
        exp = rows[0]["experiment"] if rows else None
        with open(path, "w") as fh:
            json.dump({"experiment": exp, "columns": cols,
                       "rows": [{c: r.get(c) for c in cols} for r in rows]}, fh, indent=2)
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def _num(v):
    if isinstance(v, (int, float)) or v is None:
        return v
    try:
        return float(v)
    except ValueError:
        return v


def read_report(path) -> list:
    """Load rows from a CSV or JSON report."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        return data["rows"]
    rows = list(csv.DictReader(text.splitlines()))
    return [{k: _num(v) for k, v in r.items()} for r in rows]


class ReportMismatch(ValueError):
    """The two reports describe different experiments or settings."""


def compare_reports(rows_a, rows_b) -> list:
    """Ratios ``b / a`` of the query counts and time for matching rows.

    Rows match on (method, line_search, setting).

    Raises
    ------
    ReportMismatch
        If the experiments differ or a row has no partner.
    """
    exp_a = {r["experiment"] for r in rows_a}
    exp_b = {r["experiment"] for r in rows_b}
    if exp_a != exp_b:
        raise ReportMismatch(f"reports cover different experiments: {sorted(exp_a)} vs {sorted(exp_b)}")
    key = lambda r: (r["method"], str(r["line_search"]), r["setting"])  # noqa: E731
    index_b = {key(r): r for r in rows_b}
    out = []
    for ra in rows_a:
        rb = index_b.get(key(ra))
        if rb is None:
            raise ReportMismatch(f"no matching row for {key(ra)}")
        ratios = {}
        for f in RATIO_FIELDS:
            a, b = float(ra[f]), float(rb[f])
            ratios[f] = (b / a) if a else (1.0 if b == 0 else math.inf)
        out.append({"method": ra["method"], "line_search": ra["line_search"], "setting": ra["setting"], **ratios})
    return out


def format_table(rows, cols) -> str:
    """Fixed-width text table."""
    def cell(v):
        if isinstance(v, float):
            if math.isnan(v):
                return "-"
            return f"{v:.4g}" if abs(v) >= 1e-3 or v == 0 else f"{v:.2e}"
        return str(v)
    table = [[c for c in cols]] + [[cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(cols))]
    lines = ["  ".join(s.rjust(w) for s, w in zip(row, widths)) for row in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
