"""Trace audits shared by the unit and acceptance tests."""

import math

import numpy as np


def trial_cap(gamma_dec, L_lower, L):
    """Largest trial count allowed when the first trial is ``1/L_lower``."""
    if L is None or L <= L_lower:
        return 1
    return 1 + math.ceil(math.log(L_lower / L, gamma_dec) - 1e-12)


def bound_violations(trace, rel=1e-12):
    """Rows breaking the step, momentum and trial-count bounds."""
    bad = []
    Lg, Lh, Ll, gd = trace.L_g, trace.L_h, trace.L_lower, trace.gamma_dec
    for r in trace.rows:
        why = []
        if not 0 < r.alpha <= 1:
            why.append("alpha")
        if r.gamma_next < trace.mu * (1 - rel) or r.gamma < trace.mu * (1 - rel):
            why.append("gamma")
        if r.eta > (1 + rel) / Ll:
            why.append("eta upper")
        if Lg is not None and r.eta <= gd / Lg * (1 - rel):
            why.append("eta lower")
        if trace.line_search and r.trials > trial_cap(gd, Ll, Lg):
            why.append("trials")
        if r.stationarity is not None:
            if r.eta_tilde > (1 + rel) / Ll:
                why.append("eta_tilde upper")
            if Lg is not None and Lh is not None:
                if r.eta_tilde <= gd / (Lg + Lh) * (1 - rel):
                    why.append("eta_tilde lower")
                if r.seek_trials > trial_cap(gd, Ll, Lg + Lh):
                    why.append("seek trials")
        if r.eps_used > r.eps * (1 + rel) + 1e-300:
            why.append("inner certificate")
        if why:
            bad.append((r.k, why))
    return bad


def counters_monotone(trace):
    for col in ("n_g", "n_h", "n_qa"):
        vals = trace.column(col)
        if any(b < a for a, b in zip(vals, vals[1:])):
            return False
    return True


def lyapunov_violations(trace, F_star):
    slack = 1e-9 * (1 + abs(F_star))
    return [r.k for r in trace.rows if r.lyap_lhs > r.lyap_rhs + slack]


def momentum_violations(trace, iterates):
    """Rows where ``z_next - x != (x_next - x)/alpha`` beyond 1e-12 relative."""
    bad = []
    for r, (x, z), (xn, zn) in zip(trace.rows, iterates, iterates[1:]):
        lhs = zn - x
        rhs = (xn - x) / r.alpha
        if np.linalg.norm(lhs - rhs) > 1e-12 * max(1.0, np.linalg.norm(rhs), np.linalg.norm(zn)):
            bad.append(r.k)
    return bad


ACCEPTANCE = []


def verdict(cid, title, ok, detail=""):
    """Record and print one acceptance line, then fail the test if ``ok`` is false."""
    line = f"{'PASS' if ok else 'FAIL'} {cid} {title}" + (f": {detail}" if detail else "")
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line
