"""Pure numpy versions of the coordinatewise prox kernels.

Used when the compiled ``_kernels`` extension is unavailable, and as the
reference that the compiled versions are tested against.
"""

import numpy as np


def soft_threshold(z, t):
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def l1_subdiff_distance(x, v, lam):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    d = np.where(x != 0.0, np.abs(v + lam * np.sign(x)), np.maximum(np.abs(v) - lam, 0.0))
    return float(np.sqrt(d @ d))


def box_subdiff_distance(x, v, lo, hi):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    at_lo = x <= lo
    at_hi = x >= hi
    d = np.abs(v)
    d = np.where(at_lo, np.maximum(-v, 0.0), d)
    d = np.where(at_hi, np.maximum(v, 0.0), d)
    d = np.where(at_lo & at_hi, 0.0, d)
    return float(np.sqrt(d @ d))


def project_simplex(z, s):
    z = np.asarray(z, dtype=float)
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - s
    idx = np.arange(1, z.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(z - theta, 0.0)
