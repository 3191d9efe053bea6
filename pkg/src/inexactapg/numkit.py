"""Dense linear algebra helpers, seeded randomness and counted linear operators."""

from __future__ import annotations

import numpy as np

__all__ = [
    "LinearOperator",
    "PowerIterationError",
    "apply",
    "adjoint",
    "make_rng",
    "op_norm_sq",
]


class PowerIterationError(RuntimeError):
    """Raised when the power iteration does not reach the requested tolerance."""


def make_rng(seed: int) -> np.random.Generator:
    """Return a reproducible generator for a 64-bit seed.

    Parameters
    ----------
    seed : int
        Nonnegative integer seed. Equal seeds give bit-identical streams.
    """
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


class LinearOperator:
    """Dense matrix with counted forward and adjoint applications.

    Every call to :meth:`apply` or :meth:`adjoint` adds one to ``count``.

    Parameters
    ----------
    matrix : array_like
        Two-dimensional array of shape ``(m, n)``. Stored row-major.
    """

    def __init__(self, matrix):
        mat = np.array(matrix, dtype=float, order="C", ndmin=2)
        if mat.ndim != 2:
            raise ValueError("matrix must be two-dimensional")
        if not np.all(np.isfinite(mat)):
            raise ValueError("matrix entries must be finite")
        self.matrix = mat
        self.count = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.shape[1],):
            raise ValueError(f"expected vector of length {self.shape[1]}, got shape {x.shape}")
        self.count += 1
        return self.matrix @ x

    def adjoint(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.shape[0],):
            raise ValueError(f"expected vector of length {self.shape[0]}, got shape {y.shape}")
        self.count += 1
        return self.matrix.T @ y

    def __repr__(self):
        m, n = self.shape
        return f"LinearOperator({m}x{n}, count={self.count})"


def apply(A: LinearOperator, x) -> np.ndarray:
    """Forward application ``A @ x`` (one counted query)."""
    return A.apply(x)


def adjoint(A: LinearOperator, y) -> np.ndarray:
    """Adjoint application ``A.T @ y`` (one counted query)."""
    return A.adjoint(y)


def op_norm_sq(A: LinearOperator, tol: float = 1e-8, max_iter: int = 10000, seed: int = 0) -> float:
    """Squared spectral norm of ``A`` by power iteration on ``A.T A``.

    Each iteration costs one forward and one adjoint application, both
    charged to ``A.count``. The loop stops once the eigen-residual
    ``||A^T A v - est v||`` drops below ``tol * est``.

    Parameters
    ----------
    A : LinearOperator
    tol : float
        Relative tolerance on the estimate.
    max_iter : int
    seed : int
        Seed of the random start vector.

    Returns
    -------
    float

    Raises
    ------
    PowerIterationError
        If the residual test fails after ``max_iter`` iterations.
    ValueError
        If ``A`` is the zero operator or ``tol`` is not positive.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = make_rng(seed).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = A.adjoint(A.apply(v))
        est = float(v @ w)
        wn = np.linalg.norm(w)
        if wn == 0.0:
            raise ValueError("operator is zero on the iteration subspace")
        if np.linalg.norm(w - est * v) <= tol * est:
            return est
        v = w / wn
    raise PowerIterationError(f"power iteration did not converge in {max_iter} iterations (estimate {est:.6g})")
