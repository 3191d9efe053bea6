"""Seeded problem generators, a covariance-file loader and analytic fixtures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .iapg import IapgConfig, apg_solve
from .ipalm import AffineConstrainedProblem
from .numkit import LinearOperator, make_rng
from .oracles import CompositeProblem, SmoothOracle, ZeroSmooth
from .prox import L1Norm, LinfBallIndicator, NonnegIndicator, SimplexIndicator, ZeroFunction
from .smoothing import SaddleProblem

__all__ = [
    "QuadraticOracle",
    "LeastSquares",
    "MultitaskLogistic",
    "TaskCoupling",
    "MultitaskSpec",
    "LassoSpec",
    "PortfolioSpec",
    "gen_multitask",
    "gen_constrained_lasso",
    "gen_portfolio",
    "load_covariance_file",
    "Fixture",
    "quadratic_l1_fixture",
    "zero_sum_fixture",
    "saddle_1d_fixture",
    "matrix_game_fixture",
    "analytic_fixtures",
]


class QuadraticOracle(SmoothOracle):
    """``0.5 x^T Q x + c^T x + const`` for symmetric positive semidefinite ``Q``.

    ``mu`` and ``L`` default to the extreme eigenvalues of ``Q``.
    """

    def __init__(self, Q, c=None, const: float = 0.0, mu=None, L=None):
        Q = np.array(Q, dtype=float, ndmin=2)
        Q = 0.5 * (Q + Q.T)
        if mu is None or L is None:
            ev = np.linalg.eigvalsh(Q)
            mu = max(ev[0], 0.0) if mu is None else mu
            L = ev[-1] if L is None else L
        super().__init__(mu, L)
        self.Q = Q
        self.c = np.zeros(Q.shape[0]) if c is None else np.asarray(c, dtype=float)
        self.const = float(const)

    def _joint(self, x):
        Qx = self.Q @ x
        return 0.5 * float(x @ Qx) + float(self.c @ x) + self.const, Qx + self.c

    def _value(self, x):
        return self._joint(x)[0]

    def _gradient(self, x):
        return self.Q @ x + self.c


class LeastSquares(SmoothOracle):
    """``0.5 ||A x - b||^2 + (ridge/2)||x||^2`` with ``A`` held as a plain array."""

    def __init__(self, A, b, ridge: float = 0.0, L=None):
        A = np.asarray(A, dtype=float)
        if L is None:
            L = np.linalg.norm(A, 2) ** 2 + ridge
        mu = ridge
        if ridge == 0.0 and A.shape[0] >= A.shape[1]:
            mu = max(np.linalg.svd(A, compute_uv=False)[-1] ** 2, 0.0)
        super().__init__(mu, L)
        self.A, self.b, self.ridge = A, np.asarray(b, dtype=float), float(ridge)

    def _joint(self, x):
        res = self.A @ x - self.b
        val = 0.5 * float(res @ res) + 0.5 * self.ridge * float(x @ x)
        return val, self.A.T @ res + self.ridge * x

    def _value(self, x):
        res = self.A @ x - self.b
        return 0.5 * float(res @ res) + 0.5 * self.ridge * float(x @ x)

    def _gradient(self, x):
        return self.A.T @ (self.A @ x - self.b) + self.ridge * x


class MultitaskLogistic(SmoothOracle):
    """Sum over tasks of the average logistic loss plus a ridge term.

    The variable is the ``(n, m)`` weight matrix flattened row-major; column
    ``l`` holds the weights of task ``l``.
    """

    def __init__(self, X: list, labels: list, ridge: float):
        n = X[0].shape[1]
        self.n, self.m = n, len(X)
        self.X = [np.ascontiguousarray(a) for a in X]
        self.labels = [np.asarray(t, dtype=float) for t in labels]
        L = max(np.linalg.norm(a, 2) ** 2 / (4 * a.shape[0]) for a in self.X) + ridge
        super().__init__(ridge, L)
        self.ridge = ridge

    def _joint(self, w, need_grad=True):
        W = w.reshape(self.n, self.m)
        val = 0.5 * self.ridge * float(w @ w)
        G = self.ridge * W if need_grad else None
        for l, (X, t) in enumerate(zip(self.X, self.labels)):
            margin = t * (X @ W[:, l])
            N = X.shape[0]
            val += float(np.logaddexp(0.0, -margin).sum()) / N
            if need_grad:
                G[:, l] -= X.T @ (t * expit(-margin)) / N
        return val, (G.ravel() if need_grad else None)

    def _value(self, w):
        return self._joint(w, need_grad=False)[0]

    def _gradient(self, w):
        return self._joint(w)[1]


class TaskCoupling(SmoothOracle):
    """``(weight/2) ||W - mean_l(W) 1^T||_F^2`` on the flattened ``(n, m)`` matrix."""

    def __init__(self, n: int, m: int, weight: float):
        super().__init__(0.0, weight)
        self.n, self.m, self.weight = n, m, weight

    def _centered(self, w):
        W = w.reshape(self.n, self.m)
        return W - W.mean(axis=1, keepdims=True)

    def _joint(self, w):
        D = self._centered(w).ravel()
        return 0.5 * self.weight * float(D @ D), self.weight * D

    def _value(self, w):
        D = self._centered(w).ravel()
        return 0.5 * self.weight * float(D @ D)

    def _gradient(self, w):
        return self.weight * self._centered(w).ravel()


@dataclass
class MultitaskSpec:
    """Multitask logistic regression instance.

    ``block`` and ``corr`` describe the leading correlated block of the
    feature covariance; ``block=None`` means ``round(n/10)``.
    ``normalize_samples`` rescales every feature vector to unit length.
    """

    n: int = 200
    m: int = 4
    N_l: int = 500
    mu: float = 0.1
    lambda1: float = 1.0
    lambda2: float = 1e-3
    block: int | None = None
    corr: float = 0.5
    normalize_samples: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.block is None:
            self.block = max(1, round(self.n / 10))
        if not 0 < self.block <= self.n:
            raise ValueError("block size must lie in [1, n]")
        if not 0 <= self.corr < 1:
            raise ValueError("corr must lie in [0, 1)")


def gen_multitask(spec: MultitaskSpec) -> CompositeProblem:
    """Split ``g`` (logistic + ridge), ``h`` (task coupling), ``r`` (l1) of the multitask model."""
    rng = make_rng(spec.seed)
    n, s = spec.n, spec.block
    blk = spec.corr * np.ones((s, s)) + (1 - spec.corr) * np.eye(s)
    chol = np.linalg.cholesky(blk)
    n_pos = spec.N_l // 2
    X, labels = [], []
    for _ in range(spec.m):
        center = np.zeros(n)
        center[:s] = 1.0
        center += rng.uniform(0.5, 1.0, n)
        noise = rng.standard_normal((spec.N_l, n))
        noise[:, :s] = noise[:, :s] @ chol.T
        sign = np.concatenate([np.ones(n_pos), -np.ones(spec.N_l - n_pos)])
        feats = sign[:, None] * center + noise
        if spec.normalize_samples:
            feats /= np.linalg.norm(feats, axis=1, keepdims=True)
        X.append(feats)
        labels.append(sign)
    g = MultitaskLogistic(X, labels, spec.mu)
    h = TaskCoupling(n, spec.m, spec.lambda1)
    return CompositeProblem(g, h, L1Norm(spec.lambda2), dim=n * spec.m)


@dataclass
class LassoSpec:
    """Zero-sum constrained LASSO instance; ``nnz=None`` means ``max(1, round(n/25))``."""

    m: int = 200
    n: int = 500
    lam: float = 1e-3
    nnz: int | None = None
    noise: float = 1e-3
    noise_relative: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.nnz is None:
            self.nnz = max(1, round(self.n / 25))
        if not 0 < self.nnz <= self.n:
            raise ValueError("nnz must lie in [1, n]")


def gen_constrained_lasso(spec: LassoSpec) -> AffineConstrainedProblem:
    """LASSO with the single equality ``sum(x)/sqrt(n) = 0``.

    With ``noise_relative`` the observation noise is
    ``noise * ||A x0|| * xi / ||xi||`` instead of ``noise * xi / ||A x0||``.
    """
    rng = make_rng(spec.seed)
    A = rng.standard_normal((spec.m, spec.n))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    x0 = np.zeros(spec.n)
    support = rng.choice(spec.n, spec.nnz, replace=False)
    vals = rng.standard_normal(spec.nnz)
    x0[support] = vals - vals.mean()
    Ax0 = A @ x0
    xi = rng.standard_normal(spec.m)
    if spec.noise_relative:
        b = Ax0 + spec.noise * np.linalg.norm(Ax0) * xi / np.linalg.norm(xi)
    else:
        b = Ax0 + spec.noise * xi / np.linalg.norm(Ax0)
    f = LeastSquares(A, b)
    A_E = LinearOperator(np.ones((1, spec.n)) / math.sqrt(spec.n))
    prob = AffineConstrainedProblem(f, L1Norm(spec.lam), spec.n, A_E=A_E, b_E=np.zeros(1), A_norm_sq=1.0)
    prob.x_planted = x0
    return prob


@dataclass
class PortfolioSpec:
    """Mean-variance portfolio instance.

    Synthetic mode draws a factor matrix of shape ``(n, m)``; ``data_path``
    switches to a covariance file (see :func:`load_covariance_file`).
    ``frobenius`` normalizes the factor matrix by its Frobenius norm.
    """

    n: int = 200
    m: int = 100
    mu: float = 0.1
    c: float = 0.02
    frobenius: bool = False
    data_path: str | None = None
    seed: int = 0


def load_covariance_file(path):
    """Read ``n``, an ``n x n`` covariance matrix and ``n`` mean returns.

    The file holds the integer ``n`` on its first line, then ``n`` lines of
    ``n`` reals, then one line of ``n`` reals. Values may be separated by
    whitespace or commas.

    Raises
    ------
    ValueError
        If the file is malformed.
    OSError
        If it cannot be read.
    """
    with open(path) as fh:
        lines = [ln.replace(",", " ").split() for ln in fh if ln.strip()]
    try:
        if len(lines[0]) != 1:
            raise ValueError("first line must hold n")
        n = int(lines[0][0])
        if n <= 0 or len(lines) != n + 2:
            raise ValueError(f"expected {n + 2} nonblank lines, found {len(lines)}")
        cov = np.array([[float(v) for v in ln] for ln in lines[1:n + 1]])
        ret = np.array([float(v) for v in lines[n + 1]])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed covariance file {path}: {exc}") from exc
    if cov.shape != (n, n) or ret.shape != (n,):
        raise ValueError(f"malformed covariance file {path}: inconsistent dimensions")
    if not np.all(np.isfinite(cov)) or not np.all(np.isfinite(ret)):
        raise ValueError(f"malformed covariance file {path}: non-finite entries")
    return 0.5 * (cov + cov.T), ret


def gen_portfolio(spec: PortfolioSpec) -> AffineConstrainedProblem:
    """Quadratic risk over ``x >= 0`` with budget and return constraints as two inequality rows."""
    if spec.data_path is not None:
        cov, ret = load_covariance_file(spec.data_path)
        n = cov.shape[0]
        Q = cov + spec.mu * np.eye(n)
    else:
        rng = make_rng(spec.seed)
        n = spec.n
        H = rng.standard_normal((n, spec.m))
        scale = np.linalg.norm(H, "fro" if spec.frobenius else 2) ** 2
        Q = H @ H.T / scale + spec.mu * np.eye(n)
        ret = rng.uniform(-1.0, 2.0, n)
    ev = np.linalg.eigvalsh(Q)
    f = QuadraticOracle(Q, mu=max(ev[0], 0.0), L=ev[-1])
    rows = np.vstack([np.ones(n), -ret])
    A_I = LinearOperator(rows)
    return AffineConstrainedProblem(f, NonnegIndicator(), n, A_I=A_I, b_I=np.array([1.0, -spec.c]),
                                    A_norm_sq=float(np.linalg.eigvalsh(rows @ rows.T)[-1]))


@dataclass
class Fixture:
    """Small problem with a known solution.

    ``kind`` is ``composite``, ``constrained`` or ``saddle``; ``lam_star``
    and ``y_star`` are set where applicable.
    """

    name: str
    kind: str
    problem: object
    x_star: np.ndarray
    F_star: float | None = None
    lam_star: np.ndarray | None = None
    y_star: np.ndarray | None = None
    info: dict = field(default_factory=dict)


def _reference_solve(problem: CompositeProblem, L_lower: float, x0):
    cfg = IapgConfig(target_eps=1e-12, max_outer=200000, L_lower=L_lower)
    res = apg_solve(problem, cfg, x0=x0)
    if not res.converged:
        raise RuntimeError("reference solve did not converge")
    return res.x_out


def quadratic_l1_fixture(seed: int = 0, n: int = 10) -> Fixture:
    """``g`` least squares with ridge, ``h`` a stiffer quadratic, ``r`` an l1 term.

    The optimum comes from a long exact reference solve; a second solve with
    a different start and step estimate is kept in ``info`` for comparison.
    """
    rng = make_rng(seed)
    M = rng.standard_normal((n + 2, n)) / math.sqrt(n)
    b = rng.standard_normal(n + 2)
    g = LeastSquares(M, b, ridge=0.1)
    B = rng.standard_normal((n, n)) / math.sqrt(n)
    P = B @ B.T
    P *= 5.0 * g.L / np.linalg.eigvalsh(P)[-1]
    h = QuadraticOracle(P, mu=0.0)
    prob = CompositeProblem(g, h, L1Norm(0.1), dim=n)
    L = g.L + h.L
    x_ref = _reference_solve(prob, L, np.zeros(n))
    x_alt = _reference_solve(prob, 0.25 * L, rng.standard_normal(n))
    g.count = h.count = 0
    F = lambda x: g._value(x) + h._value(x) + prob.r.value(x)  # noqa: E731
    return Fixture("quadratic_l1", "composite", prob, x_ref, F(x_ref),
                   info={"F_alt": F(x_alt), "x_alt": x_alt})


def zero_sum_fixture(a=None, n: int = 50, seed: int = 0) -> Fixture:
    """Projection of ``a`` onto the hyperplane ``sum(x)/sqrt(n) = 0``."""
    if a is None:
        a = make_rng(seed).standard_normal(n)
    a = np.asarray(a, dtype=float)
    n = a.size
    f = QuadraticOracle(np.eye(n), c=-a, const=0.5 * float(a @ a), mu=1.0, L=1.0)
    A_E = LinearOperator(np.ones((1, n)) / math.sqrt(n))
    prob = AffineConstrainedProblem(f, ZeroFunction(), n, A_E=A_E, b_E=np.zeros(1), A_norm_sq=1.0)
    x_star = a - a.mean()
    lam_star = np.array([a.sum() / math.sqrt(n)])
    return Fixture("zero_sum", "constrained", prob, x_star, 0.5 * float((a - x_star) @ (a - x_star)),
                   lam_star=lam_star)


def saddle_1d_fixture() -> Fixture:
    """``min_x max_{|y|<=1} x^2/2 + x y``, whose primal is ``x^2/2 + |x|``."""
    f = QuadraticOracle(np.eye(1), mu=1.0, L=1.0)
    phi = LinfBallIndicator(1.0)
    sp = SaddleProblem(f, ZeroFunction(), LinearOperator(np.eye(1)), phi, phi.diameter(1), np.zeros(1),
                       A_norm_sq=1.0)
    return Fixture("saddle_1d", "saddle", sp, np.zeros(1), 0.0, y_star=np.zeros(1))


def matrix_game_fixture(seed: int = 0, mu: float = 0.1, m: int = 4, n: int = 6) -> Fixture:
    """``(mu/2)||x||^2 + max over the unit simplex of <y, A x>`` with random ``A``."""
    rng = make_rng(seed)
    A = rng.standard_normal((m, n))
    f = QuadraticOracle(mu * np.eye(n), mu=mu, L=mu)
    phi = SimplexIndicator(1.0)
    sp = SaddleProblem(f, ZeroFunction(), LinearOperator(A), phi, phi.diameter(m), np.full(m, 1.0 / m),
                       A_norm_sq=float(np.linalg.norm(A, 2) ** 2))
    return Fixture("matrix_game", "saddle", sp, np.full(n, np.nan))


def analytic_fixtures(seed: int = 0) -> list:
    """The quadratic-l1, zero-sum projection and 1-D saddle fixtures."""
    return [quadratic_l1_fixture(seed), zero_sum_fixture(seed=seed), saddle_1d_fixture()]
