import math

import numpy as np
import pytest

from inexactapg.problems import (
    LassoSpec,
    MultitaskSpec,
    PortfolioSpec,
    gen_constrained_lasso,
    gen_multitask,
    gen_portfolio,
    load_covariance_file,
    matrix_game_fixture,
    quadratic_l1_fixture,
    saddle_1d_fixture,
    zero_sum_fixture,
)
from inexactapg.smoothing import smoothed_oracle

from conftest import fd_gradient, rel_err

SMALL_MT = dict(n=12, m=3, N_l=40)


def fd_probe(oracle, dim, rng, probes=20, scale=1.0):
    for _ in range(probes):
        x = rng.standard_normal(dim) * scale
        assert rel_err(fd_gradient(oracle.value, x), oracle.gradient(x)) <= 1e-5


def lipschitz_probe(oracle, dim, rng, pairs=100, scale=1.0):
    for _ in range(pairs):
        x1, x2 = rng.standard_normal(dim) * scale, rng.standard_normal(dim) * scale
        lhs = np.linalg.norm(oracle.gradient(x1) - oracle.gradient(x2))
        assert lhs <= oracle.L * np.linalg.norm(x1 - x2) * (1 + 1e-10)


def test_multitask_value_and_gradient_at_zero():
    spec = MultitaskSpec(**SMALL_MT, seed=4)
    prob = gen_multitask(spec)
    g = prob.g
    w = np.zeros(spec.n * spec.m)
    assert g.value(w) == pytest.approx(spec.m * math.log(2), rel=1e-14)
    expected = np.column_stack([-X.T @ t / (2 * X.shape[0]) for X, t in zip(g.X, g.labels)])
    np.testing.assert_allclose(g.gradient(w), expected.ravel(), atol=1e-15)


def test_multitask_shapes_and_constants():
    spec = MultitaskSpec(**SMALL_MT, mu=0.2, lambda1=7.0, lambda2=0.05)
    prob = gen_multitask(spec)
    assert prob.dim == spec.n * spec.m
    assert prob.g.mu == 0.2 and prob.h.L == 7.0 and prob.r.weight == 0.05
    for X, t in zip(prob.g.X, prob.g.labels):
        assert X.shape == (spec.N_l, spec.n)
        assert (t > 0).sum() == spec.N_l // 2
        np.testing.assert_allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-12)
    L_adv = max(np.linalg.norm(X, 2) ** 2 / (4 * X.shape[0]) for X in prob.g.X) + 0.2
    assert prob.g.L == pytest.approx(L_adv, rel=1e-14)


def test_coupling_vanishes_on_identical_columns(rng):
    spec = MultitaskSpec(**SMALL_MT)
    h = gen_multitask(spec).h
    W = np.repeat(rng.standard_normal((spec.n, 1)), spec.m, axis=1).ravel()
    assert h.value(W) == pytest.approx(0.0, abs=1e-24)
    assert np.linalg.norm(h.gradient(W)) <= 1e-14


def test_multitask_gradients_match_finite_differences(rng):
    prob = gen_multitask(MultitaskSpec(**SMALL_MT, seed=1))
    fd_probe(prob.g, prob.dim, rng)
    fd_probe(prob.h, prob.dim, rng)


def test_lasso_construction():
    spec = LassoSpec(m=30, n=60, seed=2)
    prob = gen_constrained_lasso(spec)
    x0 = prob.x_planted
    assert abs(x0.sum()) <= 1e-12
    assert np.count_nonzero(x0) == spec.nnz
    np.testing.assert_allclose(np.linalg.norm(prob.f.A, axis=1), 1.0, atol=1e-12)
    assert prob.A_E.apply(np.ones(60))[0] == pytest.approx(math.sqrt(60))
    assert prob.A_I is None or prob.A_I.shape[0] == 0


def test_lasso_noise_scaling():
    spec = LassoSpec(m=30, n=60, seed=2)
    prob = gen_constrained_lasso(spec)
    Ax0 = prob.f.A @ prob.x_planted
    rel = gen_constrained_lasso(LassoSpec(m=30, n=60, seed=2, noise_relative=True))
    # both modes share the Gaussian draw, so recover it from the verbatim one
    xi = (prob.f.b - Ax0) * np.linalg.norm(Ax0) / spec.noise
    expected = spec.noise * np.linalg.norm(Ax0) * xi / np.linalg.norm(xi)
    np.testing.assert_allclose(rel.f.b - Ax0, expected, rtol=1e-9, atol=1e-15)
    assert np.linalg.norm(rel.f.b - Ax0) == pytest.approx(spec.noise * np.linalg.norm(Ax0), rel=1e-9)


def test_lasso_gradient_matches_finite_differences(rng):
    prob = gen_constrained_lasso(LassoSpec(m=30, n=60, seed=5))
    fd_probe(prob.f, 60, rng)


def test_portfolio_quadratic():
    spec = PortfolioSpec(n=30, m=10, mu=0.1, seed=3)
    prob = gen_portfolio(spec)
    Q = prob.f.Q
    np.testing.assert_array_equal(Q, Q.T)
    ev = np.linalg.eigvalsh(Q)
    assert ev[0] >= spec.mu - 1e-10
    assert prob.f.L == pytest.approx(1.0 + spec.mu, rel=1e-12)
    e1 = np.zeros(30)
    e1[0] = 1.0
    assert prob.f.value(e1) == pytest.approx(Q[0, 0] / 2, rel=1e-15)


def test_portfolio_constraints():
    spec = PortfolioSpec(n=30, m=10, c=0.05, seed=3)
    prob = gen_portfolio(spec)
    rows = prob.A_I.apply(np.eye(30)[:, 0])
    assert rows[0] == 1.0
    np.testing.assert_array_equal(prob.b_I, [1.0, -0.05])
    ret = -np.array([prob.A_I.apply(e)[1] for e in np.eye(30)])
    assert ret.min() >= -1.0 and ret.max() <= 2.0


def test_portfolio_frobenius_option():
    prob = gen_portfolio(PortfolioSpec(n=30, m=10, frobenius=True, seed=3))
    assert prob.f.L < 1.0 + 0.1


@pytest.mark.parametrize("make", [
    lambda s: gen_multitask(MultitaskSpec(**SMALL_MT, seed=s)).g.X[0],
    lambda s: gen_constrained_lasso(LassoSpec(m=20, n=40, seed=s)).f.b,
    lambda s: gen_portfolio(PortfolioSpec(n=20, m=5, seed=s)).f.Q,
    lambda s: matrix_game_fixture(seed=s).problem.A.apply(np.ones(6)),
], ids=["multitask", "lasso", "portfolio", "matrix_game"])
def test_generators_are_seed_deterministic(make):
    assert make(7).tobytes() == make(7).tobytes()
    assert make(7).tobytes() != make(8).tobytes()


def test_advertised_smoothness_bounds_gradient_ratio(rng):
    mt = gen_multitask(MultitaskSpec(**SMALL_MT, seed=2))
    lipschitz_probe(mt.g, mt.dim, rng, scale=5.0)
    lipschitz_probe(mt.h, mt.dim, rng)
    lipschitz_probe(gen_constrained_lasso(LassoSpec(m=20, n=40, seed=2)).f, 40, rng)
    lipschitz_probe(gen_portfolio(PortfolioSpec(n=20, m=5, seed=2)).f, 20, rng)
    sp = matrix_game_fixture(seed=2).problem
    lipschitz_probe(smoothed_oracle(sp, 0.1), sp.dim, rng)
    fx = quadratic_l1_fixture(seed=2)
    lipschitz_probe(fx.problem.g, fx.problem.dim, rng)
    lipschitz_probe(fx.problem.h, fx.problem.dim, rng)


def test_zero_sum_fixture_closed_form():
    fx = zero_sum_fixture(a=[1.0, 2.0, 3.0])
    np.testing.assert_allclose(fx.x_star, [-1.0, 0.0, 1.0])
    np.testing.assert_allclose(fx.lam_star, [6 / math.sqrt(3)])
    prob = fx.problem
    # stationarity of the Lagrangian and feasibility
    grad = prob.f.gradient(fx.x_star) + prob.A_E.adjoint(fx.lam_star)
    np.testing.assert_allclose(grad, 0.0, atol=1e-15)
    assert abs(prob.A_E.apply(fx.x_star)[0]) <= 1e-15


def test_quadratic_l1_reference_agreement():
    for seed in range(3):
        fx = quadratic_l1_fixture(seed=seed)
        assert abs(fx.F_star - fx.info["F_alt"]) <= 1e-11


def test_saddle_fixture_solution():
    fx = saddle_1d_fixture()
    np.testing.assert_array_equal(fx.x_star, [0.0])
    assert fx.problem.D_phi == pytest.approx(2.0)


def test_covariance_file_roundtrip(tmp_path):
    path = tmp_path / "cov.txt"
    path.write_text("3\n2, 0.5, 0\n0.5 1 0\n0 0 3\n0.1 0.2 0.3\n")
    cov, ret = load_covariance_file(path)
    np.testing.assert_array_equal(cov, [[2, 0.5, 0], [0.5, 1, 0], [0, 0, 3]])
    np.testing.assert_array_equal(ret, [0.1, 0.2, 0.3])
    prob = gen_portfolio(PortfolioSpec(mu=0.5, data_path=str(path)))
    np.testing.assert_allclose(prob.f.Q, cov + 0.5 * np.eye(3))
    np.testing.assert_allclose(prob.A_I.apply(np.ones(3)), [3.0, -0.6])


@pytest.mark.parametrize("text", [
    "",
    "3 3\n1 0 0\n0 1 0\n0 0 1\n1 1 1\n",
    "2\n1 0\n0 1\n",
    "2\n1 0\n0 1 5\n1 1\n",
    "2\n1 x\n0 1\n1 1\n",
    "2\n1 nan\n0 1\n1 1\n",
])
def test_covariance_file_malformed(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ValueError):
        load_covariance_file(path)


def test_covariance_file_missing(tmp_path):
    with pytest.raises(OSError):
        load_covariance_file(tmp_path / "absent.txt")
