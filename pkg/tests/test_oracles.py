import numpy as np
import pytest

from inexactapg.oracles import (
    CallableSmooth,
    CompositeProblem,
    Diagnostics,
    SumSmooth,
    ZeroSmooth,
    objective,
    prox_grad_residual,
    stationarity,
    uncounted,
)
from inexactapg.problems import LeastSquares, QuadraticOracle, matrix_game_fixture
from inexactapg.prox import L1Norm, ZeroFunction
from inexactapg.smoothing import smoothed_oracle

from conftest import fd_gradient, rel_err


def shifted_square(c=3.0):
    return CallableSmooth(lambda x: 0.5 * float((x[0] - c) ** 2), lambda x: np.array([x[0] - c]), mu=1.0, L=1.0)


def test_each_query_counts_once():
    g = shifted_square()
    g.value(np.zeros(1))
    g.gradient(np.zeros(1))
    g.joint(np.zeros(1))
    assert g.count == 3


def test_sum_counts_joint_and_children():
    a, b = shifted_square(), shifted_square(1.0)
    s = SumSmooth(a, b)
    v, grad = s.joint(np.zeros(1))
    assert v == pytest.approx(4.5 + 0.5) and grad[0] == pytest.approx(-4.0)
    assert (s.count, a.count, b.count) == (1, 1, 1)
    assert s.mu == 2.0 and s.L == 2.0


def test_uncounted_restores_nested_counters():
    sp = matrix_game_fixture(0).problem
    h = smoothed_oracle(sp, 0.5)
    s = SumSmooth(sp.f, h)
    with uncounted(s):
        s.joint(np.ones(6))
        s.value(np.ones(6))
    assert (s.count, sp.f.count, h.count, sp.A.count) == (0, 0, 0, 0)
    s.joint(np.ones(6))
    assert (s.count, sp.f.count, h.count, sp.A.count) == (1, 1, 1, 2)


def test_objective_is_uncounted():
    prob = CompositeProblem(shifted_square(), ZeroSmooth(), L1Norm(1.0))
    assert objective(prob, np.array([2.0])) == pytest.approx(0.5 + 2.0)
    assert prob.g.count == 0


def test_prox_grad_residual_fixed_point():
    prob = CompositeProblem(shifted_square(), ZeroSmooth(), L1Norm(1.0))
    x = np.array([2.0])
    for eta in (0.1, 0.5, 1.0, 3.0):
        xt = prob.r.prox(x - eta * prob.g.gradient(x), eta)
        assert prox_grad_residual(prob, x, xt, eta) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        prox_grad_residual(prob, x, x, 0.0)


def test_prox_grad_residual_hand_expression(rng):
    Q = np.diag([2.0, 5.0])
    c = np.array([1.0, -1.0])
    prob = CompositeProblem(QuadraticOracle(Q, c), ZeroSmooth(), ZeroFunction())
    x = rng.standard_normal(2)
    eta = 0.2
    xt = x - eta * (Q @ x + c)
    expect = np.linalg.norm((Q @ xt + c) - (Q @ x + c) + (x - xt) / eta)
    assert prox_grad_residual(prob, x, xt, eta) == pytest.approx(expect, rel=1e-14)


def test_surrogate_bounds_exact_distance(rng):
    n = 8
    M = rng.standard_normal((10, n))
    g = LeastSquares(M, rng.standard_normal(10))
    prob = CompositeProblem(g, ZeroSmooth(), L1Norm(0.3))
    for _ in range(20):
        x = rng.standard_normal(n) * (rng.random(n) < 0.6)
        eta = 1.0 / g.L
        xt = prob.r.prox(x - eta * g.gradient(x), eta)
        exact = stationarity(prob, xt, strategy="exact")
        assert prox_grad_residual(prob, x, xt, eta) >= exact - 1e-12


def test_stationarity_examples():
    a = np.array([1.0, -2.0])
    quad = CallableSmooth(lambda x: 0.5 * float((x - a) @ (x - a)), lambda x: x - a, mu=1.0, L=1.0)
    assert stationarity(CompositeProblem(quad, ZeroSmooth(), ZeroFunction()), a) == 0.0
    prob = CompositeProblem(shifted_square(), ZeroSmooth(), L1Norm(1.0))
    assert stationarity(prob, np.array([2.0])) == pytest.approx(0.0, abs=1e-15)
    assert stationarity(prob, np.array([3.0])) == pytest.approx(1.0)
    # surrogate route needs a step or advertised constants
    assert stationarity(prob, np.array([2.0]), strategy="surrogate") == pytest.approx(0.0, abs=1e-15)
    blind = CompositeProblem(CallableSmooth(quad.value, quad.gradient), ZeroSmooth(), ZeroFunction())
    with pytest.raises(ValueError):
        stationarity(blind, a, strategy="surrogate")


def test_shipped_quadratics_match_finite_differences(rng):
    M = rng.standard_normal((7, 5))
    oracles = [LeastSquares(M, rng.standard_normal(7), ridge=0.3),
               QuadraticOracle(M.T @ M, rng.standard_normal(5), const=1.0)]
    for o in oracles:
        for _ in range(20):
            x = rng.standard_normal(5)
            assert rel_err(o.gradient(x), fd_gradient(o.value, x)) <= 1e-5
            v, gr = o.joint(x)
            assert v == o.value(x) and np.array_equal(gr, o.gradient(x))


def test_diagnostics_optional_fields():
    assert not Diagnostics().has_optimum
    assert not Diagnostics(x_star=np.zeros(1)).has_optimum
    assert Diagnostics(np.zeros(1), 0.0).has_optimum
