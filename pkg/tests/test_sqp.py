import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import lsq_linear

from uqscale.errors import OptimizerError
from uqscale.sqp import fd_gradient, minimize_sqp, projected_gradient, solve_box_qp


def test_interior_quadratic():
    c = np.array([0.3, -0.2, 0.7])
    res = minimize_sqp(lambda x: float(np.sum((x - c) ** 2)), np.zeros(3), -np.ones(3), np.ones(3))
    assert res.termination == "converged"
    assert np.allclose(res.x, c, atol=1e-6)


def test_projection_onto_bound():
    c = np.array([0.3, 1.8])
    res = minimize_sqp(lambda x: float(np.sum((x - c) ** 2)), np.zeros(2), -np.ones(2), np.ones(2))
    assert np.allclose(res.x, [0.3, 1.0], atol=1e-6)
    # grid-search oracle
    g = np.linspace(-1, 1, 201)
    best = min(itertools.product(g, g), key=lambda p: (p[0] - c[0]) ** 2 + (p[1] - c[1]) ** 2)
    assert np.allclose(res.x, best, atol=1e-2)


def test_rosenbrock_box():
    def rosen(x):
        return float(100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2)
    res = minimize_sqp(rosen, np.array([-1.2, 1.0]), np.array([-2.0, -2.0]), np.array([2.0, 0.5]))
    # constrained optimum lies on x2 = 0.5
    assert res.x[1] == pytest.approx(0.5, abs=1e-6)
    assert res.x[0] == pytest.approx(np.sqrt(0.5), abs=2e-3)


def test_errors():
    with pytest.raises(OptimizerError, match="infeasible problem"):
        minimize_sqp(lambda x: 0.0, np.zeros(1), np.ones(1), np.zeros(1))
    with pytest.raises(OptimizerError, match="model fails at initial guess"):
        minimize_sqp(lambda x: float("nan"), np.zeros(1), -np.ones(1), np.ones(1))


def test_penalized_points_skipped():
    def f(x):
        if 0.45 < x[0] < 0.55:
            return 1e6
        return float((x[0] - 0.9) ** 2)
    res = minimize_sqp(f, np.array([0.1]), np.zeros(1), np.ones(1), is_penalized=lambda v: v >= 1e6)
    assert all(it.cost < 1e6 for it in res.history)


def test_history_monotone_and_feasible():
    c = np.array([2.0, -3.0, 0.1])
    f = lambda x: float(np.sum((x - c) ** 2) + np.sum(x**4))  # noqa: E731
    res = minimize_sqp(f, np.array([0.5, 0.5, 0.5]), -np.ones(3), np.ones(3))
    costs = [it.cost for it in res.history]
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    assert all(np.all(it.x >= -1 - 1e-9) and np.all(it.x <= 1 + 1e-9) for it in res.history)


def test_fd_gradient_steps_agree():
    f = lambda x: float(np.sin(x[0]) * np.exp(0.3 * x[1]) + x[0] ** 3)  # noqa: E731
    x = np.array([0.4, -0.7])
    lo, hi = -np.ones(2) * 5, np.ones(2) * 5
    g6 = fd_gradient(f, x, f(x), lo, hi, 1e-6)
    g7 = fd_gradient(f, x, f(x), lo, hi, 1e-7)
    assert np.allclose(g6, g7, rtol=0.01)
    exact = [np.cos(0.4) * np.exp(-0.21) + 3 * 0.16, 0.3 * np.sin(0.4) * np.exp(-0.21)]
    assert np.allclose(g6, exact, rtol=1e-6)


def test_fd_gradient_at_bounds():
    f = lambda x: float(x[0] ** 2 + 3 * x[1])  # noqa: E731
    x = np.array([1.0, 0.0])
    g = fd_gradient(f, x, f(x), np.zeros(2), np.ones(2))
    assert np.allclose(g, [2.0, 3.0], rtol=1e-6)


def test_projected_gradient():
    pg = projected_gradient(np.array([1.0, -1.0, 1.0]), np.array([0.0, 1.0, 0.5]),
                            np.zeros(3), np.ones(3))
    assert np.array_equal(pg, [0.0, 0.0, 1.0])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_box_qp_against_lsq(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n + 3, n))
    h = m.T @ m + 1e-3 * np.eye(n)
    g = rng.normal(size=n) * 3
    lower = -rng.random(n)
    upper = rng.random(n)
    d, _ = solve_box_qp(h, g, lower, upper)
    # same problem as bounded least squares: 0.5|Ld + L^-T g|^2
    chol = np.linalg.cholesky(h)
    ref = lsq_linear(chol.T, -np.linalg.solve(chol, g), bounds=(lower, upper),
                     tol=1e-14, lsmr_tol=1e-14)
    q = lambda v: g @ v + 0.5 * v @ h @ v  # noqa: E731
    assert np.all(d >= lower - 1e-12) and np.all(d <= upper + 1e-12)
    assert q(d) <= q(ref.x) + 1e-9 * max(1.0, abs(q(ref.x)))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=4), st.integers(0, 1000))
def test_quadratic_projection_property(c, seed):
    c = np.array(c)
    x0 = np.random.default_rng(seed).uniform(-1, 1, c.size)
    res = minimize_sqp(lambda x: float(np.sum((x - c) ** 2)), x0, -np.ones(c.size), np.ones(c.size))
    assert np.allclose(res.x, np.clip(c, -1, 1), atol=1e-5)
    assert res.cost <= res.history[0].cost
    again = minimize_sqp(lambda x: float(np.sum((x - c) ** 2)), x0, -np.ones(c.size), np.ones(c.size))
    assert np.array_equal(again.x, res.x)
