"""Bound-constrained sequential quadratic programming with finite differences.

Each iteration solves the quadratic model

    min_d  g.d + 0.5 d.B.d   subject to  lower - x <= d <= upper - x

with a primal active-set method, where g is a central finite-difference
gradient and B a damped BFGS approximation, then backtracks along d on the
merit function. Every iterate is feasible, so the merit function reduces to
the objective plus an l1 bound-violation term that stays zero in practice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import OptimizerError


def solve_box_qp(hess: np.ndarray, grad: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                 max_iter: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Minimize g.d + 0.5 d.H.d over lower <= d <= upper for positive definite H.

    Requires lower <= 0 <= upper so that d = 0 is a feasible start. Returns
    (d, multipliers) where the multiplier of a variable at its lower bound is
    >= 0 and at its upper bound <= 0 at optimality (gradient sign convention).
    """
    n = grad.size
    d = np.clip(np.zeros(n), lower, upper)
    state = np.zeros(n, dtype=int)  # -1 at lower, +1 at upper, 0 free
    state[d <= lower] = -1
    state[(d >= upper) & (state == 0)] = 1
    for _ in range(max_iter):
        free = state == 0
        target = d.copy()
        if free.any():
            rhs = -(grad[free] + hess[np.ix_(free, ~free)] @ d[~free])
            target[free] = np.linalg.solve(hess[np.ix_(free, free)], rhs)
        step = target - d
        # largest feasible fraction of the step toward the subspace minimizer
        frac, block = 1.0, -1
        for i in np.nonzero(free)[0]:
            if step[i] < 0 and d[i] + step[i] < lower[i]:
                t = (lower[i] - d[i]) / step[i]
                if t < frac:
                    frac, block = t, i
            elif step[i] > 0 and d[i] + step[i] > upper[i]:
                t = (upper[i] - d[i]) / step[i]
                if t < frac:
                    frac, block = t, i
        d = d + frac * step
        if block >= 0:
            if step[block] < 0:
                d[block], state[block] = lower[block], -1
            else:
                d[block], state[block] = upper[block], 1
            continue
        mult = hess @ d + grad
        # a bound is releasable when the gradient points back into the box
        wrong = np.where(state == -1, -mult, 0.0) + np.where(state == 1, mult, 0.0)
        worst = int(np.argmax(wrong))
        if wrong[worst] <= 1e-14 * max(1.0, float(np.max(np.abs(grad)))):
            return d, mult * (state != 0)
        state[worst] = 0
    raise OptimizerError("box QP active-set iteration limit reached")


def fd_gradient(fun: Callable[[np.ndarray], float], x: np.ndarray, fx: float,
                lower: np.ndarray, upper: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central differences, switching to second-order one-sided stencils at bounds."""
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), 1.0)
        e = np.zeros_like(x)
        e[i] = h
        if x[i] + h > upper[i]:
            g[i] = (3.0 * fx - 4.0 * fun(x - e) + fun(x - 2 * e)) / (2.0 * h)
        elif x[i] - h < lower[i]:
            g[i] = (-3.0 * fx + 4.0 * fun(x + e) - fun(x + 2 * e)) / (2.0 * h)
        else:
            g[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return g


def projected_gradient(g: np.ndarray, x: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                       tol: float = 1e-9) -> np.ndarray:
    pg = g.copy()
    pg[(x <= lower + tol) & (g > 0)] = 0.0
    pg[(x >= upper - tol) & (g < 0)] = 0.0
    return pg


@dataclass
class Iterate:
    x: np.ndarray
    cost: float
    violation: float
    grad_norm: float
    step: float = 0.0


@dataclass
class SQPResult:
    x: np.ndarray
    cost: float
    termination: str  # converged | max_iter | stalled
    iterations: int
    history: list[Iterate] = field(default_factory=list)
    evaluations: int = 0


def bound_violation(x, lower, upper) -> float:
    return float(np.max(np.concatenate([lower - x, x - upper, [0.0]])))


def minimize_sqp(fun: Callable[[np.ndarray], float], x0: np.ndarray, lower: np.ndarray,
                 upper: np.ndarray, *, max_iter: int = 200, ftol: float = 1e-8,
                 ctol: float = 1e-6, rel_step: float = 1e-6,
                 is_penalized: Callable[[float], bool] | None = None,
                 armijo: float = 1e-4, min_step: float = 1e-10) -> SQPResult:
    """Minimize ``fun`` over a box. Intended for variables already scaled to O(1)."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper):
        raise OptimizerError("infeasible problem")
    is_penalized = is_penalized or (lambda f: not math.isfinite(f))
    n_eval = 0

    def f(x):
        nonlocal n_eval
        n_eval += 1
        return float(fun(x))

    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    fx = f(x)
    if is_penalized(fx):
        raise OptimizerError("model fails at initial guess")
    g = fd_gradient(f, x, fx, lower, upper, rel_step)
    hess = np.eye(x.size)
    history = [Iterate(x.copy(), fx, bound_violation(x, lower, upper),
                       float(np.linalg.norm(projected_gradient(g, x, lower, upper))))]
    termination = "max_iter"
    iteration = 0
    for iteration in range(1, max_iter + 1):
        d, _ = solve_box_qp(hess, g, lower - x, upper - x)
        slope = float(g @ d)
        if slope >= 0 or np.max(np.abs(d)) < 1e-15:
            # no descent left in the model: projected gradient is zero
            termination = "converged"
            break
        t = 1.0
        accepted = False
        while t >= min_step:
            x_new = np.clip(x + t * d, lower, upper)
            f_new = f(x_new)
            if not is_penalized(f_new) and f_new <= fx + armijo * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            termination = "stalled"
            break
        g_new = fd_gradient(f, x_new, f_new, lower, upper, rel_step)
        s = x_new - x
        y = g_new - g
        hess = _damped_bfgs(hess, s, y)
        df = fx - f_new
        x, fx, g = x_new, f_new, g_new
        viol = bound_violation(x, lower, upper)
        history.append(Iterate(x.copy(), fx, viol,
                               float(np.linalg.norm(projected_gradient(g, x, lower, upper))),
                               float(t)))
        if abs(df) < ftol and viol < ctol:
            termination = "converged"
            break
    return SQPResult(x, fx, termination, iteration, history, n_eval)


def _damped_bfgs(hess: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Powell-damped BFGS update; keeps the approximation positive definite."""
    bs = hess @ s
    sbs = float(s @ bs)
    if sbs <= 1e-300:
        return hess
    sy = float(s @ y)
    if sy >= 0.2 * sbs:
        theta = 1.0
    else:
        theta = 0.8 * sbs / (sbs - sy)
    r = theta * y + (1.0 - theta) * bs
    return hess - np.outer(bs, bs) / sbs + np.outer(r, r) / float(s @ r)
