"""Sub-scale experiment design as a bound-constrained similitude optimization.

Design vector x = [n, alpha, Ma, h, E]: geometric scale, angle of attack
(deg), Mach number, altitude (m, standing in for air density) and Young's
modulus of the model (Pa). The cost penalizes relative deviations of the
sub-scale L/D, Reynolds number and Mach number from the full-scale cruise
result, with weights (1, 30, 3000) by default.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConfigError, ModelError, OptimizerError
from .models.aerostruct import AeroStructResult, CruiseCondition, WingModelSpec, evaluate_aerostruct
from .models.atmosphere import isa_atmosphere
from .models.baseline import baseline, wing_spec
from .similitude import ScaleReference, SimilitudeReport, mass_scale_factor, similitude_report
from .sqp import fd_gradient, minimize_sqp, projected_gradient

FIELDS = ("n", "alpha", "mach", "altitude", "young_modulus")
PENALTY = 1e6
DEFAULT_X0 = (0.1, 0.0, 0.84, 10000.0, 73.1e9)
# tighter than the model default so finite differences see a smooth cost
OPT_AEROELASTIC_TOL = 1e-12
ACTIVE_TOL = 1e-6


@dataclass(frozen=True)
class DesignVector:
    n: float
    alpha: float
    mach: float
    altitude: float
    young_modulus: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in FIELDS], dtype=float)

    @classmethod
    def from_array(cls, x) -> "DesignVector":
        return cls(*(float(v) for v in x))

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CostBreakdown:
    ld_term: float
    re_term: float
    ma_term: float
    total: float
    penalty_applied: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def default_bounds(e_full: float) -> dict[str, tuple[float, float]]:
    # open lower limits of n and E are closed at small positive values
    return {
        "n": (0.01, 0.2),
        "alpha": (0.0, 10.0),
        "mach": (0.8, 0.87),
        "altitude": (0.0, 20000.0),
        "young_modulus": (0.01 * e_full, 3.0 * e_full),
    }


@dataclass
class ScalingProblem:
    full_spec: WingModelSpec
    cruise: CruiseCondition
    bounds: dict[str, tuple[float, float]]
    w_ld: float = 1.0
    w_re: float = 30.0
    w_ma: float = 3000.0
    failure_hook: Callable[[DesignVector], bool] | None = None
    _full: AeroStructResult | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.validate()

    @classmethod
    def default(cls, **kwargs) -> "ScalingProblem":
        b = baseline()
        spec = wing_spec("wingbox", kwargs.pop("mesh", "medium"), tol=OPT_AEROELASTIC_TOL)
        cruise = CruiseCondition(b["cruise"]["mach"], b["cruise"]["alpha_deg"],
                                 b["cruise"]["altitude"])
        bounds = default_bounds(spec.young_modulus)
        bounds.update(kwargs.pop("bounds", {}) or {})
        return cls(spec, cruise, bounds, **kwargs)

    def validate(self) -> None:
        missing = set(FIELDS) - set(self.bounds)
        if missing or set(self.bounds) - set(FIELDS):
            raise ConfigError(f"bounds must name exactly {FIELDS}")
        for k, (lo, hi) in self.bounds.items():
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ConfigError(f"inconsistent bounds for {k}: [{lo}, {hi}]")
        if self.bounds["n"][0] <= 0 or self.bounds["young_modulus"][0] <= 0:
            raise ConfigError("scale and Young's modulus bounds must be positive")
        if min(self.w_ld, self.w_re, self.w_ma) <= 0:
            raise ConfigError("cost weights must be positive")

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.bounds[k][0] for k in FIELDS])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.bounds[k][1] for k in FIELDS])

    @property
    def full(self) -> AeroStructResult:
        if self._full is None:
            res = evaluate_aerostruct(self.full_spec, self.cruise)
            if not res.converged:
                raise ModelError("full-scale reference did not converge")
            self._full = res
        return self._full

    def full_reference(self) -> ScaleReference:
        return ScaleReference.from_result(self.full)

    def subscale_spec(self, x: DesignVector) -> WingModelSpec:
        rho_s = isa_atmosphere(x.altitude).density
        # geometric similarity already scales mass by n^3; the extra density
        # ratio brings the total to n_mass
        return replace(
            self.full_spec.scaled(x.n),
            young_modulus=x.young_modulus,
            inertia_mass_factor=self.full.density / rho_s,
        )

    def run_subscale(self, x: DesignVector) -> AeroStructResult:
        spec = self.subscale_spec(x)
        return evaluate_aerostruct(spec, CruiseCondition(x.mach, x.alpha, x.altitude))

    def cost_terms(self, l_over_d: float, reynolds: float, mach: float) -> CostBreakdown:
        f = self.full
        ld = self.w_ld * ((l_over_d - f.l_over_d) / f.l_over_d) ** 2
        re = self.w_re * ((reynolds - f.reynolds) / f.reynolds) ** 2
        ma = self.w_ma * ((mach - f.mach) / f.mach) ** 2
        return CostBreakdown(ld, re, ma, ld + re + ma)


def _penalty() -> CostBreakdown:
    return CostBreakdown(0.0, 0.0, 0.0, PENALTY, True)


def evaluate_cost(x: DesignVector, prob: ScalingProblem) -> CostBreakdown:
    """Similitude cost of one candidate; failed evaluations return the penalty."""
    arr = x.to_array()
    if not np.all(np.isfinite(arr)):
        return _penalty()
    if prob.failure_hook is not None and prob.failure_hook(x):
        return _penalty()
    try:
        res = prob.run_subscale(x)
    except ModelError:
        return _penalty()
    if not res.converged or not all(math.isfinite(v) for v in (res.l_over_d, res.reynolds)):
        return _penalty()
    return prob.cost_terms(res.l_over_d, res.reynolds, res.mach)


@dataclass
class TraceRow:
    iteration: int
    x: DesignVector
    cost: CostBreakdown
    violation: float
    grad_norm: float


@dataclass
class OptimizationTrace:
    iterates: list[TraceRow]
    termination: str
    active_constraints: list[str]
    evaluations: int

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", *FIELDS, "ld_term", "re_term", "ma_term", "total",
                        "violation", "grad_norm"])
            for r in self.iterates:
                c = r.cost
                w.writerow([r.iteration, *(repr(v) for v in r.x.to_array()),
                            repr(c.ld_term), repr(c.re_term), repr(c.ma_term), repr(c.total),
                            repr(r.violation), repr(r.grad_norm)])


class _Scaler:
    """Affine map between physical design vectors and the unit box."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float)
        self.width = np.asarray(upper, dtype=float) - self.lower
        self.width[self.width == 0] = 1.0

    def to_unit(self, x):
        return (np.asarray(x, dtype=float) - self.lower) / self.width

    def to_phys(self, u):
        return self.lower + np.asarray(u, dtype=float) * self.width


def active_set(x: np.ndarray, lower: np.ndarray, upper: np.ndarray,
               tol: float = ACTIVE_TOL) -> list[str]:
    width = np.where(upper > lower, upper - lower, 1.0)
    out = []
    for i, k in enumerate(FIELDS):
        if abs(x[i] - lower[i]) <= tol * width[i]:
            out.append(f"{k}=lower")
        elif abs(upper[i] - x[i]) <= tol * width[i]:
            out.append(f"{k}=upper")
    return out


def optimize(prob: ScalingProblem, x0: DesignVector | None = None, max_iter: int = 200,
             ftol: float = 1e-8, ctol: float = 1e-6, rel_step: float = 1e-6):
    """Run the SQP loop; returns (best DesignVector, CostBreakdown, OptimizationTrace)."""
    if x0 is None:
        x0 = DesignVector(*DEFAULT_X0)
    lower, upper = prob.lower, prob.upper
    if np.any(lower > upper):
        raise OptimizerError("infeasible problem")
    sc = _Scaler(lower, upper)

    def fun(u):
        return evaluate_cost(DesignVector.from_array(sc.to_phys(u)), prob).total

    res = minimize_sqp(fun, sc.to_unit(x0.to_array()), np.zeros(5), np.ones(5),
                       max_iter=max_iter, ftol=ftol, ctol=ctol, rel_step=rel_step,
                       is_penalized=lambda f: not math.isfinite(f) or f >= PENALTY)

    rows = []
    for k, it in enumerate(res.history):
        xv = DesignVector.from_array(np.clip(sc.to_phys(it.x), lower, upper))
        rows.append(TraceRow(k, xv, evaluate_cost(xv, prob), it.violation, it.grad_norm))
    feasible = [r for r in rows if not r.cost.penalty_applied
                and np.all(r.x.to_array() >= lower) and np.all(r.x.to_array() <= upper)]
    if not feasible:
        raise OptimizerError("infeasible problem")
    best = min(feasible, key=lambda r: (r.cost.total, -r.iteration))
    trace = OptimizationTrace(rows, res.termination,
                              active_set(best.x.to_array(), lower, upper), res.evaluations)
    return best.x, best.cost, trace


@dataclass
class KKTReport:
    slack_lower: dict[str, float]
    slack_upper: dict[str, float]
    active: list[str]
    violations: dict[str, float]
    projected_gradient_norm: float
    gradient: list[float]

    def to_dict(self) -> dict:
        return asdict(self)


def check_kkt(x: DesignVector, prob: ScalingProblem, rel_step: float = 1e-6) -> KKTReport:
    """Slacks, active bounds and the projected gradient in unit-box coordinates."""
    lower, upper = prob.lower, prob.upper
    arr = x.to_array()
    violations = {}
    for i, k in enumerate(FIELDS):
        if arr[i] < lower[i]:
            violations[f"{k}<lower"] = float(lower[i] - arr[i])
        if arr[i] > upper[i]:
            violations[f"{k}>upper"] = float(arr[i] - upper[i])
    sc = _Scaler(lower, upper)
    u = sc.to_unit(np.clip(arr, lower, upper))

    def fun(v):
        return evaluate_cost(DesignVector.from_array(sc.to_phys(v)), prob).total

    g = fd_gradient(fun, u, fun(u), np.zeros(5), np.ones(5), rel_step)
    pg = projected_gradient(g, u, np.zeros(5), np.ones(5), ACTIVE_TOL)
    return KKTReport(
        slack_lower={k: float(arr[i] - lower[i]) for i, k in enumerate(FIELDS)},
        slack_upper={k: float(upper[i] - arr[i]) for i, k in enumerate(FIELDS)},
        active=active_set(arr, lower, upper),
        violations=violations,
        projected_gradient_norm=float(np.linalg.norm(pg)),
        gradient=g.tolist(),
    )


def optimum_report(x: DesignVector, cost: CostBreakdown, trace: OptimizationTrace,
                   prob: ScalingProblem) -> tuple[dict, SimilitudeReport]:
    """Assemble the final JSON payload and the similitude comparison at ``x``."""
    sub = prob.run_subscale(x)
    sim = similitude_report(prob.full_reference(), ScaleReference.from_result(sub), x.n)
    kkt = check_kkt(x, prob)
    payload = {
        "design": x.as_dict(),
        "cost": cost.as_dict(),
        "termination": trace.termination,
        "iterations": len(trace.iterates) - 1,
        "evaluations": trace.evaluations,
        "active_constraints": trace.active_constraints,
        "kkt": kkt.to_dict(),
        "full_scale": {"l_over_d": prob.full.l_over_d, "reynolds": prob.full.reynolds,
                       "mach": prob.full.mach, "density": prob.full.density,
                       "alpha": prob.cruise.alpha, "altitude": prob.cruise.altitude,
                       "young_modulus": prob.full_spec.young_modulus},
        "sub_scale": {"l_over_d": sub.l_over_d, "reynolds": sub.reynolds, "mach": sub.mach,
                      "density": sub.density, "velocity": sub.velocity,
                      "reference_length": sub.reference_length,
                      "mass_scale": mass_scale_factor(prob.full.density, sub.density, x.n)},
        "similitude": sim.to_dict(),
        "weights": {"ld": prob.w_ld, "re": prob.w_re, "ma": prob.w_ma},
    }
    return payload, sim


def write_optimum_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
