"""Quadratic response-surface equations and Sobol' indices computed on them."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EstimatorError
from .params import ParameterSpace, SampleMatrix, flatten_for_evaluation, saltelli_design
from .sobol import SensitivityResult, analyze, evaluate_design

LOW_CONFIDENCE_R2 = 0.9


def term_list(d: int, include_interactions: bool = True) -> list[tuple[int, ...]]:
    """Monomials as tuples of variable indices: (), (i,), (i, j) with i < j, (i, i)."""
    terms: list[tuple[int, ...]] = [()]
    terms += [(i,) for i in range(d)]
    if include_interactions:
        terms += [(i, j) for i in range(d) for j in range(i + 1, d)]
    terms += [(i, i) for i in range(d)]
    return terms


def design_matrix(z: np.ndarray, terms: list[tuple[int, ...]]) -> np.ndarray:
    z = np.atleast_2d(z)
    cols = [np.prod(z[:, list(t)], axis=1) if t else np.ones(z.shape[0]) for t in terms]
    return np.column_stack(cols)


@dataclass
class PolynomialRSE:
    names: list[str]
    lower: np.ndarray
    upper: np.ndarray
    terms: list[tuple[int, ...]]
    coefficients: np.ndarray
    include_interactions: bool = True
    fit_stats: dict = field(default_factory=dict)
    degree: int = 2

    @property
    def dimension(self) -> int:
        return len(self.names)

    def normalize(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 2.0 * (x - self.lower) / (self.upper - self.lower) - 1.0

    def predict(self, x: np.ndarray) -> np.ndarray:
        z = self.normalize(np.atleast_2d(x))
        return design_matrix(z, self.terms) @ self.coefficients

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "include_interactions": self.include_interactions,
            "names": list(self.names),
            "normalization": {"lower": self.lower.tolist(), "upper": self.upper.tolist()},
            "terms": [list(t) for t in self.terms],
            "coefficients": self.coefficients.tolist(),
            "fit_stats": self.fit_stats,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolynomialRSE":
        return cls(
            names=list(data["names"]),
            lower=np.array(data["normalization"]["lower"], dtype=float),
            upper=np.array(data["normalization"]["upper"], dtype=float),
            terms=[tuple(t) for t in data["terms"]],
            coefficients=np.array(data["coefficients"], dtype=float),
            include_interactions=bool(data["include_interactions"]),
            fit_stats=dict(data.get("fit_stats", {})),
            degree=int(data.get("degree", 2)),
        )

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, path: str | Path) -> "PolynomialRSE":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_rse(x: SampleMatrix | np.ndarray, y, include_interactions: bool = True,
            bounds: tuple[np.ndarray, np.ndarray] | None = None,
            names: list[str] | None = None) -> PolynomialRSE:
    """Least-squares quadratic fit on inputs mapped to [-1, 1].

    ``bounds`` sets the normalization box; by default the parameter space is
    unknown here, so the column ranges of ``x`` are used.
    """
    if isinstance(x, SampleMatrix):
        names = list(x.names) if names is None else names
        x = x.values
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] != y.size:
        raise EstimatorError("row count of x does not match length of y")
    d = x.shape[1]
    names = names or [f"x{i + 1}" for i in range(d)]
    terms = term_list(d, include_interactions)
    if x.shape[0] < len(terms):
        raise EstimatorError("insufficient samples for term count")
    if bounds is None:
        lower, upper = x.min(axis=0), x.max(axis=0)
        upper = np.where(upper > lower, upper, lower + 1.0)
    else:
        lower, upper = (np.asarray(b, dtype=float) for b in bounds)
    rse = PolynomialRSE(names, lower, upper, terms, np.zeros(len(terms)), include_interactions)
    mat = design_matrix(rse.normalize(x), terms)
    coef, _, rank, _ = np.linalg.lstsq(mat, y, rcond=None)
    if rank < len(terms):
        warnings.warn("rank-deficient response surface; using minimum-norm solution",
                      stacklevel=2)
    rse.coefficients = coef
    resid = y - mat @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    rse.fit_stats = {
        "r_squared": min(r2, 1.0),
        "rmse": math.sqrt(ss_res / y.size),
        "n_train": int(y.size),
        "rank": int(rank),
    }
    return rse


def fit_rse_for_space(x: SampleMatrix, y, space: ParameterSpace,
                      include_interactions: bool = True) -> PolynomialRSE:
    return fit_rse(x, y, include_interactions, (space.lower, space.upper), space.names)


def predict(rse: PolynomialRSE, x_row) -> float:
    """Evaluate at one point, warning when it lies outside the fit box."""
    x_row = np.asarray(x_row, dtype=float)
    if x_row.shape != (rse.dimension,):
        raise EstimatorError(f"expected {rse.dimension} inputs, got {x_row.shape}")
    if np.any(np.abs(rse.normalize(x_row)) > 1.0 + 1e-12):
        warnings.warn("extrapolating response surface outside its fit box", stacklevel=2)
    return float(rse.predict(x_row)[0])


def subsample(x: SampleMatrix, y, fraction: float, seed: int,
              min_rows: int = 1) -> tuple[SampleMatrix, np.ndarray]:
    """Uniform row subsample without replacement, floor(fraction * rows) rows.

    Row order of the original matrix is preserved in the result.
    """
    y = np.asarray(y, dtype=float)
    if not 0.0 < fraction <= 1.0:
        raise EstimatorError("fraction must lie in (0, 1]")
    if fraction == 1.0:
        return x, y
    k = int(math.floor(fraction * x.n_rows))
    if k < min_rows:
        raise EstimatorError(f"subsample of {k} rows is below the term count {min_rows}")
    rows = np.sort(np.random.default_rng(seed).choice(x.n_rows, size=k, replace=False))
    return SampleMatrix(x.values[rows], x.names, x.seed, x.kind), y[rows]


def sobol_via_surrogate(rse: PolynomialRSE, space: ParameterSpace, base_n: int, seed: int,
                        method: str = "surrogate_full",
                        second_order: bool = False) -> SensitivityResult:
    if rse.names != space.names:
        raise EstimatorError("response surface and parameter space disagree on inputs")
    design = saltelli_design(space, base_n, seed, second_order)
    y = rse.predict(flatten_for_evaluation(design).values)
    result = analyze(evaluate_design(design, y), method=method)
    r2 = rse.fit_stats.get("r_squared", float("nan"))
    result.diagnostics["rse_r_squared"] = r2
    result.diagnostics["low_confidence"] = not (r2 >= LOW_CONFIDENCE_R2)
    return result
