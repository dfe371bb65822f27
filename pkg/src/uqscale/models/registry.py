"""Named scalar models the pipeline can sample: the vehicle stand-ins plus analytic test functions."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from ..errors import ConfigError, ModelError
from .aerostruct import MESH_ELEMENTS, evaluate_aerostruct
from .baseline import STRUCTURE_CHOICES, baseline, wing_spec
from .range_model import INPUT_NAMES, RangeModelInputs, lumped_range
from .study import STUDY_INPUTS, apply_inputs, ordered_map

MODEL_KINDS = ("lumped_range", "aerostruct", "ishigami", "linear", "constant")
AEROSTRUCT_OUTPUTS = ("l_over_d", "cl", "cd", "tip_deflection", "tip_twist", "wing_mass")


def ishigami(x: np.ndarray, a: float = 7.0, b: float = 0.1) -> np.ndarray:
    x = np.atleast_2d(x)
    return np.sin(x[:, 0]) + a * np.sin(x[:, 1]) ** 2 + b * x[:, 2] ** 4 * np.sin(x[:, 0])


def ishigami_indices(a: float = 7.0, b: float = 0.1) -> dict:
    """Closed-form first-order and total indices of the Ishigami function on [-pi, pi]^3."""
    pi = math.pi
    v1 = 0.5 * (1.0 + b * pi**4 / 5.0) ** 2
    v2 = a**2 / 8.0
    v13 = b**2 * pi**8 * (1.0 / 18.0 - 1.0 / 50.0)
    v = v1 + v2 + v13
    return {
        "variance": v,
        "s1": np.array([v1, v2, 0.0]) / v,
        "st": np.array([v1 + v13, v2, v13]) / v,
        "s2_13": v13 / v,
    }


class ModelSpec:
    """A configured model: validates inputs once, then maps rows to outputs.

    ``evaluate`` returns NaN for rows whose model evaluation raised
    ``ModelError`` so that callers can apply their own failure policy.
    """

    def __init__(self, kind: str, names: Sequence[str], structure: str = "wingbox",
                 mesh: str = "medium", output: str = "l_over_d",
                 coefficients: Sequence[float] | None = None, value: float = 1.0):
        if kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {kind!r}; choose from {MODEL_KINDS}")
        self.kind = kind
        self.names = list(names)
        self.structure = structure
        self.mesh = mesh
        self.output = output
        self.coefficients = None if coefficients is None else [float(c) for c in coefficients]
        self.value = float(value)
        self._check()
        self._row_fn = self._build()

    def _check(self) -> None:
        allowed = {
            "lumped_range": set(INPUT_NAMES) | {"mach", "altitude"},
            "aerostruct": set(STUDY_INPUTS) | {"altitude"},
        }.get(self.kind)
        if allowed is not None:
            unknown = [n for n in self.names if n not in allowed]
            if unknown:
                raise ConfigError(f"parameters {unknown} are not inputs of model {self.kind}")
        if self.kind == "ishigami" and len(self.names) != 3:
            raise ConfigError("ishigami model takes exactly 3 parameters")
        if self.kind == "linear":
            if self.coefficients is None or len(self.coefficients) != len(self.names):
                raise ConfigError("linear model needs one coefficient per parameter")
        if self.kind == "aerostruct":
            if self.structure not in STRUCTURE_CHOICES:
                raise ConfigError(f"unknown structure {self.structure!r}")
            if self.mesh not in MESH_ELEMENTS:
                raise ConfigError(f"unknown mesh {self.mesh!r}")
            if self.output not in AEROSTRUCT_OUTPUTS:
                raise ConfigError(f"unknown aerostructural output {self.output!r}")

    def _build(self) -> Callable[[np.ndarray], float]:
        names = self.names
        if self.kind == "lumped_range":
            return lambda row: lumped_range(RangeModelInputs.from_mapping(dict(zip(names, row))))
        if self.kind == "aerostruct":
            spec = wing_spec(self.structure, self.mesh)
            altitude = baseline()["cruise"]["altitude"]

            def run(row):
                s, cond = apply_inputs(spec, dict(zip(names, map(float, row))), altitude)
                res = evaluate_aerostruct(s, cond)
                if not res.converged:
                    raise ModelError("aeroelastic iteration did not converge")
                return getattr(res, self.output)
            return run
        if self.kind == "ishigami":
            return lambda row: float(ishigami(row)[0])
        if self.kind == "linear":
            c = np.array(self.coefficients)
            return lambda row: float(c @ row)
        return lambda row: self.value

    def evaluate(self, rows: np.ndarray, threads: int = 1) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != len(self.names):
            raise ModelError(f"expected {len(self.names)} columns, got {rows.shape[1]}")
        if self.kind == "ishigami":
            return ishigami(rows)
        if self.kind == "linear":
            return rows @ np.array(self.coefficients)
        if self.kind == "constant":
            return np.full(rows.shape[0], self.value)

        def safe(row):
            try:
                return float(self._row_fn(row))
            except ModelError:
                return float("nan")

        return np.array(ordered_map(safe, list(rows), threads), dtype=float)
