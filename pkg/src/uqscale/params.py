"""Uncertain parameter spaces and the sample designs drawn from them."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import ConfigError

# Seed offsets for the two independent Saltelli base matrices.
SEED_OFFSET_A = 0
SEED_OFFSET_B = 7919


@dataclass(frozen=True)
class ParameterDef:
    name: str
    lower: float
    upper: float
    nominal: float | None = None
    distribution: Literal["uniform"] = "uniform"

    def __post_init__(self):
        if not self.name or not self.name.isidentifier():
            raise ConfigError(f"invalid parameter name {self.name!r}")
        if not float(self.lower) < float(self.upper):
            raise ConfigError(f"parameter {self.name}: lower must be < upper")
        if self.nominal is None:
            object.__setattr__(self, "nominal", 0.5 * (self.lower + self.upper))
        if not self.lower <= self.nominal <= self.upper:
            raise ConfigError(f"parameter {self.name}: nominal outside [lower, upper]")
        if self.distribution != "uniform":
            raise ConfigError(f"parameter {self.name}: only uniform marginals supported")

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ParameterSpace:
    params: tuple[ParameterDef, ...]

    def __init__(self, params: Iterable[ParameterDef]):
        params = tuple(params)
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ConfigError("parameter names must be unique")
        object.__setattr__(self, "params", params)

    @property
    def dimension(self) -> int:
        return len(self.params)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    @property
    def lower(self) -> np.ndarray:
        return np.array([p.lower for p in self.params], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([p.upper for p in self.params], dtype=float)

    @property
    def nominal(self) -> np.ndarray:
        return np.array([p.nominal for p in self.params], dtype=float)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / (self.upper - self.lower)

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        x = self.lower + np.asarray(u, dtype=float) * (self.upper - self.lower)
        # guard the closed interval against rounding at u == 1
        return np.clip(x, self.lower, self.upper)

    def appended(self, param: ParameterDef) -> "ParameterSpace":
        return ParameterSpace(self.params + (param,))

    @classmethod
    def from_records(cls, records: Sequence[dict]) -> "ParameterSpace":
        allowed = {"name", "lower", "upper", "nominal", "distribution"}
        params = []
        for rec in records:
            unknown = set(rec) - allowed
            if unknown:
                raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
            try:
                params.append(
                    ParameterDef(
                        name=rec["name"],
                        lower=float(rec["lower"]),
                        upper=float(rec["upper"]),
                        nominal=None if rec.get("nominal") is None else float(rec["nominal"]),
                        distribution=rec.get("distribution", "uniform"),
                    )
                )
            except KeyError as exc:
                raise ConfigError(f"parameter entry missing key {exc}") from None
        return cls(params)


@dataclass(frozen=True)
class SampleMatrix:
    values: np.ndarray
    names: tuple[str, ...]
    seed: int
    kind: Literal["lhs", "monte_carlo", "saltelli"] = "lhs"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.names)
            for row in self.values:
                writer.writerow([repr(float(v)) for v in row])


def _check_space(space: ParameterSpace) -> None:
    if space.dimension == 0:
        raise ConfigError("empty parameter space")


def lhs_unit(n: int, d: int, seed: int) -> np.ndarray:
    """Latin hypercube on [0, 1)^d: one point per stratum in every column."""
    rng = np.random.default_rng(seed)
    u = np.empty((n, d))
    for j in range(d):
        u[:, j] = (rng.permutation(n) + rng.random(n)) / n
    return u


def lhs_sample(space: ParameterSpace, n: int, seed: int) -> SampleMatrix:
    _check_space(space)
    if n < 1:
        raise ConfigError("sample count must be >= 1")
    u = lhs_unit(n, space.dimension, seed)
    return SampleMatrix(space.from_unit(u), tuple(space.names), seed, "lhs")


def monte_carlo_sample(space: ParameterSpace, n: int, seed: int) -> SampleMatrix:
    _check_space(space)
    if n < 1:
        raise ConfigError("sample count must be >= 1")
    u = np.random.default_rng(seed).random((n, space.dimension))
    return SampleMatrix(space.from_unit(u), tuple(space.names), seed, "monte_carlo")


@dataclass(frozen=True)
class SaltelliDesign:
    """Base matrices A, B and their column-swapped hybrids.

    ``AB[i]`` is A with column i taken from B; ``BA[i]`` (second order only)
    is B with column i taken from A.
    """

    A: SampleMatrix
    B: SampleMatrix
    AB: tuple[np.ndarray, ...]
    BA: tuple[np.ndarray, ...] | None
    seed: int
    names: tuple[str, ...] = field(default=())
    sampler: str = "lhs"

    @property
    def base_n(self) -> int:
        return self.A.n_rows

    @property
    def dimension(self) -> int:
        return self.A.n_cols

    @property
    def second_order(self) -> bool:
        return self.BA is not None

    @property
    def n_blocks(self) -> int:
        d = self.dimension
        return 2 * d + 2 if self.second_order else d + 2

    @property
    def total_evaluations(self) -> int:
        return self.base_n * self.n_blocks

    def block_labels(self) -> list[str]:
        labels = ["A", "B"] + [f"AB{i + 1}" for i in range(self.dimension)]
        if self.second_order:
            labels += [f"BA{i + 1}" for i in range(self.dimension)]
        return labels

    def blocks(self) -> list[np.ndarray]:
        out = [self.A.values, self.B.values, *self.AB]
        if self.BA is not None:
            out += list(self.BA)
        return out


def _sobol_pair(space: ParameterSpace, base_n: int, seed: int):
    from scipy.stats import qmc

    d = space.dimension
    u = qmc.Sobol(2 * d, scramble=True, seed=seed).random(base_n)
    names = tuple(space.names)
    return (SampleMatrix(space.from_unit(u[:, :d]), names, seed, "monte_carlo"),
            SampleMatrix(space.from_unit(u[:, d:]), names, seed, "monte_carlo"))


def saltelli_design(space: ParameterSpace, base_n: int, seed: int,
                    second_order: bool = False,
                    sampler: Literal["lhs", "sobol"] = "lhs") -> SaltelliDesign:
    """Build the Saltelli matrix family.

    The default base generator draws A and B as independent Latin hypercubes
    seeded at fixed offsets from ``seed``. ``sampler="sobol"`` uses one
    scrambled 2D-dimensional Sobol' sequence split into halves instead.
    """
    _check_space(space)
    if base_n < 2:
        raise ConfigError("base_n must be >= 2")
    if sampler == "lhs":
        a = lhs_sample(space, base_n, seed + SEED_OFFSET_A)
        b = lhs_sample(space, base_n, seed + SEED_OFFSET_B)
    elif sampler == "sobol":
        a, b = _sobol_pair(space, base_n, seed)
    else:
        raise ConfigError(f"unknown sampler {sampler!r}")
    ab, ba = [], []
    for i in range(space.dimension):
        m = a.values.copy()
        m[:, i] = b.values[:, i]
        m.setflags(write=False)
        ab.append(m)
        if second_order:
            m = b.values.copy()
            m[:, i] = a.values[:, i]
            m.setflags(write=False)
            ba.append(m)
    return SaltelliDesign(a, b, tuple(ab), tuple(ba) if second_order else None,
                          seed, tuple(space.names), sampler)


def flatten_for_evaluation(design: SaltelliDesign) -> SampleMatrix:
    """Stack all blocks in evaluation order A, B, AB_1..AB_D[, BA_1..BA_D]."""
    return SampleMatrix(np.vstack(design.blocks()), design.A.names, design.seed, "saltelli")


def locate_row(design: SaltelliDesign, k: int) -> tuple[str, int]:
    """Map a row of the flattened matrix back to (block label, row)."""
    block, row = divmod(k, design.base_n)
    return design.block_labels()[block], row
