"""Variance-based (Sobol') sensitivity indices from evaluated Saltelli designs.

Estimators, with y centred on the pooled mean of the A and B outputs and
V the pooled variance of those outputs:

* first order (Saltelli 2010):  V_i  = mean(y_B * (y_ABi - y_A))
* total (Jansen 1999):          VT_i = mean((y_A - y_ABi)^2) / 2
* closed second order:          Vc_ij = mean(y_BAi * y_ABj - y_A * y_B)

so that S1_i = V_i / V, ST_i = VT_i / V and S2_ij = Vc_ij / V - S1_i - S1_j.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .errors import EstimatorError
from .params import SaltelliDesign

CLIP_LOW, CLIP_HIGH = -0.1, 1.1

FailurePolicy = Literal["drop-pairs", "error"]
Method = Literal["qmc", "surrogate_full", "surrogate_fraction"]


@dataclass(frozen=True)
class EvaluatedDesign:
    design: SaltelliDesign
    y_A: np.ndarray
    y_B: np.ndarray
    y_AB: np.ndarray  # (D, N)
    y_BA: np.ndarray | None
    failures: tuple[tuple[str, int], ...] = ()
    dropped_rows: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return self.y_A.size

    @property
    def dimension(self) -> int:
        return self.y_AB.shape[0]


def evaluate_design(design: SaltelliDesign, y: Sequence[float],
                    failure_policy: FailurePolicy = "drop-pairs") -> EvaluatedDesign:
    """Split flattened model outputs back into the design's blocks.

    Rows whose output is non-finite in any block are recorded as failures.
    Under ``drop-pairs`` the affected base row is removed from every block;
    under ``error`` any failure raises.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (design.total_evaluations,):
        raise EstimatorError(
            f"expected {design.total_evaluations} outputs, got {y.shape}"
        )
    n, d = design.base_n, design.dimension
    blocks = y.reshape(design.n_blocks, n)
    labels = design.block_labels()
    bad = ~np.isfinite(blocks)
    failures = tuple((labels[b], int(r)) for b, r in zip(*np.nonzero(bad)))
    keep = ~bad.any(axis=0)
    if failures and failure_policy == "error":
        raise EstimatorError(f"{len(failures)} non-finite model outputs")
    if failures and failure_policy != "drop-pairs":
        raise EstimatorError(f"unknown failure policy {failure_policy!r}")
    blocks = blocks[:, keep]
    y_ba = blocks[2 + d:] if design.second_order else None
    return EvaluatedDesign(
        design=design,
        y_A=blocks[0],
        y_B=blocks[1],
        y_AB=blocks[2:2 + d],
        y_BA=y_ba,
        failures=failures,
        dropped_rows=tuple(int(i) for i in np.nonzero(~keep)[0]),
    )


def _centred(ev: EvaluatedDesign):
    if ev.n < 2:
        raise EstimatorError("at least two retained base rows are required")
    pooled = np.concatenate([ev.y_A, ev.y_B])
    mean = pooled.mean()
    var = pooled.var()
    if not var > 1e-300 or np.ptp(pooled) <= 1e-12 * max(abs(mean), 1e-300):
        raise EstimatorError("constant output")
    shift = lambda a: None if a is None else a - mean  # noqa: E731
    return shift(ev.y_A), shift(ev.y_B), shift(ev.y_AB), shift(ev.y_BA), var


def estimate_first_order(ev: EvaluatedDesign) -> np.ndarray:
    ya, yb, yab, _, var = _centred(ev)
    return np.mean(yb * (yab - ya), axis=1) / var


def estimate_total(ev: EvaluatedDesign) -> np.ndarray:
    ya, _, yab, _, var = _centred(ev)
    return 0.5 * np.mean((ya - yab) ** 2, axis=1) / var


def estimate_second_order(ev: EvaluatedDesign) -> np.ndarray:
    if ev.y_BA is None:
        raise EstimatorError("second-order design required")
    ya, yb, yab, yba, var = _centred(ev)
    s1 = np.mean(yb * (yab - ya), axis=1) / var
    d = ev.dimension
    s2 = np.full((d, d), np.nan)
    base = np.mean(ya * yb)
    for i in range(d):
        for j in range(i + 1, d):
            closed = (np.mean(yba[i] * yab[j]) - base) / var
            s2[i, j] = s2[j, i] = closed - s1[i] - s1[j]
    return s2


@dataclass
class SensitivityResult:
    names: list[str]
    s1: np.ndarray
    st: np.ndarray
    s1_raw: np.ndarray
    st_raw: np.ndarray
    output_mean: float
    output_variance: float
    base_n: int
    method: Method = "qmc"
    s2: np.ndarray | None = None
    s2_raw: np.ndarray | None = None
    confidence: dict | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_rows(self) -> list[dict]:
        return [
            {"parameter": name, "s1": float(self.s1[i]), "st": float(self.st[i]),
             "s1_raw": float(self.s1_raw[i]), "st_raw": float(self.st_raw[i])}
            for i, name in enumerate(self.names)
        ]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, ["parameter", "s1", "st", "s1_raw", "st_raw"])
            writer.writeheader()
            writer.writerows(self.to_rows())

    def to_dict(self) -> dict:
        def mat(m):
            return None if m is None else [[None if np.isnan(v) else float(v) for v in r] for r in m]

        return {
            "method": self.method,
            "base_n": self.base_n,
            "output_mean": self.output_mean,
            "output_variance": self.output_variance,
            "indices": self.to_rows(),
            "s2": mat(self.s2),
            "s2_raw": mat(self.s2_raw),
            "confidence": self.confidence,
            "diagnostics": self.diagnostics,
        }

    def to_json(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _clip(a):
    return None if a is None else np.clip(a, CLIP_LOW, CLIP_HIGH)


def _subset(ev: EvaluatedDesign, rows: np.ndarray) -> EvaluatedDesign:
    return EvaluatedDesign(
        design=ev.design,
        y_A=ev.y_A[rows],
        y_B=ev.y_B[rows],
        y_AB=ev.y_AB[:, rows],
        y_BA=None if ev.y_BA is None else ev.y_BA[:, rows],
    )


def bootstrap_confidence(ev: EvaluatedDesign, replicates: int = 100, seed: int = 0,
                         level: float = 0.95) -> dict:
    """Percentile bootstrap intervals over resampled base rows."""
    rng = np.random.default_rng(seed)
    s1s, sts = [], []
    for _ in range(replicates):
        rows = rng.integers(0, ev.n, ev.n)
        sub = _subset(ev, rows)
        try:
            s1s.append(estimate_first_order(sub))
            sts.append(estimate_total(sub))
        except EstimatorError:
            continue
    lo, hi = 50 * (1 - level), 50 * (1 + level)
    s1s, sts = np.array(s1s), np.array(sts)
    return {
        "level": level,
        "replicates": len(s1s),
        "s1": np.percentile(s1s, [lo, hi], axis=0).T.tolist(),
        "st": np.percentile(sts, [lo, hi], axis=0).T.tolist(),
    }


def analyze(ev: EvaluatedDesign, method: Method = "qmc", bootstrap: int = 0,
            bootstrap_seed: int = 0) -> SensitivityResult:
    """Compute all available indices for an evaluated design."""
    s1 = estimate_first_order(ev)
    st = estimate_total(ev)
    s2 = estimate_second_order(ev) if ev.y_BA is not None else None
    pooled = np.concatenate([ev.y_A, ev.y_B])
    diagnostics = {
        "retained_rows": ev.n,
        "dropped_rows": list(ev.dropped_rows),
        "failures": [list(f) for f in ev.failures],
        "sum_s1": float(np.sum(s1)),
        "sampler": ev.design.sampler,
        "clipped": bool(np.any((s1 < CLIP_LOW) | (s1 > CLIP_HIGH) | (st < CLIP_LOW) | (st > CLIP_HIGH))),
    }
    ci = bootstrap_confidence(ev, bootstrap, bootstrap_seed) if bootstrap else None
    return SensitivityResult(
        names=list(ev.design.names),
        s1=_clip(s1),
        st=_clip(st),
        s1_raw=s1,
        st_raw=st,
        output_mean=float(pooled.mean()),
        output_variance=float(pooled.var()),
        base_n=ev.n,
        method=method,
        s2=_clip(s2),
        s2_raw=s2,
        confidence=ci,
        diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class Ranking:
    order: list[str]  # all parameters, st descending
    critical: list[str]
    threshold: float
    low_confidence: bool = False


def rank_parameters(res: SensitivityResult, threshold: float = 0.05) -> Ranking:
    """Sort by total index; ties keep parameter order (stable sort)."""
    st = np.asarray(res.st_raw, dtype=float)
    order = sorted(range(len(res.names)), key=lambda i: -st[i])
    critical = [res.names[i] for i in order if st[i] >= threshold]
    if not critical:
        warnings.warn(f"no parameter reaches total index threshold {threshold}",
                      stacklevel=2)
    return Ranking(
        order=[res.names[i] for i in order],
        critical=critical,
        threshold=threshold,
        low_confidence=bool(res.diagnostics.get("low_confidence", False)),
    )
