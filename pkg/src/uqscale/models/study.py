"""Shared-sample L/D variability study across model structures."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..errors import ModelError
from ..params import ParameterDef, ParameterSpace, SampleMatrix
from .aerostruct import AeroStructResult, CruiseCondition, WingModelSpec, evaluate_aerostruct
from .baseline import MODEL_STRUCTURES, baseline, wing_spec

STUDY_INPUTS = ("alpha", "mach", "spar_shift", "young_modulus")


def default_study_space() -> ParameterSpace:
    b = baseline()
    e_f = float(b["material"]["young_modulus"])
    alpha = b["cruise"]["alpha_deg"]
    return ParameterSpace([
        ParameterDef("alpha", alpha - 1.0, alpha + 1.0, alpha),
        ParameterDef("mach", 0.82, 0.86, b["cruise"]["mach"]),
        ParameterDef("spar_shift", -0.05, 0.05, 0.0),
        ParameterDef("young_modulus", 0.9 * e_f, 1.1 * e_f, e_f),
    ])


def apply_inputs(spec: WingModelSpec, values: dict,
                 altitude: float) -> tuple[WingModelSpec, CruiseCondition]:
    """Build a (spec, condition) pair from named study inputs; missing ones take baseline."""
    unknown = set(values) - set(STUDY_INPUTS) - {"altitude"}
    if unknown:
        raise ModelError(f"unknown aerostructural inputs: {sorted(unknown)}")
    cruise = baseline()["cruise"]
    if "spar_shift" in values:
        spec = replace(spec, structure=spec.structure.shifted(values["spar_shift"]))
    if "young_modulus" in values:
        spec = replace(spec, young_modulus=values["young_modulus"])
    cond = CruiseCondition(
        mach=values.get("mach", cruise["mach"]),
        alpha=values.get("alpha", cruise["alpha_deg"]),
        altitude=values.get("altitude", altitude),
    )
    return spec, cond


def ordered_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a thread pool; order is preserved."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class StructureSummary:
    structure: str
    mesh: str
    n_rows: int
    n_failed: int
    n_unconverged: int
    mean_l_over_d: float
    std_l_over_d: float
    mean_runtime: float

    @property
    def label(self) -> str:
        return f"{self.structure}-{self.mesh}"


@dataclass
class StudyResult:
    names: list[str]
    rows: np.ndarray
    results: dict  # label -> list[AeroStructResult | None]
    summaries: list[StructureSummary]

    def l_over_d(self, label: str) -> np.ndarray:
        return np.array([np.nan if r is None else r.l_over_d for r in self.results[label]])

    def histograms(self, bins: int = 20) -> dict:
        """Common-edge histograms so the five densities overlay directly."""
        allv = np.concatenate([self.l_over_d(k) for k in self.results])
        allv = allv[np.isfinite(allv)]
        if allv.size == 0:
            return {"edges": [], "counts": {}}
        lo, hi = float(allv.min()), float(allv.max())
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, bins + 1)
        counts = {}
        for label in self.results:
            v = self.l_over_d(label)
            counts[label] = np.histogram(v[np.isfinite(v)], edges)[0].tolist()
        return {"edges": edges.tolist(), "counts": counts}

    def write_rows_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["row", "structure", "cl", "cd", "l_over_d", "runtime"])
            for label, res in self.results.items():
                for i, r in enumerate(res):
                    if r is None:
                        w.writerow([i, label, "nan", "nan", "nan", "nan"])
                    else:
                        w.writerow([i, label, repr(r.cl), repr(r.cd), repr(r.l_over_d),
                                    f"{r.runtime:.6f}"])

    def write_histogram_csv(self, path: str | Path, bins: int = 20) -> None:
        h = self.histograms(bins)
        labels = list(h["counts"])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_low", "bin_high", *labels])
            for b in range(len(h["edges"]) - 1):
                w.writerow([repr(h["edges"][b]), repr(h["edges"][b + 1]),
                            *[h["counts"][k][b] for k in labels]])

    def summary_table(self) -> list[dict]:
        return [
            {"run_type": s.label, "std_l_over_d": s.std_l_over_d,
             "mean_l_over_d": s.mean_l_over_d, "mean_runtime_s": s.mean_runtime,
             "rows": s.n_rows, "failed": s.n_failed, "unconverged": s.n_unconverged}
            for s in self.summaries
        ]

    def write_summary_json(self, path: str | Path, include_runtime: bool = True) -> None:
        table = self.summary_table()
        if not include_runtime:
            for t in table:
                t.pop("mean_runtime_s")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"inputs": self.names, "summary": table}, fh, indent=2)
            fh.write("\n")


def ld_variability_study(samples: SampleMatrix,
                         structures: Sequence[tuple[str, str]] = MODEL_STRUCTURES,
                         altitude: float | None = None, threads: int = 1,
                         **spec_overrides) -> StudyResult:
    """Evaluate every structure on the identical rows of ``samples``."""
    if altitude is None:
        altitude = baseline()["cruise"]["altitude"]
    names = list(samples.names)
    results: dict[str, list[AeroStructResult | None]] = {}
    summaries = []
    for structure, mesh in structures:
        base = wing_spec(structure, mesh, **spec_overrides)

        def run(row, base=base):
            spec, cond = apply_inputs(base, dict(zip(names, map(float, row))), altitude)
            try:
                return evaluate_aerostruct(spec, cond)
            except ModelError:
                return None

        res = ordered_map(run, list(samples.values), threads)
        label = f"{structure}-{mesh}"
        results[label] = res
        ok = [r for r in res if r is not None]
        ld = np.array([r.l_over_d for r in ok])
        summaries.append(StructureSummary(
            structure=structure,
            mesh=mesh,
            n_rows=len(res),
            n_failed=len(res) - len(ok),
            n_unconverged=sum(not r.converged for r in ok),
            mean_l_over_d=float(ld.mean()) if ld.size else float("nan"),
            std_l_over_d=float(ld.std()) if ld.size else float("nan"),
            mean_runtime=float(np.mean([r.runtime for r in ok])) if ok else float("nan"),
        ))
    return StudyResult(names, np.array(samples.values), results, summaries)
