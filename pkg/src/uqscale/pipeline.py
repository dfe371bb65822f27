"""Pipeline stages behind the command line: sensitivity, L/D study, scaled-experiment design, report.

Every stage writes its files into one output directory and appends one
JSON line to ``run_records.jsonl`` there. All numerical outputs are
byte-deterministic for a fixed config; wall-clock values live only in the
run records, ``ld_runtime.json`` and the ``runtime`` column of
``ld_rows.csv``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import ConfigError, ModelError
from .models.baseline import baseline_version
from .models.study import default_study_space, ld_variability_study
from .params import flatten_for_evaluation, lhs_sample, saltelli_design
from .scaling import DesignVector, ScalingProblem, optimize, optimum_report, write_optimum_json
from .sobol import analyze, evaluate_design, rank_parameters
from .surrogate import fit_rse_for_space, sobol_via_surrogate, subsample, term_list

RECORDS = "run_records.jsonl"
TIMING_FILES = ("ld_runtime.json",)
# seed offsets for the independent random streams of one run
SUBSAMPLE_OFFSET = 101
SURROGATE_DESIGN_OFFSET = 202
BOOTSTRAP_OFFSET = 303


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass
class RunRecord:
    command: str
    config_hash: str
    seed: int
    threads: int
    timings: dict = field(default_factory=dict)
    evaluations: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    manifest: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "tool_version": tool_version(),
            "baseline_version": baseline_version(),
            "config_hash": self.config_hash,
            "seed": self.seed,
            "threads": self.threads,
            "timings": self.timings,
            "evaluations": self.evaluations,
            "failures": self.failures,
            "manifest": self.manifest,
            **self.extra,
        }

    def add_files(self, out: Path, names) -> None:
        for name in names:
            self.manifest.append({"file": name, "sha256": _sha256(out / name)})

    def append_to(self, out: Path) -> None:
        with open(out / RECORDS, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(self.to_dict(), sort_keys=True) + "\n")


def read_records(out: Path) -> list[dict]:
    path = Path(out) / RECORDS
    if not path.is_file():
        return []
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _new_record(command: str, cfg: PipelineConfig) -> RunRecord:
    return RunRecord(command, cfg.digest(), cfg.seed, cfg.threads)


# sensitivity -----------------------------------------------------------------

def run_sensitivity(cfg: PipelineConfig, out: Path) -> RunRecord:
    rec = _new_record("sensitivity", cfg)
    space = cfg.space()
    model = cfg.model_spec()
    s = cfg.sampler

    t0 = time.perf_counter()
    design = saltelli_design(space, s.base_n, cfg.seed, s.second_order, s.kind)
    x = flatten_for_evaluation(design)
    rec.timings["sampling_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    y = model.evaluate(x.values, cfg.threads)
    rec.timings["evaluation_s"] = time.perf_counter() - t0
    rec.evaluations["model"] = int(y.size)
    rec.failures["model"] = int(np.sum(~np.isfinite(y)))

    t0 = time.perf_counter()
    qmc = analyze(evaluate_design(design, y, s.failure_policy), "qmc",
                  s.bootstrap, cfg.seed + BOOTSTRAP_OFFSET)
    ranking = rank_parameters(qmc)
    rec.timings["estimation_s"] = time.perf_counter() - t0

    qmc.to_csv(out / "indices_qmc.csv")
    qmc.to_json(out / "indices_qmc.json")
    results = [(qmc, 1.0, None)]

    t0 = time.perf_counter()
    ok = np.isfinite(y)
    train_x = type(x)(x.values[ok], x.names, x.seed, x.kind)
    train_y = y[ok]
    n_terms = len(term_list(space.dimension, cfg.surrogate.include_interactions))
    base_n = cfg.surrogate.base_n or s.base_n
    for fraction in cfg.surrogate.fractions:
        xs, ys = subsample(train_x, train_y, float(fraction), cfg.seed + SUBSAMPLE_OFFSET,
                           min_rows=n_terms)
        rse = fit_rse_for_space(xs, ys, space, cfg.surrogate.include_interactions)
        method = "surrogate_full" if fraction == 1.0 else "surrogate_fraction"
        res = sobol_via_surrogate(rse, space, base_n, cfg.seed + SURROGATE_DESIGN_OFFSET, method)
        results.append((res, float(fraction), rse))
        rec.evaluations[f"surrogate_{fraction:g}"] = int(base_n * (space.dimension + 2))
    rec.timings["surrogate_s"] = time.perf_counter() - t0

    with open(out / "sensitivity_comparison.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "fraction", "n_train", "r_squared", "parameter", "s1", "st", "rank"])
        for res, fraction, rse in results:
            order = rank_parameters(res).order
            n_train = "" if rse is None else rse.fit_stats["n_train"]
            r2 = "" if rse is None else repr(float(rse.fit_stats["r_squared"]))
            for row in res.to_rows():
                w.writerow([res.method, repr(fraction), n_train, r2, row["parameter"],
                            repr(row["s1"]), repr(row["st"]), order.index(row["parameter"]) + 1])

    summary = {
        "parameters": space.names,
        "model": cfg.model.kind,
        "base_n": s.base_n,
        "sampler": s.kind,
        "total_evaluations": design.total_evaluations,
        "ranking": {"order": ranking.order, "critical": ranking.critical,
                    "threshold": ranking.threshold},
        "methods": [
            {"method": res.method, "fraction": fraction,
             "r_squared": None if rse is None else float(rse.fit_stats["r_squared"]),
             "order": rank_parameters(res).order,
             "st": [float(v) for v in res.st]}
            for res, fraction, rse in results
        ],
    }
    _write_json(out / "sensitivity_summary.json", summary)
    rec.add_files(out, ["indices_qmc.csv", "indices_qmc.json", "sensitivity_comparison.csv",
                        "sensitivity_summary.json"])
    return rec


# L/D study -------------------------------------------------------------------

def run_ld_study(cfg: PipelineConfig, out: Path) -> RunRecord:
    rec = _new_record("ld-study", cfg)
    space = cfg.study_space() or default_study_space()
    t0 = time.perf_counter()
    samples = lhs_sample(space, cfg.study.rows, cfg.seed)
    structures = [tuple(s) for s in cfg.study.structures]
    study = ld_variability_study(samples, structures, threads=cfg.threads)
    rec.timings["evaluation_s"] = time.perf_counter() - t0

    for s in study.summaries:
        if s.n_failed == s.n_rows:
            raise ModelError(f"every row failed for {s.label}")
        rec.evaluations[s.label] = s.n_rows
        rec.failures[s.label] = s.n_failed

    study.write_rows_csv(out / "ld_rows.csv")
    study.write_histogram_csv(out / "ld_histogram.csv", cfg.study.histogram_bins)
    study.write_summary_json(out / "ld_summary.json", include_runtime=False)
    _write_json(out / "ld_runtime.json",
                {s.label: {"mean_runtime_s": s.mean_runtime} for s in study.summaries})
    rec.add_files(out, ["ld_rows.csv", "ld_histogram.csv", "ld_summary.json", "ld_runtime.json"])
    return rec


# scaled-experiment design ----------------------------------------------------

def scaling_problem(cfg: PipelineConfig) -> ScalingProblem:
    w = {"ld": 1.0, "re": 30.0, "ma": 3000.0, **cfg.scaling.weights}
    return ScalingProblem.default(mesh=cfg.scaling.mesh, bounds=cfg.scaling_bounds(),
                                  w_ld=float(w["ld"]), w_re=float(w["re"]), w_ma=float(w["ma"]))


def run_scale_opt(cfg: PipelineConfig, out: Path) -> RunRecord:
    rec = _new_record("scale-opt", cfg)
    prob = scaling_problem(cfg)
    t0 = time.perf_counter()
    x, cost, trace = optimize(prob, DesignVector.from_array(cfg.scaling.x0), cfg.scaling.max_iter)
    rec.timings["optimization_s"] = time.perf_counter() - t0
    payload, sim = optimum_report(x, cost, trace, prob)

    write_optimum_json(out / "optimum.json", payload)
    trace.to_csv(out / "trace.csv")
    (out / "similitude.txt").write_text(sim.to_text() + "\n", encoding="utf-8")
    rec.evaluations["model"] = trace.evaluations
    rec.failures["penalized_iterates"] = sum(r.cost.penalty_applied for r in trace.iterates)
    rec.extra["termination"] = trace.termination
    rec.add_files(out, ["optimum.json", "trace.csv", "similitude.txt"])
    return rec


# report ------------------------------------------------------------------------

STAGES = {
    "sensitivity": "sensitivity_summary.json",
    "ld-study": "ld_summary.json",
    "scale-opt": "optimum.json",
}


def _fmt(v, spec=".4g") -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return "n/a"
    return format(v, spec)


def _sensitivity_section(data: dict) -> list[str]:
    lines = ["## Critical uncertainties", "",
             f"Model `{data['model']}`, {data['sampler']} Saltelli design, base_n = "
             f"{data['base_n']} ({data['total_evaluations']} evaluations).", "",
             "| method | fraction | r^2 | " + " | ".join(f"#{i + 1}" for i in range(3)) + " |",
             "|---|---|---|---|---|---|"]
    for m in data["methods"]:
        top = (m["order"] + ["", "", ""])[:3]
        lines.append(f"| {m['method']} | {m['fraction']:g} | {_fmt(m['r_squared'], '.6f')} | "
                     + " | ".join(top) + " |")
    crit = data["ranking"]["critical"]
    lines += ["", f"Critical set (total index >= {data['ranking']['threshold']:g}): "
              + (", ".join(crit) if crit else "none"), ""]
    return lines


def _ld_section(data: dict) -> list[str]:
    lines = ["## L/D variability by model structure", "",
             "| run type | mean L/D | std L/D | rows | failed | unconverged |",
             "|---|---|---|---|---|---|"]
    for s in data["summary"]:
        lines.append(f"| {s['run_type']} | {_fmt(s['mean_l_over_d'])} | "
                     f"{_fmt(s['std_l_over_d'])} | {s['rows']} | {s['failed']} | "
                     f"{s['unconverged']} |")
    return lines + [""]


def _scaling_section(data: dict) -> list[str]:
    d, c = data["design"], data["cost"]
    lines = ["## Scaled-experiment conditions", "",
             f"Termination: {data['termination']} after {data['iterations']} iterations.", "",
             "| variable | value |", "|---|---|",
             f"| geometric scale n | {d['n']:.6g} |",
             f"| angle of attack (deg) | {d['alpha']:.6g} |",
             f"| Mach | {d['mach']:.6g} |",
             f"| altitude (m) | {d['altitude']:.6g} |",
             f"| Young's modulus (Pa) | {d['young_modulus']:.6g} |",
             "",
             f"Active bounds: {', '.join(data['active_constraints']) or 'none'}.",
             f"Cost {c['total']:.6g} (L/D {c['ld_term']:.3g}, Re {c['re_term']:.3g}, "
             f"Ma {c['ma_term']:.3g}).", "",
             "| group | full | sub | ratio | outside band |", "|---|---|---|---|---|"]
    for g in data["similitude"]["groups"]:
        lines.append(f"| {g['name']} | {g['full']:.6g} | {g['sub']:.6g} | {g['ratio']:.4f} | "
                     f"{'yes' if g['flagged'] else ''} |")
    lines += ["", f"Mass scale factor n_mass = {data['similitude']['n_mass']:.6g}.", ""]
    return lines


def build_report(out: Path) -> tuple[str, list[str]]:
    """Markdown report from the latest record of each stage; returns (text, missing)."""
    records = read_records(out)
    if not records:
        raise ConfigError(f"no run records in {out}")
    latest = {}
    for r in records:
        latest[r["command"]] = r
    sections = {"sensitivity": _sensitivity_section, "ld-study": _ld_section,
                "scale-opt": _scaling_section}
    lines = ["# Uncertainty and scaling study report", ""]
    missing = []
    for stage, builder in sections.items():
        path = out / STAGES[stage]
        if stage not in latest or not path.is_file():
            missing.append(STAGES[stage])
            continue
        rec = latest[stage]
        lines += builder(json.loads(path.read_text(encoding="utf-8")))
        lines += [f"_config {rec['config_hash'][:12]}, seed {rec['seed']}, "
                  f"baseline v{rec['baseline_version']}_", ""]
    if missing:
        lines += ["## Missing artifacts", ""] + [f"- {m}" for m in missing] + [""]
    return "\n".join(lines), missing


def run_report(out: Path, cfg: PipelineConfig | None = None) -> tuple[RunRecord, list[str]]:
    text, missing = build_report(out)
    (out / "report.md").write_text(text, encoding="utf-8")
    rec = RunRecord("report", cfg.digest() if cfg else "", cfg.seed if cfg else 0,
                    cfg.threads if cfg else 1)
    rec.extra["missing"] = missing
    rec.add_files(out, ["report.md"])
    return rec, missing
