"""Pipeline configuration: one YAML file, strict keys, validated before any stage runs.

Top-level groups (all optional except ``parameters`` for the sensitivity
stage): ``seed``, ``threads``, ``output_dir``, ``parameters``, ``model``,
``sampler``, ``surrogate``, ``study``, ``scaling``. See README for the
full grammar.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError
from .models.aerostruct import MESH_ELEMENTS
from .models.baseline import MODEL_STRUCTURES, STRUCTURE_CHOICES, baseline
from .models.registry import ModelSpec
from .params import ParameterSpace
from .scaling import DEFAULT_X0, FIELDS, default_bounds

TOP_KEYS = {"seed", "threads", "output_dir", "parameters", "model", "sampler",
            "surrogate", "study", "scaling"}
MODEL_KEYS = {"kind", "structure", "mesh", "output", "coefficients", "value"}
SAMPLER_KEYS = {"base_n", "second_order", "kind", "bootstrap", "failure_policy"}
SURROGATE_KEYS = {"fractions", "include_interactions", "base_n"}
STUDY_KEYS = {"structures", "rows", "parameters", "histogram_bins"}
SCALING_KEYS = {"bounds", "weights", "x0", "max_iter", "mesh"}
WEIGHT_KEYS = {"ld", "re", "ma"}


def _strict(section: dict | None, allowed: set, where: str) -> dict:
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {unknown}")
    return section


def _int(v, where: str, minimum: int = 0) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"{where} must be an integer >= {minimum}, got {v!r}")
    return v


@dataclass
class ModelConfig:
    kind: str = "lumped_range"
    structure: str = "wingbox"
    mesh: str = "medium"
    output: str = "l_over_d"
    coefficients: list | None = None
    value: float = 1.0


@dataclass
class SamplerConfig:
    base_n: int = 256
    second_order: bool = False
    kind: str = "lhs"
    bootstrap: int = 0
    failure_policy: str = "drop-pairs"


@dataclass
class SurrogateConfig:
    fractions: list = field(default_factory=lambda: [1.0, 0.1])
    include_interactions: bool = True
    base_n: int | None = None  # defaults to the sampler base_n


@dataclass
class StudyConfig:
    structures: list = field(default_factory=lambda: [list(s) for s in MODEL_STRUCTURES])
    rows: int = 200
    parameters: list | None = None  # defaults to the built-in four-input space
    histogram_bins: int = 20


@dataclass
class ScalingConfig:
    bounds: dict = field(default_factory=dict)
    weights: dict = field(default_factory=lambda: {"ld": 1.0, "re": 30.0, "ma": 3000.0})
    x0: list = field(default_factory=lambda: list(DEFAULT_X0))
    max_iter: int = 200
    mesh: str = "medium"


@dataclass
class PipelineConfig:
    seed: int = 0
    threads: int = 1
    output_dir: str = "out"
    parameters: list = field(default_factory=list)
    model: ModelConfig = field(default_factory=ModelConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    study: StudyConfig = field(default_factory=StudyConfig)
    scaling: ScalingConfig = field(default_factory=ScalingConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        # thread count and output location do not change any numerical output
        data = {k: v for k, v in self.to_dict().items() if k not in ("threads", "output_dir")}
        text = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def space(self) -> ParameterSpace:
        if not self.parameters:
            raise ConfigError("no parameters defined")
        return ParameterSpace.from_records(self.parameters)

    def study_space(self) -> ParameterSpace | None:
        if self.study.parameters is None:
            return None
        return ParameterSpace.from_records(self.study.parameters)

    def model_spec(self) -> ModelSpec:
        m = self.model
        return ModelSpec(m.kind, self.space().names, m.structure, m.mesh, m.output,
                         m.coefficients, m.value)

    def scaling_bounds(self) -> dict:
        b = default_bounds(float(baseline()["material"]["young_modulus"]))
        b.update({k: tuple(v) for k, v in self.scaling.bounds.items()})
        return b

    def validate(self) -> None:
        _int(self.seed, "seed")
        _int(self.threads, "threads", 1)
        if self.parameters:
            self.model_spec()  # checks names against the model's inputs
        s = self.sampler
        _int(s.base_n, "sampler.base_n", 2)
        _int(s.bootstrap, "sampler.bootstrap")
        if s.kind not in ("lhs", "sobol"):
            raise ConfigError(f"sampler.kind must be lhs or sobol, got {s.kind!r}")
        if s.failure_policy not in ("drop-pairs", "error"):
            raise ConfigError(f"unknown failure policy {s.failure_policy!r}")
        if not isinstance(s.second_order, bool):
            raise ConfigError("sampler.second_order must be true or false")
        sg = self.surrogate
        if not isinstance(sg.fractions, list):
            raise ConfigError("surrogate.fractions must be a list")
        for f in sg.fractions:
            if isinstance(f, bool) or not isinstance(f, (int, float)) or not 0.0 < f <= 1.0:
                raise ConfigError(f"surrogate fraction {f!r} outside (0, 1]")
        if sg.base_n is not None:
            _int(sg.base_n, "surrogate.base_n", 2)
        st = self.study
        _int(st.rows, "study.rows", 1)
        _int(st.histogram_bins, "study.histogram_bins", 1)
        if not isinstance(st.structures, list) or not st.structures:
            raise ConfigError("study.structures must be a non-empty list")
        for item in st.structures:
            if not (isinstance(item, (list, tuple)) and len(item) == 2):
                raise ConfigError(f"study structure {item!r} must be [structure, mesh]")
            if item[0] not in STRUCTURE_CHOICES or item[1] not in MESH_ELEMENTS:
                raise ConfigError(f"unknown study structure {item!r}")
        if st.parameters is not None:
            self.study_space()
            ModelSpec("aerostruct", self.study_space().names)
        sc = self.scaling
        _strict(sc.bounds, set(FIELDS), "scaling.bounds")
        for k, v in sc.bounds.items():
            if not (isinstance(v, (list, tuple)) and len(v) == 2):
                raise ConfigError(f"scaling.bounds.{k} must be [lower, upper]")
            lo, hi = float(v[0]), float(v[1])
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigError(f"scaling.bounds.{k} must be finite")
            if lo > hi:
                raise ConfigError(f"scaling.bounds.{k}: lower {lo} exceeds upper {hi}")
        _strict(sc.weights, WEIGHT_KEYS, "scaling.weights")
        for k, v in sc.weights.items():
            if not float(v) > 0:
                raise ConfigError(f"scaling weight {k} must be positive")
        if len(sc.x0) != len(FIELDS):
            raise ConfigError(f"scaling.x0 needs {len(FIELDS)} values {FIELDS}")
        _int(sc.max_iter, "scaling.max_iter", 1)
        if sc.mesh not in MESH_ELEMENTS:
            raise ConfigError(f"unknown scaling mesh {sc.mesh!r}")
        bounds = self.scaling_bounds()
        if bounds["n"][0] <= 0 or bounds["young_modulus"][0] <= 0:
            raise ConfigError("scaling bounds for n and young_modulus must be positive")


def config_from_dict(data: dict) -> PipelineConfig:
    data = copy.deepcopy(_strict(data, TOP_KEYS, "config"))
    cfg = PipelineConfig()
    for key in ("seed", "threads", "output_dir"):
        if key in data:
            setattr(cfg, key, data[key])
    if "parameters" in data:
        params = data["parameters"]
        if not isinstance(params, list):
            raise ConfigError("parameters must be a list of mappings")
        cfg.parameters = params
    sections = {
        "model": (ModelConfig, MODEL_KEYS),
        "sampler": (SamplerConfig, SAMPLER_KEYS),
        "surrogate": (SurrogateConfig, SURROGATE_KEYS),
        "study": (StudyConfig, STUDY_KEYS),
        "scaling": (ScalingConfig, SCALING_KEYS),
    }
    for key, (cls, allowed) in sections.items():
        values = _strict(data.get(key), allowed, key)
        setattr(cfg, key, cls(**{**asdict(cls()), **values}))
    cfg.scaling.x0 = [float(v) for v in cfg.scaling.x0]
    cfg.validate()
    return cfg


def load_config(path: str | Path, seed: int | None = None,
                threads: int | None = None) -> PipelineConfig:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    data = data or {}
    if seed is not None:
        data = {**data, "seed": seed}
    if threads is not None:
        data = {**data, "threads": threads}
    return config_from_dict(data)


def default_config_text() -> str:
    return resources.files("uqscale.data").joinpath("default_config.yaml").read_text("utf-8")
