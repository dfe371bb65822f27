"""Loader for the versioned stand-in vehicle constants."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

import yaml

from .aerostruct import AeroSettings, CruiseCondition, TubularSpar, Wingbox, WingModelSpec

STRUCTURE_CHOICES = ("tubular_spar", "wingbox")
MODEL_STRUCTURES = (
    ("tubular_spar", "coarse"),
    ("tubular_spar", "medium"),
    ("wingbox", "coarse"),
    ("wingbox", "medium"),
    ("wingbox", "fine"),
)


@lru_cache(maxsize=None)
def _load() -> dict:
    text = resources.files("uqscale.data").joinpath("baseline.yaml").read_text("utf-8")
    return yaml.safe_load(text)


def baseline() -> dict:
    """A fresh copy of the baseline constants."""
    import copy

    return copy.deepcopy(_load())


def baseline_version() -> int:
    return int(_load()["version"])


def cruise_condition() -> CruiseCondition:
    c = _load()["cruise"]
    return CruiseCondition(mach=c["mach"], alpha=c["alpha_deg"], altitude=c["altitude"])


def wing_spec(structure: str = "wingbox", mesh: str = "medium", **overrides) -> WingModelSpec:
    data = _load()
    if structure == "wingbox":
        st = Wingbox(**data["structures"]["wingbox"])
    elif structure == "tubular_spar":
        st = TubularSpar(**data["structures"]["tubular_spar"])
    else:
        raise ValueError(f"unknown structure {structure!r}")
    w = data["equivalent_wing"]
    m = data["material"]
    spec = WingModelSpec(
        span=w["span"],
        root_chord=w["root_chord"],
        tip_chord=w["tip_chord"],
        sweep_deg=w["sweep_deg"],
        thickness_to_chord=w["thickness_to_chord"],
        twist_root_deg=w["twist_root_deg"],
        twist_tip_deg=w["twist_tip_deg"],
        structure=st,
        young_modulus=float(m["young_modulus"]),
        poisson_ratio=m["poisson_ratio"],
        material_density=m["density"],
        fuel_density=data["fuel"]["density"],
        fuel_fill=data["fuel"]["fill"],
        mesh=mesh,
        aero=AeroSettings(**data["aero"]),
    )
    if overrides:
        from dataclasses import replace

        spec = replace(spec, **overrides)
    return spec
