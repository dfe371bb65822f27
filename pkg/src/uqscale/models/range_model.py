"""Lumped Breguet range model driven by component scaling factors.

Range R = (V / c) * (L/D) * ln(W0 / W1) with

* c = c_base * FACT,
* C_D = FCDO * C_D0 + FCDI * C_L^2 / (pi * e_base * E * AR), C_L at the
  mid-cruise weight,
* empty weight = WENG * W_engines + OWFACT * W_other + FRFU * W_centerbody,
* usable fuel proportional to the wingbox chordwise extent: the mean, over
  the side-of-body (RSPSOB) and centreline (RSPCHD) stations, of
  (rear spar - front spar) relative to its nominal value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from ..errors import ModelError
from .atmosphere import G0, isa_atmosphere
from .baseline import baseline

SCALE_FACTORS = ("weng", "owfact", "fact", "fcdi", "fcdo", "frfu", "e_span")
SPAR_INPUTS = ("rspsob", "rspchd")
INPUT_NAMES = SCALE_FACTORS + SPAR_INPUTS


def _range_constants() -> dict:
    return baseline()["range_model"]


@dataclass(frozen=True)
class RangeModelInputs:
    weng: float = 1.0
    owfact: float = 1.0
    fact: float = 1.0
    fcdi: float = 1.0
    fcdo: float = 1.0
    frfu: float = 1.0
    e_span: float = 1.0
    rspsob: float = 70.0  # percent chord
    rspchd: float = 65.0
    mach: float = 0.84
    altitude: float = 10000.0
    constants: dict = field(default_factory=_range_constants, compare=False)

    def validate(self) -> None:
        for name in SCALE_FACTORS:
            v = getattr(self, name)
            if not 0.9 <= v <= 1.1:
                raise ModelError(f"{name}={v} outside [0.9, 1.1]")
        for name in SPAR_INPUTS:
            v = getattr(self, name)
            if not 0.0 < v < 100.0:
                raise ModelError(f"{name}={v} percent chord outside (0, 100)")

    @classmethod
    def from_mapping(cls, values: dict) -> "RangeModelInputs":
        known = {f.name for f in fields(cls)} - {"constants"}
        unknown = set(values) - known
        if unknown:
            raise ModelError(f"unknown range-model inputs: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in values.items()})


def range_breakdown(inp: RangeModelInputs) -> dict:
    inp.validate()
    k = inp.constants
    atm = isa_atmosphere(inp.altitude)
    velocity = inp.mach * atm.speed_of_sound
    q = 0.5 * atm.density * velocity**2

    extent_sob = (inp.rspsob - k["front_spar_sob"]) / (k["rspsob_nominal"] - k["front_spar_sob"])
    extent_chd = (inp.rspchd - k["front_spar_chd"]) / (k["rspchd_nominal"] - k["front_spar_chd"])
    fuel = k["fuel_nominal"] * 0.5 * (extent_sob + extent_chd)
    empty = (inp.weng * k["engine_weight"] + inp.owfact * k["other_empty_weight"]
             + inp.frfu * k["centerbody_weight"])
    w0 = empty + k["payload"] + fuel
    w1 = empty + k["payload"] + k["reserve_fraction"] * fuel
    if not w1 < w0:
        raise ModelError("negative fuel fraction")

    cl = 0.5 * (w0 + w1) * G0 / (q * k["reference_area"])
    cd0 = inp.fcdo * k["cd0"]
    cdi = inp.fcdi * cl**2 / (math.pi * k["oswald"] * inp.e_span * k["aspect_ratio"])
    l_over_d = cl / (cd0 + cdi)
    tsfc = k["tsfc"] * inp.fact
    rng = velocity / tsfc * l_over_d * math.log(w0 / w1)
    return {
        "range": rng,
        "velocity": velocity,
        "cl": cl,
        "cd": cd0 + cdi,
        "l_over_d": l_over_d,
        "w0": w0,
        "w1": w1,
        "fuel": fuel,
        "tsfc": tsfc,
    }


def lumped_range(inp: RangeModelInputs) -> float:
    """Cruise range in meters."""
    return range_breakdown(inp)["range"]
