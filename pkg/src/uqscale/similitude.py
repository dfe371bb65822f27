"""Similarity groups relating a full-scale and a sub-scale flight state.

Reference length is the mean aerodynamic chord throughout, and stiffnesses
are taken at the wing root section.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import ModelError

GROUPS = ("Re", "Ma", "S_b", "S_t")
REPORT_BAND = (0.9, 1.1)


def _positive(**values: float) -> None:
    for name, v in values.items():
        if not v > 0:
            raise ModelError(f"{name} must be positive, got {v}")


def mass_scale_factor(rho_full: float, rho_sub: float, n: float) -> float:
    """Sub-scale to full-scale mass ratio for a free-flying dynamically scaled model."""
    _positive(rho_full=rho_full, rho_sub=rho_sub)
    if not 0.0 < n <= 1.0:
        raise ModelError(f"geometric scale {n} outside (0, 1]")
    return rho_full / rho_sub * n**3


def bending_parameter(ei: float, rho: float, velocity: float, length: float) -> float:
    _positive(EI=ei, rho=rho, velocity=velocity, length=length)
    return ei / (rho * velocity**2 * length**4)


def torsion_parameter(gj: float, rho: float, velocity: float, length: float) -> float:
    _positive(GJ=gj, rho=rho, velocity=velocity, length=length)
    return gj / (rho * velocity**2 * length**4)


def reynolds(rho: float, velocity: float, length: float, mu: float) -> float:
    _positive(rho=rho, velocity=velocity, length=length, mu=mu)
    return rho * velocity * length / mu


@dataclass(frozen=True)
class ScaleReference:
    rho: float
    velocity: float
    length: float
    ei: float
    gj: float
    reynolds: float
    mach: float
    l_over_d: float

    @classmethod
    def from_result(cls, result) -> "ScaleReference":
        """Build from an ``AeroStructResult``."""
        return cls(
            rho=result.density,
            velocity=result.velocity,
            length=result.reference_length,
            ei=result.root_ei,
            gj=result.root_gj,
            reynolds=result.reynolds,
            mach=result.mach,
            l_over_d=result.l_over_d,
        )

    def bending(self) -> float:
        return bending_parameter(self.ei, self.rho, self.velocity, self.length)

    def torsion(self) -> float:
        return torsion_parameter(self.gj, self.rho, self.velocity, self.length)


@dataclass(frozen=True)
class GroupComparison:
    name: str
    full: float
    sub: float
    ratio: float
    flagged: bool


@dataclass(frozen=True)
class SimilitudeReport:
    groups: tuple[GroupComparison, ...]
    n: float
    n_mass: float

    def group(self, name: str) -> GroupComparison:
        for g in self.groups:
            if g.name == name:
                return g
        raise KeyError(name)

    @property
    def flagged(self) -> list[str]:
        return [g.name for g in self.groups if g.flagged]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "n_mass": self.n_mass,
            "groups": [asdict(g) for g in self.groups],
            "flagged": self.flagged,
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    def to_text(self) -> str:
        lines = [f"{'group':<6}{'full':>14}{'sub':>14}{'ratio':>10}  flag",
                 "-" * 50]
        for g in self.groups:
            lines.append(f"{g.name:<6}{g.full:>14.6g}{g.sub:>14.6g}{g.ratio:>10.4f}  "
                         f"{'*' if g.flagged else ''}")
        lines.append(f"geometric scale n = {self.n:.6g}, mass scale n_mass = {self.n_mass:.6g}")
        return "\n".join(lines)


def similitude_report(full: ScaleReference, sub: ScaleReference, n: float) -> SimilitudeReport:
    lo, hi = REPORT_BAND
    pairs = {
        "Re": (full.reynolds, sub.reynolds),
        "Ma": (full.mach, sub.mach),
        "S_b": (full.bending(), sub.bending()),
        "S_t": (full.torsion(), sub.torsion()),
    }
    groups = []
    for name in GROUPS:
        f, s = pairs[name]
        ratio = s / f
        groups.append(GroupComparison(name, f, s, ratio, not lo <= ratio <= hi))
    return SimilitudeReport(tuple(groups), n, mass_scale_factor(full.rho, sub.rho, n))
