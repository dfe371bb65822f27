"""Low-fidelity aeroelastic wing: strip aerodynamics on a swept beam.

The wing is an equivalent swept, tapered planform. Aerodynamic loads come
from strip theory using the finite-wing lift-curve slope (Helmbold form with
the Prandtl-Glauert correction); drag is the sum of induced drag, flat-plate
turbulent skin friction with a form factor, and a Korn-equation wave-drag
increment. The structure is a cantilever Euler-Bernoulli / St. Venant beam
along the swept elastic axis with either a tubular spar or a two-spar
wingbox section. Bending and torsion feed back into the streamwise angle of
attack and the coupled problem is solved by fixed-point iteration with
Aitken dynamic relaxation.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Literal, Union

import numpy as np

from .atmosphere import G0, isa_atmosphere
from ..errors import ModelError

# spanwise beam elements per mesh level; nodes = elements + 1
MESH_ELEMENTS = {"coarse": 16, "medium": 48, "fine": 144}


@dataclass(frozen=True)
class TubularSpar:
    root_diameter: float
    tip_diameter: float
    wall_thickness: float
    location: float = 0.35  # chord fraction of the tube axis

    kind: Literal["tubular_spar"] = field(default="tubular_spar", init=False)

    def scaled(self, n: float) -> "TubularSpar":
        return replace(
            self,
            root_diameter=self.root_diameter * n,
            tip_diameter=self.tip_diameter * n,
            wall_thickness=self.wall_thickness * n,
        )

    def shifted(self, delta: float) -> "TubularSpar":
        return replace(self, location=self.location + delta)

    @property
    def elastic_axis(self) -> float:
        return self.location

    def validate(self) -> None:
        if min(self.root_diameter, self.tip_diameter, self.wall_thickness) <= 0:
            raise ModelError("tubular spar dimensions must be positive")
        if 2 * self.wall_thickness >= min(self.root_diameter, self.tip_diameter):
            raise ModelError("tubular spar wall thicker than its radius")
        if not 0.0 < self.location < 1.0:
            raise ModelError("spar location must lie inside the chord")


@dataclass(frozen=True)
class Wingbox:
    skin_root: float
    skin_tip: float
    spar_root: float
    spar_tip: float
    front_spar: float = 0.10
    rear_spar: float = 0.60

    kind: Literal["wingbox"] = field(default="wingbox", init=False)

    def scaled(self, n: float) -> "Wingbox":
        return replace(
            self,
            skin_root=self.skin_root * n,
            skin_tip=self.skin_tip * n,
            spar_root=self.spar_root * n,
            spar_tip=self.spar_tip * n,
        )

    def shifted(self, delta: float) -> "Wingbox":
        return replace(
            self, front_spar=self.front_spar + delta, rear_spar=self.rear_spar + delta
        )

    @property
    def elastic_axis(self) -> float:
        return 0.5 * (self.front_spar + self.rear_spar)

    def validate(self) -> None:
        if min(self.skin_root, self.skin_tip, self.spar_root, self.spar_tip) <= 0:
            raise ModelError("wingbox thicknesses must be positive")
        if not 0.0 < self.front_spar < self.rear_spar < 1.0:
            raise ModelError("wingbox spars must satisfy 0 < front < rear < 1")


Structure = Union[TubularSpar, Wingbox]


@dataclass(frozen=True)
class AeroSettings:
    """Aerodynamic constants; the two flags exist for identity checks."""

    oswald: float = 0.85
    section_slope_factor: float = 0.95  # section lift slope / 2 pi
    wetted_ratio: float = 2.6  # S_wet / S_ref, includes the blended centre body
    transition: float = 0.3  # chordwise location of max thickness for form factor
    korn_factor: float = 0.95  # supercritical-section technology factor
    include_friction: bool = True
    include_wave: bool = True


@dataclass(frozen=True)
class WingModelSpec:
    span: float  # tip to tip, m
    root_chord: float
    tip_chord: float
    sweep_deg: float  # quarter-chord sweep
    thickness_to_chord: float
    twist_root_deg: float
    twist_tip_deg: float
    structure: Structure
    young_modulus: float
    poisson_ratio: float = 0.33
    material_density: float = 2780.0
    fuel_density: float = 810.0
    fuel_fill: float = 0.85  # usable fraction of the wingbox volume
    inertia_mass_factor: float = 1.0
    mesh: str = "medium"
    aero: AeroSettings = AeroSettings()
    tol: float = 1e-6
    max_iter: int = 50
    relaxation: float = 0.5  # initial Aitken relaxation factor
    rigid: bool = False  # skip the structural coupling (pure aerodynamics)

    @property
    def shear_modulus(self) -> float:
        return self.young_modulus / (2.0 * (1.0 + self.poisson_ratio))

    @property
    def taper(self) -> float:
        return self.tip_chord / self.root_chord

    @property
    def area(self) -> float:
        return 0.5 * (self.root_chord + self.tip_chord) * self.span

    @property
    def aspect_ratio(self) -> float:
        return self.span**2 / self.area

    @property
    def mean_aerodynamic_chord(self) -> float:
        lam = self.taper
        return 2.0 / 3.0 * self.root_chord * (1 + lam + lam**2) / (1 + lam)

    @property
    def n_elements(self) -> int:
        try:
            return MESH_ELEMENTS[self.mesh]
        except KeyError:
            raise ModelError(f"unknown mesh {self.mesh!r}") from None

    def scaled(self, n: float) -> "WingModelSpec":
        """Geometrically similar wing with every length multiplied by ``n``."""
        return replace(
            self,
            span=self.span * n,
            root_chord=self.root_chord * n,
            tip_chord=self.tip_chord * n,
            structure=self.structure.scaled(n),
        )

    def validate(self) -> None:
        if min(self.span, self.root_chord, self.tip_chord) <= 0:
            raise ModelError("wing dimensions must be positive")
        if not 0 < self.thickness_to_chord < 0.3:
            raise ModelError("thickness-to-chord ratio out of range")
        if self.young_modulus <= 0 or not math.isfinite(self.young_modulus):
            raise ModelError("Young's modulus must be positive")
        self.structure.validate()
        _ = self.n_elements


@dataclass(frozen=True)
class CruiseCondition:
    mach: float
    alpha: float  # degrees
    altitude: float

    def validate(self) -> None:
        if not 0.0 < self.mach < 1.0:
            raise ModelError(f"Mach number {self.mach} outside (0, 1)")

    @property
    def velocity(self) -> float:
        return self.mach * isa_atmosphere(self.altitude).speed_of_sound


@dataclass(frozen=True)
class AeroStructResult:
    cl: float
    cd: float
    l_over_d: float
    reynolds: float
    mach: float
    velocity: float
    density: float
    reference_length: float
    wing_mass: float
    inertial_mass: float
    root_ei: float
    root_gj: float
    tip_deflection: float
    tip_twist: float  # deg, streamwise elastic twist at the tip
    cd_induced: float
    cd_friction: float
    cd_wave: float
    converged: bool
    iterations: int
    runtime: float

    def as_dict(self) -> dict:
        from dataclasses import asdict

        return asdict(self)


# ---------------------------------------------------------------------------
# aerodynamics


def lift_curve_slope(aspect_ratio: float, sweep_half_chord: float, mach: float,
                     kappa: float = 0.95) -> float:
    """Finite-wing lift slope per radian with Prandtl-Glauert compressibility."""
    beta2 = 1.0 - mach**2
    if beta2 <= 0:
        raise ModelError("lift slope undefined for Mach >= 1")
    tan2 = math.tan(sweep_half_chord) ** 2
    root = math.sqrt(4.0 + aspect_ratio**2 * beta2 / kappa**2 * (1.0 + tan2 / beta2))
    return 2.0 * math.pi * aspect_ratio / (2.0 + root)


def skin_friction(reynolds: float, mach: float) -> float:
    """Turbulent flat-plate skin friction coefficient (Schlichting fit)."""
    return 0.455 / (math.log10(reynolds) ** 2.58 * (1.0 + 0.144 * mach**2) ** 0.65)


def form_factor(tc: float, x_t: float, mach: float, sweep: float) -> float:
    return (1.0 + 0.6 / x_t * tc + 100.0 * tc**4) * (
        1.34 * mach**0.18 * math.cos(sweep) ** 0.28
    )


def wave_drag(cl: float, mach: float, tc: float, sweep: float, korn: float) -> float:
    """Korn-equation drag-divergence estimate with Lock's fourth-power rise."""
    cs = math.cos(sweep)
    m_dd = korn / cs - tc / cs**2 - abs(cl) / (10.0 * cs**3)
    m_crit = m_dd - (0.1 / 80.0) ** (1.0 / 3.0)
    if mach <= m_crit:
        return 0.0
    return 20.0 * (mach - m_crit) ** 4


# ---------------------------------------------------------------------------
# structure


def _section_properties(spec: WingModelSpec, chord: np.ndarray, eta: np.ndarray):
    """Return (I, J, A_struct, A_fuel) arrays at the beam nodes."""
    st = spec.structure
    depth = 0.9 * spec.thickness_to_chord * chord  # mean spar depth
    if isinstance(st, TubularSpar):
        d_out = st.root_diameter + (st.tip_diameter - st.root_diameter) * eta
        d_in = d_out - 2.0 * st.wall_thickness
        inertia = math.pi / 64.0 * (d_out**4 - d_in**4)
        polar = 2.0 * inertia
        area = math.pi / 4.0 * (d_out**2 - d_in**2)
        box_width = 0.5 * chord
    else:
        t_skin = st.skin_root + (st.skin_tip - st.skin_root) * eta
        t_spar = st.spar_root + (st.spar_tip - st.spar_root) * eta
        box_width = (st.rear_spar - st.front_spar) * chord
        inertia = 2.0 * box_width * t_skin * (0.5 * depth) ** 2 + 2.0 * t_spar * depth**3 / 12.0
        polar = 4.0 * (box_width * depth) ** 2 / (2.0 * box_width / t_skin + 2.0 * depth / t_spar)
        area = 2.0 * box_width * t_skin + 2.0 * depth * t_spar
    fuel_area = spec.fuel_fill * box_width * depth
    return inertia, polar, area, fuel_area


def _cumtrapz_matrix(s: np.ndarray) -> np.ndarray:
    """Q with (Q f)_i = integral from s_0 to s_i of f (trapezoid rule)."""
    n = s.size
    h = np.diff(s)
    q = np.zeros((n, n))
    for i in range(1, n):
        q[i, :] = q[i - 1, :]
        q[i, i - 1] += 0.5 * h[i - 1]
        q[i, i] += 0.5 * h[i - 1]
    return q


def _reverse_cumtrapz_matrix(s: np.ndarray) -> np.ndarray:
    """R with (R f)_i = integral from s_i to s_end of f (trapezoid rule)."""
    n = s.size
    h = np.diff(s)
    r = np.zeros((n, n))
    for i in range(n - 2, -1, -1):
        r[i, :] = r[i + 1, :]
        r[i, i] += 0.5 * h[i]
        r[i, i + 1] += 0.5 * h[i]
    return r


@dataclass
class BeamOperators:
    """Discrete cantilever operators on the nodes ``s`` (root clamped at s=0).

    ``slope = bend @ p`` for a distributed load ``p`` (N/m) and
    ``twist = torsion @ t`` for a distributed torque ``t`` (N m/m).
    ``deflection = integrate @ slope``.
    """

    s: np.ndarray
    bend: np.ndarray
    torsion: np.ndarray
    integrate: np.ndarray
    shear: np.ndarray

    @classmethod
    def build(cls, s: np.ndarray, ei: np.ndarray, gj: np.ndarray) -> "BeamOperators":
        q = _cumtrapz_matrix(s)
        r = _reverse_cumtrapz_matrix(s)
        moment_from_load = r @ r
        bend = q @ (moment_from_load / ei[:, None])
        torsion = q @ (r / gj[:, None])
        return cls(s=s, bend=bend, torsion=torsion, integrate=q, shear=r)

    def tip_load_deflection(self, load: float, ei: np.ndarray) -> float:
        """Tip deflection under a point load at the free end."""
        moment = load * (self.s[-1] - self.s)
        slope = self.integrate @ (moment / ei)
        return float((self.integrate @ slope)[-1])


# ---------------------------------------------------------------------------


def evaluate_aerostruct(spec: WingModelSpec, cond: CruiseCondition) -> AeroStructResult:
    """Run one coupled aerostructural analysis."""
    t_start = time.perf_counter()
    spec.validate()
    cond.validate()
    atm = isa_atmosphere(cond.altitude)
    velocity = cond.mach * atm.speed_of_sound
    q_dyn = 0.5 * atm.density * velocity**2

    sweep = math.radians(spec.sweep_deg)
    aspect = spec.aspect_ratio
    lam = spec.taper
    tan_half = math.tan(sweep) - (4.0 / aspect) * 0.25 * (1 - lam) / (1 + lam)
    slope = lift_curve_slope(aspect, math.atan(tan_half), cond.mach,
                             spec.aero.section_slope_factor)
    mac = spec.mean_aerodynamic_chord
    reynolds = atm.density * velocity * mac / atm.dynamic_viscosity

    # beam along the swept elastic axis, root at s = 0
    n_nodes = spec.n_elements + 1
    semi_len = 0.5 * spec.span / math.cos(sweep)
    s = np.linspace(0.0, semi_len, n_nodes)
    eta = s / semi_len
    chord = spec.root_chord + (spec.tip_chord - spec.root_chord) * eta
    inertia, polar, area, fuel_area = _section_properties(spec, chord, eta)
    ei = spec.young_modulus * inertia
    gj = spec.shear_modulus * polar
    ops = BeamOperators.build(s, ei, gj)

    mass_per_len = spec.inertia_mass_factor * (
        spec.material_density * area + spec.fuel_density * fuel_area
    )
    struct_mass = 2.0 * float(ops.integrate[-1] @ (spec.material_density * area))
    inertial_mass = 2.0 * float(ops.integrate[-1] @ mass_per_len)

    jig = np.radians(spec.twist_root_deg + (spec.twist_tip_deg - spec.twist_root_deg) * eta)
    alpha0 = math.radians(cond.alpha) + jig
    arm = (spec.structure.elastic_axis - 0.25) * chord  # aero centre ahead of axis
    cs, sn = math.cos(sweep), math.sin(sweep)
    lift_factor = q_dyn * chord * slope * cs  # lift per unit beam length per radian
    weight = mass_per_len * G0

    def elastic_update(d):
        lift = lift_factor * (alpha0 + d)
        slope_ = ops.bend @ (lift - weight)
        twist = ops.torsion @ (lift * arm)
        return twist * cs - slope_ * sn, slope_

    # fixed-point iteration on the elastic angle change with Aitken relaxation
    d_alpha = np.zeros(n_nodes)
    bend_slope = np.zeros(n_nodes)
    omega = spec.relaxation
    resid_prev = None
    converged = spec.rigid
    iterations = 0
    for iterations in range(1, 0 if spec.rigid else spec.max_iter + 1):
        update, bend_slope = elastic_update(d_alpha)
        if not np.all(np.isfinite(update)) or np.max(np.abs(update)) > 10.0:
            raise ModelError("evaluation failed: non-finite aeroelastic iterate")
        resid = update - d_alpha
        scale = max(float(np.max(np.abs(update))), 1e-300)
        if float(np.max(np.abs(resid))) <= spec.tol * scale:
            d_alpha = update
            converged = True
            break
        if resid_prev is not None:
            dr = resid - resid_prev
            denom = float(dr @ dr)
            if denom > 0.0:
                omega = min(max(-omega * float(resid_prev @ dr) / denom, 0.05), 2.0)
        d_alpha = d_alpha + omega * resid
        resid_prev = resid
    else:
        if not spec.rigid:
            bend_slope = elastic_update(d_alpha)[1]

    local_cl = slope * (alpha0 + d_alpha)
    # streamwise integral: dy = cos(sweep) ds
    cl = float(2.0 * cs * (ops.integrate[-1] @ (chord * local_cl)) / spec.area)
    if not abs(cl) < 1e3:
        raise ModelError("evaluation failed: lift coefficient diverged")
    cd_i = cl**2 / (math.pi * spec.aero.oswald * aspect)
    cd_f = 0.0
    if spec.aero.include_friction:
        cd_f = (
            skin_friction(reynolds, cond.mach)
            * form_factor(spec.thickness_to_chord, spec.aero.transition, cond.mach, sweep)
            * spec.aero.wetted_ratio
        )
    cd_w = 0.0
    if spec.aero.include_wave:
        cd_w = wave_drag(cl, cond.mach, spec.thickness_to_chord, sweep, spec.aero.korn_factor)
    cd = cd_i + cd_f + cd_w
    deflection = ops.integrate @ bend_slope
    values = (cl, cd, float(deflection[-1]))
    if not all(math.isfinite(v) for v in values):
        raise ModelError("evaluation failed: non-finite output")
    if cd <= 0:
        # only reachable with both drag sources disabled at zero lift
        l_over_d = 0.0
    else:
        l_over_d = cl / cd

    return AeroStructResult(
        cl=cl,
        cd=cd,
        l_over_d=l_over_d,
        reynolds=reynolds,
        mach=cond.mach,
        velocity=velocity,
        density=atm.density,
        reference_length=mac,
        wing_mass=struct_mass,
        inertial_mass=inertial_mass,
        root_ei=float(ei[0]),
        root_gj=float(gj[0]),
        tip_deflection=float(deflection[-1]),
        tip_twist=math.degrees(float(d_alpha[-1])),
        cd_induced=cd_i,
        cd_friction=cd_f,
        cd_wave=cd_w,
        converged=converged,
        iterations=iterations,
        runtime=time.perf_counter() - t_start,
    )
