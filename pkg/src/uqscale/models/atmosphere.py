"""International Standard Atmosphere, 0-20 km.

Layers are defined on geopotential altitude: constant lapse rate up to 11 km, isothermal lower
stratosphere above, Sutherland's law for the dynamic viscosity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import ModelError

T0 = 288.15  # K
P0 = 101325.0  # Pa
LAPSE = -0.0065  # K/m
G0 = 9.80665  # m/s^2
R_AIR = 287.05287  # J/(kg K)
GAMMA = 1.4
R_EARTH = 6356766.0  # m, radius used for geopotential altitude
H_TROPOPAUSE = 11000.0  # m
H_MAX = 20000.0  # m

SUTHERLAND_MU_REF = 1.716e-5  # Pa s at T_REF
SUTHERLAND_T_REF = 273.15  # K
SUTHERLAND_S = 110.4  # K

T_TROPOPAUSE = T0 + LAPSE * H_TROPOPAUSE
P_TROPOPAUSE = P0 * (T_TROPOPAUSE / T0) ** (-G0 / (LAPSE * R_AIR))


@dataclass(frozen=True)
class AtmosphereState:
    altitude: float
    temperature: float
    pressure: float
    density: float
    speed_of_sound: float
    dynamic_viscosity: float

    @property
    def kinematic_viscosity(self) -> float:
        return self.dynamic_viscosity / self.density


def sutherland_viscosity(temperature: float) -> float:
    t = temperature
    return (
        SUTHERLAND_MU_REF
        * (t / SUTHERLAND_T_REF) ** 1.5
        * (SUTHERLAND_T_REF + SUTHERLAND_S)
        / (t + SUTHERLAND_S)
    )


def geopotential_altitude(h: float) -> float:
    return R_EARTH * h / (R_EARTH + h)


def isa_atmosphere(z: float) -> AtmosphereState:
    """Atmospheric state at geometric altitude ``z`` in meters."""
    z = float(z)
    if not (0.0 <= z <= H_MAX) or math.isnan(z):
        raise ModelError(f"altitude {z} m outside [0, {H_MAX:.0f}] m")
    h = geopotential_altitude(z)
    if h <= H_TROPOPAUSE:
        t = T0 + LAPSE * h
        p = P0 * (t / T0) ** (-G0 / (LAPSE * R_AIR))
    else:
        t = T_TROPOPAUSE
        p = P_TROPOPAUSE * math.exp(-G0 * (h - H_TROPOPAUSE) / (R_AIR * t))
    rho = p / (R_AIR * t)
    return AtmosphereState(
        altitude=z,
        temperature=t,
        pressure=p,
        density=rho,
        speed_of_sound=math.sqrt(GAMMA * R_AIR * t),
        dynamic_viscosity=sutherland_viscosity(t),
    )
