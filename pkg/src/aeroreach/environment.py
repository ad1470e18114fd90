"""Atmosphere, gravity, and rotating-frame accelerations for a spherical planet.

The atmosphere is the 1976 standard / ISO 2533 layered model (geopotential
altitude, piecewise-linear temperature). Small dense planets with shallow
atmospheres are handled by a single stretch factor applied to geopotential
altitude before the table lookup (``atm_scale`` = 1.25 maps a 70 km
atmosphere onto the 86 km standard profile; 1.0 recovers Earth).

Every function here is pure: same inputs give bitwise-identical outputs, and
nothing is cached or mutated, so concurrent use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Standard atmosphere constants (ISO 2533).
R_AIR = 287.05287      # specific gas constant of air [J/(kg K)]
GAMMA_AIR = 1.4        # ratio of specific heats
G0_STD = 9.80665       # standard gravity [m/s^2]
P0_STD = 101325.0      # sea-level pressure [Pa]
T0_STD = 288.15        # sea-level temperature [K]

# Geopotential layer bases [m], base temperatures [K], lapse rates [K/m].
_LAYER_H = np.array([0.0, 11000.0, 20000.0, 32000.0, 47000.0, 51000.0, 71000.0])
_LAYER_LAPSE = np.array([-0.0065, 0.0, 0.001, 0.0028, 0.0, -0.0028, -0.002])
_ATM_CEILING = 84852.0  # geopotential top of the model [m]


def _layer_bases() -> tuple[np.ndarray, np.ndarray]:
    """Temperatures and pressures at each layer base, from the sea-level state."""
    temps = np.empty(len(_LAYER_H))
    press = np.empty(len(_LAYER_H))
    temps[0], press[0] = T0_STD, P0_STD
    for i in range(1, len(_LAYER_H)):
        dh = _LAYER_H[i] - _LAYER_H[i - 1]
        lapse = _LAYER_LAPSE[i - 1]
        temps[i] = temps[i - 1] + lapse * dh
        if lapse == 0.0:
            press[i] = press[i - 1] * np.exp(-G0_STD * dh / (R_AIR * temps[i - 1]))
        else:
            press[i] = press[i - 1] * (temps[i] / temps[i - 1]) ** (-G0_STD / (R_AIR * lapse))
    return temps, press


_LAYER_T, _LAYER_P = _layer_bases()


class EnvQueryError(ValueError):
    """Invalid input to an environment query (non-finite position, singular radius)."""


@dataclass(frozen=True)
class EnvParams:
    """Planet constants for one scenario.

    Attributes:
        mu: gravitational parameter [m^3/s^2].
        omega_planet: planet angular velocity in the landing-site frame [rad/s].
        r_center: planet center position in the landing-site frame [m];
            Up component is -planet_radius for a sea-level site.
        rho0: reference density used to normalize aero data [kg/m^3].
        t0: surface temperature [K] (kept at the standard reference).
        planet_radius: [m].
        atm_scale: geopotential stretch applied before the ISA lookup.
    """

    mu: float
    omega_planet: np.ndarray
    r_center: np.ndarray
    rho0: float = 1.225
    t0: float = T0_STD
    planet_radius: float = 600e3
    atm_scale: float = 1.25

    def __post_init__(self):
        object.__setattr__(self, "omega_planet", np.asarray(self.omega_planet, dtype=float))
        object.__setattr__(self, "r_center", np.asarray(self.r_center, dtype=float))
        if not (self.mu > 0 and self.planet_radius > 0 and self.rho0 > 0):
            raise ValueError("mu, planet_radius, rho0 must be positive")


def isa_density_sound_speed(h_geopotential: float) -> tuple[float, float]:
    """Density [kg/m^3] and sound speed [m/s] at a geopotential altitude [m].

    Above the model ceiling the density is exactly 0 and the sound speed is
    held at its ceiling value; below -100 m the query is rejected by callers.
    """
    h = h_geopotential
    if h >= _ATM_CEILING:
        t_top = _LAYER_T[-1] + _LAYER_LAPSE[-1] * (_ATM_CEILING - _LAYER_H[-1])
        return 0.0, float(np.sqrt(GAMMA_AIR * R_AIR * t_top))
    h = max(h, -100.0)
    i = int(np.searchsorted(_LAYER_H, h, side="right") - 1)
    i = max(i, 0)
    t_b, p_b, lapse = _LAYER_T[i], _LAYER_P[i], _LAYER_LAPSE[i]
    t = t_b + lapse * (h - _LAYER_H[i])
    if lapse == 0.0:
        p = p_b * np.exp(-G0_STD * (h - _LAYER_H[i]) / (R_AIR * t_b))
    else:
        p = p_b * (t / t_b) ** (-G0_STD / (R_AIR * lapse))
    rho = p / (R_AIR * t)
    c = np.sqrt(GAMMA_AIR * R_AIR * t)
    return float(rho), float(c)


def altitude(r: np.ndarray, env: EnvParams) -> float:
    """Geometric altitude [m] of an inertial position above the planet sphere."""
    d = np.asarray(r, dtype=float) - env.r_center
    return float(np.linalg.norm(d)) - env.planet_radius


def geopotential_altitude(h_geometric: float, env: EnvParams) -> float:
    """Geopotential altitude fed to the ISA table, including the stretch factor."""
    hg = env.planet_radius * h_geometric / (env.planet_radius + h_geometric)
    return env.atm_scale * hg


def atmosphere(r: np.ndarray, env: EnvParams) -> tuple[float, float]:
    """Density [kg/m^3] and speed of sound [m/s] at an inertial position."""
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise EnvQueryError("non-finite position")
    h = altitude(r, env)
    if h < -100.0:
        raise EnvQueryError(f"altitude {h:.1f} m below the -100 m model floor")
    return isa_density_sound_speed(geopotential_altitude(h, env))


def gravity_accel(r: np.ndarray, env: EnvParams) -> np.ndarray:
    """Spherical-field gravitational acceleration [m/s^2], pointing at the center."""
    d = np.asarray(r, dtype=float) - env.r_center
    dist = np.linalg.norm(d)
    if dist == 0.0:
        raise EnvQueryError("gravity singular at the planet center")
    return -env.mu / dist**3 * d


def frame_accels(r: np.ndarray, v: np.ndarray, env: EnvParams) -> tuple[np.ndarray, np.ndarray]:
    """Coriolis and centrifugal accelerations felt in the rotating frame.

    a_cor = -2 w x v and a_cen = -w x (w x (r - r_center)).
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    w = env.omega_planet
    coriolis = -2.0 * np.cross(w, v)
    centrifugal = -np.cross(w, np.cross(w, r - env.r_center))
    return coriolis, centrifugal


def mach(r: np.ndarray, v: np.ndarray, env: EnvParams) -> float:
    """Mach number ||v|| / c(r); zero at rest."""
    _, c = atmosphere(r, env)
    return float(np.linalg.norm(v)) / c


def kerbin_env() -> EnvParams:
    """The small, dense, fast-spinning reference planet used by the bundled scenario."""
    radius = 600e3
    spin = 2.0 * np.pi / (6.0 * 3600.0)
    return EnvParams(
        mu=3.5316e12,
        omega_planet=np.array([spin, 0.0, 0.0]),
        r_center=np.array([0.0, 0.0, -radius]),
        rho0=1.225,
        t0=T0_STD,
        planet_radius=radius,
        atm_scale=1.25,
    )


# Sea-level sound speed used as the sweep-file reference condition.
C0_REF = float(np.sqrt(GAMMA_AIR * R_AIR * T0_STD))
