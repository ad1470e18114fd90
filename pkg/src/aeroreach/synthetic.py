"""Analytic aerodynamic model used to generate bundled sweep fixtures.

This stands in for wind-tunnel or simulator force sweeps: a smooth, fully
documented coefficient family from which `synthesize_sweeps` emits the CSV
consumed by `aerotables.ingest_sweeps`. Because the generator and the ingest
share the sweep reference condition (density ratio 1, flow straight down the
Up axis at mach * 340.294 m/s, attitude set by the per-plane angles), the
ingest inverts the generator exactly up to float rounding, which the table
tests rely on.

Coefficient family (angles in radians; normalization per AeroDatabase):
  body drag      cd(alpha, M)  = (CD0 + CD_ALPHA * sin(alpha)^2) * bump(M)
  body lift      cl(alpha, M)  = CL_A * sin(2*alpha) * bump_l(M)
  body moment    cm(alpha, M)  = -CM_A * sin(alpha) * cos(alpha) * bump_l(M)
                                 (restoring: statically stable tail-first)
  fin lift scale k_i(M,a1,a2)  = FIN_K * (1 - 0.25*sin(|a_own|)) * bump_f(M)
  fin bounds     hi_i = 0.92 - 0.22*sin(max(a_own, 0)),
                 lo_i = -(0.92 - 0.22*sin(max(-a_own, 0)))  (stall shrinks the
                 bound on the loaded side; symmetric at zero incidence)
  drag polar     f_d = lin(M)*(cos a2 * f1^2 + cos a1 * f2^2)
                       + cst(M)*(f1^2 + f2^2)
with bump(M) a smooth transonic rise and a_own the fin's in-plane angle of
attack (a1 for fin plane 1, a2 for plane 2).
"""

from __future__ import annotations

import csv
import math

import numpy as np

from .environment import C0_REF

CD0 = 3.8          # kg/m, sets a ~315 m/s sea-level terminal velocity (wet)
CD_ALPHA = 4.5     # kg/m growth with incidence
CL_A = 4.0         # kg/m
CM_A = 4.0         # kg (moment normalization; near-neutral static margin)
FIN_K = 0.12       # kg/m per unit command
POLAR_LIN0 = 1.3e-5  # 1/N
POLAR_CST0 = 5.0e-6  # 1/N

DEFAULT_MACHS = (0.2, 0.5, 0.8, 1.0, 1.2, 1.6, 2.2, 3.0)
DEFAULT_BODY_ALPHAS = (0.0, 1.0, 2.0, 4.0, 7.0, 11.0, 16.0, 22.0, 29.0, 38.0, 50.0)
DEFAULT_FIN_ALPHAS = (-40.0, -25.0, -12.0, 0.0, 12.0, 25.0, 40.0)


def _bump(m: float) -> float:
    return 1.0 + 0.55 * math.exp(-(((m - 1.05) / 0.45) ** 2))


def _bump_l(m: float) -> float:
    return 1.0 + 0.25 * math.exp(-(((m - 0.95) / 0.5) ** 2)) - 0.08 * math.tanh(m - 2.0)


def _bump_f(m: float) -> float:
    return 1.0 / (1.0 + 0.35 * m) + 0.15 * math.exp(-(((m - 1.0) / 0.4) ** 2))


def cd_body(alpha_rad: float, mach: float) -> float:
    return (CD0 + CD_ALPHA * math.sin(alpha_rad) ** 2) * _bump(mach)


def cl_body(alpha_rad: float, mach: float) -> float:
    return CL_A * math.sin(2.0 * alpha_rad) * _bump_l(mach)


def cm_body(alpha_rad: float, mach: float) -> float:
    return -CM_A * math.sin(alpha_rad) * math.cos(alpha_rad) * _bump_l(mach)


def fin_scale(fin: int, mach: float, a1_rad: float, a2_rad: float) -> float:
    own = a1_rad if fin == 0 else a2_rad
    return FIN_K * (1.0 - 0.25 * abs(math.sin(own))) * _bump_f(mach)


def fin_bound_hi(fin: int, mach: float, a1_rad: float, a2_rad: float) -> float:
    own = a1_rad if fin == 0 else a2_rad
    return 0.92 - 0.22 * math.sin(max(own, 0.0))


def fin_bound_lo(fin: int, mach: float, a1_rad: float, a2_rad: float) -> float:
    own = a1_rad if fin == 0 else a2_rad
    return -(0.92 - 0.22 * math.sin(max(-own, 0.0)))


def polar_lin(mach: float) -> float:
    return POLAR_LIN0 * (1.0 + 0.2 / (1.0 + mach * mach))


def polar_cst(mach: float) -> float:
    return POLAR_CST0 * (1.0 + 0.1 * mach)


def total_alpha(a1_rad: float, a2_rad: float) -> float:
    """Angle between the body z axis and the reversed flow for tilt (a1, a2)."""
    bz = np.array([math.tan(a1_rad), math.tan(a2_rad), 1.0])
    bz /= np.linalg.norm(bz)
    return math.acos(min(1.0, bz[2]))


def sweep_forces(
    mach: float, a1_deg: float, a2_deg: float, fin1_cmd: float, fin2_cmd: float
) -> np.ndarray:
    """Total aero force and moment [N, N m] at the sweep reference condition.

    Flow comes straight down the sweep frame's Up axis (v = -V * Up with
    V = mach * C0_REF, rho_r = 1); the body z axis is tilted so the per-plane
    angles of attack equal (a1_deg, a2_deg). Returns (fx, fy, fz, mx, my, mz).
    """
    a1 = math.radians(a1_deg)
    a2 = math.radians(a2_deg)
    v_mag = mach * C0_REF
    v = np.array([0.0, 0.0, -v_mag])
    bz = np.array([math.tan(a1), math.tan(a2), 1.0])
    bz /= np.linalg.norm(bz)
    alpha = math.acos(min(1.0, bz[2]))

    cross = np.cross(bz, v)
    lift_basis = np.cross(v, cross)  # = bz*V^2 - v*(v.bz)
    sin_a = math.sin(alpha)
    cl_mod = cl_body(alpha, mach) / sin_a if sin_a > 1e-12 else 0.0
    cm_mod = cm_body(alpha, mach) / sin_a if sin_a > 1e-12 else 0.0
    lift = 0.5 * cl_mod * lift_basis
    drag = -0.5 * cd_body(alpha, mach) * v_mag * v
    moment = 0.5 * cm_mod * v_mag * cross

    # Fins: wind frame == sweep frame here, so lift axes are N and E.
    f1 = _clip(fin1_cmd, fin_bound_lo(0, mach, a1, a2), fin_bound_hi(0, mach, a1, a2))
    f2 = _clip(fin2_cmd, fin_bound_lo(1, mach, a1, a2), fin_bound_hi(1, mach, a1, a2))
    fl1 = f1 * v_mag**2 * fin_scale(0, mach, a1, a2)
    fl2 = f2 * v_mag**2 * fin_scale(1, mach, a1, a2)
    fd = polar_lin(mach) * (math.cos(a2) * fl1**2 + math.cos(a1) * fl2**2) + polar_cst(
        mach
    ) * (fl1**2 + fl2**2)
    fin_force = np.array([fl1, fl2, fd])  # drag along +Up (= -v_hat)

    force = lift + drag + fin_force
    # Moment reported in the sweep frame; the fin lever contribution is left
    # out on purpose: the ingest models it from geometry, not from data.
    return np.concatenate([force, moment])


def _clip(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def synthesize_sweeps(
    path: str,
    machs=DEFAULT_MACHS,
    body_alphas=DEFAULT_BODY_ALPHAS,
    fin_alphas=DEFAULT_FIN_ALPHAS,
) -> int:
    """Write the sweep CSV fixture; returns the number of data rows."""
    from .aerotables import SWEEP_HEADER

    rows = 0
    seen: set[tuple] = set()
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SWEEP_HEADER)

        def emit(m, a1, a2, c1, c2):
            nonlocal rows
            key = (m, a1, a2, c1, c2)
            if key in seen:
                return
            seen.add(key)
            fvals = sweep_forces(m, a1, a2, c1, c2)
            w.writerow(
                [f"{m:.6g}", f"{a1:.6g}", f"{a2:.6g}", f"{c1:.6g}", f"{c2:.6g}"]
                + [f"{x:.12e}" for x in fvals]
            )
            rows += 1

        for m in machs:
            # body incidence sweep in the alpha1 plane (alpha2 = 0)
            for a in body_alphas:
                emit(m, a, 0.0, 0.0, 0.0)
            # fin grid with command probes
            for a1 in fin_alphas:
                for a2 in fin_alphas:
                    emit(m, a1, a2, 0.0, 0.0)
                    for lvl in (-1.0, -0.5, 0.5, 1.0):
                        emit(m, a1, a2, lvl, 0.0)
                        emit(m, a1, a2, 0.0, lvl)
    return rows
