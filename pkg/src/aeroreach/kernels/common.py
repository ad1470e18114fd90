"""Flat parameter/table packing shared by the compiled and pure kernels.

Both kernels consume the same two float64 blobs: a fixed-slot parameter
vector (indices below) and a table blob addressed via an int64 offset array.
Keeping the layout here, in one place, is what lets the parity test drive the
two implementations with literally identical inputs.
"""

from __future__ import annotations

import numpy as np

from ..aerotables import AeroDatabase, Grid2, Grid3, Table1
from ..dynamics import VehicleParams
from ..environment import EnvParams

# Parameter slots.
P_MDRY = 0
P_MWET = 1
P_JDRY = 2   # 3 entries
P_JWET = 5   # 3 entries
P_ISP = 8
P_G0 = 9
P_UMIN = 10
P_UMAX = 11
P_TAN_GIMBAL = 12
P_OMEGA_MAX = 13
P_CDAMP = 14
P_ALPHA_MAX = 15
P_QMAX = 16
P_CHIMAX = 17
P_VSMALL = 18
P_RENG = 19  # 3 entries
P_RFIN = 22  # 3 entries
P_MU = 25
P_OMEGA_P = 26  # 3 entries
P_RCENTER = 29  # 3 entries
P_RHO0 = 32
P_ATMSCALE = 33
P_PLANET_R = 34
P_S_ALPHA = 35
P_S_THRUST = 36
P_S_FIN = 37
P_S_OMEGA = 38
P_S_Q = 39
P_S_QALPHA = 40
P_THRUST_NORM = 41
N_PARAMS = 42

# Augmented state layout: 11 physical + 6 constraint-violation integrals.
NX = 11
N_CTCS = 6
NAUG = NX + N_CTCS
NU = 5
# Sensitivity parameter count: x0 (11) + u0 (5) + u1 (5) + sigma_a + sigma_p.
NTHETA = 23

CTCS_ALPHA = 0
CTCS_THRUST = 1
CTCS_FIN = 2
CTCS_OMEGA = 3
CTCS_Q = 4
CTCS_QALPHA = 5


def pack_params(vehicle: VehicleParams, env: EnvParams, ctcs_scales: np.ndarray) -> np.ndarray:
    p = np.zeros(N_PARAMS)
    p[P_MDRY] = vehicle.m_dry
    p[P_MWET] = vehicle.m_wet
    p[P_JDRY : P_JDRY + 3] = vehicle.j_dry
    p[P_JWET : P_JWET + 3] = vehicle.j_wet
    p[P_ISP] = vehicle.isp
    p[P_G0] = vehicle.g0
    p[P_UMIN] = vehicle.u_min
    p[P_UMAX] = vehicle.u_max
    p[P_TAN_GIMBAL] = np.tan(vehicle.gimbal_max)
    p[P_OMEGA_MAX] = vehicle.omega_max
    p[P_CDAMP] = vehicle.c_damp
    p[P_ALPHA_MAX] = vehicle.alpha_max
    p[P_QMAX] = vehicle.q_max
    p[P_CHIMAX] = vehicle.chi_max
    p[P_VSMALL] = vehicle.v_small
    p[P_RENG : P_RENG + 3] = vehicle.r_engine_b
    p[P_RFIN : P_RFIN + 3] = vehicle.r_fins_b
    p[P_MU] = env.mu
    p[P_OMEGA_P : P_OMEGA_P + 3] = env.omega_planet
    p[P_RCENTER : P_RCENTER + 3] = env.r_center
    p[P_RHO0] = env.rho0
    p[P_ATMSCALE] = env.atm_scale
    p[P_PLANET_R] = env.planet_radius
    scales = np.asarray(ctcs_scales, dtype=float)
    if scales.shape != (N_CTCS,):
        raise ValueError(f"expected {N_CTCS} CTCS scales")
    p[P_S_ALPHA : P_S_ALPHA + N_CTCS] = scales
    p[P_THRUST_NORM] = vehicle.u_max
    return p


class PackedTables:
    """Table blob + offset index. Offsets index float64 positions in `blob`."""

    __slots__ = ("blob", "idx")

    def __init__(self, blob: np.ndarray, idx: np.ndarray):
        self.blob = blob
        self.idx = idx


def _append(parts: list[np.ndarray], arr: np.ndarray, cursor: int) -> tuple[int, int]:
    flat = np.ascontiguousarray(arr, dtype=float).ravel()
    parts.append(flat)
    return cursor, cursor + flat.size


def pack_tables(db: AeroDatabase) -> PackedTables:
    """Serialize all tables into one blob.

    Index layout (int64):
      3 x Grid2  (cd, cl_mod, cm_mod):        [na, nm, off_a, off_m, off_v]
      6 x Grid3  (scale1, scale2, lo1, lo2, hi1, hi2):
                                              [nm, n1, n2, off_m, off_1, off_2, off_v]
      2 x Table1 (polar_lin, polar_cst):      [n, off_m, off_v]
    """
    parts: list[np.ndarray] = []
    idx: list[int] = []
    cursor = 0

    def put(arr) -> int:
        nonlocal cursor
        off, cursor2 = _append(parts, arr, cursor)
        cursor = cursor2
        return off

    def put_grid2(g: Grid2):
        idx.extend([g.alpha.size, g.mach.size, put(g.alpha), put(g.mach), put(g.values)])

    def put_grid3(g: Grid3):
        idx.extend(
            [
                g.mach.size,
                g.alpha1.size,
                g.alpha2.size,
                put(g.mach),
                put(g.alpha1),
                put(g.alpha2),
                put(g.values),
            ]
        )

    def put_table1(t: Table1):
        idx.extend([t.mach.size, put(t.mach), put(t.values)])

    put_grid2(db.cd_body)
    put_grid2(db.cl_mod)
    put_grid2(db.cm_mod)
    put_grid3(db.fin_lift_scale[0])
    put_grid3(db.fin_lift_scale[1])
    put_grid3(db.fin_bound_lo[0])
    put_grid3(db.fin_bound_lo[1])
    put_grid3(db.fin_bound_hi[0])
    put_grid3(db.fin_bound_hi[1])
    put_table1(db.polar_lin)
    put_table1(db.polar_cst)

    return PackedTables(np.concatenate(parts), np.asarray(idx, dtype=np.int64))


# idx base offsets for each table record
G2_CD = 0
G2_CL = 5
G2_CM = 10
G3_SCALE1 = 15
G3_SCALE2 = 22
G3_LO1 = 29
G3_LO2 = 36
G3_HI1 = 43
G3_HI2 = 50
T1_PLIN = 57
T1_PCST = 60
IDX_LEN = 63
