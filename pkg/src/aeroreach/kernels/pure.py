"""Pure-numpy propagation kernel (fallback backend).

Implements one multiple-shooting segment: integrate the 17-dim augmented
state (11 physical + 6 constraint-violation integrals) over a span of
normalized time with first-order-hold controls, optionally carrying the
forward-sensitivity matrix d(state)/d(node state, both control endpoints,
time dilations) through the same Dormand-Prince 5(4) steps. Step-size
control looks only at the primal state, so the primal trajectory is
identical whether or not sensitivities are requested.

The dynamics Jacobians are analytic (table patch gradients included); the
relu^2 form of the constraint integrands keeps everything C^1. Geometry
guards (zero speed, zero tilt, near-vertical-up wind frame) zero the
affected derivative terms instead of raising, since optimizer iterates may
briefly visit them.

The Cython kernel in `_core` is a port of this module; a parity test pins
the two together.
"""

from __future__ import annotations

import math

import numpy as np

from ..environment import (
    _ATM_CEILING,
    _LAYER_H,
    _LAYER_LAPSE,
    _LAYER_P,
    _LAYER_T,
    G0_STD,
    GAMMA_AIR,
    R_AIR,
)
from . import common as cm

RAD2DEG = 180.0 / math.pi
V_EPS = 1e-9


def backend_name():
    return "pure"


# ---------------------------------------------------------------- tables


def _bracket(b: np.ndarray, x: float):
    n = b.size
    if x <= b[0]:
        return 0, 0.0, (0.0 if x < b[0] else 1.0 / (b[1] - b[0]))
    if x >= b[n - 1]:
        return n - 2, 1.0, 0.0
    i = int(np.searchsorted(b, x, side="right") - 1)
    i = min(max(i, 0), n - 2)
    dx = b[i + 1] - b[i]
    return i, (x - b[i]) / dx, 1.0 / dx


def _interp2p(blob, idx, base, a, m):
    na, nm = idx[base], idx[base + 1]
    ab = blob[idx[base + 2] : idx[base + 2] + na]
    mb = blob[idx[base + 3] : idx[base + 3] + nm]
    vals = blob[idx[base + 4] : idx[base + 4] + na * nm]
    ia, sa, inva = _bracket(ab, a)
    im, sm, invm = _bracket(mb, m)
    v00 = vals[ia * nm + im]
    v01 = vals[ia * nm + im + 1]
    v10 = vals[(ia + 1) * nm + im]
    v11 = vals[(ia + 1) * nm + im + 1]
    v0 = v00 + sm * (v01 - v00)
    v1 = v10 + sm * (v11 - v10)
    val = v0 + sa * (v1 - v0)
    da = (v1 - v0) * inva
    dm = ((v01 - v00) + sa * ((v11 - v10) - (v01 - v00))) * invm
    return val, da, dm


def _interp3p(blob, idx, base, m, a1, a2):
    nm, n1, n2 = idx[base], idx[base + 1], idx[base + 2]
    mb = blob[idx[base + 3] : idx[base + 3] + nm]
    b1 = blob[idx[base + 4] : idx[base + 4] + n1]
    b2 = blob[idx[base + 5] : idx[base + 5] + n2]
    im, sm, invm = _bracket(mb, m)
    i1, s1, inv1 = _bracket(b1, a1)
    i2, s2, inv2 = _bracket(b2, a2)
    off = idx[base + 6]
    vals = blob

    def v(km, k1, k2):
        return vals[off + ((im + km) * n1 + i1 + k1) * n2 + i2 + k2]

    c2 = np.empty((2, 2))
    d2 = np.empty((2, 2))
    for km in range(2):
        for k1 in range(2):
            lo, hi = v(km, k1, 0), v(km, k1, 1)
            c2[km, k1] = lo + s2 * (hi - lo)
            d2[km, k1] = (hi - lo) * inv2
    c1 = c2[:, 0] + s1 * (c2[:, 1] - c2[:, 0])
    d1 = (c2[:, 1] - c2[:, 0]) * inv1
    dd2 = d2[:, 0] + s1 * (d2[:, 1] - d2[:, 0])
    val = c1[0] + sm * (c1[1] - c1[0])
    dm = (c1[1] - c1[0]) * invm
    da1 = d1[0] + sm * (d1[1] - d1[0])
    da2 = dd2[0] + sm * (dd2[1] - dd2[0])
    return val, dm, da1, da2


def _interp1p(blob, idx, base, m):
    n = idx[base]
    mb = blob[idx[base + 1] : idx[base + 1] + n]
    vals = blob[idx[base + 2] : idx[base + 2] + n]
    i, s, inv = _bracket(mb, m)
    v0, v1 = vals[i], vals[i + 1]
    return v0 + s * (v1 - v0), (v1 - v0) * inv


# ---------------------------------------------------------------- atmosphere


def _atmo(h_geom: float, atm_scale: float, planet_r: float):
    """rho, drho/dh_geom, c, dc/dh_geom at geometric altitude."""
    gp = planet_r * h_geom / (planet_r + h_geom)
    dgp = (planet_r / (planet_r + h_geom)) ** 2
    hh = atm_scale * gp
    dh = atm_scale * dgp
    if hh >= _ATM_CEILING:
        t_top = _LAYER_T[-1] + _LAYER_LAPSE[-1] * (_ATM_CEILING - _LAYER_H[-1])
        return 0.0, 0.0, math.sqrt(GAMMA_AIR * R_AIR * t_top), 0.0
    if hh < -100.0:
        hh = -100.0
        dh = 0.0
    i = int(np.searchsorted(_LAYER_H, hh, side="right") - 1)
    i = max(i, 0)
    t_b, p_b, lapse = _LAYER_T[i], _LAYER_P[i], _LAYER_LAPSE[i]
    t = t_b + lapse * (hh - _LAYER_H[i])
    if lapse == 0.0:
        p = p_b * math.exp(-G0_STD * (hh - _LAYER_H[i]) / (R_AIR * t_b))
        dp_dh = -p * G0_STD / (R_AIR * t_b)
    else:
        p = p_b * (t / t_b) ** (-G0_STD / (R_AIR * lapse))
        dp_dh = -p * G0_STD / (R_AIR * t)
    rho = p / (R_AIR * t)
    drho_dh = (dp_dh - rho * R_AIR * lapse) / (R_AIR * t)
    c = math.sqrt(GAMMA_AIR * R_AIR * t)
    dc_dh = GAMMA_AIR * R_AIR * lapse / (2.0 * c)
    return rho, drho_dh * dh, c, dc_dh * dh


def _attitude_mats(a1: float, a2: float):
    c1, s1 = math.cos(a1), math.sin(a1)
    c2, s2 = math.cos(a2), math.sin(a2)
    t = np.array([[c2, 0.0, s2], [s1 * s2, c1, -s1 * c2], [-c1 * s2, s1, c1 * c2]])
    dt1 = np.array([[0.0, 0.0, 0.0], [c1 * s2, -s1, -c1 * c2], [s1 * s2, c1, -s1 * c2]])
    dt2 = np.array([[-s2, 0.0, c2], [s1 * c2, 0.0, s1 * s2], [-c1 * c2, 0.0, -c1 * s2]])
    return t, dt1, dt2


def _skew(a: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])


def _wind_apply(vhat: np.ndarray, p: np.ndarray):
    """R(vhat) @ p (p fixed) and its Jacobian w.r.t. vhat.

    R is the minimal rotation taking -z to vhat; 1+c is clamped away from the
    straight-up singularity so derivatives stay bounded.
    """
    w = np.array([vhat[1], -vhat[0], 0.0])
    opc = 1.0 - vhat[2]
    clamped = opc < 1e-3
    if clamped:
        opc = 1e-3
    wxp = np.cross(w, p)
    wwxp = np.cross(w, wxp)
    rp = p + wxp + wwxp / opc
    d = np.empty((3, 3))
    dws = (np.array([0.0, -1.0, 0.0]), np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 0.0]))
    for j in range(3):
        dw = dws[j]
        col = np.cross(dw, p) + (np.cross(dw, wxp) + np.cross(w, np.cross(dw, p))) / opc
        if j == 2 and not clamped:
            col = col + wwxp / (opc * opc)
        d[:, j] = col
    return rp, d


# ---------------------------------------------------------------- dynamics


def rhs_jac(x: np.ndarray, u: np.ndarray, prop_phase: int, pp: np.ndarray, tb, want_jac: bool):
    """Augmented-state derivative f (17,), plus A = df/dx (17,11), B = df/du (17,5)."""
    blob, idx = tb.blob, tb.idx
    m = x[0]
    r = x[1:4]
    v = x[4:7]
    om = x[9:11]

    f = np.zeros(cm.NAUG)
    A = np.zeros((cm.NAUG, cm.NX)) if want_jac else None
    B = np.zeros((cm.NAUG, cm.NU)) if want_jac else None

    # --- thrust and mass flow
    u_t = u[0:3] if prop_phase else np.zeros(3)
    tn = math.sqrt(float(u_t @ u_t))
    g0isp = pp[cm.P_G0] * pp[cm.P_ISP]
    f[0] = -tn / g0isp
    if want_jac and prop_phase and tn > 1e-12:
        B[0, 0:3] = -u_t / (tn * g0isp)

    # --- kinematics
    f[1:4] = v
    f[7:9] = om
    if want_jac:
        A[1:4, 4:7] = np.eye(3)
        A[7:9, 9:11] = np.eye(2)

    # --- gravity + rotating frame
    rc = pp[cm.P_RCENTER : cm.P_RCENTER + 3]
    wp = pp[cm.P_OMEGA_P : cm.P_OMEGA_P + 3]
    mu = pp[cm.P_MU]
    d = r - rc
    dist = math.sqrt(float(d @ d))
    grav = -mu / dist**3 * d
    wx = _skew(wp)
    cor = -2.0 * (wx @ v)
    cen = -(wx @ (wx @ d))

    # --- atmosphere
    h = dist - pp[cm.P_PLANET_R]
    rho, drho_dh, c_snd, dc_dh = _atmo(h, pp[cm.P_ATMSCALE], pp[cm.P_PLANET_R])
    dh_dr = d / dist
    rho_r = rho / pp[cm.P_RHO0]
    drhor_dr = (drho_dh / pp[cm.P_RHO0]) * dh_dr

    t_bi, dt1, dt2 = _attitude_mats(x[7], x[8])
    bz = t_bi[:, 2]
    dbz = (dt1[:, 2], dt2[:, 2])

    speed = math.sqrt(float(v @ v))
    aero = speed > V_EPS

    f_aero = np.zeros(3)
    df_aero_dr = np.zeros((3, 3))
    df_aero_dv = np.zeros((3, 3))
    df_aero_da = (np.zeros(3), np.zeros(3))
    f_fins = np.zeros(3)
    dff_dr = np.zeros((3, 3))
    dff_dv = np.zeros((3, 3))
    dff_da = (np.zeros(3), np.zeros(3))
    dff_dua = (np.zeros(3), np.zeros(3))
    m_ib = np.zeros(3)
    dmib_dr = np.zeros((3, 3))
    dmib_dv = np.zeros((3, 3))
    dmib_da = (np.zeros(3), np.zeros(3))

    alpha = 0.0
    dal_dv = np.zeros(3)
    dal_da = np.zeros(2)
    mach = 0.0
    dmach_dv = np.zeros(3)
    dmach_dr = np.zeros(3)
    a1 = a2 = 0.0
    da1_dv = np.zeros(3)
    da2_dv = np.zeros(3)
    da1_da = np.zeros(2)
    da2_da = np.zeros(2)

    if aero:
        vhat = v / speed
        dvhat_dv = (np.eye(3) - np.outer(vhat, vhat)) / speed
        mach = speed / c_snd
        dmach_dv = vhat / c_snd
        dmach_dr = -(speed / c_snd**2) * dc_dh * dh_dr

        qcos = max(-1.0, min(1.0, float(-bz @ vhat)))
        alpha = math.acos(qcos)
        sin2 = 1.0 - qcos * qcos
        if sin2 > 1e-14:
            dal_dq = -1.0 / math.sqrt(sin2)
            dq_dv = -(bz + qcos * vhat) / speed
            dal_dv = dal_dq * dq_dv
            dal_da = dal_dq * np.array([-(vhat @ dbz[0]), -(vhat @ dbz[1])])

        wb = -(t_bi.T @ vhat)
        dwb_dv = -(t_bi.T @ dvhat_dv)
        dwb_da = (-(dt1.T @ vhat), -(dt2.T @ vhat))
        den1 = wb[0] * wb[0] + wb[2] * wb[2]
        den2 = wb[1] * wb[1] + wb[2] * wb[2]
        a1 = math.atan2(wb[0], wb[2])
        a2 = math.atan2(wb[1], wb[2])
        if den1 > 1e-14:
            da1_dwb = np.array([wb[2], 0.0, -wb[0]]) / den1
            da1_dv = da1_dwb @ dwb_dv
            da1_da = np.array([da1_dwb @ dwb_da[0], da1_dwb @ dwb_da[1]])
        if den2 > 1e-14:
            da2_dwb = np.array([0.0, wb[2], -wb[1]]) / den2
            da2_dv = da2_dwb @ dwb_dv
            da2_da = np.array([da2_dwb @ dwb_da[0], da2_dwb @ dwb_da[1]])

        a_deg = alpha * RAD2DEG
        a1_deg = a1 * RAD2DEG
        a2_deg = a2 * RAD2DEG

        cd, cd_dad, cd_dm = _interp2p(blob, idx, cm.G2_CD, a_deg, mach)
        cl, cl_dad, cl_dm = _interp2p(blob, idx, cm.G2_CL, a_deg, mach)
        cmo, cmo_dad, cmo_dm = _interp2p(blob, idx, cm.G2_CM, a_deg, mach)
        cd_da, cl_da, cmo_da = cd_dad * RAD2DEG, cl_dad * RAD2DEG, cmo_dad * RAD2DEG

        cbz = np.cross(bz, v)
        xl = bz * speed**2 - v * float(v @ bz)
        half_rr = 0.5 * rho_r
        lift = half_rr * cl * xl
        drag = -half_rr * cd * speed * v
        f_aero = lift + drag
        m_ib = half_rr * cmo * speed * cbz

        if want_jac:
            dxl_dv = 2.0 * np.outer(bz, v) - float(v @ bz) * np.eye(3) - np.outer(v, bz)
            dxl_da = tuple(dbz[i] * speed**2 - v * float(v @ dbz[i]) for i in range(2))
            cl_chain_v = cl_da * dal_dv + cl_dm * dmach_dv
            cd_chain_v = cd_da * dal_dv + cd_dm * dmach_dv
            cm_chain_v = cmo_da * dal_dv + cmo_dm * dmach_dv
            dl_dv = half_rr * (np.outer(xl, cl_chain_v) + cl * dxl_dv)
            dd_dv = -half_rr * (
                np.outer(speed * v, cd_chain_v) + cd * (np.outer(v, vhat) + speed * np.eye(3))
            )
            df_aero_dv = dl_dv + dd_dv
            dmib_dv = half_rr * (
                np.outer(speed * cbz, cm_chain_v) + cmo * (np.outer(cbz, vhat) + speed * _skew(bz))
            )
            df_aero_dr = 0.5 * (
                np.outer(xl, cl * drhor_dr + rho_r * cl_dm * dmach_dr)
                - np.outer(speed * v, cd * drhor_dr + rho_r * cd_dm * dmach_dr)
            )
            dmib_dr = 0.5 * np.outer(speed * cbz, cmo * drhor_dr + rho_r * cmo_dm * dmach_dr)
            da_list = []
            dm_list = []
            for i in range(2):
                dl = half_rr * (xl * (cl_da * dal_da[i]) + cl * dxl_da[i])
                dd = -half_rr * speed * v * (cd_da * dal_da[i])
                da_list.append(dl + dd)
                dm_list.append(
                    half_rr
                    * (speed * cbz * (cmo_da * dal_da[i]) + cmo * speed * np.cross(dbz[i], v))
                )
            df_aero_da = tuple(da_list)
            dmib_da = tuple(dm_list)

        # --- fins
        ua = u[3:5]
        fl = np.empty(2)
        dfl_dv = [np.zeros(3), np.zeros(3)]
        dfl_dr = [np.zeros(3), np.zeros(3)]
        dfl_da = [np.zeros(2), np.zeros(2)]
        dfl_dua = np.empty(2)
        for i, base in enumerate((cm.G3_SCALE1, cm.G3_SCALE2)):
            k, k_dm, k_d1, k_d2 = _interp3p(blob, idx, base, mach, a1_deg, a2_deg)
            fl[i] = ua[i] * speed**2 * k
            dfl_dua[i] = speed**2 * k
            if want_jac:
                dk_dv = k_dm * dmach_dv + RAD2DEG * (k_d1 * da1_dv + k_d2 * da2_dv)
                dfl_dv[i] = ua[i] * (2.0 * v * k + speed**2 * dk_dv)
                dfl_dr[i] = ua[i] * speed**2 * (k_dm * dmach_dr)
                dfl_da[i] = ua[i] * speed**2 * (RAD2DEG * (k_d1 * da1_da + k_d2 * da2_da))

        plin, plin_dm = _interp1p(blob, idx, cm.T1_PLIN, mach)
        pcst, pcst_dm = _interp1p(blob, idx, cm.T1_PCST, mach)
        ca1, sa1 = math.cos(a1), math.sin(a1)
        ca2, sa2 = math.cos(a2), math.sin(a2)
        mix = ca2 * fl[0] ** 2 + ca1 * fl[1] ** 2
        tot = fl[0] ** 2 + fl[1] ** 2
        fd = plin * mix + pcst * tot
        dfd_dfl = np.array([2.0 * fl[0] * (plin * ca2 + pcst), 2.0 * fl[1] * (plin * ca1 + pcst)])

        ex = np.array([1.0, 0.0, 0.0])
        ey = np.array([0.0, 1.0, 0.0])
        r0, dr0 = _wind_apply(vhat, ex)
        r1, dr1 = _wind_apply(vhat, ey)
        f_fins = fl[0] * r0 + fl[1] * r1 - vhat * fd

        if want_jac:
            dfd_dv = (
                dfd_dfl[0] * dfl_dv[0]
                + dfd_dfl[1] * dfl_dv[1]
                + (plin_dm * mix + pcst_dm * tot) * dmach_dv
                + plin * (-sa2 * da2_dv * fl[0] ** 2 - sa1 * da1_dv * fl[1] ** 2)
            )
            dfd_dr = (
                dfd_dfl[0] * dfl_dr[0]
                + dfd_dfl[1] * dfl_dr[1]
                + (plin_dm * mix + pcst_dm * tot) * dmach_dr
            )
            dfd_da = [
                dfd_dfl[0] * dfl_da[0][i]
                + dfd_dfl[1] * dfl_da[1][i]
                + plin * (-sa2 * da2_da[i] * fl[0] ** 2 - sa1 * da1_da[i] * fl[1] ** 2)
                for i in range(2)
            ]
            drweight = fl[0] * dr0 + fl[1] * dr1
            dff_dv = (
                drweight @ dvhat_dv
                + np.outer(r0, dfl_dv[0])
                + np.outer(r1, dfl_dv[1])
                - np.outer(vhat, dfd_dv)
                - fd * dvhat_dv
            )
            dff_dr = np.outer(r0, dfl_dr[0]) + np.outer(r1, dfl_dr[1]) - np.outer(vhat, dfd_dr)
            dff_da = tuple(
                r0 * dfl_da[0][i] + r1 * dfl_da[1][i] - vhat * dfd_da[i] for i in range(2)
            )
            dff_dua = tuple(
                (r0 if i == 0 else r1) * dfl_dua[i] - vhat * dfd_dfl[i] * dfl_dua[i]
                for i in range(2)
            )

    # --- translational dynamics
    f_i = t_bi @ u_t + f_aero + f_fins
    f[4:7] = f_i / m + grav + cor + cen
    if want_jac:
        A[4:7, 0] = -f_i / (m * m)
        dgrav = -mu * (np.eye(3) / dist**3 - 3.0 * np.outer(d, d) / dist**5)
        A[4:7, 1:4] = (df_aero_dr + dff_dr) / m + dgrav - wx @ wx
        A[4:7, 4:7] = (df_aero_dv + dff_dv) / m - 2.0 * wx
        for i in range(2):
            dti = dt1 if i == 0 else dt2
            A[4:7, 7 + i] = (dti @ u_t + df_aero_da[i] + dff_da[i]) / m
        if prop_phase:
            B[4:7, 0:3] = t_bi / m
        for i in range(2):
            B[4:7, 3 + i] = dff_dua[i] / m

    # --- rotational dynamics
    r_eng = pp[cm.P_RENG : cm.P_RENG + 3]
    r_fin = pp[cm.P_RFIN : cm.P_RFIN + 3]
    fins_b = t_bi.T @ f_fins
    m_b = np.cross(r_eng, u_t) + t_bi.T @ m_ib + np.cross(r_fin, fins_b)
    jd = pp[cm.P_JDRY : cm.P_JDRY + 3]
    jw = pp[cm.P_JWET : cm.P_JWET + 3]
    dj_dm = (jw - jd) / (pp[cm.P_MWET] - pp[cm.P_MDRY])
    jdiag = jd + (m - pp[cm.P_MDRY]) * dj_dm
    c_damp = pp[cm.P_CDAMP]
    f[9:11] = m_b[0:2] / jdiag[0:2] - c_damp * om
    if want_jac:
        rfx = _skew(r_fin)
        dmb_dv = t_bi.T @ dmib_dv + rfx @ (t_bi.T @ dff_dv)
        dmb_dr = t_bi.T @ dmib_dr + rfx @ (t_bi.T @ dff_dr)
        A[9:11, 0] = -m_b[0:2] * dj_dm[0:2] / jdiag[0:2] ** 2
        A[9:11, 1:4] = dmb_dr[0:2, :] / jdiag[0:2, None]
        A[9:11, 4:7] = dmb_dv[0:2, :] / jdiag[0:2, None]
        for i in range(2):
            dti = dt1 if i == 0 else dt2
            dmb_dai = (
                dti.T @ m_ib
                + t_bi.T @ dmib_da[i]
                + np.cross(r_fin, dti.T @ f_fins + t_bi.T @ dff_da[i])
            )
            A[9:11, 7 + i] = dmb_dai[0:2] / jdiag[0:2]
        A[9:11, 9:11] = -c_damp * np.eye(2)
        if prop_phase:
            rex = _skew(r_eng)
            B[9:11, 0:3] = rex[0:2, :] / jdiag[0:2, None]
        for i in range(2):
            dmb_duai = np.cross(r_fin, t_bi.T @ dff_dua[i])
            B[9:11, 3 + i] = dmb_duai[0:2] / jdiag[0:2]

    # --- constraint-violation integrands, rows 11..16
    s_sc = pp[cm.P_S_ALPHA : cm.P_S_ALPHA + cm.N_CTCS]

    if aero:
        th = math.tanh(speed / pp[cm.P_VSMALL])
        g = th * alpha - pp[cm.P_ALPHA_MAX]
        if g > 0.0:
            f[11 + cm.CTCS_ALPHA] = s_sc[cm.CTCS_ALPHA] * g * g
            if want_jac:
                dth_dv = (1.0 - th * th) / pp[cm.P_VSMALL] * vhat
                A[11 + cm.CTCS_ALPHA, 4:7] = (
                    2.0 * s_sc[cm.CTCS_ALPHA] * g * (dth_dv * alpha + th * dal_dv)
                )
                A[11 + cm.CTCS_ALPHA, 7:9] = 2.0 * s_sc[cm.CTCS_ALPHA] * g * (th * dal_da)

    if prop_phase:
        g = (pp[cm.P_UMIN] - tn) / pp[cm.P_THRUST_NORM]
        if g > 0.0:
            f[11 + cm.CTCS_THRUST] = s_sc[cm.CTCS_THRUST] * g * g
            if want_jac and tn > 1e-12:
                B[11 + cm.CTCS_THRUST, 0:3] = (
                    -2.0 * s_sc[cm.CTCS_THRUST] * g * u_t / (tn * pp[cm.P_THRUST_NORM])
                )

    ua = u[3:5]
    acc = 0.0
    dacc_dr = np.zeros(3)
    dacc_dv = np.zeros(3)
    dacc_da = np.zeros(2)
    for i, (base_lo, base_hi) in enumerate(((cm.G3_LO1, cm.G3_HI1), (cm.G3_LO2, cm.G3_HI2))):
        lo, lo_dm, lo_d1, lo_d2 = _interp3p(blob, idx, base_lo, mach, a1 * RAD2DEG, a2 * RAD2DEG)
        hi, hi_dm, hi_d1, hi_d2 = _interp3p(blob, idx, base_hi, mach, a1 * RAD2DEG, a2 * RAD2DEG)
        z_lo = max(0.0, lo - ua[i])
        z_hi = max(0.0, ua[i] - hi)
        acc += z_lo * z_lo + z_hi * z_hi
        if want_jac:
            if z_lo > 0.0 or z_hi > 0.0:
                B[11 + cm.CTCS_FIN, 3 + i] = 2.0 * s_sc[cm.CTCS_FIN] * (z_hi - z_lo)
            if aero:
                if z_lo > 0.0:
                    dacc_dv += 2.0 * z_lo * (
                        lo_dm * dmach_dv + RAD2DEG * (lo_d1 * da1_dv + lo_d2 * da2_dv)
                    )
                    dacc_dr += 2.0 * z_lo * (lo_dm * dmach_dr)
                    dacc_da += 2.0 * z_lo * (RAD2DEG * (lo_d1 * da1_da + lo_d2 * da2_da))
                if z_hi > 0.0:
                    dacc_dv -= 2.0 * z_hi * (
                        hi_dm * dmach_dv + RAD2DEG * (hi_d1 * da1_dv + hi_d2 * da2_dv)
                    )
                    dacc_dr -= 2.0 * z_hi * (hi_dm * dmach_dr)
                    dacc_da -= 2.0 * z_hi * (RAD2DEG * (hi_d1 * da1_da + hi_d2 * da2_da))
    f[11 + cm.CTCS_FIN] = s_sc[cm.CTCS_FIN] * acc
    if want_jac:
        A[11 + cm.CTCS_FIN, 1:4] = s_sc[cm.CTCS_FIN] * dacc_dr
        A[11 + cm.CTCS_FIN, 4:7] = s_sc[cm.CTCS_FIN] * dacc_dv
        A[11 + cm.CTCS_FIN, 7:9] = s_sc[cm.CTCS_FIN] * dacc_da

    omn = math.sqrt(float(om @ om))
    g = omn - pp[cm.P_OMEGA_MAX]
    if g > 0.0:
        f[11 + cm.CTCS_OMEGA] = s_sc[cm.CTCS_OMEGA] * g * g
        if want_jac and omn > 1e-12:
            A[11 + cm.CTCS_OMEGA, 9:11] = 2.0 * s_sc[cm.CTCS_OMEGA] * g * om / omn

    if aero:
        q = 0.5 * rho * speed**2
        g = q - pp[cm.P_QMAX]
        if g > 0.0:
            f[11 + cm.CTCS_Q] = s_sc[cm.CTCS_Q] * g * g
            if want_jac:
                A[11 + cm.CTCS_Q, 1:4] = 2.0 * s_sc[cm.CTCS_Q] * g * 0.5 * speed**2 * drho_dh * dh_dr
                A[11 + cm.CTCS_Q, 4:7] = 2.0 * s_sc[cm.CTCS_Q] * g * rho * v
        g = q * alpha - pp[cm.P_CHIMAX]
        if g > 0.0:
            f[11 + cm.CTCS_QALPHA] = s_sc[cm.CTCS_QALPHA] * g * g
            if want_jac:
                A[11 + cm.CTCS_QALPHA, 1:4] = (
                    2.0 * s_sc[cm.CTCS_QALPHA] * g * alpha * 0.5 * speed**2 * drho_dh * dh_dr
                )
                A[11 + cm.CTCS_QALPHA, 4:7] = (
                    2.0 * s_sc[cm.CTCS_QALPHA] * g * (alpha * rho * v + q * dal_dv)
                )
                A[11 + cm.CTCS_QALPHA, 7:9] = 2.0 * s_sc[cm.CTCS_QALPHA] * g * q * dal_da

    return f, A, B


# ---------------------------------------------------------------- integrator

_DP_C = np.array([0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1.0 / 5]),
    np.array([3.0 / 40, 9.0 / 40]),
    np.array([44.0 / 45, -56.0 / 15, 32.0 / 9]),
    np.array([19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729]),
    np.array([9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656]),
    np.array([35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84]),
]
_DP_B = _DP_A[6]
_DP_E = np.array(
    [71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200, 22.0 / 525, -1.0 / 40]
)

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2


def propagate_segment_raw(
    x0,
    u0,
    u1,
    sigma,
    sig_col,
    prop_phase,
    dtau,
    params,
    blob,
    idx,
    rtol,
    atol,
    want_jac,
    max_steps=100000,
):
    """Integrate one segment over local tau in [0, dtau].

    Returns (final augmented state (17,), sensitivity (17,23) or None,
    accepted steps, status). Controls interpolate linearly from u0 to u1
    across the segment; `sigma` is the active time dilation (seconds per
    unit tau) and `sig_col` the sensitivity column it owns (21 aerodynamic,
    22 propulsive).
    """
    tb = cm.PackedTables(np.asarray(blob), np.asarray(idx))
    pp = np.asarray(params)
    atol = np.asarray(atol)
    u0 = np.asarray(u0, dtype=float)
    du = np.asarray(u1, dtype=float) - u0
    y = np.zeros(cm.NAUG)
    y[: cm.NX] = x0
    s_mat = None
    if want_jac:
        s_mat = np.zeros((cm.NAUG, cm.NTHETA))
        s_mat[: cm.NX, : cm.NX] = np.eye(cm.NX)

    def eval_rhs(tau_loc, yv, sv):
        w1 = tau_loc / dtau
        uu = u0 + du * w1
        fv, av, bv = rhs_jac(yv[: cm.NX], uu, prop_phase, pp, tb, want_jac)
        fy = sigma * fv
        fs = None
        if want_jac:
            fs = sigma * (av @ sv[: cm.NX, :])
            fs[:, 11:16] += (sigma * (1.0 - w1)) * bv
            fs[:, 16:21] += (sigma * w1) * bv
            fs[:, sig_col] += fv
        return fy, fs

    t = 0.0
    h = dtau / 8.0
    k_y = [None] * 7
    k_s = [None] * 7
    k_y[0], k_s[0] = eval_rhs(t, y, s_mat)
    nsteps = 0
    status = STATUS_OK

    while t < dtau:
        if nsteps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        h = min(h, dtau - t)
        if h < 1e-14 * dtau:
            status = STATUS_STEP_UNDERFLOW
            break
        for i in range(1, 7):
            yi = y + h * sum(_DP_A[i][j] * k_y[j] for j in range(i))
            si = None
            if want_jac:
                si = s_mat + h * sum(_DP_A[i][j] * k_s[j] for j in range(i))
            k_y[i], k_s[i] = eval_rhs(t + _DP_C[i] * h, yi, si)
        y_new = y + h * sum(_DP_B[j] * k_y[j] for j in range(6) if _DP_B[j] != 0.0)
        err_vec = h * sum(_DP_E[j] * k_y[j] for j in range(7) if _DP_E[j] != 0.0)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        if err <= 1.0:
            if want_jac:
                s_mat = s_mat + h * sum(_DP_B[j] * k_s[j] for j in range(6) if _DP_B[j] != 0.0)
            y = y_new
            t += h
            k_y[0] = k_y[6]
            k_s[0] = k_s[6]
            nsteps += 1
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err**-0.2))
            h *= factor
        else:
            h *= max(0.2, 0.9 * err**-0.2)

    return y, s_mat, nsteps, status


FIN_FREEZE_SPEED = 25.0


def fin_bound_linearization(x: np.ndarray, pp: np.ndarray, tb) -> tuple:
    """Nodal fin command bounds and their state gradients.

    Returns (lo (2,), hi (2,), dlo_dx (2,11), dhi_dx (2,11)). Below
    FIN_FREEZE_SPEED the bounds are evaluated but their gradients frozen to
    zero: the per-plane-angle gradients blow up as 1/speed while fin forces
    (proportional to speed^2) stop mattering, so constant bounds are both
    safe and better conditioned.
    """
    blob, idx = tb.blob, tb.idx
    r = x[1:4]
    v = x[4:7]
    speed = math.sqrt(float(v @ v))
    dlo = np.zeros((2, 11))
    dhi = np.zeros((2, 11))

    if speed <= V_EPS:
        lo = np.empty(2)
        hi = np.empty(2)
        for i, (b_lo, b_hi) in enumerate(((cm.G3_LO1, cm.G3_HI1), (cm.G3_LO2, cm.G3_HI2))):
            lo[i] = _interp3p(blob, idx, b_lo, 0.0, 0.0, 0.0)[0]
            hi[i] = _interp3p(blob, idx, b_hi, 0.0, 0.0, 0.0)[0]
        return lo, hi, dlo, dhi

    d = r - pp[cm.P_RCENTER : cm.P_RCENTER + 3]
    dist = math.sqrt(float(d @ d))
    h = dist - pp[cm.P_PLANET_R]
    _, _, c_snd, dc_dh = _atmo(h, pp[cm.P_ATMSCALE], pp[cm.P_PLANET_R])
    dh_dr = d / dist
    vhat = v / speed
    mach = speed / c_snd
    dmach_dv = vhat / c_snd
    dmach_dr = -(speed / c_snd**2) * dc_dh * dh_dr

    t_bi, dt1, dt2 = _attitude_mats(x[7], x[8])
    wb = -(t_bi.T @ vhat)
    dvhat_dv = (np.eye(3) - np.outer(vhat, vhat)) / speed
    dwb_dv = -(t_bi.T @ dvhat_dv)
    dwb_da = (-(dt1.T @ vhat), -(dt2.T @ vhat))
    a1 = math.atan2(wb[0], wb[2])
    a2 = math.atan2(wb[1], wb[2])
    den1 = wb[0] * wb[0] + wb[2] * wb[2]
    den2 = wb[1] * wb[1] + wb[2] * wb[2]
    da1_dv = np.zeros(3)
    da2_dv = np.zeros(3)
    da1_da = np.zeros(2)
    da2_da = np.zeros(2)
    frozen = speed < FIN_FREEZE_SPEED
    if not frozen:
        if den1 > 1e-14:
            g1 = np.array([wb[2], 0.0, -wb[0]]) / den1
            da1_dv = g1 @ dwb_dv
            da1_da = np.array([g1 @ dwb_da[0], g1 @ dwb_da[1]])
        if den2 > 1e-14:
            g2 = np.array([0.0, wb[2], -wb[1]]) / den2
            da2_dv = g2 @ dwb_dv
            da2_da = np.array([g2 @ dwb_da[0], g2 @ dwb_da[1]])

    lo = np.empty(2)
    hi = np.empty(2)
    for i, (b_lo, b_hi) in enumerate(((cm.G3_LO1, cm.G3_HI1), (cm.G3_LO2, cm.G3_HI2))):
        for which, base, out, dout in (("lo", b_lo, lo, dlo), ("hi", b_hi, hi, dhi)):
            val, g_m, g_1, g_2 = _interp3p(
                blob, idx, base, mach, a1 * RAD2DEG, a2 * RAD2DEG
            )
            out[i] = val
            if not frozen:
                dout[i, 1:4] = g_m * dmach_dr
                dout[i, 4:7] = (
                    g_m * dmach_dv + RAD2DEG * (g_1 * da1_dv + g_2 * da2_dv)
                )
                dout[i, 7:9] = RAD2DEG * (g_1 * da1_da + g_2 * da2_da)
    return lo, hi, dlo, dhi


def path_constraint_linearization(
    x: np.ndarray, u: np.ndarray, prop_phase: int, pp: np.ndarray, tb
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodal path-constraint values and gradients, normalized by their limits.

    Rows: [alpha rolloff, thrust-min (propulsive only), dynamic pressure,
    q-alpha product], each as g <= 0 with g scaled by its limit so violations
    are O(1). Used for the nodal helper constraints that give the subproblem
    first-order awareness of the path boundaries between CTCS activations.
    """
    blob, idx = tb.blob, tb.idx
    g = np.full(4, -1.0)
    dgx = np.zeros((4, 11))
    dgu = np.zeros((4, 5))
    r = x[1:4]
    v = x[4:7]
    speed = math.sqrt(float(v @ v))

    d = r - pp[cm.P_RCENTER : cm.P_RCENTER + 3]
    dist = math.sqrt(float(d @ d))
    h = dist - pp[cm.P_PLANET_R]
    rho, drho_dh, _, _ = _atmo(h, pp[cm.P_ATMSCALE], pp[cm.P_PLANET_R])
    dh_dr = d / dist

    alpha = 0.0
    dal_dv = np.zeros(3)
    dal_da = np.zeros(2)
    if speed > V_EPS:
        vhat = v / speed
        t_bi, dt1, dt2 = _attitude_mats(x[7], x[8])
        bz = t_bi[:, 2]
        qcos = max(-1.0, min(1.0, float(-bz @ vhat)))
        alpha = math.acos(qcos)
        sin2 = 1.0 - qcos * qcos
        if sin2 > 1e-14:
            dal_dq = -1.0 / math.sqrt(sin2)
            dal_dv = dal_dq * (-(bz + qcos * vhat) / speed)
            dal_da = dal_dq * np.array(
                [-(vhat @ dt1[:, 2]), -(vhat @ dt2[:, 2])]
            )
        th = math.tanh(speed / pp[cm.P_VSMALL])
        amax = pp[cm.P_ALPHA_MAX]
        g[0] = (th * alpha - amax) / amax
        dth_dv = (1.0 - th * th) / pp[cm.P_VSMALL] * vhat
        dgx[0, 4:7] = (dth_dv * alpha + th * dal_dv) / amax
        dgx[0, 7:9] = th * dal_da / amax

    if prop_phase:
        u_t = u[0:3]
        tn = math.sqrt(float(u_t @ u_t))
        umax = pp[cm.P_THRUST_NORM]
        g[1] = (pp[cm.P_UMIN] - tn) / umax
        if tn > 1e-12:
            dgu[1, 0:3] = -u_t / (tn * umax)

    if speed > V_EPS:
        q = 0.5 * rho * speed**2
        qmax = pp[cm.P_QMAX]
        chimax = pp[cm.P_CHIMAX]
        g[2] = (q - qmax) / qmax
        dgx[2, 1:4] = 0.5 * speed**2 * drho_dh * dh_dr / qmax
        dgx[2, 4:7] = rho * v / qmax
        g[3] = (q * alpha - chimax) / chimax
        dgx[3, 1:4] = alpha * 0.5 * speed**2 * drho_dh * dh_dr / chimax
        dgx[3, 4:7] = (alpha * rho * v + q * dal_dv) / chimax
        dgx[3, 7:9] = q * dal_da / chimax

    return g, dgx, dgu
