# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled propagation kernel: a C-speed port of kernels.pure.

Same packed layouts, same Dormand-Prince 5(4) controller, same guards; the
parity test holds the two backends together. Everything below is plain C
loops over stack buffers -- no Python objects inside the hot path -- and the
GIL is released for the whole segment, so shooting segments can run on real
threads.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, tan, acos, atan2, exp, pow, tanh, fabs, fmin, fmax

cnp.import_array()

cdef double RAD2DEG = 180.0 / 3.14159265358979323846
cdef double V_EPS = 1e-9

# ISA layer tables, initialized identically to aeroreach.environment.
cdef double[7] LAYER_H
cdef double[7] LAYER_T
cdef double[7] LAYER_P
cdef double[7] LAYER_LAPSE
cdef double ATM_CEILING = 84852.0
cdef double R_AIR = 287.05287
cdef double GAMMA_AIR = 1.4
cdef double G0_STD = 9.80665

# initialize from the environment module to keep the numbers single-sourced
from .. import environment as _envmod
cdef int _i
for _i in range(7):
    LAYER_H[_i] = _envmod._LAYER_H[_i]
    LAYER_T[_i] = _envmod._LAYER_T[_i]
    LAYER_P[_i] = _envmod._LAYER_P[_i]
    LAYER_LAPSE[_i] = _envmod._LAYER_LAPSE[_i]

# parameter slots (mirror of kernels.common)
cdef enum:
    P_MDRY = 0
    P_MWET = 1
    P_JDRY = 2
    P_JWET = 5
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
    P_RENG = 19
    P_RFIN = 22
    P_MU = 25
    P_OMEGA_P = 26
    P_RCENTER = 29
    P_RHO0 = 32
    P_ATMSCALE = 33
    P_PLANET_R = 34
    P_S_ALPHA = 35
    P_THRUST_NORM = 41

cdef enum:
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

cdef enum:
    NX = 11
    NCTCS = 6
    NAUG = 17
    NU = 5
    NTH = 23

cdef int CTCS_ALPHA = 0, CTCS_THRUST = 1, CTCS_FIN = 2, CTCS_OMEGA = 3, CTCS_Q = 4, CTCS_QALPHA = 5

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2
cdef int _ST_OK = 0
cdef int _ST_UNDERFLOW = 1
cdef int _ST_MAXSTEPS = 2


def backend_name():
    return "compiled"


cdef inline void _cross(const double* a, const double* b, double* out) noexcept nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline double _dot3(const double* a, const double* b) noexcept nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef void _bracket(const double* b, long n, double x, long* i_out, double* s_out, double* inv_out) noexcept nogil:
    cdef long lo, hi, mid
    if x <= b[0]:
        i_out[0] = 0
        s_out[0] = 0.0
        inv_out[0] = 0.0 if x < b[0] else 1.0 / (b[1] - b[0])
        return
    if x >= b[n - 1]:
        i_out[0] = n - 2
        s_out[0] = 1.0
        inv_out[0] = 0.0
        return
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if b[mid] <= x:
            lo = mid
        else:
            hi = mid
    i_out[0] = lo
    s_out[0] = (x - b[lo]) / (b[lo + 1] - b[lo])
    inv_out[0] = 1.0 / (b[lo + 1] - b[lo])


cdef void _interp2p(const double* blob, const long* idx, int base, double a, double m,
                    double* val, double* da, double* dm) noexcept nogil:
    cdef long na = idx[base], nm = idx[base + 1]
    cdef const double* ab = blob + idx[base + 2]
    cdef const double* mb = blob + idx[base + 3]
    cdef const double* vals = blob + idx[base + 4]
    cdef long ia, im
    cdef double sa, inva, sm, invm, v00, v01, v10, v11, v0, v1
    _bracket(ab, na, a, &ia, &sa, &inva)
    _bracket(mb, nm, m, &im, &sm, &invm)
    v00 = vals[ia * nm + im]
    v01 = vals[ia * nm + im + 1]
    v10 = vals[(ia + 1) * nm + im]
    v11 = vals[(ia + 1) * nm + im + 1]
    v0 = v00 + sm * (v01 - v00)
    v1 = v10 + sm * (v11 - v10)
    val[0] = v0 + sa * (v1 - v0)
    da[0] = (v1 - v0) * inva
    dm[0] = ((v01 - v00) + sa * ((v11 - v10) - (v01 - v00))) * invm


cdef void _interp3p(const double* blob, const long* idx, int base, double m, double a1, double a2,
                    double* val, double* dm, double* da1, double* da2) noexcept nogil:
    cdef long nm = idx[base], n1 = idx[base + 1], n2 = idx[base + 2]
    cdef const double* mb = blob + idx[base + 3]
    cdef const double* b1 = blob + idx[base + 4]
    cdef const double* b2 = blob + idx[base + 5]
    cdef const double* vals = blob + idx[base + 6]
    cdef long im, i1, i2, km, k1
    cdef double sm, invm, s1, inv1, s2, inv2, lo, hi
    cdef double c2[2][2]
    cdef double d2[2][2]
    cdef double c1[2]
    cdef double d1[2]
    cdef double dd2[2]
    _bracket(mb, nm, m, &im, &sm, &invm)
    _bracket(b1, n1, a1, &i1, &s1, &inv1)
    _bracket(b2, n2, a2, &i2, &s2, &inv2)
    for km in range(2):
        for k1 in range(2):
            lo = vals[((im + km) * n1 + i1 + k1) * n2 + i2]
            hi = vals[((im + km) * n1 + i1 + k1) * n2 + i2 + 1]
            c2[km][k1] = lo + s2 * (hi - lo)
            d2[km][k1] = (hi - lo) * inv2
    for km in range(2):
        c1[km] = c2[km][0] + s1 * (c2[km][1] - c2[km][0])
        d1[km] = (c2[km][1] - c2[km][0]) * inv1
        dd2[km] = d2[km][0] + s1 * (d2[km][1] - d2[km][0])
    val[0] = c1[0] + sm * (c1[1] - c1[0])
    dm[0] = (c1[1] - c1[0]) * invm
    da1[0] = d1[0] + sm * (d1[1] - d1[0])
    da2[0] = dd2[0] + sm * (dd2[1] - dd2[0])


cdef void _interp1p(const double* blob, const long* idx, int base, double m,
                    double* val, double* dm) noexcept nogil:
    cdef long n = idx[base]
    cdef const double* mb = blob + idx[base + 1]
    cdef const double* vals = blob + idx[base + 2]
    cdef long i
    cdef double s, inv
    _bracket(mb, n, m, &i, &s, &inv)
    val[0] = vals[i] + s * (vals[i + 1] - vals[i])
    dm[0] = (vals[i + 1] - vals[i]) * inv


cdef void _atmo(double h_geom, double atm_scale, double planet_r,
                double* rho, double* drho_dh, double* c, double* dc_dh) noexcept nogil:
    cdef double gp = planet_r * h_geom / (planet_r + h_geom)
    cdef double dgp = (planet_r / (planet_r + h_geom)) * (planet_r / (planet_r + h_geom))
    cdef double hh = atm_scale * gp
    cdef double dh = atm_scale * dgp
    cdef double t_top, t_b, p_b, lapse, t, p, dp_dh
    cdef long i
    if hh >= ATM_CEILING:
        t_top = LAYER_T[6] + LAYER_LAPSE[6] * (ATM_CEILING - LAYER_H[6])
        rho[0] = 0.0
        drho_dh[0] = 0.0
        c[0] = sqrt(GAMMA_AIR * R_AIR * t_top)
        dc_dh[0] = 0.0
        return
    if hh < -100.0:
        hh = -100.0
        dh = 0.0
    i = 6
    while i > 0 and LAYER_H[i] > hh:
        i -= 1
    t_b = LAYER_T[i]
    p_b = LAYER_P[i]
    lapse = LAYER_LAPSE[i]
    t = t_b + lapse * (hh - LAYER_H[i])
    if lapse == 0.0:
        p = p_b * exp(-G0_STD * (hh - LAYER_H[i]) / (R_AIR * t_b))
        dp_dh = -p * G0_STD / (R_AIR * t_b)
    else:
        p = p_b * pow(t / t_b, -G0_STD / (R_AIR * lapse))
        dp_dh = -p * G0_STD / (R_AIR * t)
    rho[0] = p / (R_AIR * t)
    drho_dh[0] = (dp_dh - rho[0] * R_AIR * lapse) / (R_AIR * t) * dh
    c[0] = sqrt(GAMMA_AIR * R_AIR * t)
    dc_dh[0] = GAMMA_AIR * R_AIR * lapse / (2.0 * c[0]) * dh


cdef void _wind_apply(const double* vhat, const double* p, double* rp, double* dmat) noexcept nogil:
    # rp = R(vhat) p; dmat (3x3 row-major) = d(rp)/d(vhat)
    cdef double w[3]
    cdef double wxp[3]
    cdef double wwxp[3]
    cdef double dw[3]
    cdef double t1[3]
    cdef double t2[3]
    cdef double t3[3]
    cdef double t4[3]
    cdef double opc
    cdef int j, k
    cdef bint clamped
    w[0] = vhat[1]
    w[1] = -vhat[0]
    w[2] = 0.0
    opc = 1.0 - vhat[2]
    clamped = opc < 1e-3
    if clamped:
        opc = 1e-3
    _cross(w, p, wxp)
    _cross(w, wxp, wwxp)
    for k in range(3):
        rp[k] = p[k] + wxp[k] + wwxp[k] / opc
    for j in range(3):
        dw[0] = 0.0
        dw[1] = 0.0
        dw[2] = 0.0
        if j == 0:
            dw[1] = -1.0
        elif j == 1:
            dw[0] = 1.0
        _cross(dw, p, t1)
        _cross(dw, wxp, t2)
        _cross(dw, p, t3)
        _cross(w, t3, t4)
        for k in range(3):
            dmat[k * 3 + j] = t1[k] + (t2[k] + t4[k]) / opc
        if j == 2 and not clamped:
            for k in range(3):
                dmat[k * 3 + j] += wwxp[k] / (opc * opc)


cdef void _rhs_jac(const double* x, const double* u, int prop_phase,
                   const double* pp, const double* blob, const long* idx,
                   bint want_jac, double* f, double* A, double* B) noexcept nogil:
    """f (17), A (17*11 row-major), B (17*5 row-major). A/B zeroed here."""
    cdef int i, j, k
    cdef double m = x[0]
    cdef double r[3]
    cdef double v[3]
    cdef double om[2]
    for i in range(3):
        r[i] = x[1 + i]
        v[i] = x[4 + i]
    om[0] = x[9]
    om[1] = x[10]

    for i in range(NAUG):
        f[i] = 0.0
    if want_jac:
        for i in range(NAUG * NX):
            A[i] = 0.0
        for i in range(NAUG * NU):
            B[i] = 0.0

    # thrust / mass flow
    cdef double u_t[3]
    if prop_phase:
        for i in range(3):
            u_t[i] = u[i]
    else:
        for i in range(3):
            u_t[i] = 0.0
    cdef double tn = sqrt(_dot3(u_t, u_t))
    cdef double g0isp = pp[P_G0] * pp[P_ISP]
    f[0] = -tn / g0isp
    if want_jac and prop_phase and tn > 1e-12:
        for i in range(3):
            B[0 * NU + i] = -u_t[i] / (tn * g0isp)

    # kinematics
    for i in range(3):
        f[1 + i] = v[i]
    f[7] = om[0]
    f[8] = om[1]
    if want_jac:
        for i in range(3):
            A[(1 + i) * NX + 4 + i] = 1.0
        A[7 * NX + 9] = 1.0
        A[8 * NX + 10] = 1.0

    # gravity + frame
    cdef double d[3]
    cdef double wp[3]
    for i in range(3):
        d[i] = r[i] - pp[P_RCENTER + i]
        wp[i] = pp[P_OMEGA_P + i]
    cdef double dist = sqrt(_dot3(d, d))
    cdef double mu = pp[P_MU]
    cdef double grav[3]
    cdef double wxv[3]
    cdef double wxd[3]
    cdef double cen[3]
    for i in range(3):
        grav[i] = -mu / (dist * dist * dist) * d[i]
    _cross(wp, v, wxv)
    _cross(wp, d, wxd)
    _cross(wp, wxd, cen)

    # atmosphere
    cdef double h = dist - pp[P_PLANET_R]
    cdef double rho, drho_dh, c_snd, dc_dh
    _atmo(h, pp[P_ATMSCALE], pp[P_PLANET_R], &rho, &drho_dh, &c_snd, &dc_dh)
    cdef double dh_dr[3]
    for i in range(3):
        dh_dr[i] = d[i] / dist
    cdef double rho_r = rho / pp[P_RHO0]
    cdef double drhor_dr[3]
    for i in range(3):
        drhor_dr[i] = (drho_dh / pp[P_RHO0]) * dh_dr[i]

    # attitude
    cdef double c1 = cos(x[7]), s1 = sin(x[7]), c2 = cos(x[8]), s2 = sin(x[8])
    cdef double T[9]
    cdef double dT1[9]
    cdef double dT2[9]
    T[0] = c2;        T[1] = 0.0;  T[2] = s2
    T[3] = s1 * s2;   T[4] = c1;   T[5] = -s1 * c2
    T[6] = -c1 * s2;  T[7] = s1;   T[8] = c1 * c2
    dT1[0] = 0.0;     dT1[1] = 0.0; dT1[2] = 0.0
    dT1[3] = c1 * s2; dT1[4] = -s1; dT1[5] = -c1 * c2
    dT1[6] = s1 * s2; dT1[7] = c1;  dT1[8] = -s1 * c2
    dT2[0] = -s2;     dT2[1] = 0.0; dT2[2] = c2
    dT2[3] = s1 * c2; dT2[4] = 0.0; dT2[5] = s1 * s2
    dT2[6] = -c1 * c2; dT2[7] = 0.0; dT2[8] = -c1 * s2
    cdef double bz[3]
    cdef double dbz[2][3]
    bz[0] = T[2]
    bz[1] = T[5]
    bz[2] = T[8]
    dbz[0][0] = dT1[2]
    dbz[0][1] = dT1[5]
    dbz[0][2] = dT1[8]
    dbz[1][0] = dT2[2]
    dbz[1][1] = dT2[5]
    dbz[1][2] = dT2[8]

    cdef double speed = sqrt(_dot3(v, v))
    cdef bint aero = speed > V_EPS

    # aero accumulators (zeroed)
    cdef double f_aero[3]
    cdef double df_aero_dr[9]
    cdef double df_aero_dv[9]
    cdef double df_aero_da[2][3]
    cdef double f_fins[3]
    cdef double dff_dr[9]
    cdef double dff_dv[9]
    cdef double dff_da[2][3]
    cdef double dff_dua[2][3]
    cdef double m_ib[3]
    cdef double dmib_dr[9]
    cdef double dmib_dv[9]
    cdef double dmib_da[2][3]
    for i in range(3):
        f_aero[i] = 0.0
        f_fins[i] = 0.0
        m_ib[i] = 0.0
        for j in range(2):
            df_aero_da[j][i] = 0.0
            dff_da[j][i] = 0.0
            dff_dua[j][i] = 0.0
            dmib_da[j][i] = 0.0
    for i in range(9):
        df_aero_dr[i] = 0.0
        df_aero_dv[i] = 0.0
        dff_dr[i] = 0.0
        dff_dv[i] = 0.0
        dmib_dr[i] = 0.0
        dmib_dv[i] = 0.0

    cdef double alpha = 0.0
    cdef double dal_dv[3]
    cdef double dal_da[2]
    cdef double mach = 0.0
    cdef double dmach_dv[3]
    cdef double dmach_dr[3]
    cdef double a1 = 0.0, a2 = 0.0
    cdef double da1_dv[3]
    cdef double da2_dv[3]
    cdef double da1_da[2]
    cdef double da2_da[2]
    for i in range(3):
        dal_dv[i] = 0.0
        dmach_dv[i] = 0.0
        dmach_dr[i] = 0.0
        da1_dv[i] = 0.0
        da2_dv[i] = 0.0
    dal_da[0] = dal_da[1] = 0.0
    da1_da[0] = da1_da[1] = 0.0
    da2_da[0] = da2_da[1] = 0.0

    cdef double vhat[3]
    cdef double dvhat_dv[9]
    cdef double qcos, sin2, dal_dq
    cdef double wb[3]
    cdef double dwb_dv[9]
    cdef double dwb_da[2][3]
    cdef double den1, den2
    cdef double da1_dwb[3]
    cdef double da2_dwb[3]
    cdef double a_deg, a1_deg, a2_deg
    cdef double cd, cd_dad, cd_dm, cl, cl_dad, cl_dm, cmo, cmo_dad, cmo_dm
    cdef double cd_da, cl_da, cmo_da
    cdef double cbz[3]
    cdef double xl[3]
    cdef double dxl_dv[9]
    cdef double dxl_da[2][3]
    cdef double half_rr, vdotbz
    cdef double cl_chain_v[3]
    cdef double cd_chain_v[3]
    cdef double cm_chain_v[3]
    cdef double tmp3[3]
    cdef double tmp3b[3]
    cdef double ua[2]
    cdef double fl[2]
    cdef double dfl_dv[2][3]
    cdef double dfl_dr[2][3]
    cdef double dfl_da[2][2]
    cdef double dfl_dua[2]
    cdef double kf, k_dm, k_d1, k_d2
    cdef double plin, plin_dm, pcst, pcst_dm
    cdef double ca1v, sa1v, ca2v, sa2v, mixv, totv, fd
    cdef double dfd_dfl[2]
    cdef double dfd_dv[3]
    cdef double dfd_dr[3]
    cdef double dfd_da[2]
    cdef double ex[3]
    cdef double ey[3]
    cdef double r0[3]
    cdef double r1[3]
    cdef double dr0[9]
    cdef double dr1[9]
    cdef double dk_dv[3]
    cdef int base
    ua[0] = u[3]
    ua[1] = u[4]

    if aero:
        for i in range(3):
            vhat[i] = v[i] / speed
        for i in range(3):
            for j in range(3):
                dvhat_dv[i * 3 + j] = ((1.0 if i == j else 0.0) - vhat[i] * vhat[j]) / speed
        mach = speed / c_snd
        for i in range(3):
            dmach_dv[i] = vhat[i] / c_snd
            dmach_dr[i] = -(speed / (c_snd * c_snd)) * dc_dh * dh_dr[i]

        qcos = -_dot3(bz, vhat)
        if qcos > 1.0:
            qcos = 1.0
        if qcos < -1.0:
            qcos = -1.0
        alpha = acos(qcos)
        sin2 = 1.0 - qcos * qcos
        if sin2 > 1e-14:
            dal_dq = -1.0 / sqrt(sin2)
            for i in range(3):
                dal_dv[i] = dal_dq * (-(bz[i] + qcos * vhat[i]) / speed)
            dal_da[0] = dal_dq * (-_dot3(vhat, dbz[0]))
            dal_da[1] = dal_dq * (-_dot3(vhat, dbz[1]))

        for i in range(3):
            wb[i] = -(T[0 * 3 + i] * vhat[0] + T[1 * 3 + i] * vhat[1] + T[2 * 3 + i] * vhat[2])
        for i in range(3):
            for j in range(3):
                dwb_dv[i * 3 + j] = -(
                    T[0 * 3 + i] * dvhat_dv[0 * 3 + j]
                    + T[1 * 3 + i] * dvhat_dv[1 * 3 + j]
                    + T[2 * 3 + i] * dvhat_dv[2 * 3 + j]
                )
        for i in range(3):
            dwb_da[0][i] = -(dT1[0 * 3 + i] * vhat[0] + dT1[1 * 3 + i] * vhat[1] + dT1[2 * 3 + i] * vhat[2])
            dwb_da[1][i] = -(dT2[0 * 3 + i] * vhat[0] + dT2[1 * 3 + i] * vhat[1] + dT2[2 * 3 + i] * vhat[2])
        den1 = wb[0] * wb[0] + wb[2] * wb[2]
        den2 = wb[1] * wb[1] + wb[2] * wb[2]
        a1 = atan2(wb[0], wb[2])
        a2 = atan2(wb[1], wb[2])
        if den1 > 1e-14:
            da1_dwb[0] = wb[2] / den1
            da1_dwb[1] = 0.0
            da1_dwb[2] = -wb[0] / den1
            for j in range(3):
                da1_dv[j] = da1_dwb[0] * dwb_dv[0 * 3 + j] + da1_dwb[2] * dwb_dv[2 * 3 + j]
            da1_da[0] = da1_dwb[0] * dwb_da[0][0] + da1_dwb[2] * dwb_da[0][2]
            da1_da[1] = da1_dwb[0] * dwb_da[1][0] + da1_dwb[2] * dwb_da[1][2]
        if den2 > 1e-14:
            da2_dwb[0] = 0.0
            da2_dwb[1] = wb[2] / den2
            da2_dwb[2] = -wb[1] / den2
            for j in range(3):
                da2_dv[j] = da2_dwb[1] * dwb_dv[1 * 3 + j] + da2_dwb[2] * dwb_dv[2 * 3 + j]
            da2_da[0] = da2_dwb[1] * dwb_da[0][1] + da2_dwb[2] * dwb_da[0][2]
            da2_da[1] = da2_dwb[1] * dwb_da[1][1] + da2_dwb[2] * dwb_da[1][2]

        a_deg = alpha * RAD2DEG
        a1_deg = a1 * RAD2DEG
        a2_deg = a2 * RAD2DEG
        _interp2p(blob, idx, G2_CD, a_deg, mach, &cd, &cd_dad, &cd_dm)
        _interp2p(blob, idx, G2_CL, a_deg, mach, &cl, &cl_dad, &cl_dm)
        _interp2p(blob, idx, G2_CM, a_deg, mach, &cmo, &cmo_dad, &cmo_dm)
        cd_da = cd_dad * RAD2DEG
        cl_da = cl_dad * RAD2DEG
        cmo_da = cmo_dad * RAD2DEG

        _cross(bz, v, cbz)
        vdotbz = _dot3(v, bz)
        for i in range(3):
            xl[i] = bz[i] * speed * speed - v[i] * vdotbz
        half_rr = 0.5 * rho_r
        for i in range(3):
            f_aero[i] = half_rr * cl * xl[i] - half_rr * cd * speed * v[i]
            m_ib[i] = half_rr * cmo * speed * cbz[i]

        if want_jac:
            for i in range(3):
                for j in range(3):
                    dxl_dv[i * 3 + j] = 2.0 * bz[i] * v[j] - (1.0 if i == j else 0.0) * vdotbz - v[i] * bz[j]
            for k in range(2):
                for i in range(3):
                    dxl_da[k][i] = dbz[k][i] * speed * speed - v[i] * _dot3(v, dbz[k])
            for j in range(3):
                cl_chain_v[j] = cl_da * dal_dv[j] + cl_dm * dmach_dv[j]
                cd_chain_v[j] = cd_da * dal_dv[j] + cd_dm * dmach_dv[j]
                cm_chain_v[j] = cmo_da * dal_dv[j] + cmo_dm * dmach_dv[j]
            for i in range(3):
                for j in range(3):
                    df_aero_dv[i * 3 + j] = half_rr * (
                        xl[i] * cl_chain_v[j]
                        + cl * dxl_dv[i * 3 + j]
                        - speed * v[i] * cd_chain_v[j]
                        - cd * (v[i] * vhat[j] + (speed if i == j else 0.0))
                    )
                    dmib_dv[i * 3 + j] = half_rr * (
                        speed * cbz[i] * cm_chain_v[j] + cmo * cbz[i] * vhat[j]
                    )
            # cmo * speed * d(cbz)/dv = cmo*speed*[bz]x
            dmib_dv[0 * 3 + 1] += half_rr * cmo * speed * (-bz[2])
            dmib_dv[0 * 3 + 2] += half_rr * cmo * speed * (bz[1])
            dmib_dv[1 * 3 + 0] += half_rr * cmo * speed * (bz[2])
            dmib_dv[1 * 3 + 2] += half_rr * cmo * speed * (-bz[0])
            dmib_dv[2 * 3 + 0] += half_rr * cmo * speed * (-bz[1])
            dmib_dv[2 * 3 + 1] += half_rr * cmo * speed * (bz[0])
            for i in range(3):
                for j in range(3):
                    df_aero_dr[i * 3 + j] = 0.5 * (
                        xl[i] * (cl * drhor_dr[j] + rho_r * cl_dm * dmach_dr[j])
                        - speed * v[i] * (cd * drhor_dr[j] + rho_r * cd_dm * dmach_dr[j])
                    )
                    dmib_dr[i * 3 + j] = 0.5 * speed * cbz[i] * (
                        cmo * drhor_dr[j] + rho_r * cmo_dm * dmach_dr[j]
                    )
            for k in range(2):
                _cross(dbz[k], v, tmp3)
                for i in range(3):
                    df_aero_da[k][i] = half_rr * (
                        xl[i] * cl_da * dal_da[k]
                        + cl * dxl_da[k][i]
                        - speed * v[i] * cd_da * dal_da[k]
                    )
                    dmib_da[k][i] = half_rr * (
                        speed * cbz[i] * cmo_da * dal_da[k] + cmo * speed * tmp3[i]
                    )

        # fins
        for k in range(2):
            base = G3_SCALE1 if k == 0 else G3_SCALE2
            _interp3p(blob, idx, base, mach, a1_deg, a2_deg, &kf, &k_dm, &k_d1, &k_d2)
            fl[k] = ua[k] * speed * speed * kf
            dfl_dua[k] = speed * speed * kf
            if want_jac:
                for j in range(3):
                    dk_dv[j] = k_dm * dmach_dv[j] + RAD2DEG * (k_d1 * da1_dv[j] + k_d2 * da2_dv[j])
                    dfl_dv[k][j] = ua[k] * (2.0 * v[j] * kf + speed * speed * dk_dv[j])
                    dfl_dr[k][j] = ua[k] * speed * speed * (k_dm * dmach_dr[j])
                for j in range(2):
                    dfl_da[k][j] = ua[k] * speed * speed * (
                        RAD2DEG * (k_d1 * (da1_da[j]) + k_d2 * (da2_da[j]))
                    )

        _interp1p(blob, idx, T1_PLIN, mach, &plin, &plin_dm)
        _interp1p(blob, idx, T1_PCST, mach, &pcst, &pcst_dm)
        ca1v = cos(a1)
        sa1v = sin(a1)
        ca2v = cos(a2)
        sa2v = sin(a2)
        mixv = ca2v * fl[0] * fl[0] + ca1v * fl[1] * fl[1]
        totv = fl[0] * fl[0] + fl[1] * fl[1]
        fd = plin * mixv + pcst * totv
        dfd_dfl[0] = 2.0 * fl[0] * (plin * ca2v + pcst)
        dfd_dfl[1] = 2.0 * fl[1] * (plin * ca1v + pcst)

        ex[0] = 1.0
        ex[1] = 0.0
        ex[2] = 0.0
        ey[0] = 0.0
        ey[1] = 1.0
        ey[2] = 0.0
        _wind_apply(vhat, ex, r0, dr0)
        _wind_apply(vhat, ey, r1, dr1)
        for i in range(3):
            f_fins[i] = fl[0] * r0[i] + fl[1] * r1[i] - vhat[i] * fd

        if want_jac:
            for j in range(3):
                dfd_dv[j] = (
                    dfd_dfl[0] * dfl_dv[0][j]
                    + dfd_dfl[1] * dfl_dv[1][j]
                    + (plin_dm * mixv + pcst_dm * totv) * dmach_dv[j]
                    + plin * (-sa2v * da2_dv[j] * fl[0] * fl[0] - sa1v * da1_dv[j] * fl[1] * fl[1])
                )
                dfd_dr[j] = (
                    dfd_dfl[0] * dfl_dr[0][j]
                    + dfd_dfl[1] * dfl_dr[1][j]
                    + (plin_dm * mixv + pcst_dm * totv) * dmach_dr[j]
                )
            for k in range(2):
                dfd_da[k] = (
                    dfd_dfl[0] * dfl_da[0][k]
                    + dfd_dfl[1] * dfl_da[1][k]
                    + plin * (-sa2v * da2_da[k] * fl[0] * fl[0] - sa1v * da1_da[k] * fl[1] * fl[1])
                )
            for i in range(3):
                for j in range(3):
                    # (fl0*dr0 + fl1*dr1) @ dvhat_dv
                    dff_dv[i * 3 + j] = (
                        (fl[0] * dr0[i * 3 + 0] + fl[1] * dr1[i * 3 + 0]) * dvhat_dv[0 * 3 + j]
                        + (fl[0] * dr0[i * 3 + 1] + fl[1] * dr1[i * 3 + 1]) * dvhat_dv[1 * 3 + j]
                        + (fl[0] * dr0[i * 3 + 2] + fl[1] * dr1[i * 3 + 2]) * dvhat_dv[2 * 3 + j]
                        + r0[i] * dfl_dv[0][j]
                        + r1[i] * dfl_dv[1][j]
                        - vhat[i] * dfd_dv[j]
                        - fd * dvhat_dv[i * 3 + j]
                    )
                    dff_dr[i * 3 + j] = (
                        r0[i] * dfl_dr[0][j] + r1[i] * dfl_dr[1][j] - vhat[i] * dfd_dr[j]
                    )
            for k in range(2):
                for i in range(3):
                    dff_da[k][i] = r0[i] * dfl_da[0][k] + r1[i] * dfl_da[1][k] - vhat[i] * dfd_da[k]
                    dff_dua[k][i] = (
                        (r0[i] if k == 0 else r1[i]) * dfl_dua[k]
                        - vhat[i] * dfd_dfl[k] * dfl_dua[k]
                    )

    # translational dynamics
    cdef double f_i[3]
    for i in range(3):
        f_i[i] = (
            T[i * 3 + 0] * u_t[0] + T[i * 3 + 1] * u_t[1] + T[i * 3 + 2] * u_t[2]
            + f_aero[i] + f_fins[i]
        )
        f[4 + i] = f_i[i] / m + grav[i] - 2.0 * wxv[i] - cen[i]
    cdef double dist3 = dist * dist * dist
    cdef double dist5 = dist3 * dist * dist
    cdef double wxm[9]
    cdef double wx2[9]
    if want_jac:
        # skew(wp) and its square
        wxm[0] = 0.0; wxm[1] = -wp[2]; wxm[2] = wp[1]
        wxm[3] = wp[2]; wxm[4] = 0.0; wxm[5] = -wp[0]
        wxm[6] = -wp[1]; wxm[7] = wp[0]; wxm[8] = 0.0
        for i in range(3):
            for j in range(3):
                wx2[i * 3 + j] = (
                    wxm[i * 3 + 0] * wxm[0 * 3 + j]
                    + wxm[i * 3 + 1] * wxm[1 * 3 + j]
                    + wxm[i * 3 + 2] * wxm[2 * 3 + j]
                )
        for i in range(3):
            A[(4 + i) * NX + 0] = -f_i[i] / (m * m)
            for j in range(3):
                A[(4 + i) * NX + 1 + j] = (
                    (df_aero_dr[i * 3 + j] + dff_dr[i * 3 + j]) / m
                    - mu * ((1.0 if i == j else 0.0) / dist3 - 3.0 * d[i] * d[j] / dist5)
                    - wx2[i * 3 + j]
                )
                A[(4 + i) * NX + 4 + j] = (
                    (df_aero_dv[i * 3 + j] + dff_dv[i * 3 + j]) / m - 2.0 * wxm[i * 3 + j]
                )
            for k in range(2):
                A[(4 + i) * NX + 7 + k] = (
                    ((dT1[i * 3 + 0] if k == 0 else dT2[i * 3 + 0]) * u_t[0]
                     + (dT1[i * 3 + 1] if k == 0 else dT2[i * 3 + 1]) * u_t[1]
                     + (dT1[i * 3 + 2] if k == 0 else dT2[i * 3 + 2]) * u_t[2]
                     + df_aero_da[k][i] + dff_da[k][i]) / m
                )
            if prop_phase:
                for j in range(3):
                    B[(4 + i) * NU + j] = T[i * 3 + j] / m
            for k in range(2):
                B[(4 + i) * NU + 3 + k] = dff_dua[k][i] / m

    # rotational dynamics
    cdef double r_eng[3]
    cdef double r_fin[3]
    for i in range(3):
        r_eng[i] = pp[P_RENG + i]
        r_fin[i] = pp[P_RFIN + i]
    cdef double fins_b[3]
    cdef double mib_b[3]
    cdef double m_b[3]
    cdef double tmpc[3]
    for i in range(3):
        fins_b[i] = T[0 * 3 + i] * f_fins[0] + T[1 * 3 + i] * f_fins[1] + T[2 * 3 + i] * f_fins[2]
        mib_b[i] = T[0 * 3 + i] * m_ib[0] + T[1 * 3 + i] * m_ib[1] + T[2 * 3 + i] * m_ib[2]
    _cross(r_eng, u_t, m_b)
    _cross(r_fin, fins_b, tmpc)
    for i in range(3):
        m_b[i] += mib_b[i] + tmpc[i]
    cdef double dj_dm[3]
    cdef double jdiag[3]
    for i in range(3):
        dj_dm[i] = (pp[P_JWET + i] - pp[P_JDRY + i]) / (pp[P_MWET] - pp[P_MDRY])
        jdiag[i] = pp[P_JDRY + i] + (m - pp[P_MDRY]) * dj_dm[i]
    cdef double c_damp = pp[P_CDAMP]
    f[9] = m_b[0] / jdiag[0] - c_damp * om[0]
    f[10] = m_b[1] / jdiag[1] - c_damp * om[1]

    cdef double colv[3]
    cdef double colb[3]
    cdef double dmbcol[3]
    cdef double* dTk
    if want_jac:
        for k in range(2):
            A[(9 + k) * NX + 0] = -m_b[k] * dj_dm[k] / (jdiag[k] * jdiag[k])
            A[(9 + k) * NX + 9 + k] = -c_damp
        # columns w.r.t. r and v
        for j in range(3):
            # dmib_b and dff contributions for column j of r
            for i in range(3):
                colv[i] = dmib_dr[i * 3 + j]
                colb[i] = dff_dr[i * 3 + j]
            _rot_moment_col(T, r_fin, colv, colb, dmbcol)
            A[9 * NX + 1 + j] = dmbcol[0] / jdiag[0]
            A[10 * NX + 1 + j] = dmbcol[1] / jdiag[1]
            for i in range(3):
                colv[i] = dmib_dv[i * 3 + j]
                colb[i] = dff_dv[i * 3 + j]
            _rot_moment_col(T, r_fin, colv, colb, dmbcol)
            A[9 * NX + 4 + j] = dmbcol[0] / jdiag[0]
            A[10 * NX + 4 + j] = dmbcol[1] / jdiag[1]
        # columns w.r.t. attitude
        for k in range(2):
            if k == 0:
                dTk = dT1
            else:
                dTk = dT2
            _att_moment_col(T, dTk, r_fin, m_ib, f_fins,
                            dmib_da[k], dff_da[k], dmbcol)
            A[9 * NX + 7 + k] = dmbcol[0] / jdiag[0]
            A[10 * NX + 7 + k] = dmbcol[1] / jdiag[1]
        if prop_phase:
            # [r_eng]x rows
            B[9 * NU + 0] += 0.0
            B[9 * NU + 1] += -r_eng[2] / jdiag[0]
            B[9 * NU + 2] += r_eng[1] / jdiag[0]
            B[10 * NU + 0] += r_eng[2] / jdiag[1]
            B[10 * NU + 1] += 0.0
            B[10 * NU + 2] += -r_eng[0] / jdiag[1]
        for k in range(2):
            for i in range(3):
                colb[i] = dff_dua[k][i]
                colv[i] = 0.0
            _rot_moment_col(T, r_fin, colv, colb, dmbcol)
            B[9 * NU + 3 + k] = dmbcol[0] / jdiag[0]
            B[10 * NU + 3 + k] = dmbcol[1] / jdiag[1]

    # CTCS rows
    cdef double s_alpha = pp[P_S_ALPHA + 0]
    cdef double s_thrust = pp[P_S_ALPHA + 1]
    cdef double s_fin = pp[P_S_ALPHA + 2]
    cdef double s_omega = pp[P_S_ALPHA + 3]
    cdef double s_q = pp[P_S_ALPHA + 4]
    cdef double s_qalpha = pp[P_S_ALPHA + 5]
    cdef double g, th, dth
    cdef double lo, lo_dm, lo_d1, lo_d2, hi, hi_dm, hi_d1, hi_d2, z_lo, z_hi
    cdef double omn, q

    if aero:
        th = tanh(speed / pp[P_VSMALL])
        g = th * alpha - pp[P_ALPHA_MAX]
        if g > 0.0:
            f[11 + CTCS_ALPHA] = s_alpha * g * g
            if want_jac:
                dth = (1.0 - th * th) / pp[P_VSMALL]
                for j in range(3):
                    A[(11 + CTCS_ALPHA) * NX + 4 + j] = (
                        2.0 * s_alpha * g * (dth * vhat[j] * alpha + th * dal_dv[j])
                    )
                for k in range(2):
                    A[(11 + CTCS_ALPHA) * NX + 7 + k] = 2.0 * s_alpha * g * th * dal_da[k]

    if prop_phase:
        g = (pp[P_UMIN] - tn) / pp[P_THRUST_NORM]
        if g > 0.0:
            f[11 + CTCS_THRUST] = s_thrust * g * g
            if want_jac and tn > 1e-12:
                for j in range(3):
                    B[(11 + CTCS_THRUST) * NU + j] = (
                        -2.0 * s_thrust * g * u_t[j] / (tn * pp[P_THRUST_NORM])
                    )

    cdef double acc = 0.0
    cdef double dacc_dr[3]
    cdef double dacc_dv[3]
    cdef double dacc_da[2]
    for i in range(3):
        dacc_dr[i] = 0.0
        dacc_dv[i] = 0.0
    dacc_da[0] = dacc_da[1] = 0.0
    for k in range(2):
        base = G3_LO1 if k == 0 else G3_LO2
        _interp3p(blob, idx, base, mach, a1 * RAD2DEG, a2 * RAD2DEG, &lo, &lo_dm, &lo_d1, &lo_d2)
        base = G3_HI1 if k == 0 else G3_HI2
        _interp3p(blob, idx, base, mach, a1 * RAD2DEG, a2 * RAD2DEG, &hi, &hi_dm, &hi_d1, &hi_d2)
        z_lo = lo - ua[k]
        if z_lo < 0.0:
            z_lo = 0.0
        z_hi = ua[k] - hi
        if z_hi < 0.0:
            z_hi = 0.0
        acc += z_lo * z_lo + z_hi * z_hi
        if want_jac:
            if z_lo > 0.0 or z_hi > 0.0:
                B[(11 + CTCS_FIN) * NU + 3 + k] = 2.0 * s_fin * (z_hi - z_lo)
            if aero:
                if z_lo > 0.0:
                    for j in range(3):
                        dacc_dv[j] += 2.0 * z_lo * (
                            lo_dm * dmach_dv[j] + RAD2DEG * (lo_d1 * da1_dv[j] + lo_d2 * da2_dv[j])
                        )
                        dacc_dr[j] += 2.0 * z_lo * (lo_dm * dmach_dr[j])
                    for j in range(2):
                        dacc_da[j] += 2.0 * z_lo * RAD2DEG * (lo_d1 * da1_da[j] + lo_d2 * da2_da[j])
                if z_hi > 0.0:
                    for j in range(3):
                        dacc_dv[j] -= 2.0 * z_hi * (
                            hi_dm * dmach_dv[j] + RAD2DEG * (hi_d1 * da1_dv[j] + hi_d2 * da2_dv[j])
                        )
                        dacc_dr[j] -= 2.0 * z_hi * (hi_dm * dmach_dr[j])
                    for j in range(2):
                        dacc_da[j] -= 2.0 * z_hi * RAD2DEG * (hi_d1 * da1_da[j] + hi_d2 * da2_da[j])
    f[11 + CTCS_FIN] = s_fin * acc
    if want_jac:
        for j in range(3):
            A[(11 + CTCS_FIN) * NX + 1 + j] = s_fin * dacc_dr[j]
            A[(11 + CTCS_FIN) * NX + 4 + j] = s_fin * dacc_dv[j]
        for j in range(2):
            A[(11 + CTCS_FIN) * NX + 7 + j] = s_fin * dacc_da[j]

    omn = sqrt(om[0] * om[0] + om[1] * om[1])
    g = omn - pp[P_OMEGA_MAX]
    if g > 0.0:
        f[11 + CTCS_OMEGA] = s_omega * g * g
        if want_jac and omn > 1e-12:
            A[(11 + CTCS_OMEGA) * NX + 9] = 2.0 * s_omega * g * om[0] / omn
            A[(11 + CTCS_OMEGA) * NX + 10] = 2.0 * s_omega * g * om[1] / omn

    if aero:
        q = 0.5 * rho * speed * speed
        g = q - pp[P_QMAX]
        if g > 0.0:
            f[11 + CTCS_Q] = s_q * g * g
            if want_jac:
                for j in range(3):
                    A[(11 + CTCS_Q) * NX + 1 + j] = (
                        2.0 * s_q * g * 0.5 * speed * speed * drho_dh * dh_dr[j]
                    )
                    A[(11 + CTCS_Q) * NX + 4 + j] = 2.0 * s_q * g * rho * v[j]
        g = q * alpha - pp[P_CHIMAX]
        if g > 0.0:
            f[11 + CTCS_QALPHA] = s_qalpha * g * g
            if want_jac:
                for j in range(3):
                    A[(11 + CTCS_QALPHA) * NX + 1 + j] = (
                        2.0 * s_qalpha * g * alpha * 0.5 * speed * speed * drho_dh * dh_dr[j]
                    )
                    A[(11 + CTCS_QALPHA) * NX + 4 + j] = (
                        2.0 * s_qalpha * g * (alpha * rho * v[j] + q * dal_dv[j])
                    )
                for k in range(2):
                    A[(11 + CTCS_QALPHA) * NX + 7 + k] = 2.0 * s_qalpha * g * q * dal_da[k]


cdef inline void _rot_moment_col(const double* T, const double* r_fin,
                                 const double* dmib_col, const double* dff_col,
                                 double* out) noexcept nogil:
    # out = T^T dmib_col + r_fin x (T^T dff_col)
    cdef double a[3]
    cdef double b[3]
    cdef double cxt[3]
    cdef int i
    for i in range(3):
        a[i] = T[0 * 3 + i] * dmib_col[0] + T[1 * 3 + i] * dmib_col[1] + T[2 * 3 + i] * dmib_col[2]
        b[i] = T[0 * 3 + i] * dff_col[0] + T[1 * 3 + i] * dff_col[1] + T[2 * 3 + i] * dff_col[2]
    _cross(r_fin, b, cxt)
    for i in range(3):
        out[i] = a[i] + cxt[i]


cdef inline void _att_moment_col(const double* T, const double* dT, const double* r_fin,
                                 const double* m_ib, const double* f_fins,
                                 const double* dmib_dak, const double* dff_dak,
                                 double* out) noexcept nogil:
    # out = dT^T m_ib + T^T dmib_dak + r_fin x (dT^T f_fins + T^T dff_dak)
    cdef double a[3]
    cdef double b[3]
    cdef double cxt[3]
    cdef int i
    for i in range(3):
        a[i] = (
            dT[0 * 3 + i] * m_ib[0] + dT[1 * 3 + i] * m_ib[1] + dT[2 * 3 + i] * m_ib[2]
            + T[0 * 3 + i] * dmib_dak[0] + T[1 * 3 + i] * dmib_dak[1] + T[2 * 3 + i] * dmib_dak[2]
        )
        b[i] = (
            dT[0 * 3 + i] * f_fins[0] + dT[1 * 3 + i] * f_fins[1] + dT[2 * 3 + i] * f_fins[2]
            + T[0 * 3 + i] * dff_dak[0] + T[1 * 3 + i] * dff_dak[1] + T[2 * 3 + i] * dff_dak[2]
        )
    _cross(r_fin, b, cxt)
    for i in range(3):
        out[i] = a[i] + cxt[i]


# Dormand-Prince coefficients
cdef double DP_C[7]
cdef double DP_A[7][6]
cdef double DP_B[6]
cdef double DP_E[7]
DP_C[0] = 0.0
DP_C[1] = 1.0 / 5
DP_C[2] = 3.0 / 10
DP_C[3] = 4.0 / 5
DP_C[4] = 8.0 / 9
DP_C[5] = 1.0
DP_C[6] = 1.0
cdef int _r, _c2i
for _r in range(7):
    for _c2i in range(6):
        DP_A[_r][_c2i] = 0.0
DP_A[1][0] = 1.0 / 5
DP_A[2][0] = 3.0 / 40
DP_A[2][1] = 9.0 / 40
DP_A[3][0] = 44.0 / 45
DP_A[3][1] = -56.0 / 15
DP_A[3][2] = 32.0 / 9
DP_A[4][0] = 19372.0 / 6561
DP_A[4][1] = -25360.0 / 2187
DP_A[4][2] = 64448.0 / 6561
DP_A[4][3] = -212.0 / 729
DP_A[5][0] = 9017.0 / 3168
DP_A[5][1] = -355.0 / 33
DP_A[5][2] = 46732.0 / 5247
DP_A[5][3] = 49.0 / 176
DP_A[5][4] = -5103.0 / 18656
DP_A[6][0] = 35.0 / 384
DP_A[6][1] = 0.0
DP_A[6][2] = 500.0 / 1113
DP_A[6][3] = 125.0 / 192
DP_A[6][4] = -2187.0 / 6784
DP_A[6][5] = 11.0 / 84
for _c2i in range(6):
    DP_B[_c2i] = DP_A[6][_c2i]
DP_E[0] = 71.0 / 57600
DP_E[1] = 0.0
DP_E[2] = -71.0 / 16695
DP_E[3] = 71.0 / 1920
DP_E[4] = -17253.0 / 339200
DP_E[5] = 22.0 / 525
DP_E[6] = -1.0 / 40


def propagate_segment_raw(
    x0,
    u0,
    u1,
    double sigma,
    int sig_col,
    int prop_phase,
    double dtau,
    params,
    blob,
    idx,
    double rtol,
    atol,
    bint want_jac,
    long max_steps=100000,
):
    """Mirror of kernels.pure.propagate_segment_raw (see there for contract)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x0a = np.ascontiguousarray(x0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u0a = np.ascontiguousarray(u0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u1a = np.ascontiguousarray(u1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ppa = np.ascontiguousarray(params, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bla = np.ascontiguousarray(blob, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ixa = np.ascontiguousarray(idx, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ata = np.ascontiguousarray(atol, dtype=np.float64)

    cdef cnp.ndarray[cnp.float64_t, ndim=1] y_out = np.zeros(NAUG)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] s_out = np.zeros((NAUG, NTH))

    cdef double* xp = <double*> x0a.data
    cdef double* u0p = <double*> u0a.data
    cdef double* u1p = <double*> u1a.data
    cdef double* pp = <double*> ppa.data
    cdef double* bp = <double*> bla.data
    cdef long* ip = <long*> ixa.data
    cdef double* ap = <double*> ata.data
    cdef double* yp = <double*> y_out.data
    cdef double* sp = <double*> s_out.data

    cdef long nsteps = 0
    cdef int status = STATUS_OK

    with nogil:
        status = _propagate(xp, u0p, u1p, sigma, sig_col, prop_phase, dtau, pp, bp, ip,
                            rtol, ap, want_jac, max_steps, yp, sp, &nsteps)

    return y_out, (s_out if want_jac else None), int(nsteps), int(status)


cdef int _propagate(const double* x0, const double* u0, const double* u1,
                    double sigma, int sig_col, int prop_phase, double dtau,
                    const double* pp, const double* blob, const long* idx,
                    double rtol, const double* atol, bint want_jac, long max_steps,
                    double* y, double* s_mat, long* nsteps_out) noexcept nogil:
    cdef double t = 0.0
    cdef double h = dtau / 8.0
    cdef long nsteps = 0
    cdef int status = _ST_OK
    cdef int i, j, st, kk
    cdef double w1, err, sc, factor, acc

    # stage buffers
    cdef double ky[7][17]
    cdef double ks[7][391]  # 17*23
    cdef double ytmp[17]
    cdef double stmp[391]
    cdef double ynew[17]
    cdef double snew[391]
    cdef double uu[5]
    cdef double fbuf[17]
    cdef double abuf[187]  # 17*11
    cdef double bbuf[85]   # 17*5
    cdef int NS = NAUG * NTH

    for i in range(NAUG):
        y[i] = 0.0
    for i in range(NX):
        y[i] = x0[i]
    for i in range(NS):
        s_mat[i] = 0.0
    if want_jac:
        for i in range(NX):
            s_mat[i * NTH + i] = 1.0

    _eval_rhs(t, y, s_mat, u0, u1, dtau, sigma, sig_col, prop_phase, pp, blob, idx,
              want_jac, ky[0], ks[0], uu, fbuf, abuf, bbuf)

    while t < dtau:
        if nsteps >= max_steps:
            status = _ST_MAXSTEPS
            break
        if h > dtau - t:
            h = dtau - t
        if h < 1e-14 * dtau:
            status = _ST_UNDERFLOW
            break
        for st in range(1, 7):
            for i in range(NAUG):
                acc = 0.0
                for kk in range(st):
                    if DP_A[st][kk] != 0.0:
                        acc += DP_A[st][kk] * ky[kk][i]
                ytmp[i] = y[i] + h * acc
            if want_jac:
                for i in range(NS):
                    acc = 0.0
                    for kk in range(st):
                        if DP_A[st][kk] != 0.0:
                            acc += DP_A[st][kk] * ks[kk][i]
                    stmp[i] = s_mat[i] + h * acc
            _eval_rhs(t + DP_C[st] * h, ytmp, stmp, u0, u1, dtau, sigma, sig_col,
                      prop_phase, pp, blob, idx, want_jac, ky[st], ks[st], uu, fbuf, abuf, bbuf)
        err = 0.0
        for i in range(NAUG):
            acc = 0.0
            for kk in range(6):
                if DP_B[kk] != 0.0:
                    acc += DP_B[kk] * ky[kk][i]
            ynew[i] = y[i] + h * acc
            acc = 0.0
            for kk in range(7):
                if DP_E[kk] != 0.0:
                    acc += DP_E[kk] * ky[kk][i]
            sc = atol[i] + rtol * fmax(fabs(y[i]), fabs(ynew[i]))
            err += (h * acc / sc) * (h * acc / sc)
        err = sqrt(err / NAUG)
        if err <= 1.0:
            if want_jac:
                for i in range(NS):
                    acc = 0.0
                    for kk in range(6):
                        if DP_B[kk] != 0.0:
                            acc += DP_B[kk] * ks[kk][i]
                    snew[i] = s_mat[i] + h * acc
                for i in range(NS):
                    s_mat[i] = snew[i]
                for i in range(NS):
                    ks[0][i] = ks[6][i]
            for i in range(NAUG):
                y[i] = ynew[i]
                ky[0][i] = ky[6][i]
            t += h
            nsteps += 1
            if err == 0.0:
                factor = 5.0
            else:
                factor = 0.9 * pow(err, -0.2)
                if factor > 5.0:
                    factor = 5.0
                if factor < 0.2:
                    factor = 0.2
            h *= factor
        else:
            factor = 0.9 * pow(err, -0.2)
            if factor < 0.2:
                factor = 0.2
            h *= factor

    nsteps_out[0] = nsteps
    return status


cdef void _eval_rhs(double tau_loc, const double* yv, const double* sv,
                    const double* u0, const double* u1, double dtau,
                    double sigma, int sig_col, int prop_phase,
                    const double* pp, const double* blob, const long* idx,
                    bint want_jac, double* fy, double* fs,
                    double* uu, double* fbuf, double* abuf, double* bbuf) noexcept nogil:
    cdef int i, j, k
    cdef double w1 = tau_loc / dtau
    for i in range(NU):
        uu[i] = u0[i] + (u1[i] - u0[i]) * w1
    _rhs_jac(yv, uu, prop_phase, pp, blob, idx, want_jac, fbuf, abuf, bbuf)
    for i in range(NAUG):
        fy[i] = sigma * fbuf[i]
    if not want_jac:
        return
    # fs = sigma * (A @ S_x) with S_x = sv rows 0..10; plus B blocks and sigma column
    cdef double acc
    for i in range(NAUG):
        for j in range(NTH):
            acc = 0.0
            for k in range(NX):
                acc += abuf[i * NX + k] * sv[k * NTH + j]
            fs[i * NTH + j] = sigma * acc
        for k in range(NU):
            fs[i * NTH + 11 + k] += sigma * (1.0 - w1) * bbuf[i * NU + k]
            fs[i * NTH + 16 + k] += sigma * w1 * bbuf[i * NU + k]
        fs[i * NTH + sig_col] += fbuf[i]
