"""5DOF rigid-body equations of motion for a two-phase descent vehicle.

State (11): mass, inertial position/velocity (North-East-Up from the landing
site), a tilt pair (rotations about the inertial N then E axes, so
T_B/I = R_N(att1) R_E(att2)), and the matching angular-rate pair. Roll is
fixed by axisymmetry.

Flight is tail-first: the engine points along body -z, and the angle of
attack is measured between body +z and the reversed velocity, so nose-into-
wind is alpha = 0. Per-plane angles alpha1/alpha2 are the tilt projections
onto the body x-z and y-z planes.

Forces:
  thrust      T_B/I u_thrust, applied at r_engine_B (moment lever)
  body aero   lift  0.5 rho_r cl_mod(alpha, M) v x (bz x v)
              drag -0.5 rho_r cd(alpha, M) |v| v
              moment 0.5 rho_r cm_mod(alpha, M) |v| (bz x v), rotated to body
  fins        lift commanded in the wind frame's transverse plane,
              f_l,i = u_fin,i |v|^2 k_i(M, a1, a2), induced drag from the
              mach-indexed polar, moment r_fins_B x (T_I/B F)
plus spherical gravity and the rotating-frame Coriolis/centrifugal terms.

Rate damping -c_damp*omega stands in for the pitch-damping derivatives. Mass
flow is -|u_thrust| / (g0 Isp) (propellant depletion), and the inertia
diagonal interpolates linearly between dry and wet values with mass.

All functions are pure; parameters and the aero database are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .aerotables import AeroDatabase, interp1_grad, interp2, interp3
from .environment import EnvParams, atmosphere, frame_accels, gravity_accel

RAD2DEG = 180.0 / math.pi


class DynamicsError(ValueError):
    """Invalid state or singular geometry for a dynamics evaluation."""


@dataclass(frozen=True)
class VehicleParams:
    """Mass, propulsion, geometry, and constraint limits (SI units, radians)."""

    m_dry: float
    m_wet: float
    j_dry: np.ndarray  # principal inertia diagonal, dry [kg m^2]
    j_wet: np.ndarray
    isp: float
    g0: float
    u_min: float
    u_max: float
    r_engine_b: np.ndarray
    r_fins_b: np.ndarray
    gimbal_max: float   # rad
    omega_max: float    # rad/s
    c_damp: float       # 1/s
    alpha_max: float    # rad
    q_max: float        # Pa
    chi_max: float      # Pa rad
    v_small: float      # m/s

    def __post_init__(self):
        for name in ("j_dry", "j_wet", "r_engine_b", "r_fins_b"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (0 < self.m_dry < self.m_wet):
            raise ValueError("need 0 < m_dry < m_wet")
        if not (self.u_min < self.u_max):
            raise ValueError("need u_min < u_max")
        if np.any(self.j_dry <= 0) or np.any(self.j_wet <= 0):
            raise ValueError("inertia entries must be positive")
        if not (0 < self.gimbal_max < math.pi / 2):
            raise ValueError("gimbal_max must be in (0, pi/2)")


@dataclass
class VehicleState:
    m: float
    r: np.ndarray
    v: np.ndarray
    att: np.ndarray    # [a1, a2] rad
    omega: np.ndarray  # [w1, w2] rad/s

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.m], self.r, self.v, self.att, self.omega])

    @staticmethod
    def from_vector(x: np.ndarray) -> "VehicleState":
        x = np.asarray(x, dtype=float)
        return VehicleState(float(x[0]), x[1:4].copy(), x[4:7].copy(), x[7:9].copy(), x[9:11].copy())


@dataclass
class ControlInput:
    thrust_b: np.ndarray  # [N] in the body frame
    fin: np.ndarray       # normalized commands, one per fin plane

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.thrust_b, self.fin])

    @staticmethod
    def from_vector(u: np.ndarray) -> "ControlInput":
        u = np.asarray(u, dtype=float)
        return ControlInput(u[0:3].copy(), u[3:5].copy())


def attitude_matrix(att: np.ndarray) -> np.ndarray:
    """Body-to-inertial rotation T_B/I = R_N(att1) R_E(att2)."""
    a1, a2 = float(att[0]), float(att[1])
    if not (-math.pi / 2 < a1 < math.pi / 2 and -math.pi / 2 < a2 < math.pi / 2):
        raise DynamicsError("tilt angles outside (-pi/2, pi/2)")
    c1, s1 = math.cos(a1), math.sin(a1)
    c2, s2 = math.cos(a2), math.sin(a2)
    return np.array(
        [
            [c2, 0.0, s2],
            [s1 * s2, c1, -s1 * c2],
            [-c1 * s2, s1, c1 * c2],
        ]
    )


def angle_of_attack(v: np.ndarray, att: np.ndarray) -> tuple[float, float, float]:
    """Total and per-plane angles of attack [rad] between body +z and -v."""
    v = np.asarray(v, dtype=float)
    speed = np.linalg.norm(v)
    if speed == 0.0:
        raise DynamicsError("angle of attack undefined at zero velocity")
    t = attitude_matrix(att)
    w = t.T @ (-v / speed)
    alpha = math.acos(min(1.0, max(-1.0, w[2])))
    alpha1 = math.atan2(w[0], w[2])
    alpha2 = math.atan2(w[1], w[2])
    return alpha, alpha1, alpha2


def wind_rotation(v: np.ndarray) -> np.ndarray:
    """Minimal rotation taking -z to the velocity direction (no trig).

    Singular at zero speed and when the velocity points straight up (the
    180-degree case of the construction).
    """
    v = np.asarray(v, dtype=float)
    speed = np.linalg.norm(v)
    if speed == 0.0:
        raise DynamicsError("wind frame undefined at zero velocity")
    vhat = v / speed
    c = -vhat[2]
    if 1.0 + c < 1e-12:
        raise DynamicsError("wind frame singular for straight-up velocity")
    w = np.array([vhat[1], -vhat[0], 0.0])  # (-z) x vhat
    wx = np.array([[0.0, 0.0, -vhat[0]], [0.0, 0.0, -vhat[1]], [vhat[0], vhat[1], 0.0]])
    return np.eye(3) + wx + wx @ wx / (1.0 + c)


def body_aero(
    state: VehicleState, env: EnvParams, db: AeroDatabase
) -> tuple[np.ndarray, np.ndarray]:
    """Inertial body aerodynamic force and moment (moment still in I frame)."""
    v = state.v
    speed = np.linalg.norm(v)
    if speed == 0.0:
        return np.zeros(3), np.zeros(3)
    rho, c_snd = atmosphere(state.r, env)
    rho_r = rho / env.rho0
    mach = speed / c_snd
    alpha, _, _ = angle_of_attack(v, state.att)
    a_deg = alpha * RAD2DEG
    bz = attitude_matrix(state.att)[:, 2]
    cross = np.cross(bz, v)
    lift = 0.5 * rho_r * interp2(db.cl_mod, a_deg, mach) * np.cross(v, cross)
    drag = -0.5 * rho_r * interp2(db.cd_body, a_deg, mach) * speed * v
    moment = 0.5 * rho_r * interp2(db.cm_mod, a_deg, mach) * speed * cross
    return lift + drag, moment


def fin_forces(
    state: VehicleState,
    control: ControlInput,
    env: EnvParams,
    db: AeroDatabase,
    params: VehicleParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Inertial fin force and the body-frame fin moment."""
    v = state.v
    speed = np.linalg.norm(v)
    if speed == 0.0:
        return np.zeros(3), np.zeros(3)
    rho, c_snd = atmosphere(state.r, env)
    mach = speed / c_snd
    _, a1, a2 = angle_of_attack(v, state.att)
    a1d, a2d = a1 * RAD2DEG, a2 * RAD2DEG
    fl = np.array(
        [
            control.fin[i] * speed**2 * interp3(db.fin_lift_scale[i], mach, a1d, a2d)
            for i in range(2)
        ]
    )
    lin, _ = interp1_grad(db.polar_lin, mach)
    cst, _ = interp1_grad(db.polar_cst, mach)
    fd = lin * (math.cos(a2) * fl[0] ** 2 + math.cos(a1) * fl[1] ** 2) + cst * float(fl @ fl)
    r_wi = wind_rotation(v)
    force = r_wi @ np.array([fl[0], fl[1], 0.0]) - (v / speed) * fd
    t_bi = attitude_matrix(state.att)
    moment_b = np.cross(params.r_fins_b, t_bi.T @ force)
    return force, moment_b


def inertia_diag(m: float, params: VehicleParams) -> np.ndarray:
    """Linear wet/dry interpolation of the principal inertia diagonal."""
    frac = (m - params.m_dry) / (params.m_wet - params.m_dry)
    return params.j_dry + frac * (params.j_wet - params.j_dry)


def state_derivative(
    state: VehicleState,
    control: ControlInput,
    propulsive: bool,
    params: VehicleParams,
    env: EnvParams,
    db: AeroDatabase,
) -> np.ndarray:
    """Time derivative of the 11-state vector; thrust is ignored when not propulsive."""
    if state.m <= 0.0:
        raise DynamicsError("nonpositive mass")
    u_t = control.thrust_b if propulsive else np.zeros(3)
    thrust_mag = np.linalg.norm(u_t)
    m_dot = -thrust_mag / (params.g0 * params.isp)

    t_bi = attitude_matrix(state.att)
    f_body, m_body_i = body_aero(state, env, db)
    f_fins, m_fins_b = fin_forces(state, control, env, db, params)
    force_i = t_bi @ u_t + f_body + f_fins

    grav = gravity_accel(state.r, env)
    cor, cen = frame_accels(state.r, state.v, env)
    v_dot = force_i / state.m + grav + cor + cen

    m_b = np.cross(params.r_engine_b, u_t) + t_bi.T @ m_body_i + m_fins_b
    j = inertia_diag(state.m, params)
    w_dot = m_b[:2] / j[:2] - params.c_damp * state.omega

    return np.concatenate([[m_dot], state.v, v_dot, state.omega, w_dot])
