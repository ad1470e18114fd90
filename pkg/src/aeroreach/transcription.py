"""Multiple-shooting transcription with dual time dilation and CTCS states.

Normalized time tau runs over [0, 1] on a uniform odd-count node grid, so
tau = 1/2 is a node: segments left of it integrate the unpowered phase
(thrust structurally zero), segments right of it the propulsive phase. Two
dilation parameters stretch tau into physical time, one per phase, making
phase durations optimizable.

Controls are first-order-hold between nodes. Each inter-node segment is
integrated independently from its node state with the six
constraint-violation integrals reset to zero; forward sensitivities
(variational equations, propagated inside the kernel with the same adaptive
steps) give the Jacobians of the terminal augmented state with respect to
the node state, both control endpoints, and the two dilations.

Propagation runs in SI units with per-state absolute tolerances equal to
the nondimensional tolerance times each state's reference scale; subproblem
assembly rescales rows and columns, which is algebraically identical to
integrating the nondimensionalized model.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .aerotables import AeroDatabase
from .dynamics import VehicleParams
from .environment import EnvParams
from .kernels import common as cm
from .kernels import get_backend, propagate_segment_raw
from .kernels import pure as _pure_mod

DEFAULT_CTCS_SCALES = (1.0, 20.0, 10.0, 0.1, 5e-4, 1e-6)


class PropagationError(RuntimeError):
    """Integrator failure inside a shooting segment."""

    def __init__(self, segment: int, status: int):
        super().__init__(f"segment {segment}: integrator status {status}")
        self.segment = segment
        self.status = status


@dataclass(frozen=True)
class DiscretizationConfig:
    """Node grid, CTCS settings, integrator tolerances, reference scales."""

    n_nodes: int = 41
    ctcs_scales: tuple = DEFAULT_CTCS_SCALES
    ctcs_eps: float = 1e-6
    rtol: float = 1e-8
    atol: float = 1e-10
    length_ref: float = 15000.0
    speed_ref: float = 380.0
    mass_ref: float = 19516.0
    rate_ref: float = 0.25

    def __post_init__(self):
        if self.n_nodes < 3 or self.n_nodes % 2 == 0:
            raise ValueError("n_nodes must be odd and >= 3 so tau=1/2 is a node")
        if min(self.length_ref, self.speed_ref, self.mass_ref) <= 0:
            raise ValueError("reference scales must be positive")
        if len(self.ctcs_scales) != cm.N_CTCS:
            raise ValueError(f"expected {cm.N_CTCS} CTCS scales")

    @property
    def time_ref(self) -> float:
        return self.length_ref / self.speed_ref

    @property
    def force_ref(self) -> float:
        return self.mass_ref * self.length_ref / self.time_ref**2

    @property
    def taus(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_nodes)

    @property
    def mid_index(self) -> int:
        return (self.n_nodes - 1) // 2

    @property
    def state_scales(self) -> np.ndarray:
        """Reference magnitude of each of the 11 physical states.

        Tilt angles are O(1) rad; angular rate uses its own reference (about
        the rate limit) rather than 1/time_ref, which would demand absurd
        absolute precision of the stiff, heavily damped attitude loop.
        """
        return np.concatenate(
            [
                [self.mass_ref],
                [self.length_ref] * 3,
                [self.speed_ref] * 3,
                [1.0] * 2,
                [self.rate_ref] * 2,
            ]
        )

    @property
    def control_scales(self) -> np.ndarray:
        return np.concatenate([[self.force_ref] * 3, [1.0] * 2])

    @property
    def atol_vector(self) -> np.ndarray:
        """Per-state absolute tolerance for the 17 augmented states."""
        return self.atol * np.concatenate([self.state_scales, np.ones(cm.N_CTCS)])


@dataclass(frozen=True)
class DilatedTime:
    """Per-phase stretch from normalized to physical time [s]."""

    tau_a: float
    tau_p: float

    def __post_init__(self):
        if not (self.tau_a > 0 and self.tau_p > 0):
            raise ValueError("dilations must be positive")

    @property
    def total_time(self) -> float:
        return 0.5 * (self.tau_a + self.tau_p)


def time_map(tau: float, dil: DilatedTime) -> float:
    """Physical time [s] of a normalized time in [0, 1]."""
    if tau < 0.0 or tau > 1.0:
        raise ValueError(f"tau {tau} outside [0, 1]")
    if tau < 0.5:
        return dil.tau_a * tau
    return dil.tau_p * (tau - 0.5) + 0.5 * dil.tau_a


def foh_control(tau: float, node_controls: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """First-order-hold control at tau; thrust forced to zero left of 1/2."""
    node_controls = np.asarray(node_controls, dtype=float)
    if tau <= taus[0]:
        u = node_controls[0].copy()
    elif tau >= taus[-1]:
        u = node_controls[-1].copy()
    else:
        k = int(np.searchsorted(taus, tau, side="right") - 1)
        k = min(k, len(taus) - 2)
        s = (tau - taus[k]) / (taus[k + 1] - taus[k])
        u = (1.0 - s) * node_controls[k] + s * node_controls[k + 1]
    if tau < 0.5:
        u[0:3] = 0.0
    return u


@dataclass
class ShootingSegmentResult:
    """Terminal augmented state of one segment plus its sensitivities.

    Jacobian column blocks follow the kernel layout: node state (11), left
    control endpoint (5), right control endpoint (5), aero dilation,
    propulsive dilation; rows are the 17 augmented states.
    """

    x_end: np.ndarray          # physical states (11,)
    y_end: np.ndarray          # CTCS integrals (6,)
    jac: np.ndarray | None     # (17, 23)
    n_steps: int

    @property
    def a_mat(self) -> np.ndarray:
        return self.jac[:, 0:11]

    @property
    def b_minus(self) -> np.ndarray:
        return self.jac[:, 11:16]

    @property
    def b_plus(self) -> np.ndarray:
        return self.jac[:, 16:21]

    @property
    def sig_cols(self) -> np.ndarray:
        return self.jac[:, 21:23]


class Transcriber:
    """Binds a scenario (vehicle, environment, aero database) to the kernel."""

    def __init__(
        self,
        vehicle: VehicleParams,
        env: EnvParams,
        db: AeroDatabase,
        disc: DiscretizationConfig,
        backend: str | None = None,
    ):
        self.vehicle = vehicle
        self.env = env
        self.disc = disc
        self.params = cm.pack_params(vehicle, env, np.asarray(disc.ctcs_scales))
        self.tables = cm.pack_tables(db)
        self._backend = get_backend(backend) if backend else None

    @property
    def n_segments(self) -> int:
        return self.disc.n_nodes - 1

    def segment_phase(self, k: int) -> int:
        """1 for propulsive segments (tau >= 1/2), else 0."""
        return int(k >= self.disc.mid_index)

    def propagate_segment(
        self,
        k: int,
        x_node: np.ndarray,
        u_left: np.ndarray,
        u_right: np.ndarray,
        dil: DilatedTime,
        want_jac: bool = True,
    ) -> ShootingSegmentResult:
        prop = self.segment_phase(k)
        sigma = dil.tau_p if prop else dil.tau_a
        sig_col = 22 if prop else 21
        dtau = 1.0 / self.n_segments
        fn = (self._backend or _default_backend()).propagate_segment_raw
        y, s, nsteps, status = fn(
            np.asarray(x_node, dtype=float),
            np.asarray(u_left, dtype=float),
            np.asarray(u_right, dtype=float),
            float(sigma),
            sig_col,
            prop,
            dtau,
            self.params,
            self.tables.blob,
            self.tables.idx,
            self.disc.rtol,
            self.disc.atol_vector,
            want_jac,
        )
        if status != 0:
            raise PropagationError(k, status)
        return ShootingSegmentResult(
            x_end=y[:11].copy(), y_end=y[11:].copy(), jac=s, n_steps=nsteps
        )

    def propagate_all(
        self,
        node_states: np.ndarray,
        node_controls: np.ndarray,
        dil: DilatedTime,
        want_jac: bool = True,
        threads: int = 1,
    ) -> list[ShootingSegmentResult]:
        """All segments, combined in node order regardless of completion order."""
        n = self.n_segments

        def run(k: int) -> ShootingSegmentResult:
            return self.propagate_segment(
                k, node_states[k], node_controls[k], node_controls[k + 1], dil, want_jac
            )

        if threads <= 1:
            return [run(k) for k in range(n)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, range(n)))

    def rollout(
        self, x0: np.ndarray, node_controls: np.ndarray, dil: DilatedTime
    ) -> np.ndarray:
        """Single-shooting rollout through all segments; returns node states."""
        n_nodes = self.disc.n_nodes
        states = np.empty((n_nodes, 11))
        states[0] = x0
        for k in range(n_nodes - 1):
            res = self.propagate_segment(
                k, states[k], node_controls[k], node_controls[k + 1], dil, want_jac=False
            )
            states[k + 1] = res.x_end
        return states

    # --- nondimensionalization -------------------------------------------

    def scale_state(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) / self.disc.state_scales

    def unscale_state(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) * self.disc.state_scales

    def scale_control(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u) / self.disc.control_scales

    def unscale_control(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u) * self.disc.control_scales

    def scale_time(self, t: float) -> float:
        return t / self.disc.time_ref

    def unscale_time(self, t: float) -> float:
        return t * self.disc.time_ref


def _default_backend():
    from . import kernels

    return kernels.get_backend(kernels.BACKEND)


def zero_control_guess(
    trans: Transcriber, x0: np.ndarray, dil: DilatedTime
) -> tuple[np.ndarray, np.ndarray]:
    """Initial reference: coast forward with no control from the initial state."""
    n = trans.disc.n_nodes
    controls = np.zeros((n, 5))
    states = trans.rollout(np.asarray(x0, dtype=float), controls, dil)
    return states, controls

