"""Prox-linear successive convex programming over the shooting transcription.

Each iteration linearizes the multiple-shooting defects around the reference
trajectory, assembles a conic subproblem in scaled deviation variables with
exact-L1 penalties (defect, terminal, CTCS excess) and a quadratic proximal
term, solves it, then re-propagates the candidate nonlinearly to measure the
actual penalized-cost decrease. The ratio of actual to predicted decrease
drives the accept / tighten / hold / relax weight update.

Subproblems are always feasible by construction (every nonconvex coupling
carries a slack), so a backend infeasibility is treated as an assembly bug.

Constraint placement:
  nodal      initial state (hard), mass floor, angular-rate cone, thrust
             magnitude + gimbal cones (propulsive nodes), glideslope
             (propulsive nodes), linearized state-dependent fin bounds,
             dilation box; terminal state via L1 slack
  continuous the six violation integrals, bounded at segment ends
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .conic import ClarabelBackend, ConicSolution, SubproblemBuilder, solve_subproblem
from .kernels import pure as kpure
from .transcription import (
    DilatedTime,
    PropagationError,
    ShootingSegmentResult,
    Transcriber,
    zero_control_guess,
)


@dataclass(frozen=True)
class ScpParams:
    """Weights and trust parameters of the prox-linear loop."""

    beta: float = 2.0          # tighten factor (multiplies the prox weight)
    alpha: float = 2.0         # relax factor (divides the prox weight)
    rho0: float = 0.0
    rho1: float = 0.25
    rho2: float = 0.7
    w_init: float = 8.0        # initial prox weight
    w_m: float = 1000.0        # defect L1 weight
    w_n: float = 50.0          # terminal L1 weight
    w_l: float = 100.0         # CTCS excess L1 weight
    max_iters: int = 150
    convergence_tol: float = 1e-5
    w_min: float = 1e-3
    w_max: float = 1e8
    reject_factor: float | None = None   # defaults to beta
    dil_min: float = 5.0
    dil_max: float = 400.0
    hull_mu_weight: float = 100.0  # reward per scaled unit of hull extent
    threads: int = 1

    @property
    def w_ray(self) -> float:
        # exactness wall for the hull ray equality: must beat the mu reward
        return max(self.w_n, 4.0 * self.hull_mu_weight)

    def __post_init__(self):
        if not (0 <= self.rho0 < self.rho1 < self.rho2 < 1):
            raise ValueError("need 0 <= rho0 < rho1 < rho2 < 1")
        if self.alpha <= 1 or self.beta <= 1:
            raise ValueError("alpha, beta must exceed 1")
        if min(self.w_m, self.w_n, self.w_l) <= 0:
            raise ValueError("penalty weights must be positive")


@dataclass(frozen=True)
class Objective:
    """min-fuel (maximize terminal mass), min-time, or defect-hull expansion."""

    kind: str
    direction: np.ndarray | None = None   # defect-hull ray (unit)
    origin: np.ndarray | None = None      # defect-hull surface point [m]

    def __post_init__(self):
        if self.kind not in ("min-fuel", "min-time", "defect-hull"):
            raise ValueError(f"unknown objective {self.kind!r}")
        if self.kind == "defect-hull":
            d = np.asarray(self.direction, dtype=float)
            if abs(np.linalg.norm(d) - 1.0) > 1e-12:
                raise ValueError("defect-hull direction must be unit norm")
            object.__setattr__(self, "direction", d)
            object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))


@dataclass(frozen=True)
class BoundaryConditions:
    """Fixed initial state (11) and terminal target (10: r, v, att, omega)."""

    x0: np.ndarray
    xf: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "xf", np.asarray(self.xf, dtype=float))
        if self.x0.shape != (11,) or self.xf.shape != (10,):
            raise ValueError("x0 must be (11,), xf must be (10,)")


@dataclass
class Reference:
    """One SCP reference trajectory (physical units)."""

    states: np.ndarray     # (N, 11)
    controls: np.ndarray   # (N, 5)
    dil: DilatedTime


@dataclass
class IterRow:
    iter: int
    cost: float
    defect_l1: float
    terminal_l1: float
    ctcs_l1: float
    prox_weight: float
    rho: float
    accepted: bool
    wall_ms: float

    def as_dict(self) -> dict:
        return {
            "iter": self.iter,
            "cost": self.cost,
            "defect_l1": self.defect_l1,
            "terminal_l1": self.terminal_l1,
            "ctcs_l1": self.ctcs_l1,
            "prox_weight": self.prox_weight,
            "rho": self.rho,
            "accepted": self.accepted,
            "wall_ms": self.wall_ms,
        }


@dataclass
class SolveReport:
    rows: list = field(default_factory=list)
    status: str = "running"     # converged | max-iters | solver-failure
    wall_s: float = 0.0

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "wall_s": self.wall_s,
            "rows": [r.as_dict() for r in self.rows],
        }


@dataclass
class TrajectorySolution:
    states: np.ndarray
    controls: np.ndarray
    dil: DilatedTime
    converged: bool
    iterations: int
    final_violation: float
    cost: float
    objective_kind: str

    def ignition_position(self, mid_index: int) -> np.ndarray:
        return self.states[mid_index, 1:4].copy()


def trust_region_update(
    rho: float, weight: float, params: ScpParams
) -> tuple[bool, float]:
    """Accept flag and new prox weight per the adaptive ratio thresholds."""
    reject_factor = params.reject_factor or params.beta
    if rho < params.rho0:
        new_w = weight * reject_factor
        accepted = False
    elif rho < params.rho1:
        new_w = weight * params.beta
        accepted = True
    elif rho < params.rho2:
        new_w = weight
        accepted = True
    else:
        new_w = weight / params.alpha
        accepted = True
    return accepted, float(np.clip(new_w, params.w_min, params.w_max))


class ScpSolver:
    """Drives one trajectory optimization to convergence."""

    def __init__(
        self,
        trans: Transcriber,
        scp: ScpParams,
        boundary: BoundaryConditions,
        objective: Objective,
        tan_glideslope: float = np.tan(np.radians(60.0)),
        backend=None,
    ):
        self.trans = trans
        self.scp = scp
        self.boundary = boundary
        self.objective = objective
        self.tan_glideslope = tan_glideslope
        self.backend = backend or ClarabelBackend()
        d = trans.disc
        self.n = d.n_nodes
        self.mid = d.mid_index
        self.dx_s = d.state_scales
        self.du_s = d.control_scales
        self.t_s = d.time_ref
        self.eps = d.ctcs_eps
        # variable layout
        self.ndx = self.n * 11
        self.ndu = self.n * 5
        self.i_sig = self.ndx + self.ndu
        nseg = self.n - 1
        self.i_dp = self.i_sig + 2                    # defect slack +
        self.i_dn = self.i_dp + nseg * 11             # defect slack -
        self.i_tp = self.i_dn + nseg * 11             # terminal slack +
        self.i_tn = self.i_tp + 10
        self.i_cs = self.i_tn + 10                    # ctcs excess
        self.i_fs = self.i_cs + nseg * 6              # nodal fin-bound excess
        self.i_ps = self.i_fs + self.n * 2            # nodal path-constraint excess
        end = self.i_ps + self.n * 4
        if objective.kind == "defect-hull":
            self.i_hp = end                           # ray residual +/-
            self.i_hn = self.i_hp + 3
            self.i_mu = self.i_hn + 3
            end = self.i_mu + 1
        else:
            self.i_hp = self.i_hn = self.i_mu = -1
        self.n_vars = end

    # --- cost pieces ------------------------------------------------------

    def objective_value(self, ref: Reference) -> float:
        if self.objective.kind == "min-fuel":
            return -ref.states[-1, 0] / self.dx_s[0]
        if self.objective.kind == "min-time":
            return 0.5 * (ref.dil.tau_a + ref.dil.tau_p) / self.t_s
        d = self.objective.direction
        rel = ref.states[self.mid, 1:4] - self.objective.origin
        return -self.scp.hull_mu_weight * float(d @ rel) / self.dx_s[1]

    def hull_residual(self, ref: Reference) -> np.ndarray:
        """Component of the midpoint offset orthogonal to the expansion ray (scaled)."""
        if self.objective.kind != "defect-hull":
            return np.zeros(0)
        d = self.objective.direction
        rel = ref.states[self.mid, 1:4] - self.objective.origin
        perp = rel - d * float(d @ rel)
        return perp / self.dx_s[1]

    def path_violations(self, ref: Reference) -> np.ndarray:
        """Nodal normalized path-constraint violations (n, 4), nonnegative."""
        out = np.zeros((self.n, 4))
        for k in range(self.n):
            prop = int(k >= self.mid)
            g, _, _ = kpure.path_constraint_linearization(
                ref.states[k], ref.controls[k], prop, self.trans.params,
                self.trans.tables,
            )
            if not prop:
                g[1] = -1.0
            out[k] = np.maximum(0.0, g)
        return out

    def fin_violations(self, ref: Reference) -> np.ndarray:
        """Nodal fin-command bound violations (n, 2), nonnegative."""
        out = np.zeros((self.n, 2))
        for k in range(self.n):
            lo, hi, _, _ = kpure.fin_bound_linearization(
                ref.states[k], self.trans.params, self.trans.tables
            )
            ua = ref.controls[k, 3:5]
            out[k] = np.maximum(0.0, lo - ua) + np.maximum(0.0, ua - hi)
        return out

    def measure(self, ref: Reference, segs: list[ShootingSegmentResult]):
        """Defects, terminal residual, CTCS excess (all scaled), and penalized cost."""
        nseg = self.n - 1
        defects = np.empty((nseg, 11))
        ctcs_excess = np.empty((nseg, 6))
        for k, s in enumerate(segs):
            defects[k] = (s.x_end - ref.states[k + 1]) / self.dx_s
            ctcs_excess[k] = np.maximum(0.0, s.y_end - self.eps)
        term = (ref.states[-1, 1:11] - self.boundary.xf) / self.dx_s[1:]
        hull = self.hull_residual(ref)
        fin_v = self.fin_violations(ref)
        path_v = self.path_violations(ref)
        p = self.scp
        cost = (
            self.objective_value(ref)
            + p.w_m * np.abs(defects).sum()
            + p.w_n * np.abs(term).sum()
            + p.w_l * ctcs_excess.sum()
            + p.w_l * fin_v.sum()
            + p.w_l * path_v.sum()
            + p.w_ray * np.abs(hull).sum()
        )
        viol = max(
            np.abs(defects).max(initial=0.0),
            np.abs(term).max(initial=0.0),
            ctcs_excess.max(initial=0.0),
            fin_v.max(initial=0.0),
            path_v.max(initial=0.0),
            np.abs(hull).max(initial=0.0) if hull.size else 0.0,
        )
        return defects, term, ctcs_excess, float(cost), float(viol)

    # --- assembly ---------------------------------------------------------

    def assemble(
        self,
        ref: Reference,
        segs: list[ShootingSegmentResult],
        defects: np.ndarray,
        weight: float,
    ):
        p = self.scp
        bld = SubproblemBuilder(self.n_vars)
        ix = lambda k, j: k * 11 + j
        iu = lambda k, j: self.ndx + k * 5 + j
        dxs, dus, ts = self.dx_s, self.du_s, self.t_s

        # prox term on physical deviation variables (incl. hull extent)
        bld.p_diag[: self.i_sig + 2] = weight
        if self.objective.kind == "defect-hull":
            bld.p_diag[self.i_mu] = weight

        # objective gradient
        if self.objective.kind == "min-fuel":
            bld.q[ix(self.n - 1, 0)] = -1.0
        elif self.objective.kind == "min-time":
            bld.q[self.i_sig] = 0.5
            bld.q[self.i_sig + 1] = 0.5
        else:
            bld.q[self.i_mu] = -p.hull_mu_weight

        # L1 penalty weights on slack pairs
        nseg = self.n - 1
        bld.q[self.i_dp : self.i_dn + nseg * 11] = p.w_m
        bld.q[self.i_tp : self.i_tn + 10] = p.w_n
        bld.q[self.i_cs : self.i_cs + nseg * 6] = p.w_l
        bld.q[self.i_fs : self.i_fs + self.n * 2] = p.w_l
        bld.q[self.i_ps : self.i_ps + self.n * 4] = p.w_l
        if self.objective.kind == "defect-hull":
            bld.q[self.i_hp : self.i_hn + 3] = p.w_ray

        # initial condition pins
        for j in range(11):
            bld.add_eq([(ix(0, j), 1.0)], 0.0)

        # aero-phase thrust pins (reference thrust is zero there)
        for k in range(self.mid):
            for j in range(3):
                bld.add_eq([(iu(k, j), 1.0)], 0.0)

        # linearized defects
        for k, s in enumerate(segs):
            a = s.a_mat
            bm = s.b_minus
            bp = s.b_plus
            sg = s.sig_cols
            for i in range(11):
                coeffs = [(ix(k + 1, i), 1.0)]
                for j in range(11):
                    v = a[i, j] * dxs[j] / dxs[i]
                    if v != 0.0:
                        coeffs.append((ix(k, j), -v))
                for j in range(5):
                    v = bm[i, j] * dus[j] / dxs[i]
                    if v != 0.0:
                        coeffs.append((iu(k, j), -v))
                    v = bp[i, j] * dus[j] / dxs[i]
                    if v != 0.0:
                        coeffs.append((iu(k + 1, j), -v))
                for j in range(2):
                    v = sg[i, j] * ts / dxs[i]
                    if v != 0.0:
                        coeffs.append((self.i_sig + j, -v))
                coeffs.append((self.i_dp + k * 11 + i, -1.0))
                coeffs.append((self.i_dn + k * 11 + i, 1.0))
                bld.add_eq(coeffs, defects[k, i])

        # terminal constraint via L1 slack (mass free)
        term_res = (ref.states[-1, 1:11] - self.boundary.xf) / dxs[1:]
        for i in range(10):
            bld.add_eq(
                [
                    (ix(self.n - 1, 1 + i), 1.0),
                    (self.i_tp + i, -1.0),
                    (self.i_tn + i, 1.0),
                ],
                -term_res[i],
            )

        # defect-hull midpoint ray constraint via L1 slack
        if self.objective.kind == "defect-hull":
            d = self.objective.direction
            rel = (ref.states[self.mid, 1:4] - self.objective.origin) / dxs[1]
            for i in range(3):
                bld.add_eq(
                    [
                        (ix(self.mid, 1 + i), 1.0),
                        (self.i_mu, -d[i]),
                        (self.i_hp + i, -1.0),
                        (self.i_hn + i, 1.0),
                    ],
                    -rel[i],
                )
            # allow slightly negative extent so the ray can settle on the face
            bld.add_ineq([(self.i_mu, -1.0)], 1.0 / dxs[1])

        # slack nonnegativity
        for idx0, count in (
            (self.i_dp, nseg * 11),
            (self.i_dn, nseg * 11),
            (self.i_tp, 10),
            (self.i_tn, 10),
            (self.i_cs, nseg * 6),
            (self.i_fs, self.n * 2),
            (self.i_ps, self.n * 4),
        ):
            for i in range(count):
                bld.add_ineq([(idx0 + i, -1.0)], 0.0)
        if self.objective.kind == "defect-hull":
            for i in range(6):
                bld.add_ineq([(self.i_hp + i, -1.0)], 0.0)

        # CTCS end-of-segment bounds with excess slack
        for k, s in enumerate(segs):
            jac = s.jac
            for j in range(6):
                coeffs = []
                row = jac[11 + j]
                for c in range(11):
                    v = row[c] * dxs[c]
                    if v != 0.0:
                        coeffs.append((ix(k, c), v))
                for c in range(5):
                    v = row[11 + c] * dus[c]
                    if v != 0.0:
                        coeffs.append((iu(k, c), v))
                    v = row[16 + c] * dus[c]
                    if v != 0.0:
                        coeffs.append((iu(k + 1, c), v))
                for c in range(2):
                    v = row[21 + c] * ts
                    if v != 0.0:
                        coeffs.append((self.i_sig + c, v))
                coeffs.append((self.i_cs + k * 6 + j, -1.0))
                bld.add_ineq(coeffs, self.eps - s.y_end[j])

        # mass floor
        for k in range(self.n):
            bld.add_ineq(
                [(ix(k, 0), -1.0)],
                (ref.states[k, 0] - self.trans.vehicle.m_dry) / dxs[0],
            )

        # dilation box
        for j, sig in enumerate((ref.dil.tau_a, ref.dil.tau_p)):
            bld.add_ineq([(self.i_sig + j, ts)], p.dil_max - sig)
            bld.add_ineq([(self.i_sig + j, -ts)], sig - p.dil_min)

        # nodal fin bounds, linearized in the node state
        for k in range(self.n):
            lo, hi, dlo, dhi = kpure.fin_bound_linearization(
                ref.states[k], self.trans.params, self.trans.tables
            )
            for i in range(2):
                ua_ref = ref.controls[k, 3 + i]
                s_idx = self.i_fs + k * 2 + i
                hi_coeffs = [(iu(k, 3 + i), 1.0), (s_idx, -1.0)]
                lo_coeffs = [(iu(k, 3 + i), -1.0), (s_idx, -1.0)]
                for c in range(11):
                    vh = dhi[i, c] * dxs[c]
                    if vh != 0.0:
                        hi_coeffs.append((ix(k, c), -vh))
                    vl = dlo[i, c] * dxs[c]
                    if vl != 0.0:
                        lo_coeffs.append((ix(k, c), vl))
                bld.add_ineq(hi_coeffs, hi[i] - ua_ref)
                bld.add_ineq(lo_coeffs, ua_ref - lo[i])

        # nodal linearized path-constraint helpers (soft, shared weight with
        # the CTCS excess; the paper enforces the rate limit both ways for the
        # same reason -- first-order boundary awareness between activations)
        for k in range(self.n):
            prop = int(k >= self.mid)
            g, dgx, dgu = kpure.path_constraint_linearization(
                ref.states[k], ref.controls[k], prop, self.trans.params,
                self.trans.tables,
            )
            for j in range(4):
                if j == 1 and not prop:
                    continue
                coeffs = [(self.i_ps + k * 4 + j, -1.0)]
                for c in range(11):
                    vv = dgx[j, c] * dxs[c]
                    if vv != 0.0:
                        coeffs.append((ix(k, c), vv))
                for c in range(5):
                    vv = dgu[j, c] * dus[c]
                    if vv != 0.0:
                        coeffs.append((iu(k, c), vv))
                bld.add_ineq(coeffs, -g[j])

        # angular rate cone at every node
        omega_max = self.trans.vehicle.omega_max
        for k in range(self.n):
            rows = [([], omega_max)]
            for j in range(2):
                rows.append(
                    ([(ix(k, 9 + j), -dxs[9 + j])], ref.states[k, 9 + j])
                )
            bld.add_soc(rows)

        # propulsive-node thrust cones and glideslope
        tan_gimbal = np.tan(self.trans.vehicle.gimbal_max)
        tan_gs = self.tan_glideslope
        for k in range(self.mid, self.n):
            u_ref = ref.controls[k, 0:3]
            # magnitude
            rows = [([], self.trans.vehicle.u_max)]
            for j in range(3):
                rows.append(([(iu(k, j), -dus[j])], u_ref[j]))
            bld.add_soc(rows)
            # gimbal cone about body +z
            rows = [([(iu(k, 2), -tan_gimbal * dus[2])], tan_gimbal * u_ref[2])]
            for j in range(2):
                rows.append(([(iu(k, j), -dus[j])], u_ref[j]))
            bld.add_soc(rows)
            # glideslope about the landing site
            r_ref = ref.states[k, 1:4]
            rows = [([(ix(k, 3), -tan_gs * dxs[3])], tan_gs * r_ref[2])]
            for j in range(2):
                rows.append(([(ix(k, 1 + j), -dxs[1 + j])], r_ref[j]))
            bld.add_soc(rows)

        return bld.build()

    # --- iteration --------------------------------------------------------

    def extract_candidate(self, ref: Reference, z: np.ndarray) -> Reference:
        dx = z[: self.ndx].reshape(self.n, 11) * self.dx_s
        du = z[self.ndx : self.ndx + self.ndu].reshape(self.n, 5) * self.du_s
        dsig = z[self.i_sig : self.i_sig + 2] * self.t_s
        states = ref.states + dx
        controls = ref.controls + du
        controls[: self.mid, 0:3] = 0.0
        p = self.scp
        dil = DilatedTime(
            float(np.clip(ref.dil.tau_a + dsig[0], p.dil_min, p.dil_max)),
            float(np.clip(ref.dil.tau_p + dsig[1], p.dil_min, p.dil_max)),
        )
        return Reference(states, controls, dil)

    def linear_model_cost(self, candidate: Reference, z: np.ndarray) -> float:
        """Penalized cost of the convex model at the subproblem optimum."""
        p = self.scp
        nseg = self.n - 1
        cost = (
            float(np.sum(z[self.i_dp : self.i_dn + nseg * 11]) * p.w_m)
            + float(np.sum(z[self.i_tp : self.i_tn + 10]) * p.w_n)
            + float(np.sum(z[self.i_cs : self.i_cs + nseg * 6]) * p.w_l)
            + float(np.sum(z[self.i_fs : self.i_fs + self.n * 2]) * p.w_l)
            + float(np.sum(z[self.i_ps : self.i_ps + self.n * 4]) * p.w_l)
        )
        if self.objective.kind == "defect-hull":
            cost += float(np.sum(z[self.i_hp : self.i_hn + 3]) * p.w_ray)
        cost += self.objective_value(candidate)
        return cost

    def solve(
        self, init: Reference, report: SolveReport | None = None
    ) -> tuple[TrajectorySolution, SolveReport]:
        p = self.scp
        report = report or SolveReport()
        t_start = time.perf_counter()
        ref = init
        weight = p.w_init
        segs = self.trans.propagate_all(
            ref.states, ref.controls, ref.dil, want_jac=True, threads=p.threads
        )
        defects, term, ctcs, cost_ref, viol_ref = self.measure(ref, segs)
        status = "max-iters"
        it = 0
        small_steps = 0    # consecutive accepted steps with negligible cost change
        consec_rejects = 0
        for it in range(1, p.max_iters + 1):
            t0 = time.perf_counter()
            problem = self.assemble(ref, segs, defects, weight)
            sol = solve_subproblem(problem, self.backend)
            if not sol.ok:
                if sol.status == "infeasible":
                    raise AssertionError(
                        "subproblem infeasible despite slacks; assembly bug"
                    )
                status = "solver-failure"
                report.rows.append(
                    IterRow(it, cost_ref, float(np.abs(defects).sum()),
                            float(np.abs(term).sum()), float(ctcs.sum()), weight,
                            float("nan"), False,
                            (time.perf_counter() - t0) * 1e3)
                )
                break

            candidate = self.extract_candidate(ref, sol.x)
            model_cost = self.linear_model_cost(candidate, sol.x)
            predicted = cost_ref - model_cost

            try:
                cand_segs = self.trans.propagate_all(
                    candidate.states, candidate.controls, candidate.dil,
                    want_jac=False, threads=p.threads,
                )
                cand_defects, cand_term, cand_ctcs, cost_cand, viol_cand = self.measure(
                    candidate, cand_segs
                )
                prop_failed = False
            except PropagationError:
                prop_failed = True

            if prop_failed:
                rho = -np.inf
                accepted = False
                weight = float(np.clip(weight * (p.reject_factor or p.beta),
                                       p.w_min, p.w_max))
            else:
                denom = max(predicted, 1e-15)
                rho = (cost_ref - cost_cand) / denom
                accepted, weight = trust_region_update(rho, weight, p)

            wall_ms = (time.perf_counter() - t0) * 1e3
            row_cost = cost_cand if (not prop_failed and accepted) else cost_ref
            report.rows.append(
                IterRow(
                    it,
                    row_cost,
                    float(np.abs(cand_defects).sum()) if not prop_failed else float(np.abs(defects).sum()),
                    float(np.abs(cand_term).sum()) if not prop_failed else float(np.abs(term).sum()),
                    float(np.maximum(cand_ctcs, 0).sum()) if not prop_failed else float(ctcs.sum()),
                    weight,
                    float(rho),
                    bool(accepted),
                    wall_ms,
                )
            )

            if accepted and not prop_failed:
                rel_change = abs(cost_ref - cost_cand) / max(1.0, abs(cost_ref))
                consec_rejects = 0
                small_steps = small_steps + 1 if rel_change <= 3.0 * p.convergence_tol else 0
                ref = candidate
                segs = self.trans.propagate_all(
                    ref.states, ref.controls, ref.dil, want_jac=True, threads=p.threads
                )
                defects, term, ctcs, cost_ref, viol_ref = self.measure(ref, segs)
                if viol_ref <= p.convergence_tol and rel_change <= p.convergence_tol:
                    status = "converged"
                    break
                # asymptotic zigzag: feasible, steps all but stalled
                if viol_ref <= p.convergence_tol and small_steps >= 8:
                    status = "converged"
                    break
            else:
                consec_rejects += 1
                # the model cannot beat the re-propagation noise floor anymore
                if viol_ref <= p.convergence_tol and consec_rejects >= 6:
                    status = "converged"
                    break
            if predicted <= 1e-12 * max(1.0, abs(cost_ref)):
                if viol_ref <= p.convergence_tol:
                    status = "converged"
                else:
                    status = "max-iters" if it == p.max_iters else "stalled"
                break

        report.status = status if status != "stalled" else "max-iters"
        report.wall_s = time.perf_counter() - t_start
        solution = TrajectorySolution(
            states=ref.states,
            controls=ref.controls,
            dil=ref.dil,
            converged=(report.status == "converged"),
            iterations=it,
            final_violation=viol_ref,
            cost=cost_ref,
            objective_kind=self.objective.kind,
        )
        return solution, report


def solve_trajectory(
    trans: Transcriber,
    scp_params: ScpParams,
    boundary: BoundaryConditions,
    objective: Objective,
    tan_glideslope: float,
    init: Reference | None = None,
    init_dil: DilatedTime | None = None,
    backend=None,
) -> tuple[TrajectorySolution, SolveReport]:
    """Full solve from an initial reference (zero-control rollout by default)."""
    solver = ScpSolver(
        trans, scp_params, boundary, objective,
        tan_glideslope=tan_glideslope, backend=backend,
    )
    if init is None:
        dil = init_dil or DilatedTime(70.0, 70.0)
        states, controls = zero_control_guess(trans, boundary.x0, dil)
        init = Reference(states, controls, dil)
    return solver.solve(init)
