import math

import numpy as np
import pytest

from aeroreach.conic import SubproblemBuilder, solve_subproblem
from aeroreach.scp import (
    BoundaryConditions,
    Objective,
    Reference,
    ScpParams,
    ScpSolver,
    trust_region_update,
)
from aeroreach.transcription import DilatedTime, DiscretizationConfig, Transcriber, zero_control_guess

X0 = np.array([19516.0, 500.0, 2500.0, 15000.0, 0.0, -150.0, -350.0, -0.98, 0.0, 0.0, 0.0])
XF = np.zeros(10)
TAN_GS = math.tan(math.radians(60.0))


@pytest.fixture(scope="module")
def trans(vehicle, env, aerodb):
    disc = DiscretizationConfig(
        length_ref=float(np.linalg.norm(X0[1:4])), speed_ref=float(np.linalg.norm(X0[4:7]))
    )
    return Transcriber(vehicle, env, aerodb, disc)


@pytest.fixture(scope="module")
def solver(trans):
    return ScpSolver(
        trans, ScpParams(threads=2), BoundaryConditions(X0, XF), Objective("min-fuel"),
        tan_glideslope=TAN_GS,
    )


class TestTrustRegionRule:
    # thresholds from the optimizer parameter table: rho = {-0.1, 0.1, 0.5, 0.9}
    # must map to {reject+tighten, accept+tighten, accept+hold, accept+relax}
    def test_reject_tighten(self):
        accepted, w = trust_region_update(-0.1, 8.0, ScpParams())
        assert not accepted and w == 16.0

    def test_accept_tighten(self):
        accepted, w = trust_region_update(0.1, 8.0, ScpParams())
        assert accepted and w == 16.0

    def test_accept_hold(self):
        accepted, w = trust_region_update(0.5, 8.0, ScpParams())
        assert accepted and w == 8.0

    def test_accept_relax(self):
        accepted, w = trust_region_update(0.9, 8.0, ScpParams())
        assert accepted and w == 4.0

    def test_weight_bounds_clamped(self):
        p = ScpParams()
        _, w = trust_region_update(0.9, 2 * p.w_min, p)
        assert w >= p.w_min
        _, w = trust_region_update(-1.0, p.w_max, p)
        assert w <= p.w_max

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            ScpParams(rho1=0.8, rho2=0.7)


class TestConicBackend:
    def test_fixed_point_feasible_problem(self):
        # only feasible point is (3, 4); objective arbitrary
        b = SubproblemBuilder(2)
        b.q[:] = [1.0, -2.0]
        b.add_eq([(0, 1.0)], 3.0)
        b.add_eq([(1, 1.0)], 4.0)
        sol = solve_subproblem(b.build())
        assert sol.ok
        assert np.allclose(sol.x, [3.0, 4.0], atol=1e-8)

    def test_objective_scaling_invariance(self):
        def run(scale):
            b = SubproblemBuilder(2)
            b.q[:] = np.array([1.0, 1.0]) * scale
            b.add_soc([([], 1.0), ([(0, -1.0)], 0.0), ([(1, -1.0)], 0.0)])
            return solve_subproblem(b.build()).x

        assert np.allclose(run(1.0), run(7.5), atol=1e-7)

    def test_soc_analytic_optimum(self):
        # minimize x + y subject to ||(x, y)|| <= 1: optimum at -(sqrt2/2, sqrt2/2)
        b = SubproblemBuilder(2)
        b.q[:] = [1.0, 1.0]
        b.add_soc([([], 1.0), ([(0, -1.0)], 0.0), ([(1, -1.0)], 0.0)])
        sol = solve_subproblem(b.build())
        assert sol.x == pytest.approx([-math.sqrt(2) / 2] * 2, abs=1e-8)


class TestAssembly:
    @pytest.fixture(scope="class")
    def ref_and_segs(self, trans, solver):
        dil = DilatedTime(50.0, 30.0)
        states, controls = zero_control_guess(trans, X0, dil)
        ref = Reference(states, controls, dil)
        segs = trans.propagate_all(states, controls, dil, want_jac=True, threads=2)
        defects, *_ = solver.measure(ref, segs)
        return ref, segs, defects

    def test_defect_free_reference_admits_zero_slacks(self, trans, solver, ref_and_segs):
        ref, segs, defects = ref_and_segs
        # zero-control rollout is dynamics-consistent: defects vanish
        assert np.abs(defects).max() < 1e-8
        prob = solver.assemble(ref, segs, defects, weight=8.0)
        # minimize only the defect slacks: a consistent reference admits zero
        nseg = solver.n - 1
        prob.q[:] = 0.0
        prob.q[solver.i_dp : solver.i_dn + nseg * 11] = 1.0
        prob.p_diag[:] = 1e-9  # keep otherwise-free variables bounded
        sol = solve_subproblem(prob)
        assert sol.ok
        slack_sum = float(np.sum(sol.x[solver.i_dp : solver.i_dn + nseg * 11]))
        assert slack_sum < 1e-6

    def test_glideslope_rows_only_on_propulsive_nodes(self, solver, ref_and_segs):
        ref, segs, defects = ref_and_segs
        prob = solver.assemble(ref, segs, defects, weight=8.0)
        # SOC blocks: omega (n), then per propulsive node: thrust, gimbal, glideslope
        n = solver.n
        mid = solver.mid
        soc_blocks = [c for c in prob.cones if c.kind == "soc"]
        assert len(soc_blocks) == n + 3 * (n - mid)

    def test_thrust_pins_on_aero_nodes(self, solver, ref_and_segs):
        ref, segs, defects = ref_and_segs
        prob = solver.assemble(ref, segs, defects, weight=8.0)
        zero_rows = prob.cones[0].dim
        # 11 initial pins + 3 per aero node + defects + terminal
        expected_min = 11 + 3 * solver.mid + (solver.n - 1) * 11 + 10
        assert zero_rows == expected_min

    def test_min_thrust_not_nodal_convex(self, solver, ref_and_segs):
        # thrust-minimum is nonconvex: it must never appear as a hard nodal
        # lower-bound row on the thrust magnitude (only soft helpers + CTCS)
        ref, segs, defects = ref_and_segs
        prob = solver.assemble(ref, segs, defects, weight=8.0)
        # all SOC blocks bound norms from above; count is checked elsewhere
        for c in prob.cones:
            assert c.kind in ("zero", "nonneg", "soc")


class TestObjective:
    def test_direction_must_be_unit(self):
        with pytest.raises(ValueError):
            Objective("defect-hull", direction=np.array([2.0, 0, 0]), origin=np.zeros(3))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Objective("min-drag")
