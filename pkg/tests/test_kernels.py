"""Kernel validation: RHS against the readable dynamics, Jacobians against
central finite differences, and integrator sanity."""

import numpy as np
import pytest

from aeroreach.dynamics import ControlInput, VehicleState, state_derivative
from aeroreach.kernels import common as kc
from aeroreach.kernels import pure

from conftest import random_control, random_flight_state


def ctcs_tail(x, u, prop, vehicle, env, aerodb):
    """Independent evaluation of the six violation integrands."""
    import math

    from aeroreach.aerotables import interp3
    from aeroreach.dynamics import angle_of_attack
    from aeroreach.environment import atmosphere

    out = np.zeros(6)
    v = x[4:7]
    speed = np.linalg.norm(v)
    scales = np.array([1.0, 20.0, 10.0, 0.1, 5e-4, 1e-6])
    rho, c = atmosphere(x[1:4], env)
    if speed > 0:
        alpha, a1, a2 = angle_of_attack(v, x[7:9])
        mach = speed / c
    else:
        alpha = a1 = a2 = mach = 0.0
    g = math.tanh(speed / vehicle.v_small) * alpha - vehicle.alpha_max if speed > 0 else -1.0
    out[0] = scales[0] * max(0.0, g) ** 2
    if prop:
        g = (vehicle.u_min - np.linalg.norm(u[0:3])) / vehicle.u_max
        out[1] = scales[1] * max(0.0, g) ** 2
    acc = 0.0
    for i in range(2):
        lo = interp3(aerodb.fin_bound_lo[i], mach, np.degrees(a1), np.degrees(a2))
        hi = interp3(aerodb.fin_bound_hi[i], mach, np.degrees(a1), np.degrees(a2))
        acc += max(0.0, lo - u[3 + i]) ** 2 + max(0.0, u[3 + i] - hi) ** 2
    out[2] = scales[2] * acc
    out[3] = scales[3] * max(0.0, np.linalg.norm(x[9:11]) - vehicle.omega_max) ** 2
    q = 0.5 * rho * speed**2
    out[4] = scales[4] * max(0.0, q - vehicle.q_max) ** 2
    out[5] = scales[5] * max(0.0, q * alpha - vehicle.chi_max) ** 2
    return out


class TestRhsAgainstDynamics:
    def test_physical_rows_match(self, packed, vehicle, env, aerodb):
        pp, tb = packed
        rng = np.random.default_rng(42)
        for trial in range(40):
            prop = trial % 2 == 0
            x = random_flight_state(rng)
            u = random_control(rng, prop)
            f, _, _ = pure.rhs_jac(x, u, int(prop), pp, tb, False)
            ref = state_derivative(
                VehicleState.from_vector(x),
                ControlInput.from_vector(u),
                prop,
                vehicle,
                env,
                aerodb,
            )
            scale = np.maximum(np.abs(ref), 1.0)
            assert np.allclose(f[:11], ref, rtol=1e-11, atol=1e-11 * scale.max())

    def test_ctcs_rows_match_oracle(self, packed, vehicle, env, aerodb):
        pp, tb = packed
        rng = np.random.default_rng(43)
        # bias states to violate constraints so the integrands activate
        for trial in range(30):
            prop = trial % 2 == 0
            x = random_flight_state(rng)
            x[9:11] = rng.uniform(-0.6, 0.6, 2)  # omega violations
            u = random_control(rng, prop)
            u[3:5] = rng.uniform(-1.4, 1.4, 2)  # fin bound violations
            if prop:
                u[0:3] *= 0.2  # thrust-min violations
            f, _, _ = pure.rhs_jac(x, u, int(prop), pp, tb, False)
            ref = ctcs_tail(x, u, prop, vehicle, env, aerodb)
            assert np.allclose(f[11:], ref, rtol=1e-10, atol=1e-14)


class TestAnalyticJacobians:
    @staticmethod
    def fd_jacobians(x, u, prop, pp, tb):
        nx, nu = 11, 5
        a_fd = np.zeros((17, nx))
        b_fd = np.zeros((17, nu))
        # absolute central-difference steps sized per coordinate
        steps_x = np.concatenate([[1.0], [1e-2] * 3, [1e-3] * 3, [1e-6] * 2, [1e-6] * 2])
        steps_u = np.concatenate([[1.0] * 3, [1e-6] * 2])
        for j in range(nx):
            h = steps_x[j]
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            fp, _, _ = pure.rhs_jac(xp, u, prop, pp, tb, False)
            fm, _, _ = pure.rhs_jac(xm, u, prop, pp, tb, False)
            a_fd[:, j] = (fp - fm) / (2 * h)
        for j in range(nu):
            h = steps_u[j]
            up, um = u.copy(), u.copy()
            up[j] += h
            um[j] -= h
            fp, _, _ = pure.rhs_jac(x, up, prop, pp, tb, False)
            fm, _, _ = pure.rhs_jac(x, um, prop, pp, tb, False)
            b_fd[:, j] = (fp - fm) / (2 * h)
        return a_fd, b_fd

    def test_jacobians_match_fd(self, packed):
        pp, tb = packed
        rng = np.random.default_rng(44)
        checked = 0
        for trial in range(60):
            prop = trial % 2 == 0
            x = random_flight_state(rng)
            u = random_control(rng, prop)
            u[3:5] = rng.uniform(-1.3, 1.3, 2)
            f, a_an, b_an = pure.rhs_jac(x, u, int(prop), pp, tb, True)
            a_fd, b_fd = self.fd_jacobians(x, u, int(prop), pp, tb)
            # row-wise comparison scaled by the row magnitude
            for mat_an, mat_fd in ((a_an, a_fd), (b_an, b_fd)):
                denom = max(1e-6, np.abs(mat_fd).max())
                rel = np.abs(mat_an - mat_fd).max() / denom
                assert rel < 2e-5, f"trial {trial}: rel {rel:.2e}"
            checked += 1
        assert checked == 60


class TestPropagation:
    def test_zero_dynamics_fixed_point_jacobian(self, packed):
        # all forces and damping disabled: the state is a fixed point and the
        # flow Jacobian is exactly I + sigma*dtau*K (K nilpotent kinematics)
        pp, tb = packed
        pp = pp.copy()
        pp[kc.P_MU] = 1e-30
        pp[kc.P_OMEGA_P : kc.P_OMEGA_P + 3] = 0.0
        pp[kc.P_CDAMP] = 0.0
        x0 = np.concatenate([[1.5e4], [0, 0, 95e3], [0, 0, 0.0], [0, 0], [0, 0]])
        u = np.zeros(5)
        sigma, dtau = 80.0, 0.025
        y, s, nsteps, status = pure.propagate_segment_raw(
            x0, u, u, sigma, 21, 0, dtau, pp, tb.blob, tb.idx,
            1e-10, np.full(17, 1e-12), True,
        )
        assert status == pure.STATUS_OK
        assert np.allclose(y[:11], x0, atol=1e-12)
        assert np.allclose(y[11:], 0.0)
        expected = np.eye(11)
        expected[1:4, 4:7] = sigma * dtau * np.eye(3)  # position from velocity
        expected[7:9, 9:11] = sigma * dtau * np.eye(2)  # tilt from rate
        assert np.allclose(s[:11, :11], expected, atol=1e-9)

    def test_ctcs_zero_when_never_violating(self, packed):
        pp, tb = packed
        x0 = np.concatenate([[1.8e4], [0, 1e3, 12e3], [0, -120, -300.0], [-0.37, 0], [0, 0]])
        u = np.zeros(5)
        y, _, _, status = pure.propagate_segment_raw(
            x0, u, u, 60.0, 21, 0, 0.025, pp, tb.blob, tb.idx,
            1e-9, np.full(17, 1e-11), False,
        )
        assert status == pure.STATUS_OK
        assert np.all(y[11:] == 0.0)

    def test_primal_identical_with_and_without_jacobian(self, packed):
        pp, tb = packed
        rng = np.random.default_rng(45)
        x0 = random_flight_state(rng)
        u0 = random_control(rng, False)
        u1 = random_control(rng, False)
        y1, _, n1, _ = pure.propagate_segment_raw(
            x0, u0, u1, 70.0, 21, 0, 0.025, pp, tb.blob, tb.idx, 1e-8, np.full(17, 1e-10), False
        )
        y2, s2, n2, _ = pure.propagate_segment_raw(
            x0, u0, u1, 70.0, 21, 0, 0.025, pp, tb.blob, tb.idx, 1e-8, np.full(17, 1e-10), True
        )
        assert n1 == n2
        assert np.array_equal(y1, y2)
        assert s2 is not None

    def test_segment_jacobian_matches_fd(self, packed):
        pp, tb = packed
        rng = np.random.default_rng(46)
        rtol, atol = 1e-11, np.full(17, 1e-13)
        for trial in range(6):
            prop = trial % 2 == 0
            x0 = random_flight_state(rng)
            u0 = random_control(rng, prop)
            u1 = random_control(rng, prop)
            sigma = rng.uniform(40.0, 120.0)
            sig_col = 22 if prop else 21

            y, s, _, status = pure.propagate_segment_raw(
                x0, u0, u1, sigma, sig_col, int(prop), 0.025, pp, tb.blob, tb.idx, rtol, atol, True
            )
            assert status == pure.STATUS_OK

            def prop_only(x0v, u0v, u1v, sig):
                yv, _, _, st = pure.propagate_segment_raw(
                    x0v, u0v, u1v, sig, sig_col, int(prop), 0.025, pp, tb.blob, tb.idx,
                    rtol, atol, False,
                )
                assert st == pure.STATUS_OK
                return yv

            # spot-check a subset of columns with central differences
            steps_x = np.concatenate([[1.0], [1e-2] * 3, [1e-3] * 3, [1e-4] * 2, [1e-4] * 2])
            cols = [0, 2, 5, 7, 9]
            for j in cols:
                h = steps_x[j]
                xp, xm = x0.copy(), x0.copy()
                xp[j] += h
                xm[j] -= h
                fd = (prop_only(xp, u0, u1, sigma) - prop_only(xm, u0, u1, sigma)) / (2 * h)
                denom = max(np.abs(fd).max(), 1e-8)
                assert np.abs(s[:, j] - fd).max() / denom < 3e-5
            # a control column and the dilation column
            h = 1.0 if prop else 1e-4
            u0p, u0m = u0.copy(), u0.copy()
            u0p[2] += h
            u0m[2] -= h
            fd = (prop_only(x0, u0p, u1, sigma) - prop_only(x0, u0m, u1, sigma)) / (2 * h)
            denom = max(np.abs(fd).max(), 1e-10)
            assert np.abs(s[:, 13] - fd).max() / denom < 3e-5

            hs = 1e-5 * sigma
            fd = (prop_only(x0, u0, u1, sigma + hs) - prop_only(x0, u0, u1, sigma - hs)) / (2 * hs)
            denom = max(np.abs(fd).max(), 1e-10)
            assert np.abs(s[:, sig_col] - fd).max() / denom < 3e-5


class TestBackendParity:
    def test_compiled_matches_pure(self, packed):
        from aeroreach import kernels

        if kernels.BACKEND != "compiled":
            pytest.skip("compiled kernel not built")
        core = kernels.get_backend("compiled")
        pp, tb = packed
        rng = np.random.default_rng(99)
        for trial in range(10):
            prop = trial % 2
            x0 = random_flight_state(rng)
            u0 = random_control(rng, prop)
            u1 = random_control(rng, prop)
            sigma = rng.uniform(40.0, 120.0)
            args = (
                x0, u0, u1, sigma, 21 + prop, prop, 0.025, pp, tb.blob, tb.idx,
                1e-8, np.full(17, 1e-10), True,
            )
            y1, s1, n1, st1 = pure.propagate_segment_raw(*args)
            y2, s2, n2, st2 = core.propagate_segment_raw(*args)
            assert (st1, n1) == (st2, n2)
            assert np.abs(y1 - y2).max() <= 1e-11 * max(1.0, np.abs(y1).max())
            assert np.abs(s1 - s2).max() <= 1e-8 * max(1.0, np.abs(s1).max())
