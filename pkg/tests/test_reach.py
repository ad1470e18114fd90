import math

import numpy as np
import pytest

from aeroreach.hull import IncrementalHull
from aeroreach.reach import (
    ACCEPTED,
    ExpansionAttempt,
    ReachContext,
    ReachPolytope,
    expand_once,
    init_polytope,
    make_rng,
    nearest_vertex_key,
    replay_attempts,
    run_reachability,
    sample_surface,
)
from aeroreach.scp import (
    BoundaryConditions,
    Objective,
    ScpParams,
    TrajectorySolution,
    solve_trajectory,
)
from aeroreach.transcription import DilatedTime, DiscretizationConfig, Transcriber

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
def minfuel(trans):
    sol, rep = solve_trajectory(
        trans, ScpParams(threads=4), BoundaryConditions(X0, XF), Objective("min-fuel"),
        tan_glideslope=TAN_GS, init_dil=DilatedTime(50.0, 30.0),
    )
    assert rep.status == "converged"
    return sol


@pytest.fixture(scope="module")
def ctx(trans):
    return ReachContext(
        trans=trans,
        scp=ScpParams(threads=4, max_iters=30),
        boundary=BoundaryConditions(X0, XF),
        tan_glideslope=TAN_GS,
    )


class TestInitPolytope:
    def test_singleton(self, minfuel, trans):
        poly = init_polytope(minfuel, trans.disc.mid_index, seed=1)
        assert poly.volume == 0.0
        assert poly.hull.dim == 0
        assert len(poly.archive) == 1
        ign = minfuel.states[trans.disc.mid_index, 1:4]
        assert np.array_equal(poly.vertex_keys[0][0], ign)

    def test_rejects_unconverged(self, minfuel, trans):
        bad = TrajectorySolution(
            minfuel.states, minfuel.controls, minfuel.dil, converged=False,
            iterations=1, final_violation=1.0, cost=0.0, objective_kind="min-fuel",
        )
        with pytest.raises(ValueError):
            init_polytope(bad, trans.disc.mid_index, seed=1)


class TestSampling:
    @staticmethod
    def box_polytope():
        hull = IncrementalHull()
        for x in (0.0, 2.0):
            for y in (0.0, 1.0):
                for z in (0.0, 1.0):
                    hull.insert([x, y, z])
        poly = ReachPolytope(hull=hull, seed=0)
        return poly

    def test_singleton_rule(self, minfuel, trans):
        poly = init_polytope(minfuel, trans.disc.mid_index, seed=3)
        rng = make_rng(3)
        dirs = []
        for _ in range(400):
            origin, d = sample_surface(poly, rng)
            assert np.array_equal(origin, poly.vertex_keys[0][0])
            assert np.linalg.norm(d) == pytest.approx(1.0, abs=1e-12)
            dirs.append(d)
        # full-sphere: mean direction near zero
        assert np.linalg.norm(np.mean(dirs, axis=0)) < 0.15

    def test_box_area_weighted_frequencies(self):
        poly = self.box_polytope()
        rng = make_rng(7)
        # box 2x1x1: face areas x: 1 each, y: 2 each, z: 2 each (total 10)
        counts = {"x0": 0, "x2": 0, "y0": 0, "y1": 0, "z0": 0, "z1": 0}
        n = 10000
        for _ in range(n):
            origin, d = sample_surface(poly, rng)
            tol = 1e-9
            if abs(origin[0]) < tol:
                counts["x0"] += 1
            elif abs(origin[0] - 2.0) < tol:
                counts["x2"] += 1
            elif abs(origin[1]) < tol:
                counts["y0"] += 1
            elif abs(origin[1] - 1.0) < tol:
                counts["y1"] += 1
            elif abs(origin[2]) < tol:
                counts["z0"] += 1
            elif abs(origin[2] - 1.0) < tol:
                counts["z1"] += 1
        probs = {"x0": 0.1, "x2": 0.1, "y0": 0.2, "y1": 0.2, "z0": 0.2, "z1": 0.2}
        for face, p in probs.items():
            sigma = math.sqrt(n * p * (1 - p))
            assert abs(counts[face] - n * p) < 3 * sigma, (face, counts)

    def test_direction_outward(self):
        poly = self.box_polytope()
        rng = make_rng(11)
        for _ in range(500):
            origin, d = sample_surface(poly, rng)
            # find the face normal at the sample: box faces are axis-aligned
            n = np.zeros(3)
            for ax, (lo, hi) in enumerate(((0, 2.0), (0, 1.0), (0, 1.0))):
                if abs(origin[ax] - lo) < 1e-9:
                    n[ax] = -1.0
                elif abs(origin[ax] - hi) < 1e-9:
                    n[ax] = 1.0
            if np.linalg.norm(n) == 1.0:  # skip edges/corners
                assert d @ n >= -1e-12


class TestBookkeeping:
    def test_nearest_vertex_tie_breaks_low_key(self):
        hull = IncrementalHull()
        hull.insert([0.0, 0.0, 0.0])
        poly = ReachPolytope(hull=hull, seed=0)
        poly.vertex_keys = [
            (np.array([1.0, 0.0, 0.0]), 5),
            (np.array([-1.0, 0.0, 0.0]), 2),
        ]
        assert nearest_vertex_key(poly, np.zeros(3)) == 2

    def test_replay_bit_identical(self):
        rng = np.random.default_rng(0)
        first = np.array([10.0, 20.0, 30.0])
        attempts = []
        hull = IncrementalHull()
        hull.insert(first)
        for i in range(40):
            v = first + rng.normal(size=3) * 50
            changed = hull.insert(v.copy())
            attempts.append(
                ExpansionAttempt(
                    index=i, origin=first, direction=np.array([1.0, 0, 0]),
                    result=ACCEPTED if changed else "accepted-interior",
                    vertex=v.copy(),
                )
            )
        replayed = replay_attempts(attempts, first)
        assert replayed.volume() == hull.volume()  # bitwise: same float ops
        assert replayed.faces == hull.faces

    def test_zero_iters_unchanged(self, minfuel, trans, ctx):
        poly = init_polytope(minfuel, trans.disc.mid_index, seed=9)
        rng = make_rng(9)
        run_reachability(poly, ctx, 0, rng)
        assert poly.iteration == 0
        assert poly.volume == 0.0
        assert len(poly.archive) == 1


class TestExpansion:
    def test_accepted_expansion_grows_and_archives(self, minfuel, trans, ctx):
        poly = init_polytope(minfuel, trans.disc.mid_index, seed=42)
        rng = make_rng(42)
        attempt = expand_once(poly, ctx, rng)
        assert attempt.result in (ACCEPTED, "accepted-interior", "rejected-not-converged")
        if attempt.result == ACCEPTED:
            assert attempt.archive_key in poly.archive
            assert len(poly.vertex_keys) == 2
        assert poly.iteration == 1
        assert len(poly.volume_history) == 2

    def test_rejection_never_modifies_vertices(self, minfuel, trans, ctx):
        import dataclasses

        poly = init_polytope(minfuel, trans.disc.mid_index, seed=43)
        strict = dataclasses.replace(ctx, feasibility_tol=1e-14)  # impossible gate
        rng = make_rng(43)
        before = [tuple(p) for p, _ in poly.vertex_keys]
        attempt = expand_once(poly, strict, rng)
        assert attempt.result.startswith("rejected")
        assert [tuple(p) for p, _ in poly.vertex_keys] == before
        assert poly.volume_history[-1] == 0.0
