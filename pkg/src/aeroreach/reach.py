"""Defect-hull reachability: grow a polytope of feasible ignition points.

Starting from the converged minimum-fuel trajectory's ignition point, each
iteration samples a point on the polytope surface and a random outward
direction, solves the ray-expansion trajectory problem warm-started from the
nearest archived vertex trajectory, re-propagates the result through the
full nonlinear dynamics, and inserts the new ignition point into the hull
only when that open-loop replay stays feasible. Every vertex therefore
carries a witnessing trajectory; interior or rejected results are logged
(and archived when feasible) but never shrink the hull.

Randomness comes from one counter-based generator (Philox) keyed by a
single 64-bit seed; its full state rides along in checkpoints, so a resumed
run and an uninterrupted run produce identical attempt sequences, and
replaying the attempt log rebuilds the polytope bit-identically.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .hull import IncrementalHull
from .kernels import pure as kpure
from .scp import (
    BoundaryConditions,
    Objective,
    Reference,
    ScpParams,
    ScpSolver,
    TrajectorySolution,
)
from .transcription import DilatedTime, PropagationError, Transcriber

ACCEPTED = "accepted"
ACCEPTED_INTERIOR = "accepted-interior"
REJ_INFEASIBLE = "rejected-infeasible"
REJ_NOT_CONVERGED = "rejected-not-converged"
REJ_NUMERICAL = "rejected-numerical"


@dataclass
class ArchivedTrajectory:
    states: np.ndarray
    controls: np.ndarray
    tau_a: float
    tau_p: float

    def as_reference(self) -> Reference:
        return Reference(
            self.states.copy(), self.controls.copy(), DilatedTime(self.tau_a, self.tau_p)
        )


@dataclass
class ExpansionAttempt:
    index: int
    origin: np.ndarray
    direction: np.ndarray
    result: str
    mu: float | None = None
    vertex: np.ndarray | None = None
    archive_key: int | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "origin": self.origin.tolist(),
            "direction": self.direction.tolist(),
            "result": self.result,
            "mu": self.mu,
            "vertex": None if self.vertex is None else self.vertex.tolist(),
            "archive_key": self.archive_key,
            "detail": self.detail,
        }


@dataclass
class ReachPolytope:
    hull: IncrementalHull
    archive: dict[int, ArchivedTrajectory] = field(default_factory=dict)
    vertex_keys: list[tuple[np.ndarray, int]] = field(default_factory=list)
    volume_history: list[float] = field(default_factory=list)
    attempts: list[ExpansionAttempt] = field(default_factory=list)
    seed: int = 0
    iteration: int = 0

    @property
    def volume(self) -> float:
        return self.hull.volume()

    def rejection_stats(self) -> dict:
        counts = {
            ACCEPTED: 0,
            ACCEPTED_INTERIOR: 0,
            REJ_INFEASIBLE: 0,
            REJ_NOT_CONVERGED: 0,
            REJ_NUMERICAL: 0,
        }
        for a in self.attempts:
            counts[a.result] += 1
        return counts


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def init_polytope(solution: TrajectorySolution, mid_index: int, seed: int) -> ReachPolytope:
    """Degenerate polytope holding the min-fuel ignition point."""
    if not solution.converged:
        raise ValueError("reachability must be initialized from a converged solution")
    hull = IncrementalHull()
    point = solution.states[mid_index, 1:4].copy()
    hull.insert(point)
    poly = ReachPolytope(hull=hull, seed=seed)
    poly.archive[0] = ArchivedTrajectory(
        solution.states.copy(), solution.controls.copy(),
        solution.dil.tau_a, solution.dil.tau_p,
    )
    poly.vertex_keys.append((point, 0))
    poly.volume_history.append(0.0)
    return poly


def _uniform_sphere(rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n > 1e-12:
            return v / n


def sample_surface(
    poly: ReachPolytope, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Surface point (area-weighted on facets) and outward-hemisphere direction.

    Degenerate hulls (point / segment / polygon) sample uniformly on their
    affine hull with full-sphere directions until the polytope becomes
    three-dimensional.
    """
    hull = poly.hull
    if hull.dim <= 0:
        origin = hull.points[hull.vertex_ids[0]].copy()
        return origin, _uniform_sphere(rng)
    if hull.dim == 1:
        a = hull.points[hull.vertex_ids[0]]
        b = hull.points[hull.vertex_ids[1]]
        t = rng.uniform()
        return a + t * (b - a), _uniform_sphere(rng)
    if hull.dim == 2:
        ids = hull.vertex_ids
        a = hull.points[ids[0]]
        tris = [(ids[i], ids[i + 1]) for i in range(1, len(ids) - 1)]
        areas = np.array(
            [
                0.5 * np.linalg.norm(np.cross(hull.points[i] - a, hull.points[j] - a))
                for i, j in tris
            ]
        )
        total = areas.sum()
        if total <= 0:
            return a.copy(), _uniform_sphere(rng)
        pick = int(rng.choice(len(tris), p=areas / total))
        b, c = hull.points[tris[pick][0]], hull.points[tris[pick][1]]
        u, v = rng.uniform(), rng.uniform()
        if u + v > 1.0:
            u, v = 1.0 - u, 1.0 - v
        return a + u * (b - a) + v * (c - a), _uniform_sphere(rng)

    normals, areas = hull.facet_normals_areas()
    pick = int(rng.choice(len(areas), p=areas / areas.sum()))
    fi, fj, fk = hull.faces[pick]
    a, b, c = hull.points[fi], hull.points[fj], hull.points[fk]
    u, v = rng.uniform(), rng.uniform()
    if u + v > 1.0:
        u, v = 1.0 - u, 1.0 - v
    origin = a + u * (b - a) + v * (c - a)
    d = _uniform_sphere(rng)
    n = normals[pick]
    if float(d @ n) < 0.0:
        d = d - 2.0 * float(d @ n) * n
    return origin, d


@dataclass
class ReachContext:
    """Everything an expansion needs besides the polytope itself."""

    trans: Transcriber
    scp: ScpParams
    boundary: BoundaryConditions
    tan_glideslope: float
    feasibility_tol: float = 1e-3
    backend: object | None = None


def nearest_vertex_key(poly: ReachPolytope, origin: np.ndarray) -> int:
    """Archive key of the vertex closest to the sample (ties: lower key)."""
    best_key = None
    best_d = np.inf
    for point, key in poly.vertex_keys:
        d = float(np.linalg.norm(point - origin))
        if d < best_d - 1e-12 or (abs(d - best_d) <= 1e-12 and (best_key is None or key < best_key)):
            best_d = d
            best_key = key
    assert best_key is not None
    return best_key


def replay_feasibility(
    ctx: ReachContext, solution: TrajectorySolution
) -> tuple[bool, float]:
    """Open-loop nonlinear replay of a solution; returns (feasible, violation).

    Violation is the max over scaled node-state drift, terminal residual,
    normalized nodal path constraints, fin-bound excess, rate excess, and
    CTCS segment integrals beyond their budget.
    """
    trans = ctx.trans
    disc = trans.disc
    n = disc.n_nodes
    scales = disc.state_scales
    worst = 0.0
    x = solution.states[0].copy()
    for k in range(n - 1):
        res = trans.propagate_segment(
            k, x, solution.controls[k], solution.controls[k + 1], solution.dil,
            want_jac=False,
        )
        x = res.x_end
        drift = np.abs((x - solution.states[k + 1]) / scales).max()
        worst = max(worst, drift)
        worst = max(worst, float(np.maximum(0.0, res.y_end - disc.ctcs_eps).max()))
        prop = int(k + 1 >= disc.mid_index)
        g, _, _ = kpure.path_constraint_linearization(
            x, solution.controls[k + 1], prop, trans.params, trans.tables
        )
        if not prop:
            g[1] = -1.0
        worst = max(worst, float(np.maximum(0.0, g).max()))
        lo, hi, _, _ = kpure.fin_bound_linearization(x, trans.params, trans.tables)
        ua = solution.controls[k + 1, 3:5]
        worst = max(worst, float(np.maximum(0.0, lo - ua).max()))
        worst = max(worst, float(np.maximum(0.0, ua - hi).max()))
        omn = float(np.linalg.norm(x[9:11]))
        worst = max(worst, max(0.0, omn - trans.vehicle.omega_max) / trans.vehicle.omega_max)
    term = np.abs((x[1:11] - ctx.boundary.xf) / scales[1:]).max()
    worst = max(worst, float(term))
    return worst <= ctx.feasibility_tol, float(worst)


def expand_once(
    poly: ReachPolytope, ctx: ReachContext, rng: np.random.Generator
) -> ExpansionAttempt:
    """One surface sample + ray solve + feasibility-gated hull insertion."""
    origin, direction = sample_surface(poly, rng)
    attempt = ExpansionAttempt(
        index=poly.iteration, origin=origin.copy(), direction=direction.copy(), result=""
    )
    warm = poly.archive[nearest_vertex_key(poly, origin)].as_reference()
    objective = Objective("defect-hull", direction=direction, origin=origin)
    solver = ScpSolver(
        ctx.trans, ctx.scp, ctx.boundary, objective,
        tan_glideslope=ctx.tan_glideslope, backend=ctx.backend,
    )
    try:
        solution, report = solver.solve(warm)
    except (PropagationError, AssertionError) as exc:
        attempt.result = REJ_NUMERICAL
        attempt.detail = str(exc)
        return _log(poly, attempt)
    if report.status == "solver-failure":
        attempt.result = REJ_NUMERICAL
        attempt.detail = "subproblem backend failure"
        return _log(poly, attempt)

    # treat a feasible final iterate at the iteration cap as usable: the
    # nonlinear replay below is the actual acceptance authority
    if not (solution.converged or solution.final_violation <= ctx.scp.convergence_tol):
        attempt.result = REJ_NOT_CONVERGED
        attempt.detail = f"violation {solution.final_violation:.2e}"
        return _log(poly, attempt)

    feasible, worst = replay_feasibility(ctx, solution)
    if not feasible:
        attempt.result = REJ_INFEASIBLE
        attempt.detail = f"replay violation {worst:.2e}"
        return _log(poly, attempt)

    vertex = solution.states[ctx.trans.disc.mid_index, 1:4].copy()
    mu = float(direction @ (vertex - origin))
    key = max(poly.archive) + 1
    poly.archive[key] = ArchivedTrajectory(
        solution.states.copy(), solution.controls.copy(),
        solution.dil.tau_a, solution.dil.tau_p,
    )
    changed = poly.hull.insert(vertex)
    poly.vertex_keys.append((vertex, key))
    attempt.result = ACCEPTED if changed else ACCEPTED_INTERIOR
    attempt.mu = mu
    attempt.vertex = vertex
    attempt.archive_key = key
    return _log(poly, attempt)


def _log(poly: ReachPolytope, attempt: ExpansionAttempt) -> ExpansionAttempt:
    poly.attempts.append(attempt)
    poly.volume_history.append(poly.volume)
    poly.iteration += 1
    return attempt


def run_reachability(
    poly: ReachPolytope,
    ctx: ReachContext,
    iters: int,
    rng: np.random.Generator,
    checkpoint_every: int = 0,
    checkpoint_fn=None,
    progress_fn=None,
) -> ReachPolytope:
    """Iterate expansions; checkpoints fire every `checkpoint_every` attempts."""
    t0 = time.perf_counter()
    for i in range(iters):
        attempt = expand_once(poly, ctx, rng)
        if progress_fn is not None:
            progress_fn(poly.iteration, attempt, poly.volume, time.perf_counter() - t0)
        if checkpoint_every and checkpoint_fn and poly.iteration % checkpoint_every == 0:
            checkpoint_fn(poly, rng)
    return poly


def replay_attempts(attempts: list[ExpansionAttempt], first_vertex: np.ndarray) -> IncrementalHull:
    """Rebuild the hull from the attempt log (bit-identical to the original)."""
    hull = IncrementalHull()
    hull.insert(np.asarray(first_vertex, dtype=float))
    for a in attempts:
        if a.result in (ACCEPTED, ACCEPTED_INTERIOR) and a.vertex is not None:
            hull.insert(np.asarray(a.vertex, dtype=float))
    return hull

