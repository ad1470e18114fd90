"""Abstract conic-program backend and the Clarabel implementation.

The solver contract is minimal: minimize a linear objective plus a diagonal
quadratic term subject to affine equalities, nonnegativity rows, and
second-order cones, returning primal values and a status. Subproblems always
carry enough slack variables to be feasible, so an infeasible status signals
an assembly bug rather than a modeling outcome.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass
class ConeSpec:
    """Row-block cone tags in order: 'zero', 'nonneg', or 'soc'."""

    kind: str
    dim: int


@dataclass
class ConicProblem:
    """min 0.5 z' diag(p_diag) z + q' z  s.t.  a z + s = b, s in cones."""

    p_diag: np.ndarray
    q: np.ndarray
    a: sp.csc_matrix
    b: np.ndarray
    cones: list[ConeSpec]


@dataclass
class ConicSolution:
    x: np.ndarray
    status: str           # solved | almost_solved | infeasible | error:<detail>
    objective: float
    solve_time: float

    @property
    def ok(self) -> bool:
        return self.status in ("solved", "almost_solved")


class SubproblemBuilder:
    """Accumulates variables valued in cones; emits a ConicProblem.

    Rows are gathered per cone family and reordered zero/nonneg/soc at build
    time, which is the layout Clarabel expects.
    """

    def __init__(self, n_vars: int):
        self.n = n_vars
        self.p_diag = np.zeros(n_vars)
        self.q = np.zeros(n_vars)
        self._eq_rows: list[tuple[list[tuple[int, float]], float]] = []
        self._ineq_rows: list[tuple[list[tuple[int, float]], float]] = []
        self._soc_blocks: list[list[tuple[list[tuple[int, float]], float]]] = []

    def add_eq(self, coeffs: list[tuple[int, float]], rhs: float) -> None:
        """coeffs . z = rhs"""
        self._eq_rows.append((coeffs, rhs))

    def add_ineq(self, coeffs: list[tuple[int, float]], rhs: float) -> None:
        """coeffs . z <= rhs"""
        self._ineq_rows.append((coeffs, rhs))

    def add_soc(self, rows: list[tuple[list[tuple[int, float]], float]]) -> None:
        """Rows r_i = rhs_i - coeffs_i . z with (r_0, r_1..) in a second-order cone."""
        self._soc_blocks.append(rows)

    def build(self) -> ConicProblem:
        rows: list[list[tuple[int, float]]] = []
        rhs: list[float] = []
        cones: list[ConeSpec] = []
        if self._eq_rows:
            for coeffs, b in self._eq_rows:
                rows.append(coeffs)
                rhs.append(b)
            cones.append(ConeSpec("zero", len(self._eq_rows)))
        if self._ineq_rows:
            for coeffs, b in self._ineq_rows:
                rows.append(coeffs)
                rhs.append(b)
            cones.append(ConeSpec("nonneg", len(self._ineq_rows)))
        for block in self._soc_blocks:
            for coeffs, b in block:
                rows.append(coeffs)
                rhs.append(b)
            cones.append(ConeSpec("soc", len(block)))

        data, ri, ci = [], [], []
        for i, coeffs in enumerate(rows):
            for j, v in coeffs:
                if v != 0.0:
                    ri.append(i)
                    ci.append(j)
                    data.append(v)
        a = sp.csc_matrix((data, (ri, ci)), shape=(len(rows), self.n))
        return ConicProblem(self.p_diag, self.q, a, np.asarray(rhs), cones)


class ClarabelBackend:
    """Interior-point conic backend (the one required capability)."""

    def __init__(self, tol: float = 1e-9, max_iter: int = 200):
        self.tol = tol
        self.max_iter = max_iter

    def solve(self, problem: ConicProblem) -> ConicSolution:
        import clarabel

        cones = []
        for c in problem.cones:
            if c.kind == "zero":
                cones.append(clarabel.ZeroConeT(c.dim))
            elif c.kind == "nonneg":
                cones.append(clarabel.NonnegativeConeT(c.dim))
            elif c.kind == "soc":
                cones.append(clarabel.SecondOrderConeT(c.dim))
            else:
                raise ValueError(f"unknown cone {c.kind}")
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.tol_gap_abs = self.tol
        settings.tol_gap_rel = self.tol
        settings.tol_feas = self.tol
        settings.max_iter = self.max_iter
        p = sp.diags(problem.p_diag, format="csc")
        solver = clarabel.DefaultSolver(
            p, problem.q, problem.a, problem.b, cones, settings
        )
        sol = solver.solve()
        status = str(sol.status)
        if status == "Solved":
            tag = "solved"
        elif status in ("AlmostSolved", "InsufficientProgress", "MaxIterations"):
            tag = "almost_solved" if status == "AlmostSolved" else f"error:{status}"
        elif status == "PrimalInfeasible":
            tag = "infeasible"
        elif status == "DualInfeasible":
            tag = "error:unbounded"
        else:
            tag = f"error:{status}"
        return ConicSolution(
            x=np.asarray(sol.x),
            status=tag,
            objective=float(sol.obj_val),
            solve_time=float(sol.solve_time),
        )


def solve_subproblem(problem: ConicProblem, backend=None) -> ConicSolution:
    """Solve with the given backend (Clarabel with spec-default tolerance if None)."""
    return (backend or ClarabelBackend()).solve(problem)

