"""Incremental 3D convex hull with explicit degenerate growth phases.

The reachability polytope starts as a single point and may stay collinear or
coplanar for several insertions, so the hull tracks its affine dimension
(0..3) and only switches to the full face-based incremental algorithm once
four affinely independent points exist. In the 3D phase, insertion finds the
faces visible from the new point, removes them, and stitches a fan of new
triangles around the horizon; interior points leave the hull untouched.

Predicates are epsilon-based, scaled by the current extent: this is geometry
over measured ignition points meters apart, not adversarial input.
"""

from __future__ import annotations

import numpy as np

EPS_REL = 1e-12


class HullError(ValueError):
    pass


class IncrementalHull:
    """Convex hull of a growing point set in up to three dimensions."""

    def __init__(self):
        self.points: list[np.ndarray] = []
        self.dim = -1               # affine dimension of the current hull
        self.vertex_ids: list[int] = []
        self.faces: list[tuple[int, int, int]] = []
        self._interior: np.ndarray | None = None

    # will be rebuilt lazily after each insertion
    def _scale(self) -> float:
        if not self.points:
            return 1.0
        arr = np.asarray(self.points)
        extent = float(np.ptp(arr, axis=0).max()) if len(self.points) > 1 else 0.0
        return max(extent, 1.0)

    def insert(self, point) -> bool:
        """Add a point; returns True when the hull actually grew."""
        p = np.asarray(point, dtype=float).copy()
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise HullError(f"invalid point {point}")
        idx = len(self.points)
        self.points.append(p)
        eps = EPS_REL * self._scale() * 1e3

        if self.dim == -1:
            self.dim = 0
            self.vertex_ids = [idx]
            return True
        if self.dim == 0:
            if np.linalg.norm(p - self.points[self.vertex_ids[0]]) <= eps:
                return False
            self.dim = 1
            self.vertex_ids.append(idx)
            return True
        if self.dim == 1:
            return self._insert_dim1(idx, eps)
        if self.dim == 2:
            return self._insert_dim2(idx, eps)
        return self._insert_dim3(idx, eps)

    # --- degenerate phases -------------------------------------------------

    def _insert_dim1(self, idx: int, eps: float) -> bool:
        a = self.points[self.vertex_ids[0]]
        b = self.points[self.vertex_ids[1]]
        p = self.points[idx]
        axis = b - a
        axis_n = np.linalg.norm(axis)
        perp = np.linalg.norm(np.cross(axis / axis_n, p - a))
        if perp > eps:
            self.dim = 2
            self.vertex_ids.append(idx)
            self._rebuild_2d(eps)
            return True
        t = float(axis @ (p - a)) / axis_n**2
        if t < -eps / axis_n:
            self.vertex_ids[0] = idx
            return True
        if t > 1 + eps / axis_n:
            self.vertex_ids[1] = idx
            return True
        return False

    def _plane_basis(self, eps: float):
        a = self.points[self.vertex_ids[0]]
        b = self.points[self.vertex_ids[1]]
        c = self.points[self.vertex_ids[2]]
        u = b - a
        n = np.cross(u, c - a)
        n /= np.linalg.norm(n)
        u /= np.linalg.norm(u)
        v = np.cross(n, u)
        return a, u, v, n

    def _rebuild_2d(self, eps: float) -> None:
        """Recompute the planar hull polygon over every point seen so far."""
        a, u, v, n = self._plane_basis(eps)
        pts2 = np.array([[(p - a) @ u, (p - a) @ v] for p in self.points])
        order = self._monotone_chain(pts2, eps)
        self.vertex_ids = order

    @staticmethod
    def _monotone_chain(pts2: np.ndarray, eps: float) -> list[int]:
        idxs = sorted(range(len(pts2)), key=lambda i: (pts2[i, 0], pts2[i, 1]))

        def half(seq):
            out: list[int] = []
            for i in seq:
                while len(out) >= 2:
                    o, q = pts2[out[-2]], pts2[out[-1]]
                    cr = (q[0] - o[0]) * (pts2[i, 1] - o[1]) - (q[1] - o[1]) * (
                        pts2[i, 0] - o[0]
                    )
                    if cr <= eps:
                        out.pop()
                    else:
                        break
                out.append(i)
            return out

        lower = half(idxs)
        upper = half(reversed(idxs))
        return lower[:-1] + upper[:-1]

    def _insert_dim2(self, idx: int, eps: float) -> bool:
        a, u, v, n = self._plane_basis(eps)
        p = self.points[idx]
        height = float(n @ (p - a))
        if abs(height) > eps:
            self._rebuild_3d(eps)
            return True
        before = list(self.vertex_ids)
        self._rebuild_2d(eps)
        return set(before) != set(self.vertex_ids)

    # --- full-dimensional phase ---------------------------------------------

    def _rebuild_3d(self, eps: float) -> None:
        """Seed a tetrahedron from affinely independent points, insert the rest."""
        pts = self.points
        i0 = 0
        i1 = max(range(len(pts)), key=lambda i: np.linalg.norm(pts[i] - pts[i0]))
        if np.linalg.norm(pts[i1] - pts[i0]) <= eps:
            raise HullError("degenerate rebuild: all points coincide")
        axis = pts[i1] - pts[i0]
        axis /= np.linalg.norm(axis)
        i2 = max(
            range(len(pts)), key=lambda i: np.linalg.norm(np.cross(axis, pts[i] - pts[i0]))
        )
        n = np.cross(axis, pts[i2] - pts[i0])
        if np.linalg.norm(n) <= eps:
            raise HullError("degenerate rebuild: points collinear")
        n /= np.linalg.norm(n)
        i3 = max(range(len(pts)), key=lambda i: abs(n @ (pts[i] - pts[i0])))
        if abs(n @ (pts[i3] - pts[i0])) <= eps:
            raise HullError("degenerate rebuild: points coplanar")

        base = [i0, i1, i2, i3]
        self._interior = np.mean([pts[i] for i in base], axis=0)
        self.faces = []
        for f in ((i0, i1, i2), (i0, i1, i3), (i0, i2, i3), (i1, i2, i3)):
            self.faces.append(self._oriented(f))
        self.dim = 3
        for i in range(len(pts)):
            if i not in base:
                self._insert_dim3(i, eps)
        self._refresh_vertices()

    def _oriented(self, f: tuple[int, int, int]) -> tuple[int, int, int]:
        a, b, c = (self.points[i] for i in f)
        n = np.cross(b - a, c - a)
        if n @ (a - self._interior) < 0:
            return (f[0], f[2], f[1])
        return f

    def _face_normal(self, f) -> tuple[np.ndarray, np.ndarray]:
        a, b, c = (self.points[i] for i in f)
        n = np.cross(b - a, c - a)
        return n, a

    def _insert_dim3(self, idx: int, eps: float) -> bool:
        p = self.points[idx]
        visible = []
        for fi, f in enumerate(self.faces):
            n, a = self._face_normal(f)
            nn = np.linalg.norm(n)
            if float(n @ (p - a)) > eps * nn:
                visible.append(fi)
        if not visible:
            return False
        # horizon: edges used exactly once among visible faces
        edge_count: dict[tuple[int, int], tuple[int, int]] = {}
        for fi in visible:
            i, j, k = self.faces[fi]
            for e in ((i, j), (j, k), (k, i)):
                key = (min(e), max(e))
                if key in edge_count:
                    edge_count.pop(key)
                else:
                    edge_count[key] = e  # keep directed edge of the visible face
        keep = [f for fi, f in enumerate(self.faces) if fi not in set(visible)]
        for _, directed in sorted(edge_count.items()):
            i, j = directed
            # visible face had edge i->j; the new face keeps the outward loop
            keep.append(self._oriented((i, j, idx)))
        self.faces = keep
        self._refresh_vertices()
        return True

    def _refresh_vertices(self) -> None:
        ids = sorted({i for f in self.faces for i in f})
        self.vertex_ids = ids

    # --- queries -------------------------------------------------------------

    @property
    def vertices(self) -> np.ndarray:
        return np.array([self.points[i] for i in self.vertex_ids])

    def volume(self) -> float:
        if self.dim < 3:
            return 0.0
        ref = self._interior
        vol = 0.0
        for i, j, k in self.faces:
            a, b, c = self.points[i] - ref, self.points[j] - ref, self.points[k] - ref
            vol += float(np.linalg.det(np.stack([a, b, c]))) / 6.0
        return vol

    def facet_array(self) -> np.ndarray:
        """(n_faces, 3) vertex indices into self.points, outward-oriented."""
        return np.array(self.faces, dtype=int).reshape(-1, 3)

    def facet_normals_areas(self) -> tuple[np.ndarray, np.ndarray]:
        normals = []
        areas = []
        for f in self.faces:
            n, _ = self._face_normal(f)
            nn = np.linalg.norm(n)
            normals.append(n / nn)
            areas.append(0.5 * nn)
        return np.array(normals), np.array(areas)

    def contains(self, p, tol: float = 1e-9) -> bool:
        """Point-in-hull test (3D phase only), tolerance relative to extent."""
        if self.dim < 3:
            raise HullError("containment test requires a full-dimensional hull")
        p = np.asarray(p, dtype=float)
        scaled = tol * self._scale()
        for f in self.faces:
            n, a = self._face_normal(f)
            if float(n @ (p - a)) > scaled * np.linalg.norm(n):
                return False
        return True


def hull_insert(hull: IncrementalHull, point) -> bool:
    """Functional wrapper: insert one point, return whether the hull changed."""
    return hull.insert(point)


def batch_volume_oracle(points: np.ndarray) -> float:
    """Volume via an independent batch hull build (scipy Qhull)."""
    from scipy.spatial import ConvexHull

    pts = np.asarray(points, dtype=float)
    if len(pts) < 4:
        return 0.0
    try:
        return float(ConvexHull(pts).volume)
    except Exception:
        return 0.0
