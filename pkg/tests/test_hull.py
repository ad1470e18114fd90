import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeroreach.hull import HullError, IncrementalHull, batch_volume_oracle


def build(points):
    h = IncrementalHull()
    for p in points:
        h.insert(p)
    return h


class TestDegeneratePhases:
    def test_singleton(self):
        h = build([[1.0, 2.0, 3.0]])
        assert h.dim == 0
        assert h.volume() == 0.0

    def test_duplicate_point_ignored(self):
        h = build([[1, 2, 3], [1, 2, 3]])
        assert h.dim == 0

    def test_segment_and_extension(self):
        h = build([[0, 0, 0], [1, 0, 0], [0.5, 0, 0]])
        assert h.dim == 1
        assert not h.insert([0.25, 0, 0])
        assert h.insert([2.0, 0, 0])
        assert {tuple(v) for v in h.vertices} == {(0, 0, 0), (2, 0, 0)}

    def test_planar_phase(self):
        h = build([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [0.5, 0.5, 0]])
        assert h.dim == 2
        assert len(h.vertex_ids) == 4  # interior point excluded
        assert h.volume() == 0.0

    def test_lift_to_3d(self):
        h = build([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
        assert h.dim == 3
        assert h.volume() == pytest.approx(1.0 / 6.0, rel=1e-12)


class TestFullDimensional:
    def test_unit_tetrahedron_volume(self):
        h = build([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
        assert h.volume() == pytest.approx(1.0 / 6.0, rel=1e-12)

    def test_centroid_insert_unchanged(self):
        h = build([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
        v0 = h.volume()
        f0 = len(h.faces)
        changed = h.insert([0.25, 0.25, 0.25])
        assert not changed
        assert h.volume() == v0 and len(h.faces) == f0

    def test_cube_volume(self):
        corners = [[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)]
        h = build(corners)
        assert h.volume() == pytest.approx(1.0, rel=1e-12)
        assert len(h.vertex_ids) == 8

    def test_outward_normals(self):
        corners = [[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)]
        h = build(corners)
        center = np.array([0.5, 0.5, 0.5])
        normals, _ = h.facet_normals_areas()
        for f, n in zip(h.faces, normals):
            a = h.points[f[0]]
            assert n @ (a - center) > 0

    def test_random_points_match_batch_oracle(self):
        rng = np.random.default_rng(12)
        pts = rng.normal(size=(100, 3)) * [100.0, 50.0, 10.0] + [500, -200, 3000]
        h = build(pts)
        v_inc = h.volume()
        v_ref = batch_volume_oracle(pts)
        assert v_inc == pytest.approx(v_ref, rel=1e-9)

    def test_volume_monotone_under_insertion(self):
        rng = np.random.default_rng(5)
        h = IncrementalHull()
        last = 0.0
        for p in rng.normal(size=(60, 3)):
            h.insert(p)
            v = h.volume()
            assert v >= last - 1e-12
            last = v

    def test_invalid_point(self):
        h = IncrementalHull()
        with pytest.raises(HullError):
            h.insert([np.nan, 0, 0])

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=12, deadline=None)
    def test_volume_matches_oracle_property(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-1, 1, size=(24, 3))
        h = build(pts)
        assert h.volume() == pytest.approx(batch_volume_oracle(pts), rel=1e-9)

    def test_closed_surface_euler(self):
        # closed triangulated surface: V - E + F == 2
        rng = np.random.default_rng(9)
        h = build(rng.normal(size=(50, 3)))
        fs = h.facet_array()
        verts = {i for f in fs for i in f}
        edges = set()
        for i, j, k in fs:
            for e in ((i, j), (j, k), (k, i)):
                edges.add((min(e), max(e)))
        assert len(verts) - len(edges) + len(fs) == 2
