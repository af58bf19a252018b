from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from trussmotion.freespace import (
    ObstaclePolygon,
    SourceFace,
    boundary_search,
    build_obstacle_set,
    clear_free_space_cache,
    contains,
    enumerate_subspaces,
    export_boundary_off,
    free_space,
    inflate_polygon,
    obstacle_polygons,
    polygon_intersection,
    singular_plane,
    singular_planes,
)
from trussmotion.freespace.subspaces import MICRO_EDGE, _build_subspaces
from trussmotion.geometry import (
    ensure_ccw,
    plane_box_section,
    point_polygon_distance,
    segment_distance,
    segment_distance_batch,
)
from trussmotion.scene import load_scene
from trussmotion.truss import Box, PlannerConfig, TrussGraph


# ---------------------------------------------------------------- helpers

def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def square_face(center, normal, u_dir, half, kind="sheet", solid=-1, tag=""):
    c = np.asarray(center, dtype=float)
    n = unit(normal)
    u = unit(u_dir)
    v = np.cross(n, u)
    verts = np.array([
        c - half * u - half * v,
        c + half * u - half * v,
        c + half * u + half * v,
        c - half * u + half * v,
    ])
    return SourceFace(verts=verts, normal=n, kind=kind, solid=solid, tag=tag)


def wall_sources(lo, hi):
    """Six inward-facing workspace walls, built from scratch for fixtures."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    eye = np.eye(3)
    out = []
    for ax in range(3):
        for sgn, off in ((1.0, lo[ax]), (-1.0, hi[ax])):
            n = sgn * eye[ax]
            verts = plane_box_section(eye[ax], float(off), lo, hi)
            out.append(SourceFace(
                verts=ensure_ccw(verts, n), normal=n, kind="wall",
                tag=f"wall{ax}{'+' if sgn > 0 else '-'}",
            ))
    return out


def box_sheet_faces(center, half, kind="sheet", solid=-1):
    """Six outward-facing squares of an axis-aligned cube."""
    c = np.asarray(center, dtype=float)
    eye = np.eye(3)
    out = []
    for ax in range(3):
        for sgn in (1.0, -1.0):
            n = sgn * eye[ax]
            out.append(square_face(
                c + half * n, n, eye[(ax + 1) % 3], half,
                kind=kind, solid=solid, tag=f"cube{ax}{'+' if sgn > 0 else '-'}",
            ))
    return out


class StubSolid:
    """Axis-aligned closed box standing in for an inflated solid in fixtures."""

    def __init__(self, center, half):
        self.center = np.asarray(center, dtype=float)
        self.half = float(half)

    def contains(self, points, margin: float = 0.0):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all(np.abs(p - self.center) < self.half - margin, axis=1)


def polygon_area(verts) -> float:
    v = np.asarray(verts, dtype=float)
    acc = np.zeros(3)
    for i in range(1, len(v) - 1):
        acc += np.cross(v[i] - v[0], v[i + 1] - v[0])
    return 0.5 * float(np.linalg.norm(acc))


def make_wedge(apex, a, b) -> ObstaclePolygon:
    apex = np.asarray(apex, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = unit(np.cross(a - apex, b - apex))
    return ObstaclePolygon(
        apex=tuple(apex), seg_a=tuple(a), seg_b=tuple(b),
        normal=tuple(n), neighbor="u", member=0,
    )


def member_frame(apex, a, b):
    """(n_m, h): in-plane unit normal of the member line aimed at the apex."""
    apex, a, b = (np.asarray(p, dtype=float) for p in (apex, a, b))
    e = unit(b - a)
    foot = a + float((apex - a) @ e) * e
    h = float(np.linalg.norm(apex - foot))
    return (apex - foot) / h, h


def chamber_subedge_counts(sub):
    """Per-subedge incidence over the chamber's faces, micro edges dropped."""
    obs = sub.obs
    counts: dict[tuple[int, int], int] = {}
    for ci, _s in sub.faces:
        loop = obs.cells[ci].loop
        for i in range(len(loop)):
            va, vb = loop[i], loop[(i + 1) % len(loop)]
            if np.linalg.norm(obs.verts[va] - obs.verts[vb]) < MICRO_EDGE:
                continue
            key = (min(va, vb), max(va, vb))
            counts[key] = counts.get(key, 0) + 1
    return counts


def star_graph(neighbors, ground=0.0, hub=(0.0, 0.0, 1.0)):
    """Moving hub plus leaf neighbors and no other members.

    Degree-1 leaves fail validate_truss but construct fine; the fixture
    isolates the hub's free space from every wedge source.
    """
    nodes = {"hub": tuple(hub)}
    members = []
    for i, p in enumerate(neighbors):
        nodes[f"n{i}"] = tuple(p)
        members.append(("hub", f"n{i}"))
    return TrussGraph.create(nodes, members, ground_height=ground)


def tetra_graph(base_z=0.5, apex_z=1.5):
    nodes = {
        "apex": (0.0, 0.0, apex_z),
        "b0": (1.0, 0.0, base_z),
        "b1": (-0.5, 0.8660254, base_z),
        "b2": (-0.5, -0.8660254, base_z),
    }
    members = [
        ("apex", "b0"), ("apex", "b1"), ("apex", "b2"),
        ("b0", "b1"), ("b1", "b2"), ("b2", "b0"),
    ]
    return TrussGraph.create(nodes, members, ground_height=0.0)


@pytest.fixture(scope="module")
def cube9():
    sc = load_scene("cube9")
    return sc.truss, sc.config


@pytest.fixture(scope="module")
def cube9_fs(cube9):
    g, cfg = cube9
    return free_space(g, "v0", cfg)


@pytest.fixture(scope="module")
def octa6():
    sc = load_scene("octa6")
    return sc.truss, sc.config


@pytest.fixture(scope="module")
def octa6_fs(octa6):
    g, cfg = octa6
    return free_space(g, "v0", cfg)


def brute_margin(g, node, q, skip=frozenset()):
    """Min brute-force distance from the moved node's members to the rest."""
    best = np.inf
    for u in g.neighbors(node):
        if u in skip:
            continue
        rows = []
        for mid in g.member_ids:
            a, b = g.member_end_ids(mid)
            if {a, b} & ({node, u} | set(skip)):
                continue
            rows.append((g.position(a), g.position(b)))
        if not rows:
            continue
        rows = np.asarray(rows)
        p1 = np.broadcast_to(np.asarray(q, dtype=float), (len(rows), 3))
        p2 = np.broadcast_to(g.position(u), (len(rows), 3))
        best = min(best, float(segment_distance_batch(p1, p2, rows[:, 0], rows[:, 1]).min()))
    return best


def boundary_distance(sub, q):
    return min(
        point_polygon_distance(q, sub.obs.cell_coords(ci), sub.obs.cell_normal(ci))
        for ci, _s in sub.faces
    )


# ---------------------------------------------------------------- wedges

class TestObstacleWedges:
    def test_counts_match_hand_formula(self, cube9):
        g, _ = cube9
        for node in g.node_ids:
            expect = 0
            for u in g.neighbors(node):
                apex = g.position(u)
                for mid in g.member_ids:
                    ea, eb = g.member_end_ids(mid)
                    if {ea, eb} & {node, u}:
                        continue
                    area2 = np.linalg.norm(np.cross(
                        g.position(ea) - apex, g.position(eb) - apex))
                    if area2 > 1e-9:
                        expect += 1
            polys = obstacle_polygons(g, node)
            assert len(polys) == expect
            for p in polys:
                assert p.neighbor in g.neighbors(node)
                ea, eb = g.member_end_ids(p.member)
                assert not ({ea, eb} & {node, p.neighbor})
                n = p.plane_normal
                assert np.linalg.norm(n) == pytest.approx(1.0, abs=1e-12)
                a, b = p.segment
                assert abs(n @ (a - p.apex_point)) < 1e-9
                assert abs(n @ (b - p.apex_point)) < 1e-9

    def test_wedge_is_exactly_the_crossing_set(self, cube9):
        # q sits in the wedge of (u, m) iff the segment q->u crosses m
        g, cfg = cube9
        lo = np.asarray(cfg.workspace.lo)
        hi = np.asarray(cfg.workspace.hi)
        rng = np.random.default_rng(3)
        polys = obstacle_polygons(g, "v0")
        for p in polys[:6]:
            u = p.apex_point
            a, b = p.segment
            for _ in range(8):
                t = rng.uniform(0.15, 0.85)
                s = rng.uniform(1.1, 1.8)
                q = u + s * ((a + t * (b - a)) - u)
                assert segment_distance(q, u, a, b) < 1e-9
                verts = p.materialize(lo, hi)
                # the materialized wedge is box-clipped, so only in-box
                # samples must land on it
                if len(verts) >= 3 and np.all(q > lo + 1e-9) and np.all(q < hi - 1e-9):
                    assert point_polygon_distance(q, verts, p.plane_normal) < 1e-7
                # stopping short of the member leaves the segment clear
                q_short = u + 0.9 * ((a + t * (b - a)) - u)
                assert segment_distance(q_short, u, a, b) > 1e-3

    def test_tetra_apex_three_coplanar_wedges(self):
        # all three wedges lie in the base plane, which is also the apex's
        # flattening plane, so the resulting free space matches the plane
        # alone; the wedges still exist as obstacle geometry
        g = tetra_graph()
        polys = obstacle_polygons(g, "apex")
        assert len(polys) == 3
        assert {p.neighbor for p in polys} == {"b0", "b1", "b2"}
        for p in polys:
            assert abs(p.plane_normal @ np.array([0.0, 0.0, 1.0])) == pytest.approx(1.0, abs=1e-12)
            assert p.apex_point[2] == pytest.approx(0.5, abs=1e-12)

    def test_ignored_nodes_drop_their_wedges(self, cube9):
        g, _ = cube9
        full = obstacle_polygons(g, "v0")
        reduced = obstacle_polygons(g, "v0", ignore={"v5"})
        assert len(reduced) < len(full)
        for p in reduced:
            assert p.neighbor != "v5"
            ea, eb = g.member_end_ids(p.member)
            assert "v5" not in (ea, eb)
        kept = {(p.neighbor, p.member) for p in full
                if p.neighbor != "v5" and "v5" not in g.member_end_ids(p.member)}
        assert {(p.neighbor, p.member) for p in reduced} == kept

    def test_collinear_apex_dropped(self):
        nodes = {
            "c": (0.0, 0.0, 1.0),
            "u": (1.0, 0.0, 0.0),
            "p": (2.0, 0.0, 0.0),
            "q": (3.0, 0.0, 0.0),
        }
        members = [("c", "u"), ("c", "p"), ("p", "q")]
        g = TrussGraph.create(nodes, members)
        assert obstacle_polygons(g, "c") == []
        g2 = g.with_node_at("u", (1.0, 0.5, 0.0))
        assert len(obstacle_polygons(g2, "c")) == 1

    def test_unknown_and_self_ignores_rejected(self, cube9):
        g, _ = cube9
        with pytest.raises(KeyError):
            obstacle_polygons(g, "nope")
        with pytest.raises(ValueError):
            obstacle_polygons(g, "v0", ignore={"v0"})


# ---------------------------------------------------------------- inflation

class TestInflation:
    def test_cap_sits_half_lambda_from_member(self):
        rng = np.random.default_rng(5)
        lam = 0.08
        for _ in range(20):
            apex = rng.uniform(-2, 2, 3)
            a = rng.uniform(-2, 2, 3)
            b = rng.uniform(-2, 2, 3)
            tri = np.linalg.norm(np.cross(a - apex, b - apex))
            if tri < 0.5 or np.linalg.norm(b - a) < 0.5:
                continue
            n_m, h = member_frame(apex, a, b)
            if h < 2 * lam:
                continue
            solid = inflate_polygon(make_wedge(apex, a, b), lam)
            cap = solid.faces[4]
            corners = [cap.base_a, cap.base_b, *cap.extra]
            for c in corners:
                # n_m aims at the apex and the pull-back retreats toward it
                assert n_m @ np.asarray(c) == pytest.approx(n_m @ a + lam / 2, abs=1e-10)
            n5 = np.asarray(cap.outward)
            assert abs(abs(n5 @ n_m) - 1.0) < 1e-9

    def test_symmetric_wedge_mirror_faces(self):
        solid = inflate_polygon(make_wedge((0, 0, 1), (-1, 0, 0), (1, 0, 0)), 0.1)
        names = {f.label: f for f in solid.faces}

        def corner_set(face):
            pts = [face.base_a, face.base_b, *face.extra]
            return {tuple(np.round(p, 10)) for p in pts}

        def mirrored(pts):
            return {tuple(np.round((-x, y, z), 10)) for x, y, z in pts}

        # the wedge is symmetric under x -> -x, which swaps the two ends
        # and maps each side onto itself
        assert corner_set(names["end_a"]) == mirrored(corner_set(names["end_b"]))
        assert corner_set(names["side_pos"]) == mirrored(corner_set(names["side_pos"]))
        assert corner_set(names["side_neg"]) == mirrored(corner_set(names["side_neg"]))
        assert corner_set(names["cap"]) == mirrored(corner_set(names["cap"]))

    def test_apex_and_raw_endpoints_on_carrier_planes(self):
        # ends and sides pass through the apex; the end planes also carry the
        # raw endpoints (the construction has no margin along the member
        # direction, only sideways)
        apex = np.array([0.2, -0.3, 1.4])
        a = np.array([-1.0, 0.4, 0.1])
        b = np.array([1.2, 0.8, -0.2])
        solid = inflate_polygon(make_wedge(apex, a, b), 0.09)
        for (nx, ny, nz, off), face in zip(solid.planes[:4], solid.faces[:4]):
            n = np.array([nx, ny, nz])
            assert n @ apex == pytest.approx(off, abs=1e-10)
        n1 = np.asarray(solid.planes[0][:3])
        n2 = np.asarray(solid.planes[1][:3])
        assert n1 @ a == pytest.approx(solid.planes[0][3], abs=1e-10)
        assert n2 @ b == pytest.approx(solid.planes[1][3], abs=1e-10)
        # raw endpoints stay strictly inside both side planes
        for idx in (2, 3):
            n = np.asarray(solid.planes[idx][:3])
            off = solid.planes[idx][3]
            assert n @ a < off - 1e-6
            assert n @ b < off - 1e-6

    def test_solid_covers_member_and_wedge(self):
        apex = np.array([0.0, 0.0, 1.0])
        a = np.array([-1.0, 0.0, 0.0])
        b = np.array([1.0, 0.0, 0.0])
        solid = inflate_polygon(make_wedge(apex, a, b), 0.1)
        mid = 0.5 * (a + b)
        assert solid.contains(mid)[0]
        pts = [apex + s * ((a + t * (b - a)) - apex)
               for s in (1.0, 1.3, 2.0) for t in (0.2, 0.5, 0.8)]
        assert solid.contains(np.array(pts)).all()
        assert not solid.contains(apex)[0]
        assert not solid.contains(apex - (mid - apex))[0]

    def test_zero_inflation_degenerates_to_sheet(self):
        lo = np.array([-5.0, -5.0, -5.0])
        hi = np.array([5.0, 5.0, 5.0])
        poly = make_wedge((0, 0, 1), (-1, 0, 0), (1, 0, 0))
        solid = inflate_polygon(poly, 0.0)
        names = {f.label: f for f in solid.faces}
        raw = {tuple(np.round(p, 9)) for p in poly.materialize(lo, hi)}
        for label in ("side_pos", "side_neg"):
            got = {tuple(np.round(p, 9)) for p in names[label].materialize(lo, hi)}
            assert got == raw
        assert len(names["end_a"].materialize(lo, hi)) == 0
        assert len(names["end_b"].materialize(lo, hi)) == 0
        n_p = poly.plane_normal
        assert np.allclose(solid.planes[2][:3], n_p, atol=1e-12)
        assert np.allclose(solid.planes[3][:3], -n_p, atol=1e-12)
        # opposite side planes with equal offsets leave no interior
        probe = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.5], [0.3, 0.1, -0.2]])
        assert not solid.contains(probe).any()

    def test_thin_wedge_needs_clamp(self):
        poly = make_wedge((0, 0, 0.04), (-1, 0, 0), (1, 0, 0))
        with pytest.raises(ValueError, match="absorb"):
            inflate_polygon(poly, 0.1)
        solid = inflate_polygon(poly, 0.1, clamp_pullback=True)
        n_m, _ = member_frame((0, 0, 0.04), (-1, 0, 0), (1, 0, 0))
        cap = solid.faces[4]
        for c in (cap.base_a, cap.base_b, *cap.extra):
            # clamped cap sits exactly on the member plane
            assert n_m @ np.asarray(c) == pytest.approx(0.0, abs=1e-12)
        assert solid.contains(np.array([0.0, 0.0, -0.05]))[0]

    def test_grazing_ray_rejected(self):
        # apex far down the member axis, barely off its line: the rays run
        # almost parallel to the member and the pull-back distance diverges
        poly = make_wedge((-1e6, 0.0, 0.5), (10.0, 0.0, 0.0), (11.0, 0.0, 0.0))
        with pytest.raises(ValueError, match="graz"):
            inflate_polygon(poly, 0.1)

    def test_negative_inflation_rejected(self):
        poly = make_wedge((0, 0, 1), (-1, 0, 0), (1, 0, 0))
        with pytest.raises(ValueError):
            inflate_polygon(poly, -0.01)

    def test_solid_monotone_in_lambda(self):
        # 1000 sampled implications: inside the thin solid => inside the fat one
        rng = np.random.default_rng(11)
        checked = 0
        while checked < 1000:
            apex = rng.uniform(-1.5, 1.5, 3)
            a = rng.uniform(-1.5, 1.5, 3)
            b = rng.uniform(-1.5, 1.5, 3)
            if np.linalg.norm(np.cross(a - apex, b - apex)) < 0.8:
                continue
            n_m, h = member_frame(apex, a, b)
            if h < 0.5:
                continue
            wedge = make_wedge(apex, a, b)
            thin = inflate_polygon(wedge, 0.05)
            fat = inflate_polygon(wedge, 0.12)
            pts = rng.uniform(-3, 3, size=(60, 3))
            inside = thin.contains(pts, margin=1e-9)
            assert fat.contains(pts[inside]).all()
            checked += int(inside.sum())

    @settings(max_examples=60, deadline=None)
    @given(
        st.tuples(*[st.floats(-2, 2) for _ in range(3)]),
        st.tuples(*[st.floats(-2, 2) for _ in range(3)]),
        st.tuples(*[st.floats(-2, 2) for _ in range(3)]),
        st.floats(0.1, 0.9),
        st.floats(1.02, 1.8),
    )
    def test_inflated_solid_swallows_blocked_positions(self, apex, a, b, t, s):
        apex, a, b = (np.asarray(p, dtype=float) for p in (apex, a, b))
        assume(np.linalg.norm(np.cross(a - apex, b - apex)) > 0.9)
        assume(np.linalg.norm(b - a) > 0.6)
        n_m, h = member_frame(apex, a, b)
        assume(h > 0.4)
        lam = 0.08
        solid = inflate_polygon(make_wedge(apex, a, b), lam)
        hit = a + t * (b - a)
        q = apex + s * (hit - apex)
        # q is a blocked position: the moving member would cross the static one
        assert segment_distance(q, apex, a, b) < 1e-9
        assert solid.contains(q)[0]
        # and pushing q well clear of the wedge plane frees it again
        n_p = np.asarray(solid.source.normal)
        assert not solid.contains(q + 3 * lam * n_p)[0]
        assert not solid.contains(q - 3 * lam * n_p)[0]


# ---------------------------------------------------------------- arrangement

class TestPolygonIntersection:
    BOX = Box((-5.0, -5.0, -5.0), (5.0, 5.0, 5.0))

    def test_disjoint_sheets_pass_through(self):
        s1 = square_face((0, 0, 0), (0, 0, 1), (1, 0, 0), 1.0)
        s2 = square_face((0, 0, 3), (0, 1, 0), (1, 0, 0), 1.0)
        obs = polygon_intersection([s1, s2], self.BOX)
        assert len(obs.cells) == 2
        assert sorted(c.area for c in obs.cells) == pytest.approx([4.0, 4.0])
        assert {c.sources for c in obs.cells} == {(0,), (1,)}

    def test_crossed_squares_split_two_plus_two(self):
        # one plane-plane cut splits each square in half: four fragments in
        # total, all sharing the welded crossing segment
        s1 = square_face((0, 0, 0), (0, 0, 1), (1, 0, 0), 1.0)
        s2 = square_face((0, 0, 0), (1, 0, 0), (0, 1, 0), 1.0)
        obs = polygon_intersection([s1, s2], self.BOX)
        assert len(obs.cells) == 4
        by_src: dict[tuple, list] = {}
        for c in obs.cells:
            by_src.setdefault(c.sources, []).append(c.area)
        assert set(by_src) == {(0,), (1,)}
        for areas in by_src.values():
            assert sorted(areas) == pytest.approx([2.0, 2.0])
        shared = [k for k, entries in obs.adjacency.items() if len(entries) == 4]
        assert len(shared) == 1
        (key,) = shared
        span = {tuple(np.round(obs.verts[v], 9)) for v in key}
        assert span == {(0.0, -1.0, 0.0), (0.0, 1.0, 0.0)}

    def test_fragment_areas_conserved(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            ang = rng.uniform(0, 2 * np.pi)
            u1 = np.array([np.cos(ang), np.sin(ang), 0.0])
            s1 = square_face((0, 0, 0), (0, 0, 1), u1, 1.0)
            n2 = unit(np.array([rng.uniform(0.5, 1.5), rng.uniform(-1, 1), rng.uniform(-0.4, 0.4)]))
            u2 = unit(np.cross(n2, np.array([0.0, 0.0, 1.0])))
            s2 = square_face((0, 0, 0), n2, u2, 1.0)
            obs = polygon_intersection([s1, s2], self.BOX)
            sums = {(0,): 0.0, (1,): 0.0}
            for c in obs.cells:
                sums[c.sources] += c.area
            assert sums[(0,)] == pytest.approx(4.0, rel=1e-8)
            assert sums[(1,)] == pytest.approx(4.0, rel=1e-8)

    def test_coplanar_overlap_unions(self):
        # overlapping same-plane squares merge into one pool before cutting:
        # fragment areas add up to the union, not the sum
        s1 = square_face((1.0, 1.0, 0.0), (0, 0, 1), (1, 0, 0), 1.0)
        s2 = square_face((2.0, 2.0, 0.0), (0, 0, 1), (1, 0, 0), 1.0)
        obs = polygon_intersection([s1, s2], self.BOX)
        total = sum(c.area for c in obs.cells)
        assert total == pytest.approx(7.0, abs=1e-9)
        for c in obs.cells:
            assert c.area > 1e-9


# ---------------------------------------------------------------- chambers

class TestChambers:
    LO = np.array([-1.0, -1.0, -1.0])
    HI = np.array([1.0, 1.0, 1.0])

    def _sweep(self, faces, solids=()):
        obs = build_obstacle_set(list(faces), list(solids), self.LO, self.HI)
        return obs, _build_subspaces(obs)

    def test_walls_only_single_chamber(self):
        obs, subs = self._sweep(wall_sources(self.LO, self.HI))
        assert len(subs) == 1
        (sub,) = subs
        assert len(sub.faces) == 6
        assert sub.contains((0.0, 0.0, 0.0))
        assert not sub.contains((1.5, 0.0, 0.0))
        assert np.allclose(sub.extent_lo, self.LO)
        assert np.allclose(sub.extent_hi, self.HI)

    def test_closed_box_from_any_start_face(self):
        # spec-level contract: searching from every face of a closed box of
        # six polygons returns the same six-face boundary
        faces = wall_sources(self.LO, self.HI) + box_sheet_faces((0, 0, 0), 0.5)
        obs, subs = self._sweep(faces)
        inner = next(s for s in subs if s.contains((0.0, 0.0, 0.0)))
        assert len(inner.faces) == 6
        cube_cells = {ci for ci, _ in inner.faces}
        for ci in cube_cells:
            q = np.asarray(obs.cells[ci].centroid) - 0.05 * obs.cell_normal(ci) * (
                1.0 if (np.asarray(obs.cells[ci].centroid) @ obs.cell_normal(ci)) > 0 else -1.0
            )
            got = boundary_search(ci, obs, (0.0, 0.0, 0.0))
            assert got.face_set == inner.face_set

    def test_sheet_cube_two_chambers(self):
        faces = wall_sources(self.LO, self.HI) + box_sheet_faces((0, 0, 0), 0.5)
        _obs, subs = self._sweep(faces)
        assert sorted(len(s.faces) for s in subs) == [6, 12]
        inner = next(s for s in subs if len(s.faces) == 6)
        outer = next(s for s in subs if len(s.faces) == 12)
        assert inner.contains((0.0, 0.0, 0.0))
        assert outer.contains((0.9, 0.9, 0.9))
        assert not inner.contains((0.9, 0.9, 0.9))
        assert not outer.contains((0.0, 0.0, 0.0))

    def test_nested_boxes_three_chambers(self):
        faces = (wall_sources(self.LO, self.HI)
                 + box_sheet_faces((0, 0, 0), 0.5)
                 + box_sheet_faces((0, 0, 0), 0.25))
        obs, subs = self._sweep(faces)
        assert sorted(len(s.faces) for s in subs) == [6, 12, 12]
        core = next(s for s in subs if s.contains((0.0, 0.0, 0.0)))
        middle = next(s for s in subs if s.contains((0.0, 0.0, 0.4)))
        shell = next(s for s in subs if s.contains((0.0, 0.0, 0.9)))
        assert len(core.faces) == 6
        assert len(middle.faces) == 12
        assert len(shell.faces) == 12
        # the middle chamber touches both cubes and no wall
        mid_exts = {tuple(np.round(middle.extent_lo, 9)), tuple(np.round(middle.extent_hi, 9))}
        assert mid_exts == {(-0.5, -0.5, -0.5), (0.5, 0.5, 0.5)}

    def test_boundary_search_agrees_with_sweep(self):
        faces = (wall_sources(self.LO, self.HI)
                 + box_sheet_faces((0, 0, 0), 0.5)
                 + box_sheet_faces((0, 0, 0), 0.25))
        obs, subs = self._sweep(faces)
        middle = next(s for s in subs if s.contains((0.0, 0.0, 0.4)))
        # start the search from every face of the chamber, nudging the
        # witness off that face along its chamber-side normal
        for ci, s in middle.faces:
            cen = np.asarray(obs.cells[ci].centroid)
            q = cen + 0.02 * s * obs.cell_normal(ci)
            got = boundary_search(ci, obs, q)
            assert got.face_set == middle.face_set

    def test_solid_box_interior_is_blocked(self):
        solid = StubSolid((0, 0, 0), 0.5)
        faces = wall_sources(self.LO, self.HI) + box_sheet_faces(
            (0, 0, 0), 0.5, kind="solid", solid=0)
        obs, subs = self._sweep(faces, [solid])
        assert len(subs) == 1
        (outer,) = subs
        assert len(outer.faces) == 12
        assert not outer.contains((0.0, 0.0, 0.0))
        assert outer.contains((0.8, 0.0, 0.0))
        cube_cell = next(ci for ci, _ in outer.faces
                         if abs(np.asarray(obs.cells[ci].centroid)).max() <= 0.5 + 1e-9)
        with pytest.raises(ValueError, match="blocked"):
            boundary_search(cube_cell, obs, (0.0, 0.0, 0.0))

    def test_floating_sheet_is_membrane(self):
        sheet = square_face((0, 0, 0), (0, 0, 1), (1, 0, 0), 0.4)
        obs, subs = self._sweep(wall_sources(self.LO, self.HI) + [sheet])
        assert len(subs) == 1
        (sub,) = subs
        sheet_cells = [ci for ci, c in enumerate(obs.cells)
                       if c.sources and obs.faces[c.sources[0]].kind == "sheet"]
        for ci in sheet_cells:
            assert (ci, 1) in sub.face_set and (ci, -1) in sub.face_set
        assert not sub.contains((0.0, 0.0, 0.0))
        assert sub.contains((0.0, 0.0, 0.05))
        assert sub.contains((0.0, 0.0, -0.05))

    def test_sample_stays_inside(self):
        faces = wall_sources(self.LO, self.HI) + box_sheet_faces((0, 0, 0), 0.5)
        _obs, subs = self._sweep(faces)
        inner = next(s for s in subs if len(s.faces) == 6)
        rng = np.random.default_rng(1)
        pts = inner.sample(rng, 40)
        assert pts.shape == (40, 3)
        assert np.all(np.abs(pts) < 0.5)
        for p in pts:
            assert inner.contains(p)


# ---------------------------------------------------------------- free space

class TestFreeSpace:
    def test_no_obstacles_yields_the_whole_box(self):
        g = star_graph([(1, 0, 0), (-1, 0.2, 0), (0, -1, 0.3), (0.2, 0.9, 0.8)])
        cfg = PlannerConfig(workspace=Box((-2, -2, 0), (2, 2, 3)))
        fs = free_space(g, "hub", cfg)
        assert len(fs.subspaces) == 1
        sub = fs.subspaces[0]
        assert len(sub.faces) == 6
        assert np.allclose(sub.extent_lo, (-2, -2, 0))
        assert np.allclose(sub.extent_hi, (2, 2, 3))
        rng = np.random.default_rng(2)
        for p in rng.uniform((-1.9, -1.9, 0.05), (1.9, 1.9, 2.95), size=(40, 3)):
            assert sub.contains(p)

    def test_coplanar_neighbors_split_the_box_in_two(self):
        # a flattening plane is the only obstacle: two half-box chambers
        g = star_graph([(1, 0, 1), (-1, 1, 1), (-1, -1, 1), (1, 1, 1)],
                       hub=(0.0, 0.0, 0.5))
        cfg = PlannerConfig(workspace=Box((-2, -2, 0), (2, 2, 3)))
        fs = free_space(g, "hub", cfg)
        assert len(fs.subspaces) == 2
        zs = sorted(s.seed[2] for s in fs.subspaces)
        assert zs[0] < 1.0 < zs[1]
        # the hub sits below the plane, so its chamber comes first
        assert fs.node_subspace.contains((0.0, 0.0, 0.5))
        assert not fs.node_subspace.contains((0.0, 0.0, 1.5))

    def test_tetra_apex_splits_at_base_plane(self):
        g = tetra_graph()
        cfg = PlannerConfig(workspace=Box((-2, -2, 0), (2, 2, 2)), inflate=0.05)
        fs = free_space(g, "apex", cfg)
        assert len(fs.subspaces) == 2
        assert fs.node_subspace.contains((0.0, 0.0, 1.2))
        below = fs.subspaces[1]
        assert below.contains((0.0, 0.0, 0.25))
        assert not below.contains((0.0, 0.0, 1.2))

    def test_node_chamber_listed_first(self, cube9, cube9_fs):
        g, _ = cube9
        assert cube9_fs.node_subspace is cube9_fs.subspaces[0]
        assert cube9_fs.node_subspace.contains(g.position("v0"))
        assert cube9_fs.subspace_of(g.position("v0")) is cube9_fs.node_subspace

    def test_every_chamber_owns_its_seed(self, cube9_fs):
        for i, sub in enumerate(cube9_fs.subspaces):
            assert sub.contains(sub.seed)
            for j, other in enumerate(cube9_fs.subspaces):
                if i != j:
                    assert not other.contains(sub.seed)

    def test_chambers_stay_above_ground(self, cube9, cube9_fs):
        g, _ = cube9
        for sub in cube9_fs.subspaces:
            assert sub.seed[2] > g.ground_height - 1e-9
            assert sub.extent_lo[2] > g.ground_height - 1e-6

    @pytest.mark.parametrize("fixture", ["cube9_fs", "octa6_fs"])
    def test_watertight_boundaries(self, fixture, request):
        # every sub-edge of every chamber bounds exactly two of its faces
        fs = request.getfixturevalue(fixture)
        for sub in fs.subspaces:
            counts = chamber_subedge_counts(sub)
            assert counts and set(counts.values()) == {2}

    @pytest.mark.slow
    def test_disjointness_sampled(self, cube9, cube9_fs):
        _, cfg = cube9
        rng = np.random.default_rng(17)
        lo = np.asarray(cfg.workspace.lo)
        hi = np.asarray(cfg.workspace.hi)
        owners_hist = {0: 0, 1: 0}
        for p in rng.uniform(lo, hi, size=(10000, 3)):
            owners = sum(1 for s in cube9_fs.subspaces if s.contains(p))
            assert owners <= 1
            owners_hist[owners] = owners_hist.get(owners, 0) + 1
        # the box is mostly free space: the sweep must actually cover it
        assert owners_hist[1] > 0.5 * 10000

    @pytest.mark.slow
    @pytest.mark.parametrize("fixture,count", [("cube9_fs", 1500), ("octa6_fs", 1000)])
    def test_soundness_brute_force(self, fixture, count, request):
        # contained configurations keep the guaranteed sideways margin of
        # lambda/2 from every covered member; disagreement is only allowed
        # within a lambda-band of the chamber boundary
        fs = request.getfixturevalue(fixture)
        sc = load_scene("cube9" if fixture == "cube9_fs" else "octa6")
        g, cfg = sc.truss, sc.config
        lam = cfg.inflate
        sub = fs.node_subspace
        rng = np.random.default_rng(29)
        pts = sub.sample(rng, count, max_tries=600 * count)
        deep = 0
        for q in pts:
            margin = brute_margin(g, fs.node, q)
            if margin >= 0.5 * lam:
                deep += 1
                continue
            # a sub-threshold margin must sit within the boundary band
            assert boundary_distance(sub, q) < lam, (
                f"clearance violation far from boundary at {q}: margin {margin}"
            )
        assert deep > count // 2

    def test_lambda_monotone_chambers(self, cube9):
        g, cfg = cube9
        import dataclasses
        fat_cfg = dataclasses.replace(cfg, inflate=cfg.inflate * 1.4)
        thin = free_space(g, "v0", cfg).node_subspace
        fat = free_space(g, "v0", fat_cfg).node_subspace
        rng = np.random.default_rng(31)
        pts = fat.sample(rng, 1000, max_tries=500_000)
        for p in pts:
            assert thin.contains(p)

    def test_enumeration_is_deterministic(self, octa6):
        g, cfg = octa6
        first = [s.face_set for s in enumerate_subspaces(g, "v0", cfg)]
        clear_free_space_cache()
        second = [s.face_set for s in enumerate_subspaces(g, "v0", cfg)]
        assert first == second

    def test_cache_static_geometry(self, octa6):
        g, cfg = octa6
        clear_free_space_cache()
        fs1 = free_space(g, "v0", cfg)
        moved = g.with_node_at("v0", g.position("v0") + np.array([0.05, 0.0, 0.4]))
        fs2 = free_space(moved, "v0", cfg)
        # moving the queried node reuses the cached arrangement
        assert fs2.obs is fs1.obs
        # moving a static node rebuilds it
        other = g.with_node_at("v1", g.position("v1") + np.array([0.0, 0.0, 0.02]))
        fs3 = free_space(other, "v0", cfg)
        assert fs3.obs is not fs1.obs
        clear_free_space_cache()
        fs4 = free_space(g, "v0", cfg)
        assert fs4.obs is not fs1.obs
        assert [s.face_set for s in fs4.subspaces] == [s.face_set for s in fs1.subspaces]

    def test_ignored_partner_changes_fingerprint(self, octa6):
        g, cfg = octa6
        fs_plain = free_space(g, "v0", cfg)
        fs_ign = free_space(g, "v0", cfg, ignore={"v3"})
        assert fs_ign.obs is not fs_plain.obs
        assert fs_ign.ignore == frozenset({"v3"})


# ---------------------------------------------------------------- singular planes

class TestSingularPlanes:
    def test_coplanar_neighbors_detected(self):
        g = star_graph([(1, 0, 1), (-1, 1, 1), (-1, -1, 1), (1, 1, 1)])
        sp = singular_plane(g, "hub")
        assert sp is not None
        n, off = sp
        assert abs(n @ np.array([0.0, 0.0, 1.0])) == pytest.approx(1.0, abs=1e-9)
        assert abs(off * n[2] - 1.0) < 1e-9

    def test_perturbation_above_tolerance_clears_it(self):
        g = star_graph([(1, 0, 1), (-1, 1, 1), (-1, -1, 1), (1, 1, 1 + 1e-4)])
        assert singular_plane(g, "hub") is None
        g2 = star_graph([(1, 0, 1), (-1, 1, 1), (-1, -1, 1), (1, 1, 1 + 1e-8)])
        assert singular_plane(g2, "hub") is not None

    def test_non_coplanar_yields_nothing(self):
        g = star_graph([(1, 0, 0.2), (-1, 1, 1), (-1, -1, 2), (1, 1, 0.6)])
        assert singular_plane(g, "hub") is None
        assert singular_planes(g, "hub", Box((-2, -2, -2), (2, 2, 2))) == []

    def test_clipped_plane_faces(self):
        g = star_graph([(1, 0, 1), (-1, 1, 1), (-1, -1, 1), (1, 1, 1)])
        faces = singular_planes(g, "hub", Box((-2, -2, 0), (2, 2, 3)))
        assert len(faces) == 1
        face = faces[0]
        assert face.kind == "sheet"
        for v in face.verts:
            assert abs(face.normal @ v - (face.normal @ face.verts[0])) < 1e-9
            assert v[2] == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------- export

class TestExport:
    def test_off_mesh_closes_with_outward_orientation(self, tmp_path):
        lo = np.array([-1.0, -1.0, -1.0])
        hi = np.array([1.0, 1.0, 1.0])
        faces = wall_sources(lo, hi) + box_sheet_faces((0, 0, 0), 0.5)
        obs = build_obstacle_set(faces, [], lo, hi)
        subs = _build_subspaces(obs)
        inner = next(s for s in subs if len(s.faces) == 6)
        path = tmp_path / "inner.off"
        export_boundary_off(inner, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "OFF"
        nv, nf, _ = (int(x) for x in lines[1].split())
        assert nv == 8 and nf == 6
        verts = np.array([[float(x) for x in ln.split()] for ln in lines[2:2 + nv]])
        vol = 0.0
        for ln in lines[2 + nv:]:
            idx = [int(x) for x in ln.split()][1:]
            pts = verts[idx]
            for i in range(1, len(pts) - 1):
                vol += np.dot(pts[0], np.cross(pts[i], pts[i + 1])) / 6.0
        # outward-wound faces integrate to the positive enclosed volume
        assert vol == pytest.approx(1.0, abs=1e-9)
        assert contains(inner, (0.0, 0.0, 0.0))
