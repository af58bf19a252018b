"""Welded complex of mutually split obstacle faces.

The subspace search walks face-to-face across shared edges, so it needs the
obstacle boundaries as convex planar fragments whose shared edges carry
identical vertex ids on both sides. This module takes raw faces (solid
boundaries, impassable sheets, workspace walls), splits them against each
other, merges coplanar coverage, buries fragments swallowed by solids, and
welds the result into an edge-indexed complex.

Two tolerance tiers, deliberately far apart: 1e-6 decides modeling questions
(which faces share a plane), 1e-9 decides bookkeeping questions (which
coordinates are the same point). Keeping them three orders apart means a
fragment can never be on the fence for both reasons at once.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..geometry import (
    clip_polygon_box,
    ensure_ccw,
    plane_basis,
    polygon_area_2d,
    polygon_area_3d,
    split_polygon_2d,
    unit,
)
from .obstacles import InflatedObstacle, ObstaclePolygon

WELD_TOL = 1e-9   # coordinates closer than this are the same point
PLANE_TOL = 1e-6  # faces closer than this (normal and offset) share a plane
AREA_TOL = 1e-13  # fragments below this area are arrangement noise

# Edges shorter than this are point contacts, not boundary: solids meeting at
# shaving angles place the same intersection vertex up to ~1e-4 apart across
# the planes that see it, beyond welding range but far below the smallest
# genuine feature edge in any scene (~2.5e-2). Cells bounded entirely by such
# edges are roundoff shards and are dropped outright.
MICRO_EDGE = 1e-4


@dataclass(frozen=True)
class SourceFace:
    """One input face before splitting.

    ``kind`` fixes which side of the face is free space:
      solid -- boundary of an inflated obstacle; ``normal`` points out of
               the solid, so the back side is blocked
      wall  -- workspace boundary; ``normal`` points into the workspace,
               the back side is the outside world
      sheet -- zero-thickness barrier (wedge at zero inflation, crossing
               singularity plane); both sides are free but not connected
    """

    verts: np.ndarray  # (k,3) convex loop, CCW about normal
    normal: np.ndarray  # unit
    kind: str
    solid: int = -1
    tag: str = ""


@dataclass(frozen=True)
class Cell:
    """One convex fragment of the split complex."""

    loop: tuple[int, ...]  # welded vertex ids, CCW about the group normal
    group: int
    centroid: tuple[float, float, float]
    area: float
    free_pos: bool  # free space on the +group-normal side
    free_neg: bool
    sources: tuple[int, ...]  # input face indices covering this fragment

    @property
    def free_sides(self) -> tuple[int, ...]:
        out = []
        if self.free_pos:
            out.append(+1)
        if self.free_neg:
            out.append(-1)
        return tuple(out)


@dataclass
class ObstacleSet:
    """Split, welded and indexed obstacle boundary complex."""

    verts: np.ndarray  # (V,3) welded coordinates
    cells: tuple[Cell, ...]
    group_normals: np.ndarray  # (G,3)
    group_offsets: np.ndarray  # (G,)
    adjacency: dict[tuple[int, int], tuple[tuple[int, int], ...]]
    # subedge (va,vb) with va<vb -> ((cell id, +1 if its loop runs va->vb), ...)
    faces: tuple[SourceFace, ...]
    solids: tuple[InflatedObstacle, ...]
    box_lo: np.ndarray
    box_hi: np.ndarray

    def cell_coords(self, idx: int) -> np.ndarray:
        return self.verts[list(self.cells[idx].loop)]

    def cell_normal(self, idx: int) -> np.ndarray:
        return self.group_normals[self.cells[idx].group]

    def free_oriented_faces(self) -> list[tuple[int, int]]:
        out: list[tuple[int, int]] = []
        for i, c in enumerate(self.cells):
            for s in c.free_sides:
                out.append((i, s))
        return out

    def subedges(self, idx: int) -> list[tuple[int, int]]:
        loop = self.cells[idx].loop
        return [(loop[i], loop[(i + 1) % len(loop)]) for i in range(len(loop))]


class _SnapIndex:
    """Grid hash snapping nearby D-dimensional points to one representative."""

    __slots__ = ("tol", "dim", "_buckets", "points")

    def __init__(self, tol: float, dim: int):
        self.tol = tol
        self.dim = dim
        self._buckets: dict[tuple[int, ...], list[int]] = {}
        self.points: list[tuple[float, ...]] = []

    def _key(self, p) -> tuple[int, ...]:
        return tuple(int(math.floor(c / self.tol)) for c in p)

    def find(self, p) -> int | None:
        base = self._key(p)
        best = None
        best_d = self.tol
        for off in itertools.product((-1, 0, 1), repeat=self.dim):
            ids = self._buckets.get(tuple(b + o for b, o in zip(base, off)))
            if not ids:
                continue
            for i in ids:
                q = self.points[i]
                d = max(abs(a - b) for a, b in zip(q, p))
                if d < best_d:
                    best, best_d = i, d
        return best

    def insert(self, p) -> int:
        p = tuple(float(c) for c in p)
        found = self.find(p)
        if found is not None:
            return found
        self.points.append(p)
        idx = len(self.points) - 1
        self._buckets.setdefault(self._key(p), []).append(idx)
        return idx


@dataclass
class _CutLine:
    """One cutting line in a face chart, canonically parameterized."""

    m: np.ndarray  # unit 2-D normal, sign-canonical
    c: float  # line is m . x = c
    d: np.ndarray  # unit direction along the line (perp of m)
    q0: np.ndarray  # reference point c*m
    intervals: list[tuple[float, float]]  # param ranges backed by real overlap


def _canon_line(m, c: float):
    m = np.asarray(m, dtype=float)
    n = float(np.linalg.norm(m))
    m = m / n
    c = c / n
    if m[0] < -1e-12 or (abs(m[0]) <= 1e-12 and m[1] < 0):
        m, c = -m, -c
    d = np.array([-m[1], m[0]])
    return m, c, d, c * m


def _poly_line_interval(poly: np.ndarray, q0, d) -> tuple[float, float] | None:
    """Parameter interval of the line q0 + t*d inside a convex CCW polygon."""
    tlo, thi = -np.inf, np.inf
    k = len(poly)
    for i in range(k):
        a = poly[i]
        b = poly[(i + 1) % k]
        ex, ey = b[0] - a[0], b[1] - a[1]
        elen = math.hypot(ex, ey)
        if elen < WELD_TOL:
            continue
        beta = ex * d[1] - ey * d[0]
        alpha = ex * (q0[1] - a[1]) - ey * (q0[0] - a[0])
        # beta and alpha both scale with edge length, so the parallel test
        # must too; an absolute epsilon misreads roundoff on long edges as
        # a genuine crossing and wrecks the interval
        if abs(beta) < 1e-12 * elen:
            if alpha < -WELD_TOL * elen:
                return None
            continue
        t = -alpha / beta
        if beta > 0:
            tlo = max(tlo, t)
        else:
            thi = min(thi, t)
    if thi - tlo <= WELD_TOL:
        return None
    return tlo, thi


def _clip_poly_poly_2d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Intersection of two convex CCW 2-D polygons (Sutherland-Hodgman)."""
    out = a
    k = len(b)
    for i in range(k):
        if len(out) < 3:
            return np.empty((0, 2))
        p = b[i]
        q = b[(i + 1) % k]
        e = q - p
        # keep the left side of p->q: cross(e, x-p) >= 0, i.e. d <= 0 below
        d = (out[:, 0] - p[0]) * e[1] - (out[:, 1] - p[1]) * e[0]
        nxt: list[np.ndarray] = []
        m = len(out)
        for j in range(m):
            jj = (j + 1) % m
            if d[j] <= 0.0:
                nxt.append(out[j])
            if (d[j] < 0.0) != (d[jj] < 0.0) and abs(d[j] - d[jj]) > 1e-15:
                t = d[j] / (d[j] - d[jj])
                if 0.0 < t < 1.0:
                    nxt.append(out[j] + t * (out[jj] - out[j]))
        out = np.asarray(nxt) if len(nxt) >= 3 else np.empty((0, 2))
    return out


def _area_centroid_2d(poly: np.ndarray) -> tuple[float, float, float]:
    """Signed area and area centroid; insensitive to collinear extra verts."""
    x = poly[:, 0]
    y = poly[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    w = x * yn - xn * y
    area = 0.5 * float(w.sum())
    if abs(area) < 1e-300:
        return 0.0, float(x.mean()), float(y.mean())
    cx = float(((x + xn) * w).sum() / (6.0 * area))
    cy = float(((y + yn) * w).sum() / (6.0 * area))
    return area, cx, cy


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[rj] = ri


def build_obstacle_set(
    faces: list[SourceFace],
    solids: list[InflatedObstacle],
    box_lo,
    box_hi,
) -> ObstacleSet:
    """Split all faces against each other and weld the fragments.

    Faces are grouped by carrying plane (1e-6); fragments of one group are
    deduplicated so overlapping coplanar coverage yields a single cell whose
    free sides honor every covering source. Fragments buried inside a solid
    or blocked on both sides are removed. Shared edges, including partially
    overlapping ones across plane groups, end up as identical welded vertex
    id pairs on every incident cell.
    """
    lo = np.asarray(box_lo, dtype=float)
    hi = np.asarray(box_hi, dtype=float)

    live: list[SourceFace] = [
        f for f in faces if len(f.verts) >= 3 and polygon_area_3d(f.verts) > AREA_TOL
    ]

    # ---- plane groups ------------------------------------------------------
    group_n: list[np.ndarray] = []
    group_c: list[float] = []
    face_group: list[int] = []
    face_sign: list[float] = []
    for f in live:
        n = unit(f.normal)
        c = float(np.mean(f.verts @ n))
        hit = -1
        sgn = 1.0
        for gi in range(len(group_n)):
            s = 1.0 if float(n @ group_n[gi]) >= 0 else -1.0
            if (
                float(np.max(np.abs(s * n - group_n[gi]))) < PLANE_TOL
                and abs(s * c - group_c[gi]) < PLANE_TOL
            ):
                hit, sgn = gi, s
                break
        if hit < 0:
            gn, gc = n, c
            if gn[0] < -1e-12 or (
                abs(gn[0]) <= 1e-12 and (gn[1] < -1e-12 or (abs(gn[1]) <= 1e-12 and gn[2] < 0))
            ):
                gn, gc = -gn, -gc
            group_n.append(gn)
            group_c.append(gc)
            hit = len(group_n) - 1
            sgn = 1.0 if float(n @ gn) >= 0 else -1.0
        face_group.append(hit)
        face_sign.append(sgn)

    charts = []
    for gn, gc in zip(group_n, group_c):
        u, v = plane_basis(gn)
        charts.append((gc * gn, u, v))

    def to2d(gi: int, pts: np.ndarray) -> np.ndarray:
        o, u, v = charts[gi]
        rel = pts - o
        return np.column_stack([rel @ u, rel @ v])

    def to3d(gi: int, pts2: np.ndarray) -> np.ndarray:
        o, u, v = charts[gi]
        return o + pts2[:, :1] * u + pts2[:, 1:2] * v

    face2d: list[np.ndarray] = []
    for fi, f in enumerate(live):
        p2 = to2d(face_group[fi], f.verts)
        if face_sign[fi] < 0:
            p2 = p2[::-1].copy()
        if polygon_area_2d(p2) < 0:
            p2 = p2[::-1].copy()
        face2d.append(p2)

    # ---- same-plane overlap clusters ---------------------------------------
    uf = _UnionFind(len(live))
    by_group: dict[int, list[int]] = {}
    for fi, gi in enumerate(face_group):
        by_group.setdefault(gi, []).append(fi)
    for gi, members in by_group.items():
        for ai in range(len(members)):
            for bi in range(ai + 1, len(members)):
                fa, fb = members[ai], members[bi]
                inter = _clip_poly_poly_2d(face2d[fa], face2d[fb])
                if len(inter) >= 3 and abs(polygon_area_2d(inter)) > 1e-10:
                    uf.union(fa, fb)
    clusters: dict[int, list[int]] = {}
    for fi in range(len(live)):
        clusters.setdefault(uf.find(fi), []).append(fi)
    cluster_of = {fi: root for root, members in clusters.items() for fi in members}

    # ---- cross-plane cut lines ----------------------------------------------
    bbox_lo = np.array([f.verts.min(axis=0) for f in live]) if live else np.zeros((0, 3))
    bbox_hi = np.array([f.verts.max(axis=0) for f in live]) if live else np.zeros((0, 3))

    face_cuts: list[dict[tuple[int, int, int], _CutLine]] = [dict() for _ in live]

    def add_cut(fi: int, p0: np.ndarray, d3: np.ndarray, t_lo: float, t_hi: float) -> None:
        gi = face_group[fi]
        o, u, v = charts[gi]
        q0 = np.array([float((p0 - o) @ u), float((p0 - o) @ v)])
        d2 = np.array([float(d3 @ u), float(d3 @ v)])
        nd = float(np.linalg.norm(d2))
        if nd < 1e-12:
            return
        d2 = d2 / nd
        m, c, dcan, q0can = _canon_line(np.array([d2[1], -d2[0]]), d2[1] * q0[0] - d2[0] * q0[1])
        a0 = float((q0 - q0can) @ dcan)
        s = float(d2 @ dcan)
        t0 = a0 + s * t_lo
        t1 = a0 + s * t_hi
        iv = (min(t0, t1), max(t0, t1))
        key = (round(m[0] / WELD_TOL), round(m[1] / WELD_TOL), round(c / WELD_TOL))
        entry = face_cuts[fi].get(key)
        if entry is None:
            face_cuts[fi][key] = _CutLine(m=m, c=c, d=dcan, q0=q0can, intervals=[iv])
        else:
            entry.intervals.append(iv)

    for fa in range(len(live)):
        for fb in range(fa + 1, len(live)):
            if face_group[fa] == face_group[fb]:
                continue
            sa, sb = live[fa].solid, live[fb].solid
            if sa >= 0 and sa == sb:
                continue
            if np.any(bbox_lo[fa] > bbox_hi[fb] + WELD_TOL) or np.any(
                bbox_lo[fb] > bbox_hi[fa] + WELD_TOL
            ):
                continue
            ga, gb = face_group[fa], face_group[fb]
            n1, c1 = group_n[ga], group_c[ga]
            n2, c2 = group_n[gb], group_c[gb]
            d = np.cross(n1, n2)
            dd = float(d @ d)
            if dd < 1e-18:
                continue
            p0 = (c1 * np.cross(n2, d) + c2 * np.cross(d, n1)) / dd
            dhat = d / math.sqrt(dd)
            oa, ua, va = charts[ga]
            ia = _poly_line_interval(
                face2d[fa],
                np.array([float((p0 - oa) @ ua), float((p0 - oa) @ va)]),
                np.array([float(dhat @ ua), float(dhat @ va)]),
            )
            if ia is None:
                continue
            ob, ub, vb = charts[gb]
            ib = _poly_line_interval(
                face2d[fb],
                np.array([float((p0 - ob) @ ub), float((p0 - ob) @ vb)]),
                np.array([float(dhat @ ub), float(dhat @ vb)]),
            )
            if ib is None:
                continue
            t_lo = max(ia[0], ib[0])
            t_hi = min(ia[1], ib[1])
            if t_hi - t_lo <= WELD_TOL:
                continue
            add_cut(fa, p0, dhat, t_lo, t_hi)
            add_cut(fb, p0, dhat, t_lo, t_hi)

    # ---- cluster pools: shared, unrestricted cutting for overlapping faces --
    cluster_pool: dict[int, dict[tuple[int, int, int], _CutLine]] = {}
    for root, members in clusters.items():
        if len(members) < 2:
            continue
        pool: dict[tuple[int, int, int], _CutLine] = {}
        for fi in members:
            for key, line in face_cuts[fi].items():
                if key in pool:
                    pool[key].intervals.extend(line.intervals)
                else:
                    pool[key] = _CutLine(line.m, line.c, line.d, line.q0, list(line.intervals))
            poly = face2d[fi]
            for i in range(len(poly)):
                a = poly[i]
                b = poly[(i + 1) % len(poly)]
                e = b - a
                ln = float(np.linalg.norm(e))
                if ln < 1e-12:
                    continue
                m, c, dcan, q0can = _canon_line(
                    np.array([e[1], -e[0]]) / ln, (e[1] * a[0] - e[0] * a[1]) / ln
                )
                key = (round(m[0] / WELD_TOL), round(m[1] / WELD_TOL), round(c / WELD_TOL))
                if key not in pool:
                    pool[key] = _CutLine(m=m, c=c, d=dcan, q0=q0can, intervals=[])
        cluster_pool[root] = pool

    # ---- cut every face into convex pieces ----------------------------------
    def cut_face(fi: int) -> list[np.ndarray]:
        root = cluster_of[fi]
        clustered = root in cluster_pool
        pool = cluster_pool[root] if clustered else face_cuts[fi]
        pieces = [face2d[fi]]
        for key in sorted(pool):
            line = pool[key]
            nxt: list[np.ndarray] = []
            for piece in pieces:
                dist = piece @ line.m - line.c
                if dist.max() < WELD_TOL or dist.min() > -WELD_TOL:
                    nxt.append(piece)
                    continue
                if not clustered and line.intervals:
                    t = (piece - line.q0) @ line.d
                    t0, t1 = float(t.min()) - WELD_TOL, float(t.max()) + WELD_TOL
                    if not any(a <= t1 and b >= t0 for a, b in line.intervals):
                        nxt.append(piece)
                        continue
                below, above = split_polygon_2d(piece, line.m, line.c)
                kept = False
                for part in (below, above):
                    if len(part) >= 3 and abs(polygon_area_2d(part)) > AREA_TOL:
                        nxt.append(part)
                        kept = True
                if not kept:
                    nxt.append(piece)
            pieces = nxt
        return pieces

    # ---- assemble deduplicated cells per group ------------------------------
    raw_cells: list[dict] = []
    per_group_snap: dict[int, _SnapIndex] = {}
    per_group_cells: dict[int, dict[int, int]] = {}

    for fi, f in enumerate(live):
        gi = face_group[fi]
        snap = per_group_snap.setdefault(gi, _SnapIndex(WELD_TOL * 10, 2))
        cellmap = per_group_cells.setdefault(gi, {})
        blocks_back = f.kind in ("solid", "wall")
        for piece in cut_face(fi):
            area, cx, cy = _area_centroid_2d(piece)
            if abs(area) < AREA_TOL:
                continue
            snap_id = snap.insert((cx, cy))
            if snap_id in cellmap:
                rec = raw_cells[cellmap[snap_id]]
            else:
                rec = {
                    "poly2": piece,
                    "group": gi,
                    "area": abs(area),
                    "c2": (cx, cy),
                    "blocked_pos": False,
                    "blocked_neg": False,
                    "sources": [],
                }
                cellmap[snap_id] = len(raw_cells)
                raw_cells.append(rec)
            rec["sources"].append(fi)
            if blocks_back:
                # the face blocks the side opposite its own normal
                if face_sign[fi] > 0:
                    rec["blocked_neg"] = True
                else:
                    rec["blocked_pos"] = True

    # ---- burial and dead-interface removal -----------------------------------
    if raw_cells:
        cents3 = np.vstack(
            [to3d(rec["group"], np.array([[*rec["c2"]]]))[0] for rec in raw_cells]
        )
    else:
        cents3 = np.zeros((0, 3))
    dead = np.zeros(len(raw_cells), dtype=bool)
    for i, rec in enumerate(raw_cells):
        if rec["blocked_pos"] and rec["blocked_neg"]:
            dead[i] = True
    for solid in solids:
        inside = solid.contains(cents3, margin=WELD_TOL)
        dead |= inside

    # ---- weld vertices and build loops ---------------------------------------
    weld = _SnapIndex(WELD_TOL, 3)
    kept: list[dict] = []
    loops: list[list[int]] = []
    for i, rec in enumerate(raw_cells):
        if dead[i]:
            continue
        pts3 = to3d(rec["group"], rec["poly2"])
        vids: list[int] = []
        for p in pts3:
            vid = weld.insert(p)
            if not vids or vid != vids[-1]:
                vids.append(vid)
        while len(vids) > 1 and vids[0] == vids[-1]:
            vids.pop()
        if len(vids) < 3 or len(set(vids)) != len(vids):
            continue
        ring = np.array([weld.points[v] for v in vids], dtype=float)
        if np.linalg.norm(ring - np.roll(ring, -1, axis=0), axis=1).max() < MICRO_EDGE:
            continue
        kept.append(rec)
        loops.append(vids)

    coords = np.array(weld.points, dtype=float).reshape(-1, 3)

    # ---- subdivide edges at vertices lying on them ----------------------------
    h = 0.05
    halo: dict[tuple[int, int, int], list[int]] = {}
    for vid in range(len(coords)):
        base = tuple(int(math.floor(c / h)) for c in coords[vid])
        for off in itertools.product((-1, 0, 1), repeat=3):
            halo.setdefault((base[0] + off[0], base[1] + off[1], base[2] + off[2]), []).append(vid)

    def on_edge_vertices(a: int, b: int) -> list[int]:
        pa, pb = coords[a], coords[b]
        ab = pb - pa
        ln = float(np.linalg.norm(ab))
        if ln < WELD_TOL:
            return []
        d = ab / ln
        steps = max(2, int(math.ceil(ln / h)) + 1)
        cand: set[int] = set()
        for k in range(steps + 1):
            p = pa + (k / steps) * ab
            key = (int(math.floor(p[0] / h)), int(math.floor(p[1] / h)), int(math.floor(p[2] / h)))
            ids = halo.get(key)
            if ids:
                cand.update(ids)
        cand.discard(a)
        cand.discard(b)
        out: list[tuple[float, int]] = []
        for vid in cand:
            rel = coords[vid] - pa
            t = float(rel @ d)
            if t <= WELD_TOL or t >= ln - WELD_TOL:
                continue
            perp = rel - t * d
            if float(perp @ perp) <= WELD_TOL * WELD_TOL:
                out.append((t, vid))
        out.sort()
        return [vid for _, vid in out]

    edge_cache: dict[tuple[int, int], list[int]] = {}
    final_loops: list[tuple[int, ...]] = []
    for vids in loops:
        expanded: list[int] = []
        k = len(vids)
        for i in range(k):
            a, b = vids[i], vids[(i + 1) % k]
            expanded.append(a)
            key = (a, b) if a < b else (b, a)
            if key not in edge_cache:
                edge_cache[key] = on_edge_vertices(key[0], key[1])
            mids = edge_cache[key]
            expanded.extend(mids if a == key[0] else list(reversed(mids)))
        final_loops.append(tuple(expanded))

    # ---- adjacency -------------------------------------------------------------
    adjacency: dict[tuple[int, int], list[tuple[int, int]]] = {}
    cells: list[Cell] = []
    for ci, (rec, loop) in enumerate(zip(kept, final_loops)):
        gi = rec["group"]
        c3 = to3d(gi, np.array([[*rec["c2"]]]))[0]
        cells.append(
            Cell(
                loop=loop,
                group=gi,
                centroid=(float(c3[0]), float(c3[1]), float(c3[2])),
                area=float(rec["area"]),
                free_pos=not rec["blocked_pos"],
                free_neg=not rec["blocked_neg"],
                sources=tuple(sorted(set(rec["sources"]))),
            )
        )
        k = len(loop)
        for i in range(k):
            a, b = loop[i], loop[(i + 1) % k]
            key = (a, b) if a < b else (b, a)
            # rel records whether this cell walks the subedge key-forward
            adjacency.setdefault(key, []).append((ci, +1 if a == key[0] else -1))

    return ObstacleSet(
        verts=coords,
        cells=tuple(cells),
        group_normals=np.array(group_n, dtype=float).reshape(-1, 3),
        group_offsets=np.array(group_c, dtype=float),
        adjacency={k: tuple(v) for k, v in adjacency.items()},
        faces=tuple(live),
        solids=tuple(solids),
        box_lo=lo,
        box_hi=hi,
    )


def polygon_intersection(raw, workspace) -> ObstacleSet:
    """Mutually split a set of raw obstacle polygons inside a workspace box.

    ``raw`` may mix wedge polygons (materialized against the box here) and
    prebuilt ``SourceFace`` values; the workspace is only a clipping bound,
    its walls are not added as faces. Fragments of the result are pairwise
    non-crossing and indexed by shared welded edges.
    """
    lo, hi = _box_bounds(workspace)
    faces: list[SourceFace] = []
    for item in raw:
        if isinstance(item, ObstaclePolygon):
            verts = item.materialize(lo, hi)
            if len(verts) >= 3:
                faces.append(
                    SourceFace(
                        verts=verts,
                        normal=item.plane_normal,
                        kind="sheet",
                        tag=f"{item.neighbor}/{item.member}",
                    )
                )
            continue
        verts = clip_polygon_box(item.verts, lo, hi)
        if len(verts) >= 3:
            n = unit(item.normal)
            faces.append(
                SourceFace(
                    verts=ensure_ccw(verts, n),
                    normal=n,
                    kind=item.kind,
                    solid=item.solid,
                    tag=item.tag,
                )
            )
    return build_obstacle_set(faces, [], lo, hi)


def _box_bounds(workspace) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(workspace, "lo_arr"):
        return workspace.lo_arr, workspace.hi_arr
    lo, hi = workspace
    return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
