"""Low-level 3-D/2-D geometry primitives shared by every planner layer.

All functions accept array-likes and work in plain float64 numpy. Segments
are given by their endpoints. Nothing in here knows about trusses.
"""
from __future__ import annotations

import numpy as np

EPS = 1e-12


def unit(v: np.ndarray) -> np.ndarray:
    """v / |v|, raising on zero vectors (callers own the degenerate cases)."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < EPS:
        raise ValueError("cannot normalize a zero-length vector")
    return v / n


# ---------------------------------------------------------------------------
# segment / segment distance
# ---------------------------------------------------------------------------

def segment_distance(p1, p2, q1, q2) -> float:
    """Exact min distance between segments [p1,p2] and [q1,q2].

    Closed-form clamped solution; zero-length inputs degrade to points.
    """
    p1 = np.asarray(p1, dtype=float)
    d = segment_distance_batch(
        p1[None, :], np.asarray(p2, dtype=float)[None, :],
        np.asarray(q1, dtype=float)[None, :], np.asarray(q2, dtype=float)[None, :],
    )
    return float(d[0])


def segment_distance_batch(a0, a1, b0, b1) -> np.ndarray:
    """Min distances for N segment pairs, vectorized.

    Inputs are (N,3) arrays (broadcastable). Returns (N,) distances.
    """
    a0 = np.atleast_2d(np.asarray(a0, dtype=float))
    a1 = np.atleast_2d(np.asarray(a1, dtype=float))
    b0 = np.atleast_2d(np.asarray(b0, dtype=float))
    b1 = np.atleast_2d(np.asarray(b1, dtype=float))
    a0, a1, b0, b1 = np.broadcast_arrays(a0, a1, b0, b1)

    d1 = a1 - a0
    d2 = b1 - b0
    r = a0 - b0
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = np.einsum("ij,ij->i", d1, r)
    b = np.einsum("ij,ij->i", d1, d2)

    denom = a * e - b * b
    # general case; guard zero denominators (parallel or degenerate)
    s = np.where(denom > EPS, np.clip((b * f - c * e) / np.where(denom > EPS, denom, 1.0), 0.0, 1.0), 0.0)
    # both segments degenerate to points
    both_pts = (a <= EPS) & (e <= EPS)
    # first degenerate: s stays 0; second degenerate handled after t
    t = np.where(e > EPS, (b * s + f) / np.where(e > EPS, e, 1.0), 0.0)

    t_lo = t < 0.0
    t_hi = t > 1.0
    t = np.clip(t, 0.0, 1.0)
    safe_a = np.where(a > EPS, a, 1.0)
    s = np.where(t_lo & (a > EPS), np.clip(-c / safe_a, 0.0, 1.0), s)
    s = np.where(t_hi & (a > EPS), np.clip((b - c) / safe_a, 0.0, 1.0), s)
    # second segment is a point: project it onto the first segment
    s = np.where((e <= EPS) & (a > EPS), np.clip(-c / safe_a, 0.0, 1.0), s)
    s = np.where(a <= EPS, 0.0, s)
    s = np.where(both_pts, 0.0, s)

    closest_a = a0 + s[:, None] * d1
    closest_b = b0 + t[:, None] * d2
    return np.linalg.norm(closest_a - closest_b, axis=1)


def point_segment_distance(p, a, b) -> float:
    """Distance from point p to segment [a, b]."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    dd = float(d @ d)
    if dd < EPS:
        return float(np.linalg.norm(p - a))
    t = float(np.clip((p - a) @ d / dd, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * d)))


# ---------------------------------------------------------------------------
# point / triangle and triangle / segment distance
# ---------------------------------------------------------------------------

def points_triangle_distance(points, t0, t1, t2) -> np.ndarray:
    """Distances from (N,3) points to a single triangle, vectorized.

    Closest-point-on-triangle via the barycentric region walk.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.asarray(t0, dtype=float)
    b = np.asarray(t1, dtype=float)
    c = np.asarray(t2, dtype=float)

    ab = b - a
    ac = c - a
    ap = p - a
    d1 = ap @ ab
    d2 = ap @ ac
    bp = p - b
    d3 = bp @ ab
    d4 = bp @ ac
    cp = p - c
    d5 = cp @ ab
    d6 = cp @ ac

    out = np.empty((len(p), 3), dtype=float)
    done = np.zeros(len(p), dtype=bool)

    def assign(mask, pts):
        todo = mask & ~done
        out[todo] = pts[todo] if pts.ndim == 2 else pts
        done[todo] = True

    assign((d1 <= 0) & (d2 <= 0), np.broadcast_to(a, p.shape))
    assign((d3 >= 0) & (d4 <= d3), np.broadcast_to(b, p.shape))
    assign((d6 >= 0) & (d5 <= d6), np.broadcast_to(c, p.shape))

    vc = d1 * d4 - d3 * d2
    mask = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    denom = np.where(np.abs(d1 - d3) > EPS, d1 - d3, 1.0)
    v = np.clip(d1 / denom, 0.0, 1.0)
    assign(mask, a + v[:, None] * ab)

    vb = d5 * d2 - d1 * d6
    mask = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    denom = np.where(np.abs(d2 - d6) > EPS, d2 - d6, 1.0)
    w = np.clip(d2 / denom, 0.0, 1.0)
    assign(mask, a + w[:, None] * ac)

    va = d3 * d6 - d5 * d4
    mask = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
    denom = np.where(np.abs((d4 - d3) + (d5 - d6)) > EPS, (d4 - d3) + (d5 - d6), 1.0)
    w = np.clip((d4 - d3) / denom, 0.0, 1.0)
    assign(mask, b + w[:, None] * (c - b))

    # interior region
    denom = va + vb + vc
    denom = np.where(np.abs(denom) > EPS, denom, 1.0)
    v = vb / denom
    w = vc / denom
    interior = a + v[:, None] * ab + w[:, None] * ac
    out[~done] = interior[~done]

    return np.linalg.norm(p - out, axis=1)


def triangle_segments_distance(t0, t1, t2, seg_a, seg_b) -> np.ndarray:
    """Min distance between one triangle and N segments, vectorized.

    Degenerate (zero-area) triangles degrade to their longest edge.
    Returns (N,) distances; 0 where a segment crosses the triangle.
    """
    a = np.asarray(t0, dtype=float)
    b = np.asarray(t1, dtype=float)
    c = np.asarray(t2, dtype=float)
    sa = np.atleast_2d(np.asarray(seg_a, dtype=float))
    sb = np.atleast_2d(np.asarray(seg_b, dtype=float))
    n_seg = len(sa)

    nrm = np.cross(b - a, c - a)
    nn = np.linalg.norm(nrm)

    cand = np.full(n_seg, np.inf)
    # edge vs segment distances cover all boundary cases
    for e0, e1 in ((a, b), (b, c), (c, a)):
        cand = np.minimum(
            cand,
            segment_distance_batch(
                np.broadcast_to(e0, sa.shape), np.broadcast_to(e1, sa.shape), sa, sb
            ),
        )
    if nn < EPS:
        return cand

    # interior: segment endpoints against the triangle face
    cand = np.minimum(cand, points_triangle_distance(sa, a, b, c))
    cand = np.minimum(cand, points_triangle_distance(sb, a, b, c))

    # proper crossings give zero distance
    n_unit = nrm / nn
    da = (sa - a) @ n_unit
    db = (sb - a) @ n_unit
    crossing = (da * db) < 0
    if np.any(crossing):
        t = da / np.where(np.abs(da - db) > EPS, da - db, 1.0)
        hit = sa + t[:, None] * (sb - sa)
        # barycentric containment of the plane hit point
        v0 = c - a
        v1 = b - a
        v2 = hit - a
        dot00 = v0 @ v0
        dot01 = v0 @ v1
        dot11 = v1 @ v1
        dot02 = v2 @ v0
        dot12 = v2 @ v1
        inv = 1.0 / max(dot00 * dot11 - dot01 * dot01, EPS)
        u = (dot11 * dot02 - dot01 * dot12) * inv
        w = (dot00 * dot12 - dot01 * dot02) * inv
        inside = (u >= -1e-12) & (w >= -1e-12) & (u + w <= 1 + 1e-12)
        cand = np.where(crossing & inside, 0.0, cand)
    return cand


# ---------------------------------------------------------------------------
# 2-D hull and polygon predicates
# ---------------------------------------------------------------------------

def convex_hull_2d(points) -> list[int]:
    """Indices of the convex hull of 2-D points, counterclockwise.

    Strict turns only: collinear interior points are dropped. Raises
    ValueError when fewer than 3 distinct points exist or all are collinear.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected (N,2) points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    # drop duplicate coordinates, keeping the first index
    uniq = []
    for i in order:
        if not uniq or np.linalg.norm(pts[i] - pts[uniq[-1]]) > 1e-12:
            uniq.append(int(i))
    if len(uniq) < 3:
        raise ValueError("fewer than 3 distinct points")

    def cross(o, p, q):
        return (pts[p][0] - pts[o][0]) * (pts[q][1] - pts[o][1]) - (
            pts[p][1] - pts[o][1]
        ) * (pts[q][0] - pts[o][0])

    lower: list[int] = []
    for i in uniq:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= 1e-12:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in reversed(uniq):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= 1e-12:
            upper.pop()
        upper.append(i)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise ValueError("all points collinear")
    return hull


def polygon_area_2d(poly) -> float:
    """Signed area (positive = counterclockwise)."""
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def point_hull_margin_2d(point, hull) -> float:
    """Signed distance from a point to a CCW convex polygon boundary.

    Positive inside, negative outside, zero on the boundary; the value is the
    min over edges of the perpendicular distance to the edge line.
    """
    p = np.asarray(point, dtype=float)
    h = np.asarray(hull, dtype=float)
    margin = np.inf
    for i in range(len(h)):
        a = h[i]
        b = h[(i + 1) % len(h)]
        e = b - a
        ln = np.linalg.norm(e)
        if ln < EPS:
            continue
        # left-of distance for CCW polygons
        d = (e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0])) / ln
        margin = min(margin, d)
    return float(margin)


# ---------------------------------------------------------------------------
# convex polygon surgery (3-D planar polygons and their 2-D charts)
# ---------------------------------------------------------------------------

def polygon_area_3d(verts) -> float:
    """Area of a planar 3-D polygon (unsigned)."""
    v = np.asarray(verts, dtype=float)
    if len(v) < 3:
        return 0.0
    s = np.zeros(3)
    for i in range(1, len(v) - 1):
        s = s + np.cross(v[i] - v[0], v[i + 1] - v[0])
    return 0.5 * float(np.linalg.norm(s))


def ensure_ccw(verts: np.ndarray, normal) -> np.ndarray:
    """Reorder a convex planar polygon counterclockwise about ``normal``."""
    v = np.asarray(verts, dtype=float)
    n = np.asarray(normal, dtype=float)
    s = np.zeros(3)
    for i in range(1, len(v) - 1):
        s = s + np.cross(v[i] - v[0], v[i + 1] - v[0])
    return v[::-1].copy() if float(s @ n) < 0.0 else v


def clip_polygon_halfspace(verts, normal, offset: float) -> np.ndarray:
    """Clip a convex 3-D polygon to the half-space ``normal . x <= offset``.

    Standard single-plane Sutherland-Hodgman pass; returns the surviving
    vertex loop, possibly empty.
    """
    v = np.asarray(verts, dtype=float)
    n = np.asarray(normal, dtype=float)
    if len(v) == 0:
        return v
    d = v @ n - offset
    out: list[np.ndarray] = []
    k = len(v)
    for i in range(k):
        j = (i + 1) % k
        di, dj = d[i], d[j]
        # keep boundary-grazing points: a polygon exactly on the clip plane
        # must survive roundoff, and the 1e-12 slack is well under welding
        # resolution so downstream snapping absorbs it
        if di <= 1e-12:
            out.append(v[i])
        if (di < 0.0) != (dj < 0.0) and abs(di - dj) > EPS:
            t = di / (di - dj)
            if 0.0 < t < 1.0:
                out.append(v[i] + t * (v[j] - v[i]))
    if not out:
        return np.empty((0, 3))
    return np.asarray(out)


def clip_polygon_box(verts, lo, hi) -> np.ndarray:
    """Clip a convex 3-D polygon to an axis-aligned box [lo, hi]."""
    v = np.asarray(verts, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = 1.0
        v = clip_polygon_halfspace(v, e, hi[axis])
        if len(v) == 0:
            return v
        v = clip_polygon_halfspace(v, -e, -lo[axis])
        if len(v) == 0:
            return v
    return v


def plane_box_section(normal, offset: float, lo, hi) -> np.ndarray:
    """Cross-section polygon of the plane ``normal . x = offset`` with a box.

    Returns a convex CCW loop about ``normal``; empty when the plane misses
    the box entirely.
    """
    n = unit(normal)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    center = 0.5 * (lo + hi)
    p0 = center + (offset - float(n @ center)) * n
    half = 2.0 * float(np.linalg.norm(hi - lo))
    if half <= 0.0:
        return np.empty((0, 3))
    u, v = plane_basis(n)
    quad = np.array([
        p0 - half * u - half * v,
        p0 + half * u - half * v,
        p0 + half * u + half * v,
        p0 - half * u + half * v,
    ])
    cut = clip_polygon_box(quad, lo, hi)
    if len(cut) < 3:
        return np.empty((0, 3))
    return ensure_ccw(cut, n)


def split_polygon_2d(poly, line_n, line_c: float):
    """Split a convex 2-D polygon by the full line ``line_n . x = line_c``.

    Returns (below, above): the parts with ``line_n . x <= c`` and ``>= c``.
    Either may be empty. Vertices within EPS of the line belong to both
    parts. Crossings are inserted only between vertices strictly on opposite
    sides of the band: a vertex grazing the line from below must not make
    the above part drop the corner (the interpolation parameter rounds to
    exactly 1.0 there and a strict 0 < t < 1 guard would skip the crossing,
    cutting the polygon far beyond the sliver being removed).
    """
    v = np.asarray(poly, dtype=float)
    n = np.asarray(line_n, dtype=float)
    d = v @ n - line_c
    side = np.where(d > EPS, 1, 0) - np.where(d < -EPS, 1, 0)
    below: list[np.ndarray] = []
    above: list[np.ndarray] = []
    k = len(v)
    for i in range(k):
        j = (i + 1) % k
        if side[i] <= 0:
            below.append(v[i])
        if side[i] >= 0:
            above.append(v[i])
        if side[i] * side[j] < 0:
            t = d[i] / (d[i] - d[j])
            p = v[i] + min(max(t, 0.0), 1.0) * (v[j] - v[i])
            below.append(p)
            above.append(p)
    lo = np.asarray(below) if len(below) >= 3 else np.empty((0, 2))
    hi = np.asarray(above) if len(above) >= 3 else np.empty((0, 2))
    return lo, hi


def point_polygon_distance(p, verts, normal) -> float:
    """Distance from a point to a planar convex 3-D polygon (solid face)."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(verts, dtype=float)
    n = unit(normal)
    h = float((p - v[0]) @ n)
    foot = p - h * n
    # inside test against every edge of the CCW loop
    inside = True
    for i in range(len(v)):
        a = v[i]
        b = v[(i + 1) % len(v)]
        if float(np.cross(b - a, foot - a) @ n) < -1e-12:
            inside = False
            break
    if inside:
        return abs(h)
    best = np.inf
    for i in range(len(v)):
        best = min(best, point_segment_distance(p, v[i], v[(i + 1) % len(v)]))
    return float(best)


def ray_triangle_hits(origin, direction, v0, v1, v2):
    """Batch Moller-Trumbore ray/triangle intersection.

    Returns (hit, t, u, v, det) over N triangles for one ray. ``hit`` is a
    loose mask (t > 0, barycentrics in range with zero margin); callers that
    need robustness should inspect u, v and det for near-degenerate hits.
    """
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    v1 = np.atleast_2d(np.asarray(v1, dtype=float))
    v2 = np.atleast_2d(np.asarray(v2, dtype=float))

    e1 = v1 - v0
    e2 = v2 - v0
    pvec = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    safe = np.where(np.abs(det) > EPS, det, 1.0)
    tvec = o - v0
    u = np.einsum("ij,ij->i", tvec, pvec) / safe
    qvec = np.cross(tvec, e1)
    v = (qvec @ d) / safe
    t = np.einsum("ij,ij->i", e2, qvec) / safe
    hit = (np.abs(det) > EPS) & (t > EPS) & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0)
    return hit, t, u, v, det


# ---------------------------------------------------------------------------
# rotations and frames
# ---------------------------------------------------------------------------

def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a (not necessarily unit) axis."""
    k = unit(axis)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * kx + (1 - np.cos(angle)) * (kx @ kx)


def plane_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    """Two orthonormal in-plane axes (u, v) with u x v = normal."""
    n = unit(normal)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = unit(np.cross(helper, n))
    v = np.cross(n, u)
    return u, v
