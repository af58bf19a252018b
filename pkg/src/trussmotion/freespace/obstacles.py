"""Collision obstacles seen by one moving truss node.

When a node travels and the rest of the truss stays put, each of its members
sweeps through space behind it. A static member blocks the node wherever the
swept member would touch it; for a fixed neighbor ``u`` and a static member
``m`` that blocked set is the planar wedge traced by rays shot from ``u``
through every point of ``m``. Physical link thickness fattens each wedge into
a thin convex solid bounded by five faces. Separately, a node whose neighbors
all lie on one plane cannot cross that plane: doing so would flatten its
members onto the plane and lose a motion degree of freedom, so the plane
itself becomes an impassable sheet.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import clip_polygon_box, ensure_ccw, plane_box_section, unit
from ..truss import TrussGraph

# rays closer than this to grazing the wedge plane make the thickness
# offset blow up; the construction refuses rather than emitting junk
GRAZING_TOL = 1e-6

# neighbors within this distance of their common best-fit plane count as
# coplanar for the crossing-singularity test
COPLANAR_TOL = 1e-6

_DEGENERATE_SIN = 1e-9


@dataclass(frozen=True)
class ObstaclePolygon:
    """Planar wedge blocked by one (fixed neighbor, static member) pair.

    The wedge lives in the plane spanned by the neighbor (apex) and the
    member; its boundary is the member segment plus two rays from the apex
    through the segment endpoints, extended away from the apex.
    """

    apex: tuple[float, float, float]
    seg_a: tuple[float, float, float]
    seg_b: tuple[float, float, float]
    normal: tuple[float, float, float]
    neighbor: str
    member: int

    @property
    def apex_point(self) -> np.ndarray:
        return np.asarray(self.apex, dtype=float)

    @property
    def segment(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.seg_a, dtype=float), np.asarray(self.seg_b, dtype=float)

    @property
    def plane_normal(self) -> np.ndarray:
        return np.asarray(self.normal, dtype=float)

    def ray_dirs(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit directions of the two boundary rays (apex -> endpoints)."""
        u = self.apex_point
        a, b = self.segment
        return unit(a - u), unit(b - u)

    def materialize(self, lo, hi) -> np.ndarray:
        """The wedge clipped to the box [lo, hi] as a finite CCW polygon.

        Empty when the wedge misses the box. Exact: the unbounded region is
        intersected with the box section of its own plane, no far-point
        approximation.
        """
        a, b = self.segment
        ra, rb = self.ray_dirs()
        return _clip_unbounded_face(self.plane_normal, a, b, ra, rb, lo, hi)


def obstacle_polygons(
    g: TrussGraph, node: str, ignore: frozenset[str] | set[str] = frozenset()
) -> list[ObstaclePolygon]:
    """All obstacle wedges for ``node`` moving through truss ``g``.

    One wedge per (fixed neighbor u, static member m) pair where m shares no
    endpoint with the moving member (node, u) and touches no ignored node.
    Ignored nodes move together with ``node`` (reconfiguration partners), so
    both their members and the wedges they would anchor are excluded; the
    member pairs skipped here are the ones a motion validity check must cover
    directly. Apexes that sit exactly on a member's carrying line span no
    area and are dropped.
    """
    if node not in g.node_ids:
        raise KeyError(f"unknown node {node!r}")
    skip = set(ignore)
    if node in skip:
        raise ValueError("a node cannot ignore itself")

    out: list[ObstaclePolygon] = []
    for u in g.neighbors(node):
        if u in skip:
            continue
        apex = g.position(u)
        for mid in g.member_ids:
            end_a, end_b = g.member_end_ids(mid)
            if {end_a, end_b} & ({node, u} | skip):
                continue
            a = g.position(end_a)
            b = g.position(end_b)
            da, db = a - apex, b - apex
            cr = np.cross(da, db)
            nrm = np.linalg.norm(cr)
            scale = np.linalg.norm(da) * np.linalg.norm(db)
            if scale <= 0 or nrm < _DEGENERATE_SIN * scale:
                continue
            out.append(
                ObstaclePolygon(
                    apex=tuple(apex),
                    seg_a=tuple(a),
                    seg_b=tuple(b),
                    normal=tuple(cr / nrm),
                    neighbor=u,
                    member=mid,
                )
            )
    return out


@dataclass(frozen=True)
class _FacePatch:
    """One boundary face of an inflated wedge, possibly unbounded."""

    base_a: tuple[float, float, float]
    base_b: tuple[float, float, float]
    ray_a: tuple[float, float, float] | None  # unit dirs; None = bounded quad
    ray_b: tuple[float, float, float] | None
    extra: tuple[tuple[float, float, float], ...]  # remaining quad vertices
    outward: tuple[float, float, float]
    label: str

    def materialize(self, lo, hi) -> np.ndarray:
        n = np.asarray(self.outward, dtype=float)
        a = np.asarray(self.base_a, dtype=float)
        b = np.asarray(self.base_b, dtype=float)
        if self.ray_a is None:
            quad = np.vstack([a, b, *[np.asarray(p, dtype=float) for p in self.extra]])
            cut = clip_polygon_box(quad, lo, hi)
            return ensure_ccw(cut, n) if len(cut) >= 3 else np.empty((0, 3))
        return _clip_unbounded_face(
            n, a, b, np.asarray(self.ray_a, dtype=float),
            np.asarray(self.ray_b, dtype=float), lo, hi,
        )


@dataclass(frozen=True)
class InflatedObstacle:
    """Convex solid obtained by fattening a wedge polygon by ``lam``.

    Four unbounded side faces plus one bounded cap near the member. The
    solid is the intersection of the five outward half-spaces in ``planes``
    (rows are (nx, ny, nz, offset) with interior at ``n . x < offset``).
    """

    source: ObstaclePolygon
    lam: float
    faces: tuple[_FacePatch, ...]
    planes: tuple[tuple[float, float, float, float], ...]

    def contains(self, points, margin: float = 0.0) -> np.ndarray:
        """True per point when strictly inside every face plane by ``margin``."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.ones(len(p), dtype=bool)
        for nx, ny, nz, off in self.planes:
            ok &= p @ np.array([nx, ny, nz]) < off - margin
        return ok


def inflate_polygon(
    poly: ObstaclePolygon, lam: float, clamp_pullback: bool = False
) -> InflatedObstacle:
    """Fatten a wedge polygon into its five-face convex solid.

    The member endpoints are pushed out of the wedge plane by +-lam, the
    boundary rays are re-aimed from the apex through the pushed points, and
    each pushed point is pulled back along its ray far enough to clear the
    member sideways by lam/2. Raises when a ray grazes the plane (offset
    would diverge) or when the apex sits too close to the member for the
    pull-back to stay on the apex's far side. With ``clamp_pullback`` the
    latter case degrades gracefully instead: the pull-back is dropped and
    the cap sits on the member plane, a slightly smaller but still valid
    convex solid for near-collinear geometry.
    """
    if lam < 0:
        raise ValueError("inflation must be nonnegative")
    u = poly.apex_point
    a, b = poly.segment
    n_p = poly.plane_normal

    # in-plane unit normal of the member line, aimed at the apex
    e = unit(b - a)
    foot = a + float((u - a) @ e) * e
    h = float(np.linalg.norm(u - foot))
    if h < _DEGENERATE_SIN:
        raise ValueError("apex lies on the member line")
    n_m = (u - foot) / h
    clamped = False
    if lam > 0 and h <= 0.5 * lam + 1e-12:
        if not clamp_pullback:
            raise ValueError(
                f"apex-to-member distance {h:.3g} cannot absorb inflation {lam:.3g}"
            )
        clamped = True

    pushed = {
        ("a", +1): a + lam * n_p,
        ("a", -1): a - lam * n_p,
        ("b", +1): b + lam * n_p,
        ("b", -1): b - lam * n_p,
    }
    rays: dict[tuple[str, int], np.ndarray] = {}
    pulled: dict[tuple[str, int], np.ndarray] = {}
    if clamped:
        shrink = 1.0
    else:
        shrink = 1.0 - (lam / (2.0 * h) if lam > 0 else 0.0)
    for key, q in pushed.items():
        r = unit(q - u)
        if abs(float(n_m @ r)) < GRAZING_TOL and not clamped:
            # with the pull-back clamped to zero a grazing ray is harmless
            raise ValueError("inflation ray grazes the wedge plane")
        rays[key] = r
        # pull-back along the ray is an apex-centered rescale by 1 - lam/2h
        pulled[key] = u + shrink * (q - u)

    def plane_from(p0, p1, p2, want_positive_toward) -> tuple[np.ndarray, float]:
        n = unit(np.cross(p1 - p0, p2 - p0))
        if float(n @ want_positive_toward) < 0:
            n = -n
        return n, float(n @ p0)

    if lam > 0:
        mid = 0.5 * (a + b)
        n1, c1 = plane_from(u, pushed[("a", +1)], pushed[("a", -1)], a - b)
        n2, c2 = plane_from(u, pushed[("b", +1)], pushed[("b", -1)], b - a)
        n3, c3 = plane_from(u, pushed[("a", +1)], pushed[("b", +1)], n_p)
        n4, c4 = plane_from(u, pushed[("a", -1)], pushed[("b", -1)], -n_p)
        n5, c5 = plane_from(
            pulled[("a", +1)], pulled[("a", -1)], pulled[("b", +1)], u - mid
        )
    else:
        # zero thickness: every face collapses into the wedge plane and the
        # cap onto the member itself; pick consistent degenerate normals
        n1, c1 = -e, float(-e @ a)
        n2, c2 = e, float(e @ b)
        n3, c3 = n_p, float(n_p @ a)
        n4, c4 = -n_p, float(-n_p @ a)
        n5, c5 = n_m, float(n_m @ a)

    faces = (
        _FacePatch(  # end face at the a endpoint
            tuple(pulled[("a", +1)]), tuple(pulled[("a", -1)]),
            tuple(rays[("a", +1)]), tuple(rays[("a", -1)]),
            (), tuple(n1), "end_a",
        ),
        _FacePatch(  # end face at the b endpoint
            tuple(pulled[("b", +1)]), tuple(pulled[("b", -1)]),
            tuple(rays[("b", +1)]), tuple(rays[("b", -1)]),
            (), tuple(n2), "end_b",
        ),
        _FacePatch(  # raised side
            tuple(pulled[("a", +1)]), tuple(pulled[("b", +1)]),
            tuple(rays[("a", +1)]), tuple(rays[("b", +1)]),
            (), tuple(n3), "side_pos",
        ),
        _FacePatch(  # lowered side
            tuple(pulled[("a", -1)]), tuple(pulled[("b", -1)]),
            tuple(rays[("a", -1)]), tuple(rays[("b", -1)]),
            (), tuple(n4), "side_neg",
        ),
        _FacePatch(  # bounded cap shielding the member
            tuple(pulled[("a", +1)]), tuple(pulled[("a", -1)]),
            None, None,
            (tuple(pulled[("b", -1)]), tuple(pulled[("b", +1)])),
            tuple(n5), "cap",
        ),
    )
    planes = (
        (*n1, c1), (*n2, c2), (*n3, c3), (*n4, c4), (*n5, c5),
    )
    return InflatedObstacle(source=poly, lam=lam, faces=faces, planes=planes)


def singular_plane(
    g: TrussGraph, node: str, ignore: frozenset[str] | set[str] = frozenset()
) -> tuple[np.ndarray, float] | None:
    """Plane the node cannot cross because all its neighbors lie on it.

    Returns (unit normal, offset) when the neighbors are coplanar within
    COPLANAR_TOL, else None. Three neighbors always span a plane; collinear
    neighbor sets leave the plane underdetermined and also return None (no
    single sheet models that case). Ignored neighbors (reconfiguration
    partners moving along with the node) do not pin a static plane and are
    left out.
    """
    nbrs = tuple(u for u in g.neighbors(node) if u not in ignore)
    if len(nbrs) < 3:
        return None
    pts = np.array([g.position(u) for u in nbrs], dtype=float)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    _, sv, vt = np.linalg.svd(centered, full_matrices=True)
    # collinear: second-largest direction carries (numerically) nothing
    if len(sv) < 2 or sv[1] < 1e-9:
        return None
    n = vt[2]
    dev = np.abs(centered @ n)
    if float(dev.max()) > COPLANAR_TOL:
        return None
    n = n / np.linalg.norm(n)
    if n[2] < 0 or (n[2] == 0 and (n[0] < 0 or (n[0] == 0 and n[1] < 0))):
        n = -n
    return n, float(n @ centroid)


def _clip_unbounded_face(plane_n, base_a, base_b, ray_a, ray_b, lo, hi) -> np.ndarray:
    """Clip {base edge + two rays} to a box, exactly.

    The unbounded convex face is the box section of its plane intersected
    with three in-plane half-planes: beyond the base edge on the side the
    rays extend, and inside each ray's boundary line.
    """
    n = unit(plane_n)
    sec = plane_box_section(n, float(n @ base_a), lo, hi)
    if len(sec) < 3:
        return np.empty((0, 3))

    base = base_b - base_a
    bl = np.linalg.norm(base)
    if bl > 1e-12:
        perp = np.cross(n, base / bl)
        sign = float(perp @ (ray_a + ray_b))
        if abs(sign) < 1e-12:
            return np.empty((0, 3))
        if sign < 0:
            perp = -perp
        sec = _clip_keep_geq(sec, perp, float(perp @ base_a))
        if len(sec) < 3:
            return np.empty((0, 3))

    for anchor, ray, other in ((base_a, ray_a, base_b), (base_b, ray_b, base_a)):
        rn = np.linalg.norm(ray)
        if rn < 1e-12:
            return np.empty((0, 3))
        m = np.cross(n, ray / rn)
        toward = float(m @ (other - anchor))
        if abs(toward) < 1e-12:
            # rays collapse onto the base line: zero-width face
            return np.empty((0, 3))
        if toward < 0:
            m = -m
        sec = _clip_keep_geq(sec, m, float(m @ anchor))
        if len(sec) < 3:
            return np.empty((0, 3))
    return ensure_ccw(sec, n)


def _clip_keep_geq(verts, normal, offset: float) -> np.ndarray:
    from ..geometry import clip_polygon_halfspace

    return clip_polygon_halfspace(verts, -np.asarray(normal, dtype=float), -offset)
