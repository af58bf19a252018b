"""Enclosed chambers of a moving node's free space.

Obstacle surfaces carve the workspace into connected chambers; a node can
reach any point inside the chamber it currently occupies, and nothing
beyond it, without reconfiguring the truss. Chamber boundaries are traced
over the welded face complex by walking edge to edge and always turning
onto the innermost face (the smallest dihedral rotation from the current
face's free side). Each walk closes a shell; shells are then grouped into
chambers by testing which shell enclosures contain a probe point hovering
just off each shell, so an inner shell and the outer shell wrapped around
it end up bounding the same chamber. Point membership is ray-crossing
parity against the chamber's single-sided faces.
"""
from __future__ import annotations

import hashlib
import math
from collections import OrderedDict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..geometry import (
    ensure_ccw,
    plane_box_section,
    point_polygon_distance,
    ray_triangle_hits,
)
from ..truss import PlannerConfig, TrussGraph
from .arrangement import (
    MICRO_EDGE,
    ObstacleSet,
    SourceFace,
    _box_bounds,
    build_obstacle_set,
)
from .obstacles import (
    InflatedObstacle,
    inflate_polygon,
    obstacle_polygons,
    singular_plane,
)

# membership probes walk this direction set in order until one ray crosses
# the boundary cleanly; spherical Fibonacci spacing keeps retries cheap and
# the whole test reproducible
_PROBE_DIRS = 64


def _fibonacci_directions(count: int) -> np.ndarray:
    k = np.arange(count, dtype=float)
    z = 1.0 - (2.0 * k + 1.0) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    golden = math.pi * (3.0 - math.sqrt(5.0))
    th = golden * k
    return np.stack([r * np.cos(th), r * np.sin(th), z], axis=1)


_RAY_DIRS = _fibonacci_directions(_PROBE_DIRS)

# The walk does not cross subedges below MICRO_EDGE (nor demand a partner
# there): they are point contacts between faces, not shared boundary. A
# shell such a skip happens to split is reunited by probe-signature
# grouping. Whole cells below the threshold never leave the arrangement.


class _TriSet(NamedTuple):
    """Fan triangulation of a batch of cells, ready for ray casting."""

    v0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    nrm: np.ndarray  # unit normals
    big: np.ndarray  # wide enough that an in-plane ray is worth a retry


def _triangulate(obs: ObstacleSet, cell_ids) -> _TriSet:
    v0, v1, v2, nrm, big = [], [], [], [], []
    for ci in cell_ids:
        coords = obs.cell_coords(ci)
        for i in range(1, len(coords) - 1):
            a, b, c = coords[0], coords[i], coords[i + 1]
            cr = np.cross(b - a, c - a)
            nn = float(np.linalg.norm(cr))
            if nn < 1e-12:
                continue
            v0.append(a)
            v1.append(b)
            v2.append(c)
            nrm.append(cr / nn)
            big.append(nn > 1e-9)
    if not v0:
        empty = np.empty((0, 3))
        return _TriSet(empty, empty, empty, empty.copy(), np.empty(0, dtype=bool))
    return _TriSet(
        np.array(v0), np.array(v1), np.array(v2),
        np.array(nrm), np.array(big, dtype=bool),
    )


def _cast_counts(q: np.ndarray, d: np.ndarray, tri: _TriSet):
    """One parity ray: (strict crossing mask, ambiguous?, on the surface?).

    Ambiguous means the ray grazed a triangle edge or slid inside a face
    plane, so the crossing count cannot be trusted and the caller should
    try another direction.
    """
    _, t, u, v, det = ray_triangle_hits(q, d, tri.v0, tri.v1, tri.v2)
    w = 1.0 - u - v
    transversal = np.abs(det) > 1e-12
    near_bary = (u >= -1e-6) & (v >= -1e-6) & (w >= -1e-6)
    on_surface = bool(np.any(transversal & (np.abs(t) <= 1e-9) & near_bary))
    ahead = transversal & (t > 1e-9)
    strict = ahead & (u > 1e-9) & (v > 1e-9) & (w > 1e-9)
    graze = bool(
        np.any(ahead & ~strict & (u >= -1e-9) & (v >= -1e-9) & (w >= -1e-9))
    )
    gap = np.abs(np.einsum("ij,ij->i", q - tri.v0, tri.nrm))
    slide = bool(np.any(~transversal & tri.big & (gap <= 1e-9)))
    return strict, graze or slide, on_surface


def _trace_boundary(obs: ObstacleSet, start: tuple[int, int]) -> frozenset:
    """Close one boundary shell from an oriented face by Algorithm-style BFS.

    At every directed edge of every visited face the walk turns onto the
    innermost successor: the face reached first when sweeping a half-plane
    from the current face about the edge, rotating toward the free side.
    The successor relation is mutual, so the result is a closed shell.
    """
    cells = obs.cells
    gn = obs.group_normals
    verts = obs.verts
    seen = {start}
    queue: deque[tuple[int, int]] = deque([start])
    while queue:
        ci, s = queue.popleft()
        cell = cells[ci]
        ng = gn[cell.group]
        n_free = s * ng
        loop = cell.loop
        k = len(loop)
        for i in range(k):
            va, vb = loop[i], loop[(i + 1) % k]
            d = verts[vb] - verts[va]
            dl = float(np.linalg.norm(d))
            if dl < MICRO_EDGE:
                continue
            d = d / dl
            w_out = np.cross(d, ng)
            wl = float(np.linalg.norm(w_out))
            if wl < 1e-9:
                continue
            w_out = w_out / wl
            key = (va, vb) if va < vb else (vb, va)
            rel_me = 1 if va == key[0] else -1
            best = None
            for cj, rel_j in obs.adjacency[key]:
                w_in = np.cross(gn[cells[cj].group], d) * float(rel_j * rel_me)
                wn = float(np.linalg.norm(w_in))
                if wn < 1e-9:
                    continue
                w_in = w_in / wn
                sin_t = float(n_free @ w_in)
                cos_t = -float(w_out @ w_in)
                th = math.atan2(sin_t, cos_t)
                if th <= 1e-9:
                    th += 2.0 * math.pi
                # free-side normal the successor must have to face back into
                # the swept wedge
                n_req = -(sin_t * w_out + cos_t * n_free)
                align = float(n_req @ gn[cells[cj].group])
                if abs(align) < 0.9:
                    raise RuntimeError("boundary frame degenerated at a welded edge")
                sj = 1 if align > 0 else -1
                if (cj, sj) == (ci, s):
                    continue
                cand = (th, cj, sj)
                if best is None or cand < best:
                    best = cand
            if best is None:
                raise RuntimeError(
                    "open boundary: free face edge has no successor "
                    f"(cell {ci} side {s} edge {verts[va]}..{verts[vb]})"
                )
            _, cj, sj = best
            nxt_cell = cells[cj]
            if not (nxt_cell.free_pos if sj > 0 else nxt_cell.free_neg):
                raise RuntimeError(
                    "boundary walk reached a blocked face side "
                    f"(cell {ci} side {s} -> cell {cj} side {sj}, "
                    f"edge {verts[va]}..{verts[vb]})"
                )
            nxt = (cj, sj)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return frozenset(seen)


def _probe_point(obs: ObstacleSet, ci: int, s: int, shield: _TriSet):
    """A point hovering just off a face's free side, clear of all surfaces.

    Casts along the free normal to find the nearest surface and stops at
    half that distance (capped). None when the face is too pinched to fit
    a probe, in which case the caller tries another face of the shell.
    """
    cen = np.asarray(obs.cells[ci].centroid, dtype=float)
    d = s * obs.cell_normal(ci)
    _, t, u, v, det = ray_triangle_hits(cen, d, shield.v0, shield.v1, shield.v2)
    w = 1.0 - u - v
    near = (
        (np.abs(det) > 1e-12) & (t > 1e-9)
        & (u >= -1e-9) & (v >= -1e-9) & (w >= -1e-9)
    )
    tmin = float(t[near].min()) if bool(np.any(near)) else math.inf
    eps = min(0.05, 0.5 * tmin)
    if eps <= 1e-9:
        return None
    p = cen + eps * d
    if np.any(p <= obs.box_lo) or np.any(p >= obs.box_hi):
        return None
    return p


def _parity_sig(q: np.ndarray, tris: _TriSet, slices) -> tuple[int, ...]:
    """Which shell enclosures contain q: one crossing-parity bit per slice."""
    for d in _RAY_DIRS:
        strict, ambiguous, on_surface = _cast_counts(q, d, tris)
        if ambiguous or on_surface:
            continue
        return tuple(int(strict[a:b].sum()) % 2 for a, b in slices)
    raise RuntimeError("shell-grouping probe was ambiguous in every direction")


class EnclosedSubspace:
    """One chamber of the free space, identified by its boundary faces.

    ``faces`` holds (cell index, side) pairs; the side's normal points into
    the chamber. Cells present with both sides are interior sheets the
    chamber wraps around; they block contact but do not separate it, so
    membership parity is computed against the single-sided faces only.
    """

    __slots__ = (
        "obs", "faces", "face_set", "seed", "extent_lo", "extent_hi",
        "_parity", "_membranes",
    )

    def __init__(self, obs: ObstacleSet, faces, seed):
        self.obs = obs
        self.faces = tuple(sorted(faces))
        self.face_set = frozenset(self.faces)
        sides: dict[int, set[int]] = {}
        for ci, s in self.faces:
            sides.setdefault(ci, set()).add(s)
        self._membranes = tuple(
            sorted(ci for ci, ss in sides.items() if len(ss) == 2)
        )
        self._parity = _triangulate(
            obs, sorted(ci for ci, ss in sides.items() if len(ss) == 1)
        )
        ids = sorted({vid for ci in sides for vid in obs.cells[ci].loop})
        pts = obs.verts[ids]
        self.extent_lo = pts.min(axis=0)
        self.extent_hi = pts.max(axis=0)
        self.seed = np.asarray(seed, dtype=float)

    @property
    def cells(self) -> tuple[int, ...]:
        return tuple(sorted({ci for ci, _ in self.faces}))

    def contains(self, q) -> bool:
        """True when q is strictly interior to the chamber."""
        q = np.asarray(q, dtype=float)
        if np.any(q < self.extent_lo - 1e-12) or np.any(q > self.extent_hi + 1e-12):
            return False
        for ci in self._membranes:
            d = point_polygon_distance(
                q, self.obs.cell_coords(ci), self.obs.cell_normal(ci)
            )
            if d <= 1e-9:
                return False
        if len(self._parity.v0) == 0:
            return False
        for d in _RAY_DIRS:
            strict, ambiguous, on_surface = _cast_counts(q, d, self._parity)
            if on_surface:
                return False
            if ambiguous:
                continue
            return int(strict.sum()) % 2 == 1
        raise RuntimeError("membership ray was ambiguous in every direction")

    def sample(self, rng: np.random.Generator, count: int = 1,
               max_tries: int | None = None) -> np.ndarray:
        """Uniform interior points by rejection inside the extent box."""
        tries = max_tries if max_tries is not None else max(1000, 400 * count)
        out: list[np.ndarray] = []
        span_lo, span_hi = self.extent_lo, self.extent_hi
        for _ in range(tries):
            p = rng.uniform(span_lo, span_hi)
            if self.contains(p):
                out.append(p)
                if len(out) == count:
                    return np.array(out)
        raise RuntimeError(
            f"sampled {len(out)}/{count} interior points in {tries} tries"
        )


def _build_subspaces(
    obs: ObstacleSet, floor: float | None = None
) -> list[EnclosedSubspace]:
    """All chambers of the complex, in deterministic shell-sweep order.

    ``floor`` marks a full-width separator plane (the ground): nothing below
    it is free space, so faces under it never seed a shell walk. The ground
    face spans the whole box section, hence no shell mixes the two sides.
    """
    free = sorted(obs.free_oriented_faces())
    if not free:
        return []
    comps: list[tuple[tuple[int, int], ...]] = []
    assigned: set[tuple[int, int]] = set()
    for of in free:
        if of in assigned:
            continue
        if floor is not None and obs.cells[of[0]].centroid[2] < floor - 1e-9:
            continue
        comp = _trace_boundary(obs, of)
        if comp & assigned:
            raise RuntimeError("boundary shells overlap: complex is inconsistent")
        assigned.update(comp)
        comps.append(tuple(sorted(comp)))

    shield = _triangulate(obs, sorted({ci for ci, _ in assigned}))
    probes: list[np.ndarray] = []
    for comp in comps:
        probe = None
        for ci, s in comp:
            probe = _probe_point(obs, ci, s, shield)
            if probe is not None:
                break
        if probe is None:
            raise RuntimeError("no interior witness fits beside a boundary shell")
        probes.append(probe)

    # signature = which shell enclosures hold the probe; equal signatures
    # mean the shells bound one and the same chamber (nested boundaries)
    parts = [
        _triangulate(obs, sorted({ci for ci, _ in comp if _single_sided(comp, ci)}))
        for comp in comps
    ]
    slices = []
    at = 0
    for part in parts:
        slices.append((at, at + len(part.v0)))
        at += len(part.v0)
    cat = _TriSet(
        np.concatenate([p.v0 for p in parts]) if at else np.empty((0, 3)),
        np.concatenate([p.v1 for p in parts]) if at else np.empty((0, 3)),
        np.concatenate([p.v2 for p in parts]) if at else np.empty((0, 3)),
        np.concatenate([p.nrm for p in parts]) if at else np.empty((0, 3)),
        np.concatenate([p.big for p in parts]) if at else np.empty(0, dtype=bool),
    )

    grouped: "OrderedDict[tuple[int, ...], list[int]]" = OrderedDict()
    for idx, probe in enumerate(probes):
        sig = _parity_sig(probe, cat, slices)
        grouped.setdefault(sig, []).append(idx)

    out = []
    for members in grouped.values():
        faces: set[tuple[int, int]] = set()
        for idx in members:
            faces.update(comps[idx])
        out.append(EnclosedSubspace(obs, faces, probes[members[0]]))
    return out


def _single_sided(comp, ci: int) -> bool:
    return ((ci, 1) in comp) != ((ci, -1) in comp)


def boundary_search(start: int, obs: ObstacleSet, from_point) -> EnclosedSubspace:
    """Chamber bounded by cell ``start`` on the side facing ``from_point``."""
    q = np.asarray(from_point, dtype=float)
    cell = obs.cells[start]
    ng = obs.cell_normal(start)
    side = 1 if float((q - np.asarray(cell.centroid)) @ ng) >= 0.0 else -1
    if not (cell.free_pos if side > 0 else cell.free_neg):
        raise ValueError("from_point lies on a blocked side of the start cell")
    for sub in _build_subspaces(obs):
        if (start, side) in sub.face_set:
            return sub
    raise RuntimeError("start face is missing from every chamber")


def contains(space: EnclosedSubspace, q) -> bool:
    """True when q is strictly inside the chamber."""
    return space.contains(q)


@dataclass(frozen=True)
class FreeSpace:
    """Every reachable chamber for one node, current chamber first."""

    obs: ObstacleSet
    subspaces: tuple[EnclosedSubspace, ...]
    node: str
    ignore: frozenset[str]

    @property
    def node_subspace(self) -> EnclosedSubspace | None:
        return self.subspaces[0] if self.subspaces else None

    def subspace_of(self, q) -> EnclosedSubspace | None:
        for sub in self.subspaces:
            if sub.contains(q):
                return sub
        return None


def singular_planes(g: TrussGraph, node: str, workspace) -> list[SourceFace]:
    """Workspace-clipped impassable plane(s) for a node, as sheet faces.

    Non-empty exactly when every neighbor of the node lies on one plane.
    """
    sp = singular_plane(g, node)
    if sp is None:
        return []
    lo, hi = _box_bounds(workspace)
    n, off = sp
    verts = plane_box_section(n, off, lo, hi)
    if len(verts) < 3:
        return []
    return [SourceFace(verts=verts, normal=n, kind="sheet", tag="flattening-plane")]


def _wall_faces(lo: np.ndarray, hi: np.ndarray) -> list[SourceFace]:
    out = []
    names = "xyz"
    eye = np.eye(3)
    for ax in range(3):
        for sgn, off, side in ((1.0, lo[ax], "lo"), (-1.0, hi[ax], "hi")):
            n = sgn * eye[ax]
            verts = plane_box_section(eye[ax], float(off), lo, hi)
            if len(verts) < 3:
                continue
            out.append(
                SourceFace(
                    verts=ensure_ccw(verts, n),
                    normal=n,
                    kind="wall",
                    tag=f"wall-{names[ax]}-{side}",
                )
            )
    return out


def _build_sources(
    g: TrussGraph, node: str, ignore: frozenset[str], cfg: PlannerConfig
) -> tuple[list[SourceFace], list[InflatedObstacle]]:
    """Everything that bounds the node's free space, materialized in the box."""
    lo, hi = cfg.workspace.lo_arr, cfg.workspace.hi_arr
    lam = cfg.inflate
    faces: list[SourceFace] = []
    solids: list[InflatedObstacle] = []
    for poly in obstacle_polygons(g, node, ignore):
        if lam > 0.0:
            solid = inflate_polygon(poly, lam, clamp_pullback=True)
            sid = len(solids)
            solids.append(solid)
            for patch in solid.faces:
                verts = patch.materialize(lo, hi)
                if len(verts) >= 3:
                    faces.append(
                        SourceFace(
                            verts=verts,
                            normal=np.asarray(patch.outward, dtype=float),
                            kind="solid",
                            solid=sid,
                            tag=f"{poly.neighbor}/{poly.member}/{patch.label}",
                        )
                    )
        else:
            verts = poly.materialize(lo, hi)
            if len(verts) >= 3:
                faces.append(
                    SourceFace(
                        verts=verts,
                        normal=poly.plane_normal,
                        kind="sheet",
                        tag=f"{poly.neighbor}/{poly.member}",
                    )
                )
    sp = singular_plane(g, node, ignore)
    if sp is not None:
        n, off = sp
        verts = plane_box_section(n, off, lo, hi)
        if len(verts) >= 3:
            faces.append(
                SourceFace(verts=verts, normal=n, kind="sheet", tag="flattening-plane")
            )
    if lo[2] < g.ground_height - 1e-9:
        up = np.array([0.0, 0.0, 1.0])
        verts = plane_box_section(up, g.ground_height, lo, hi)
        if len(verts) >= 3:
            faces.append(SourceFace(verts=verts, normal=up, kind="wall", tag="ground"))
    faces.extend(_wall_faces(lo, hi))
    return faces, solids


_CACHE: "OrderedDict[str, tuple[ObstacleSet, tuple[EnclosedSubspace, ...]]]" = (
    OrderedDict()
)
_CACHE_CAP = 64


def clear_free_space_cache() -> None:
    _CACHE.clear()


def _fingerprint(
    g: TrussGraph, node: str, ignore: frozenset[str], cfg: PlannerConfig
) -> str:
    # the moving node's own position is deliberately left out: the chamber
    # layout does not depend on it, only the ordering does
    moving = {node} | set(ignore)
    box = cfg.workspace
    parts = [node, ",".join(sorted(ignore)), float(cfg.inflate).hex()]
    parts += [float(c).hex() for c in (*box.lo, *box.hi, g.ground_height)]
    for mid in g.member_ids:
        a, b = g.member_end_ids(mid)
        parts.append(f"{mid}:{a}:{b}")
    for name in sorted(g.node_ids):
        if name in moving:
            continue
        parts.append(name)
        parts.extend(float(c).hex() for c in g.position(name))
    return hashlib.sha256("|".join(parts).encode()).hexdigest()


def free_space(
    g: TrussGraph,
    node: str,
    cfg: PlannerConfig,
    ignore: frozenset[str] | set[str] = frozenset(),
) -> FreeSpace:
    """All above-ground chambers for a node, the node's own chamber first.

    Results are cached on the static geometry, so moving the node (or its
    ignored partners) and asking again is cheap.
    """
    ign = frozenset(ignore)
    key = _fingerprint(g, node, ign, cfg)
    hit = _CACHE.get(key)
    if hit is None:
        faces, solids = _build_sources(g, node, ign, cfg)
        obs = build_obstacle_set(
            faces, solids, cfg.workspace.lo_arr, cfg.workspace.hi_arr
        )
        subs = _build_subspaces(obs, floor=g.ground_height)
        above = tuple(
            s for s in subs if s.seed[2] > g.ground_height - 1e-9
        )
        _CACHE[key] = (obs, above)
        while len(_CACHE) > _CACHE_CAP:
            _CACHE.popitem(last=False)
        hit = _CACHE[key]
    else:
        _CACHE.move_to_end(key)
    obs, above = hit
    return FreeSpace(
        obs=obs,
        subspaces=_node_first(above, g.position(node)),
        node=node,
        ignore=ign,
    )


def _node_first(
    subs: tuple[EnclosedSubspace, ...], q: np.ndarray
) -> tuple[EnclosedSubspace, ...]:
    if not subs:
        return ()
    for i, sub in enumerate(subs):
        if sub.contains(q):
            return (sub, *subs[:i], *subs[i + 1 :])
    # node sits on a boundary (or inside grown obstacle material): fall back
    # to the chamber owning the nearest face on the node's side of it
    best: tuple[float, int] | None = None
    for i, sub in enumerate(subs):
        for ci, s in sub.faces:
            cen = np.asarray(sub.obs.cells[ci].centroid)
            ng = sub.obs.cell_normal(ci)
            if (1 if float((q - cen) @ ng) >= 0.0 else -1) != s:
                continue
            dist = point_polygon_distance(q, sub.obs.cell_coords(ci), ng)
            if best is None or dist < best[0]:
                best = (dist, i)
    if best is None:
        return subs
    i = best[1]
    return (subs[i], *subs[:i], *subs[i + 1 :])


def enumerate_subspaces(
    g: TrussGraph, node: str, cfg: PlannerConfig
) -> list[EnclosedSubspace]:
    """Every above-ground chamber for the node; the node's own chamber first."""
    return list(free_space(g, node, cfg).subspaces)


def export_boundary_off(space: EnclosedSubspace, path) -> None:
    """Write the chamber boundary as an ASCII OFF polygon mesh.

    Faces are wound counterclockwise about their outward normals (pointing
    away from the chamber), the usual convention for closed meshes.
    """
    obs = space.obs
    used = sorted({vid for ci, _ in space.faces for vid in obs.cells[ci].loop})
    remap = {vid: i for i, vid in enumerate(used)}
    lines = ["OFF", f"{len(used)} {len(space.faces)} 0"]
    for vid in used:
        x, y, z = obs.verts[vid]
        lines.append(f"{x:.9g} {y:.9g} {z:.9g}")
    for ci, s in space.faces:
        loop = obs.cells[ci].loop
        ordered = tuple(reversed(loop)) if s > 0 else loop
        lines.append(f"{len(ordered)} " + " ".join(str(remap[v]) for v in ordered))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
