"""Truss graph model, planner configuration, and constraint validation.

A truss is an undirected simple graph: nodes are spherical joints positioned
in R^3, members are prismatic actuators joining node pairs. Instances are
immutable snapshots; every mutation constructs a new graph. Members carry
stable integer ids that survive split/merge surgery, which is what makes
"the member multiset is conserved" checkable.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from trussmotion.geometry import (
    convex_hull_2d,
    point_hull_margin_2d,
    segment_distance_batch,
)

# strictly-inside margin for the center-of-mass stability test (meters)
STABILITY_MARGIN = 1e-9


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Axis-aligned box, the hard outer boundary of every node workspace."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if not np.all(hi > lo):
            raise ValueError("box must have positive extent on every axis")

    @property
    def lo_arr(self) -> np.ndarray:
        return np.asarray(self.lo, dtype=float)

    @property
    def hi_arr(self) -> np.ndarray:
        return np.asarray(self.hi, dtype=float)

    def contains(self, points, margin: float = 0.0) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.all(p >= self.lo_arr - margin, axis=1) & np.all(
            p <= self.hi_arr + margin, axis=1
        )
        return ok if ok.size > 1 else ok[0]

    def diagonal(self) -> float:
        return float(np.linalg.norm(self.hi_arr - self.lo_arr))

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        return rng.uniform(self.lo_arr, self.hi_arr, size=(n, 3))


@dataclass(frozen=True)
class PlannerConfig:
    """All tunables shared by the planners.

    Length-like fields are meters, angles radians. split_step and split_max
    default to clearance/2 and 2*clearance when left unset.
    """

    len_min: float = 0.5          # member length floor
    len_max: float = 5.0          # member length ceiling
    clearance: float = 0.1       # min distance between non-adjacent members
    angle_min: float = 0.2       # min angle between members sharing a node
    manip_min: float = 0.1       # manipulability floor for the moving group
    inflate: float = 0.1         # obstacle growing size (node + member radii)
    workspace: Box = Box((-10.0, -10.0, -10.0), (10.0, 10.0, 10.0))
    rrt_step: float = 0.3        # RRT steering step
    check_resolution: float = 0.05   # sub-state spacing for constraint checks
    sample_min_dist: float = 1.0     # d_min between topology samples
    split_step: Optional[float] = None   # placement step when separating halves
    split_max: Optional[float] = None    # max half separation to try
    ground_tol: float = 1e-3     # |z - ground| threshold for support nodes
    sample_iter_factor: int = 5  # K = factor * N_max iterations per subspace

    def __post_init__(self):
        for name in ("len_min", "len_max", "clearance", "angle_min", "inflate",
                     "rrt_step", "check_resolution", "sample_min_dist", "ground_tol"):
            if getattr(self, name) <= 0 and name != "inflate":
                raise ValueError(f"{name} must be strictly positive")
        if self.inflate < 0:
            raise ValueError("inflate must be nonnegative")
        if not self.len_min < self.len_max:
            raise ValueError("len_min must be < len_max")
        if not 0.0 < self.manip_min < 1.0:
            raise ValueError("manip_min must lie in (0, 1)")
        if self.split_step is None:
            object.__setattr__(self, "split_step", self.clearance / 2.0)
        if self.split_max is None:
            object.__setattr__(self, "split_max", 2.0 * self.clearance)
        if self.sample_iter_factor < 1:
            raise ValueError("sample_iter_factor must be >= 1")

    def to_dict(self) -> dict:
        return {
            "len_min": self.len_min,
            "len_max": self.len_max,
            "clearance": self.clearance,
            "angle_min": self.angle_min,
            "manip_min": self.manip_min,
            "inflate": self.inflate,
            "workspace": {"min": list(self.workspace.lo), "max": list(self.workspace.hi)},
            "rrt_step": self.rrt_step,
            "check_resolution": self.check_resolution,
            "sample_min_dist": self.sample_min_dist,
            "split_step": self.split_step,
            "split_max": self.split_max,
            "ground_tol": self.ground_tol,
            "sample_iter_factor": self.sample_iter_factor,
        }

    @staticmethod
    def from_dict(d: Mapping) -> "PlannerConfig":
        d = dict(d)
        ws = d.pop("workspace")
        return PlannerConfig(workspace=Box(tuple(ws["min"]), tuple(ws["max"])), **d)


# ---------------------------------------------------------------------------
# truss graph
# ---------------------------------------------------------------------------

class TrussGraph:
    """Immutable truss snapshot: node positions plus id-stable members."""

    __slots__ = ("_ids", "_index", "_pos", "_ends", "_ground", "_cache")

    def __init__(self, nodes: Mapping[str, Sequence[float]],
                 member_ends: Mapping[int, tuple[str, str]],
                 ground_height: float = 0.0):
        ids = tuple(sorted(nodes))
        pos = np.array([nodes[i] for i in ids], dtype=float).reshape(len(ids), 3)
        pos.setflags(write=False)
        ends = {}
        seen_pairs = set()
        for mid, (a, b) in member_ends.items():
            if a == b:
                raise ValueError(f"member {mid} is a self-loop at {a}")
            if a not in nodes or b not in nodes:
                raise ValueError(f"member {mid} references unknown node")
            key = (a, b) if a < b else (b, a)
            if key in seen_pairs:
                raise ValueError(f"duplicate member between {a} and {b}")
            seen_pairs.add(key)
            ends[int(mid)] = key
        self._ids = ids
        self._index = {nid: k for k, nid in enumerate(ids)}
        self._pos = pos
        self._ends = ends
        self._ground = float(ground_height)
        self._cache: dict = {}

    # -- construction ------------------------------------------------------

    @staticmethod
    def create(nodes: Mapping[str, Sequence[float]],
               members: Iterable[tuple[str, str]],
               ground_height: float = 0.0) -> "TrussGraph":
        """Build a graph assigning member ids 0..m-1 in listed order."""
        ends = {i: (a, b) for i, (a, b) in enumerate(members)}
        return TrussGraph(nodes, ends, ground_height)

    # -- basic accessors ----------------------------------------------------

    @property
    def node_ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def member_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._ends))

    @property
    def ground_height(self) -> float:
        return self._ground

    def position(self, node: str) -> np.ndarray:
        return self._pos[self._index[node]]

    def positions(self, nodes: Optional[Sequence[str]] = None) -> np.ndarray:
        if nodes is None:
            return self._pos
        return self._pos[[self._index[n] for n in nodes]]

    def member_end_ids(self, mid: int) -> tuple[str, str]:
        return self._ends[mid]

    def member_segment(self, mid: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self._ends[mid]
        return self.position(a), self.position(b)

    def member_length(self, mid: int) -> float:
        a, b = self.member_segment(mid)
        return float(np.linalg.norm(b - a))

    def members_of(self, node: str) -> tuple[int, ...]:
        key = ("members_of", node)
        if key not in self._cache:
            self._cache[key] = tuple(
                mid for mid, (a, b) in sorted(self._ends.items()) if node in (a, b)
            )
        return self._cache[key]

    def neighbors(self, node: str) -> tuple[str, ...]:
        return tuple(
            b if a == node else a
            for mid in self.members_of(node)
            for a, b in [self._ends[mid]]
        )

    def other_end(self, mid: int, node: str) -> str:
        a, b = self._ends[mid]
        if node == a:
            return b
        if node == b:
            return a
        raise KeyError(f"node {node} is not an end of member {mid}")

    def degree(self, node: str) -> int:
        return len(self.members_of(node))

    def member_pairs(self) -> dict[int, tuple[str, str]]:
        return dict(self._ends)

    # -- derived geometry ----------------------------------------------------

    def segments_array(self, mids: Optional[Sequence[int]] = None) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint arrays (M,3),(M,3) for the given (default all) members."""
        if mids is None:
            mids = self.member_ids
        a = np.array([self.position(self._ends[m][0]) for m in mids], float).reshape(len(mids), 3)
        b = np.array([self.position(self._ends[m][1]) for m in mids], float).reshape(len(mids), 3)
        return a, b

    def nonadjacent_member_pairs(self) -> list[tuple[int, int]]:
        key = "nonadj"
        if key not in self._cache:
            pairs = []
            for x, y in itertools.combinations(self.member_ids, 2):
                if not set(self._ends[x]) & set(self._ends[y]):
                    pairs.append((x, y))
            self._cache[key] = pairs
        return self._cache[key]

    def scene_hash(self) -> str:
        """Stable content hash over ids, exact positions, members, ground."""
        payload = {
            "nodes": {n: [float(x).hex() for x in self.position(n)] for n in self._ids},
            "members": [[m, *self._ends[m]] for m in self.member_ids],
            "ground": float(self._ground).hex(),
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    # -- snapshots ------------------------------------------------------------

    def _nodes_dict(self) -> dict[str, np.ndarray]:
        return {n: self._pos[k].copy() for n, k in self._index.items()}

    def with_node_at(self, node: str, pos) -> "TrussGraph":
        nodes = self._nodes_dict()
        if node not in nodes:
            raise KeyError(node)
        nodes[node] = np.asarray(pos, dtype=float)
        return TrussGraph(nodes, self._ends, self._ground)

    def with_nodes_at(self, updates: Mapping[str, Sequence[float]]) -> "TrussGraph":
        nodes = self._nodes_dict()
        for node, pos in updates.items():
            if node not in nodes:
                raise KeyError(node)
            nodes[node] = np.asarray(pos, dtype=float)
        return TrussGraph(nodes, self._ends, self._ground)

    def fresh_node_id(self) -> str:
        nums = [int(m.group(1)) for n in self._ids if (m := re.fullmatch(r"v(\d+)", n))]
        return f"v{max(nums, default=-1) + 1}"

    def split_node(self, node: str, keep_mids: Iterable[int], move_mids: Iterable[int],
                   pos_keep, pos_new) -> tuple["TrussGraph", str]:
        """Split `node` into two: the original id keeps keep_mids at pos_keep,
        a fresh node takes move_mids at pos_new. Returns (graph, new id)."""
        keep, move = set(keep_mids), set(move_mids)
        incident = set(self.members_of(node))
        if keep | move != incident or keep & move:
            raise ValueError("keep/move member sets must partition the node's members")
        new_id = self.fresh_node_id()
        nodes = self._nodes_dict()
        nodes[node] = np.asarray(pos_keep, dtype=float)
        nodes[new_id] = np.asarray(pos_new, dtype=float)
        ends = dict(self._ends)
        for mid in move:
            a, b = ends[mid]
            ends[mid] = (new_id, b) if a == node else (a, new_id)
        return TrussGraph(nodes, ends, self._ground), new_id

    def merge_nodes(self, keep: str, gone: str, pos) -> "TrussGraph":
        """Reattach all of `gone`'s members to `keep` (placed at pos), drop `gone`."""
        if keep == gone:
            raise ValueError("cannot merge a node with itself")
        keep_nbrs = set(self.neighbors(keep))
        for nbr in self.neighbors(gone):
            if nbr == keep:
                raise ValueError("merge would create a self-loop")
            if nbr in keep_nbrs:
                raise ValueError(f"merge would duplicate member to {nbr}")
        nodes = self._nodes_dict()
        nodes[keep] = np.asarray(pos, dtype=float)
        del nodes[gone]
        ends = {}
        for mid, (a, b) in self._ends.items():
            ends[mid] = (keep if a == gone else a, keep if b == gone else b)
        return TrussGraph(nodes, ends, self._ground)

    def __repr__(self) -> str:
        return f"TrussGraph({len(self._ids)} nodes, {len(self._ends)} members)"


# ---------------------------------------------------------------------------
# mass, support, stability
# ---------------------------------------------------------------------------

def center_of_mass(g: TrussGraph, node_masses: Optional[Mapping[str, float]] = None) -> np.ndarray:
    """Mass-weighted center: uniform-density rods (mass ~ length) plus
    optional lumped node masses (default zero)."""
    if not g.member_ids:
        raise ValueError("truss has no members")
    a, b = g.segments_array()
    lengths = np.linalg.norm(b - a, axis=1)
    moments = ((a + b) / 2.0 * lengths[:, None]).sum(axis=0)
    total = lengths.sum()
    if node_masses:
        for node, m in node_masses.items():
            moments += m * g.position(node)
            total += m
    if total <= 0:
        raise ValueError("total mass is zero")
    return moments / total


def support_nodes(g: TrussGraph, cfg: PlannerConfig) -> set[str]:
    """Nodes resting on the ground: |z - ground_height| <= ground_tol."""
    z = g.positions()[:, 2]
    mask = np.abs(z - g.ground_height) <= cfg.ground_tol
    return {n for n, hit in zip(g.node_ids, mask) if hit}


def support_hull(g: TrussGraph, cfg: PlannerConfig):
    """(ordered support node ids, hull xy vertices) or None when unsupported."""
    sup = sorted(support_nodes(g, cfg))
    if len(sup) < 3:
        return None
    pts = g.positions(sup)[:, :2]
    try:
        idx = convex_hull_2d(pts)
    except ValueError:
        return None
    return [sup[i] for i in idx], pts[idx]


def stability_check(g: TrussGraph, cfg: PlannerConfig,
                    margin: float = STABILITY_MARGIN) -> bool:
    """True iff >= 3 support nodes exist and the center of mass projects
    strictly inside their convex hull (boundary counts as unstable)."""
    hull = support_hull(g, cfg)
    if hull is None:
        return False
    com = center_of_mass(g)[:2]
    return point_hull_margin_2d(com, hull[1]) > margin


def incident_angle(g: TrussGraph, apex: str, n1: str, n2: str) -> float:
    """Angle at `apex` between members toward n1 and n2, in [0, pi]."""
    for other in (n1, n2):
        if other not in g.neighbors(apex):
            raise ValueError(f"({apex}, {other}) is not a member")
    u = g.position(n1) - g.position(apex)
    v = g.position(n2) - g.position(apex)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu < 1e-12 or nv < 1e-12:
        raise ValueError("zero-length member")
    return float(np.arccos(np.clip(u @ v / (nu * nv), -1.0, 1.0)))


def min_incident_angle(g: TrussGraph, nodes: Optional[Iterable[str]] = None) -> float:
    """Smallest member-member angle over the given apexes (default: all)."""
    best = np.pi
    for node in nodes if nodes is not None else g.node_ids:
        nbrs = g.neighbors(node)
        if len(nbrs) < 2:
            continue
        vecs = g.positions(nbrs) - g.position(node)
        norms = np.linalg.norm(vecs, axis=1)
        norms = np.where(norms < 1e-12, 1.0, norms)
        unit = vecs / norms[:, None]
        gram = np.clip(unit @ unit.T, -1.0, 1.0)
        iu = np.triu_indices(len(nbrs), k=1)
        if iu[0].size:
            best = min(best, float(np.arccos(gram[iu]).min()))
    return best


def min_member_clearance(g: TrussGraph) -> float:
    """Smallest distance over all non-adjacent member pairs (inf if none)."""
    pairs = g.nonadjacent_member_pairs()
    if not pairs:
        return float("inf")
    a, b = g.segments_array()
    mid_row = {m: i for i, m in enumerate(g.member_ids)}
    xi = np.array([mid_row[x] for x, _ in pairs])
    yi = np.array([mid_row[y] for _, y in pairs])
    d = segment_distance_batch(a[xi], b[xi], a[yi], b[yi])
    return float(d.min())


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str          # degree | length | clearance | angle | support-count | com-outside | below-ground
    subject: tuple     # node ids / member ids involved
    value: float
    limit: float

    def __str__(self) -> str:
        return f"{self.kind}{self.subject}: {self.value:.6g} vs limit {self.limit:.6g}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(str(v) for v in self.violations)


def validate_truss(g: TrussGraph, cfg: PlannerConfig) -> ValidationReport:
    """Report every violated constraint; never raises on bad trusses."""
    rep = ValidationReport()

    for node in g.node_ids:
        d = g.degree(node)
        if d < 3:
            rep.violations.append(Violation("degree", (node,), d, 3))

    z = g.positions()[:, 2]
    for node, zz in zip(g.node_ids, z):
        if zz < g.ground_height - cfg.ground_tol:
            rep.violations.append(Violation("below-ground", (node,), zz, g.ground_height))

    for mid in g.member_ids:
        ln = g.member_length(mid)
        if ln < cfg.len_min or ln > cfg.len_max:
            rep.violations.append(
                Violation("length", (mid,), ln, cfg.len_min if ln < cfg.len_min else cfg.len_max)
            )

    pairs = g.nonadjacent_member_pairs()
    if pairs:
        a, b = g.segments_array()
        mid_row = {m: i for i, m in enumerate(g.member_ids)}
        xi = np.array([mid_row[x] for x, _ in pairs])
        yi = np.array([mid_row[y] for _, y in pairs])
        dists = segment_distance_batch(a[xi], b[xi], a[yi], b[yi])
        for (x, y), dist in zip(pairs, dists):
            if dist < cfg.clearance:
                rep.violations.append(Violation("clearance", (x, y), float(dist), cfg.clearance))

    for node in g.node_ids:
        nbrs = g.neighbors(node)
        for i, j in itertools.combinations(range(len(nbrs)), 2):
            try:
                ang = incident_angle(g, node, nbrs[i], nbrs[j])
            except ValueError:
                rep.violations.append(Violation("length", (node,), 0.0, cfg.len_min))
                continue
            if ang < cfg.angle_min:
                rep.violations.append(
                    Violation("angle", (node, nbrs[i], nbrs[j]), ang, cfg.angle_min)
                )

    sup = support_nodes(g, cfg)
    if len(sup) < 3:
        rep.violations.append(Violation("support-count", tuple(sorted(sup)), len(sup), 3))
    else:
        hull = support_hull(g, cfg)
        if hull is None:
            rep.violations.append(Violation("support-count", tuple(sorted(sup)), len(sup), 3))
        else:
            margin = point_hull_margin_2d(center_of_mass(g)[:2], hull[1])
            if margin <= STABILITY_MARGIN:
                rep.violations.append(Violation("com-outside", tuple(hull[0]), margin, 0.0))

    return rep
