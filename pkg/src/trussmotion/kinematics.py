"""Velocity-level kinematics for a set of simultaneously controlled nodes.

Moving nodes drag their incident members. Differentiating each link vector
gives one linear relation per link between member-space velocities and node
velocities; stacking them yields mat_b @ link_rates = mat_a @ node_rates.

Two link families exist. An attachment link joins a controlled node to a
static node: its row in mat_a is the link vector itself (transposed) and its
block in mat_b is the same vector on the diagonal. A connection link joins
two controlled nodes: the relative velocity appears directly, giving a
(+I, -I) band in mat_a and an identity block in mat_b.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from trussmotion.truss import TrussGraph

# singular values below RCOND * sigma_max count as zero in pseudo-inverses
RCOND = 1e-10

_ZERO_LEN = 1e-12


@dataclass(frozen=True)
class KinematicsSystem:
    """Assembled velocity equations for one controlled-node group."""

    controlled: tuple[str, ...]
    fixed: tuple[str, ...]                     # static nodes adjacent to the group
    attach_links: tuple[tuple[str, str, int], ...]   # (controlled, static, member)
    connection_links: tuple[tuple[str, str, int], ...]  # (first, second, member)
    mat_a: np.ndarray          # (rows, 3*len(controlled))
    mat_b: np.ndarray          # (rows, 3*n_attach + 3*n_connection)

    @property
    def n_rows(self) -> int:
        return self.mat_a.shape[0]

    @property
    def controlling_members(self) -> tuple[int, ...]:
        return tuple(m for _, _, m in self.attach_links) + tuple(
            m for _, _, m in self.connection_links
        )


@dataclass(frozen=True)
class JacobianPair:
    j_ba: np.ndarray     # node velocities -> link velocities
    j_ab: np.ndarray     # link velocities -> node velocities
    sigma_min: float
    sigma_max: float

    @property
    def mu(self) -> float:
        if self.sigma_max <= 0.0:
            raise ValueError("degenerate system: sigma_max is zero")
        return self.sigma_min / self.sigma_max


def build_system(g: TrussGraph, controlled: Iterable[str]) -> KinematicsSystem:
    """Assemble the velocity equations for the given controlled nodes.

    Attachment rows are ordered by (controlled index, member id); connection
    bands follow, ordered by their sorted node-id pair.
    """
    ctrl = tuple(sorted(set(controlled)))
    if not ctrl:
        raise ValueError("controlled set is empty")
    for node in ctrl:
        if node not in g.node_ids:
            raise KeyError(node)
        if g.degree(node) == 0:
            raise ValueError(f"controlled node {node} has no members")
    col_of = {n: 3 * k for k, n in enumerate(ctrl)}
    ctrl_set = set(ctrl)

    attach: list[tuple[str, str, int]] = []
    conn: list[tuple[str, str, int]] = []
    seen_conn = set()
    for node in ctrl:
        for mid in g.members_of(node):
            other = g.other_end(mid, node)
            if other in ctrl_set:
                if mid not in seen_conn:
                    seen_conn.add(mid)
                    lo, hi = sorted((node, other))
                    conn.append((lo, hi, mid))
            else:
                attach.append((node, other, mid))
    conn.sort(key=lambda t: (t[0], t[1]))

    fixed = tuple(sorted({other for _, other, _ in attach}))
    n_att, n_conn = len(attach), len(conn)
    rows = n_att + 3 * n_conn
    mat_a = np.zeros((rows, 3 * len(ctrl)))
    mat_b = np.zeros((rows, 3 * n_att + 3 * n_conn))

    for r, (node, other, mid) in enumerate(attach):
        link = g.position(node) - g.position(other)
        if link @ link < _ZERO_LEN**2:
            raise ValueError(f"zero-length member {mid} at controlled node {node}")
        c = col_of[node]
        mat_a[r, c:c + 3] = link
        mat_b[r, 3 * r:3 * r + 3] = link

    base = n_att
    for k, (lo, hi, mid) in enumerate(conn):
        r = base + 3 * k
        # link vector runs from the later-ordered node to the earlier one,
        # so the earlier column block carries +I
        mat_a[r:r + 3, col_of[lo]:col_of[lo] + 3] = np.eye(3)
        mat_a[r:r + 3, col_of[hi]:col_of[hi] + 3] = -np.eye(3)
        cc = 3 * n_att + 3 * k
        mat_b[r:r + 3, cc:cc + 3] = np.eye(3)

    return KinematicsSystem(
        controlled=ctrl,
        fixed=fixed,
        attach_links=tuple(attach),
        connection_links=tuple(conn),
        mat_a=mat_a,
        mat_b=mat_b,
    )


def jacobians(sys: KinematicsSystem) -> JacobianPair:
    """Both least-squares Jacobians and the singular values of j_ab."""
    a, b = sys.mat_a, sys.mat_b
    sig_a = np.linalg.svd(a, compute_uv=False)
    if sig_a.size == 0 or sig_a[0] <= RCOND:
        raise ValueError("system matrix is numerically rank zero")
    j_ba = np.linalg.pinv(b, rcond=RCOND) @ a
    j_ab = np.linalg.pinv(a, rcond=RCOND) @ b
    sig = np.linalg.svd(j_ab, compute_uv=False)
    return JacobianPair(
        j_ba=j_ba,
        j_ab=j_ab,
        sigma_min=float(sig[-1]),
        sigma_max=float(sig[0]),
    )


def manipulability(g: TrussGraph, controlled: Iterable[str]) -> float:
    """sigma_min/sigma_max of the link->node Jacobian for this group."""
    return jacobians(build_system(g, controlled)).mu
