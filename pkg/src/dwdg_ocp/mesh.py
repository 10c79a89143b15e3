"""
Criss-cross triangulation of the unit square.

Each of the N x N subsquares of side 1/N is cut by both diagonals into four
congruent right isosceles triangles sharing the subsquare centre. Edges are
stored as flat arrays; `Mesh.edge(k)` gives a per-edge view when convenient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

GEOM_TOL = 1e-14


@dataclass(frozen=True)
class Edge:
    """Single-edge view into the mesh arrays.

    For an interior edge ``tplus > tminus`` and ``normal`` is the outward unit
    normal of ``tminus``. For a boundary edge ``tminus`` is None and
    ``normal`` is the outward normal of the domain.
    """

    index: int
    vertices: tuple[int, int]
    length: float
    kind: str
    tplus: int
    tminus: Optional[int]
    normal: tuple[float, float]

    @property
    def is_boundary(self) -> bool:
        return self.kind == "boundary"


class Mesh:
    """Immutable triangulation with edge connectivity.

    Attributes
    ----------
    N : int
        Subsquares per side.
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array
        Counter-clockwise vertex triples; row index is the global triangle
        number.
    edge_vertices : (ne, 2) int array
    edge_length : (ne,) float array
    edge_normal : (ne, 2) float array
    edge_tplus, edge_tminus : (ne,) int arrays
        ``edge_tminus`` is -1 on boundary edges.
    edge_local_plus, edge_local_minus : (ne, 2) int arrays
        Local node numbers (0..2) in T+ / T- of the two edge endpoints, in
        the order of ``edge_vertices``. -1 on boundary edges for T-.
    """

    def __init__(self, N: int, vertices: np.ndarray, triangles: np.ndarray):
        self.N = N
        self.vertices = vertices
        self.triangles = triangles
        self._build_geometry()
        self._build_edges()
        for arr in vars(self).values():
            if isinstance(arr, np.ndarray):
                arr.setflags(write=False)

    @property
    def h(self) -> float:
        """Mesh-size label used in the convergence tables."""
        return 1.0 / (2 * self.N)

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_vertices.shape[0]

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_tminus >= 0)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_tminus < 0)

    def _build_geometry(self):
        p = self.vertices[self.triangles]  # (nt, 3, 2)
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        self.area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        if np.any(self.area <= 0):
            raise ValueError("triangles must be counter-clockwise")
        self.centroid = p.mean(axis=1)
        # grad of barycentric coordinates: (nt, 3, 2)
        jac = np.stack([d1, d2], axis=1)  # rows are edge vectors
        jinv = np.linalg.inv(jac)  # columns give grad(lambda_1), grad(lambda_2)
        g1 = jinv[:, :, 0]
        g2 = jinv[:, :, 1]
        self.grad_bary = np.stack([-g1 - g2, g1, g2], axis=1)

    def _build_edges(self):
        nt = self.n_triangles
        tri = self.triangles
        # local edge k is opposite local vertex k
        loc_a = np.array([1, 2, 0])
        loc_b = np.array([2, 0, 1])
        va = tri[:, loc_a].ravel()
        vb = tri[:, loc_b].ravel()
        owner = np.repeat(np.arange(nt), 3)
        la = np.tile(loc_a, nt)
        lb = np.tile(loc_b, nt)

        key = np.stack([np.minimum(va, vb), np.maximum(va, vb)], axis=1)
        uniq, inverse = np.unique(key, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        ne = uniq.shape[0]

        # stable sort by (edge, owner) so the first entry is the smaller triangle
        order = np.lexsort((owner, inverse))
        counts = np.bincount(inverse, minlength=ne)
        if np.any(counts > 2):
            raise ValueError("non-manifold edge")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        first = order[starts]
        second = np.where(counts == 2, order[np.minimum(starts + 1, len(order) - 1)], -1)

        self.edge_vertices = uniq
        interior = counts == 2
        tminus = np.where(interior, owner[first], -1)
        tplus = np.where(interior, owner[second], owner[first])
        self.edge_tplus = tplus
        self.edge_tminus = tminus

        def local_nodes(slot):
            # local node numbers of (uniq[:,0], uniq[:,1]) inside the owning triangle
            a, b = va[slot], vb[slot]
            swap = a != uniq[:, 0]
            l0 = np.where(swap, lb[slot], la[slot])
            l1 = np.where(swap, la[slot], lb[slot])
            return np.stack([l0, l1], axis=1)

        plus_slot = np.where(interior, second, first)
        self.edge_local_plus = local_nodes(plus_slot)
        lm = local_nodes(np.where(interior, first, 0))
        lm[~interior] = -1
        self.edge_local_minus = lm

        x0 = self.vertices[uniq[:, 0]]
        x1 = self.vertices[uniq[:, 1]]
        t = x1 - x0
        self.edge_length = np.hypot(t[:, 0], t[:, 1])
        n = np.stack([t[:, 1], -t[:, 0]], axis=1) / self.edge_length[:, None]
        # orient outward from T- (interior) or from the single neighbour (boundary)
        ref = np.where(interior, tminus, tplus)
        mid = 0.5 * (x0 + x1)
        flip = np.einsum("ij,ij->i", n, mid - self.centroid[ref]) < 0
        n[flip] *= -1
        n[np.abs(n) < GEOM_TOL] = 0.0
        self.edge_normal = n

        self.triangle_edges = np.empty((nt, 3), dtype=np.int64)
        self.triangle_edges[owner, np.tile(np.arange(3), nt)] = inverse

    def edge(self, k: int) -> Edge:
        if not 0 <= k < self.n_edges:
            raise IndexError(f"edge {k} out of range")
        tm = int(self.edge_tminus[k])
        return Edge(
            index=k,
            vertices=(int(self.edge_vertices[k, 0]), int(self.edge_vertices[k, 1])),
            length=float(self.edge_length[k]),
            kind="interior" if tm >= 0 else "boundary",
            tplus=int(self.edge_tplus[k]),
            tminus=tm if tm >= 0 else None,
            normal=(float(self.edge_normal[k, 0]), float(self.edge_normal[k, 1])),
        )

    @property
    def edges(self) -> list[Edge]:
        return [self.edge(k) for k in range(self.n_edges)]

    def dump(self) -> str:
        """Plain-text dump for debugging."""
        lines = ["vertices:"]
        lines += [f"{x!r} {y!r}" for x, y in self.vertices]
        lines.append("triangles:")
        lines += [f"{i} {j} {k}" for i, j, k in self.triangles]
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return (f"Mesh(N={self.N}, triangles={self.n_triangles}, "
                f"vertices={self.n_vertices}, edges={self.n_edges})")


def build_crisscross(N: int) -> Mesh:
    """Criss-cross mesh of [0,1]^2 with N subsquares per side.

    Triangles are numbered row-major over subsquares, then south, east,
    north, west within a subsquare.
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    g = np.arange(N + 1) / N
    gx, gy = np.meshgrid(g, g)  # gy varies along rows -> index j*(N+1)+i
    corners = np.stack([gx.ravel(), gy.ravel()], axis=1)
    c = (np.arange(N) + 0.5) / N
    cx, cy = np.meshgrid(c, c)
    centres = np.stack([cx.ravel(), cy.ravel()], axis=1)
    vertices = np.vstack([corners, centres])

    j, i = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    i = i.ravel()
    j = j.ravel()
    bl = j * (N + 1) + i
    br = bl + 1
    tl = bl + (N + 1)
    tr = tl + 1
    ctr = (N + 1) ** 2 + j * N + i
    tris = np.stack([
        np.stack([bl, br, ctr], axis=1),  # south
        np.stack([br, tr, ctr], axis=1),  # east
        np.stack([tr, tl, ctr], axis=1),  # north
        np.stack([tl, bl, ctr], axis=1),  # west
    ], axis=1).reshape(-1, 3)
    return Mesh(N, vertices, tris.astype(np.int64))


def classify_edges(mesh: Mesh) -> tuple[list[Edge], list[Edge]]:
    """Split the edges into (interior, boundary) lists."""
    interior = [mesh.edge(int(k)) for k in mesh.interior_edges]
    boundary = [mesh.edge(int(k)) for k in mesh.boundary_edges]
    return interior, boundary
