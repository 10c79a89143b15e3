"""
One-sided discrete partial derivatives on broken P1.

For v in broken P1 the forward/backward derivative in direction x_i is the
broken P1 function d with

    (d, phi)_T = sum_T int_{dT} Q_i(v) phi|_T n_T^(i) ds - (v, d_i phi)_T

for every broken P1 test function phi, where n_T is the outward normal of T
and Q_i picks the neighbouring value lying on the +x_i side (forward) or the
-x_i side (backward) of the edge, averaging when the edge is parallel to x_i.
On boundary edges Q_i is the interior trace, or zero for the boundary-zero
variant used in the bilinear form. The map v -> d is stored as a sparse
matrix G = M^{-1} B.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dg_space import DGFunction, mass_inverse, mass_matrix, p1_dofmap
from .mesh import GEOM_TOL, Edge

SIGNS = ("+", "-")
DIRECTIONS = (1, 2)


@dataclass(frozen=True)
class TraceSide:
    direction: int
    sign: str

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be 1 or 2, got {self.direction!r}")
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be '+' or '-', got {self.sign!r}")


def trace_weights(normal_component: float, sign: str) -> tuple[float, float]:
    """Weights (w_plus, w_minus) of v|T+ and v|T- in Q_i^sign on an interior edge.

    `normal_component` is n_e^(i) with n_e the outward normal of T-, so a
    positive value means T+ lies on the +x_i side of the edge.
    """
    if abs(normal_component) < GEOM_TOL:
        return 0.5, 0.5
    forward_is_plus = normal_component > 0
    if sign == "+":
        return (1.0, 0.0) if forward_is_plus else (0.0, 1.0)
    return (0.0, 1.0) if forward_is_plus else (1.0, 0.0)


def _check_on_edge(mesh, edge: Edge, point) -> np.ndarray:
    x = np.asarray(point, dtype=float)
    a = mesh.vertices[edge.vertices[0]]
    b = mesh.vertices[edge.vertices[1]]
    t = b - a
    s = np.dot(x - a, t) / np.dot(t, t)
    dist = np.linalg.norm(x - (a + s * t))
    if dist > 1e-12 or s < -1e-12 or s > 1 + 1e-12:
        raise ValueError(f"point {x} is not on edge {edge.index}")
    return x


def _sides(edge: Edge, v: DGFunction, point):
    x = _check_on_edge(v.mesh, edge, point)
    vp = v.evaluate(edge.tplus, x)
    vm = None if edge.is_boundary else v.evaluate(edge.tminus, x)
    return vp, vm


def jump(edge: Edge, v: DGFunction, point) -> float:
    """v+ - v- on interior edges, v+ on boundary edges."""
    vp, vm = _sides(edge, v, point)
    return vp if vm is None else vp - vm


def average(edge: Edge, v: DGFunction, point) -> float:
    vp, vm = _sides(edge, v, point)
    return vp if vm is None else 0.5 * (vp + vm)


def trace_value(edge: Edge, side: TraceSide, v: DGFunction, point,
                bc_zero: bool = False) -> float:
    vp, vm = _sides(edge, v, point)
    if vm is None:
        return 0.0 if bc_zero else vp
    wp, wm = trace_weights(edge.normal[side.direction - 1], side.sign)
    return wp * vp + wm * vm


class LiftingSet:
    """The four operators G[(i, sign)] realising the one-sided derivatives."""

    def __init__(self, mesh, B: dict, bc_zero: bool):
        self.mesh = mesh
        self.dofmap = p1_dofmap(mesh)
        self.bc_zero = bc_zero
        self.mass = mass_matrix(mesh, self.dofmap)
        self.mass_inv = mass_inverse(mesh, self.dofmap)
        self.B = B
        self.G = {key: (self.mass_inv @ b).tocsr() for key, b in B.items()}

    def __getitem__(self, key) -> sp.csr_matrix:
        return self.G[key]

    def derivative(self, v: DGFunction, direction: int, sign: str) -> DGFunction:
        return DGFunction(self.mesh, self.dofmap, self.G[direction, sign] @ v.coefficients)

    def gradient(self, v: DGFunction, sign: str) -> tuple[DGFunction, DGFunction]:
        return tuple(self.derivative(v, i, sign) for i in DIRECTIONS)


def _coo(rows, cols, vals, n):
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


def build_lifting(mesh, bc_zero: bool = True) -> LiftingSet:
    """Assemble B[(i, sign)] over elements and edges and wrap as a LiftingSet."""
    nt = mesh.n_triangles
    n = 3 * nt
    interior = mesh.edge_tminus >= 0
    L = mesh.edge_length
    tp, tm = mesh.edge_tplus, mesh.edge_tminus
    lp, lm = mesh.edge_local_plus, mesh.edge_local_minus

    # element part: -(v, d_i phi_j) = -d_i(lambda_j) |T|/3 for every trial node k
    j_idx = np.repeat(np.arange(3), 3)
    k_idx = np.tile(np.arange(3), 3)
    el_rows = (3 * np.arange(nt)[:, None] + j_idx[None, :]).ravel()
    el_cols = (3 * np.arange(nt)[:, None] + k_idx[None, :]).ravel()

    # edge mass between endpoint hats: L/6 * (2 if same endpoint else 1)
    ie = np.flatnonzero(interior)
    be = np.flatnonzero(~interior)

    B = {}
    for i in DIRECTIONS:
        grad_i = mesh.grad_bary[:, :, i - 1]  # (nt, 3)
        el_vals = (-grad_i[:, j_idx] * (mesh.area / 3.0)[:, None]).ravel()
        nrm = mesh.edge_normal[:, i - 1]
        for sign in SIGNS:
            rows, cols, vals = [el_rows], [el_cols], [el_vals]
            # interior edges: test on T+ (outward normal -n_e) and T- (n_e)
            w = np.array([trace_weights(c, sign) for c in nrm[ie]]).reshape(-1, 2)
            for test_t, test_l, n_s in ((tp[ie], lp[ie], -nrm[ie]), (tm[ie], lm[ie], nrm[ie])):
                for src_t, src_l, wq in ((tp[ie], lp[ie], w[:, 0]), (tm[ie], lm[ie], w[:, 1])):
                    for a in range(2):
                        for b in range(2):
                            coef = n_s * wq * L[ie] * (2.0 if a == b else 1.0) / 6.0
                            rows.append(3 * test_t + test_l[:, a])
                            cols.append(3 * src_t + src_l[:, b])
                            vals.append(coef)
            if not bc_zero:
                for a in range(2):
                    for b in range(2):
                        coef = nrm[be] * L[be] * (2.0 if a == b else 1.0) / 6.0
                        rows.append(3 * tp[be] + lp[be, a])
                        cols.append(3 * tp[be] + lp[be, b])
                        vals.append(coef)
            B[i, sign] = _coo(rows, cols, vals, n)
    return LiftingSet(mesh, B, bc_zero)


def jump_matrix(mesh) -> sp.csr_matrix:
    """Rows 2e, 2e+1 give the jump of a broken P1 function at the two endpoints of edge e."""
    ne = mesh.n_edges
    interior = mesh.edge_tminus >= 0
    rows, cols, vals = [], [], []
    for a in range(2):
        r = 2 * np.arange(ne) + a
        rows.append(r)
        cols.append(3 * mesh.edge_tplus + mesh.edge_local_plus[:, a])
        vals.append(np.ones(ne))
        ie = np.flatnonzero(interior)
        rows.append(r[ie])
        cols.append(3 * mesh.edge_tminus[ie] + mesh.edge_local_minus[ie, a])
        vals.append(-np.ones(len(ie)))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(2 * ne, 3 * mesh.n_triangles))


def broken_gradient(v: DGFunction) -> np.ndarray:
    """Elementwise gradient of a broken P1 function, shape (nt, 2)."""
    return np.einsum("tj,tjd->td", v.cell_values, v.mesh.grad_bary)
