"""
Broken polynomial spaces on a triangulation.

P1 functions use the per-triangle nodal (barycentric) basis, so DOF
``3*t + j`` is the value of the function at local vertex ``j`` of triangle
``t``. P0 functions carry one value per triangle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .quadrature import physical_points, triangle_rule

P1DG = "P1DG"
P0 = "P0"
P1DG_CONTROL = "P1DG-control"

# reference P1 element mass matrix divided by the triangle area
P1_MASS_REF = (np.eye(3) + np.ones((3, 3))) / 12.0


@dataclass(frozen=True)
class DofMap:
    kind: str
    n_cells: int

    def __post_init__(self):
        if self.kind not in (P1DG, P0, P1DG_CONTROL):
            raise ValueError(f"unknown space kind {self.kind!r}")

    @property
    def dofs_per_cell(self) -> int:
        return 1 if self.kind == P0 else 3

    @property
    def ndof(self) -> int:
        return self.dofs_per_cell * self.n_cells

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(self.n_cells) * self.dofs_per_cell

    def cell_dofs(self, t: int) -> np.ndarray:
        k = self.dofs_per_cell
        return np.arange(k * t, k * t + k)


def p1_dofmap(mesh, control: bool = False) -> DofMap:
    return DofMap(P1DG_CONTROL if control else P1DG, mesh.n_triangles)


def p0_dofmap(mesh) -> DofMap:
    return DofMap(P0, mesh.n_triangles)


class DGFunction:
    """Coefficient vector tied to a mesh and a DofMap."""

    def __init__(self, mesh, dofmap: DofMap, coefficients=None):
        self.mesh = mesh
        self.dofmap = dofmap
        if coefficients is None:
            coefficients = np.zeros(dofmap.ndof)
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (dofmap.ndof,):
            raise ValueError(
                f"expected {dofmap.ndof} coefficients, got shape {coefficients.shape}")
        self.coefficients = coefficients

    @property
    def cell_values(self) -> np.ndarray:
        """Coefficients reshaped to (n_cells, dofs_per_cell)."""
        return self.coefficients.reshape(self.dofmap.n_cells, self.dofmap.dofs_per_cell)

    def evaluate(self, t: int, point) -> float:
        if not 0 <= t < self.mesh.n_triangles:
            raise IndexError(f"triangle {t} out of range")
        if self.dofmap.kind == P0:
            return float(self.coefficients[t])
        lam = barycentric(self.mesh, t, point)
        return float(lam @ self.cell_values[t])

    def at_barycentric(self, bary: np.ndarray) -> np.ndarray:
        """Values at barycentric points (nq, 3) on every cell -> (nt, nq)."""
        if self.dofmap.kind == P0:
            return np.repeat(self.coefficients[:, None], bary.shape[0], axis=1)
        return self.cell_values @ bary.T

    def copy(self) -> "DGFunction":
        return DGFunction(self.mesh, self.dofmap, self.coefficients.copy())

    def __repr__(self):
        return f"DGFunction({self.dofmap.kind}, ndof={self.dofmap.ndof})"


def barycentric(mesh, t: int, point) -> np.ndarray:
    p = mesh.vertices[mesh.triangles[t]]
    x = np.asarray(point, dtype=float)
    return np.array([1.0, 0.0, 0.0]) + mesh.grad_bary[t] @ (x - p[0])


def evaluate(f: DGFunction, t: int, point) -> float:
    return f.evaluate(t, point)


def project_cellavg(mesh, g, degree: int = 4) -> DGFunction:
    """Cell averages of g (the L2 projection onto piecewise constants)."""
    rule = triangle_rule(degree)
    x = physical_points(mesh, rule)
    vals = g(x[..., 0], x[..., 1]) * np.ones(x.shape[:2])
    avg = 2.0 * (vals @ rule.weights)  # weights sum to 1/2
    return DGFunction(mesh, p0_dofmap(mesh), avg)


def interpolate_nodal(mesh, g, control: bool = False) -> DGFunction:
    """Per-triangle nodal interpolant of g in broken P1."""
    p = mesh.vertices[mesh.triangles]
    vals = g(p[..., 0], p[..., 1]) * np.ones(p.shape[:2])
    return DGFunction(mesh, p1_dofmap(mesh, control), vals.ravel())


def mass_matrix(mesh, dofmap: DofMap) -> sp.csr_matrix:
    """Block-diagonal L2 mass matrix of the space."""
    if dofmap.kind == P0:
        return sp.diags(mesh.area).tocsr()
    blocks = mesh.area[:, None, None] * P1_MASS_REF[None]
    return block_diag_csr(blocks)


def mass_inverse(mesh, dofmap: DofMap) -> sp.csr_matrix:
    if dofmap.kind == P0:
        return sp.diags(1.0 / mesh.area).tocsr()
    inv_ref = np.linalg.inv(P1_MASS_REF)
    return block_diag_csr(inv_ref[None] / mesh.area[:, None, None])


def mixed_mass_p1_p0(mesh) -> sp.csr_matrix:
    """Entries (phi_j, 1_T) = |T|/3 coupling P1 test functions to P0 data."""
    nt = mesh.n_triangles
    rows = np.arange(3 * nt)
    cols = np.repeat(np.arange(nt), 3)
    vals = np.repeat(mesh.area / 3.0, 3)
    return sp.csr_matrix((vals, (rows, cols)), shape=(3 * nt, nt))


def block_diag_csr(blocks: np.ndarray) -> sp.csr_matrix:
    """CSR matrix from a stack of equally sized square blocks."""
    nb, k, _ = blocks.shape
    r = (np.arange(nb) * k)[:, None] + np.arange(k)[None, :]
    rows = np.repeat(r, k, axis=1)
    cols = np.tile(r, (1, k))
    return sp.csr_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())),
                         shape=(nb * k, nb * k))


def load_vector(mesh, g, dofmap: DofMap, degree: int = 7) -> np.ndarray:
    """Entries (g, phi) for every basis function phi of the space."""
    rule = triangle_rule(degree)
    x = physical_points(mesh, rule)
    vals = g(x[..., 0], x[..., 1]) * np.ones(x.shape[:2])
    w = 2.0 * mesh.area[:, None] * rule.weights[None, :] * vals  # (nt, nq)
    if dofmap.kind == P0:
        return w.sum(axis=1)
    return (w @ rule.points).ravel()


def l2_norm(f: DGFunction) -> float:
    m = mass_matrix(f.mesh, f.dofmap)
    c = f.coefficients
    return float(np.sqrt(max(c @ (m @ c), 0.0)))
