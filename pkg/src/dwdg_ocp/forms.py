"""
The symmetric dual-wind bilinear form, its energy norm and error functionals.

    a_h(v, w) = 1/2 sum_{s=+,-} (grad0^s v, grad0^s w) + sum_e gamma/h_e <[v], [w]>_e

with grad0^s the boundary-zero one-sided discrete gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .dg_calculus import DIRECTIONS, SIGNS, LiftingSet, build_lifting, jump_matrix
from .dg_space import (DGFunction, load_vector, mass_inverse, mass_matrix, mixed_mass_p1_p0,
                       p0_dofmap, p1_dofmap)
from .quadrature import edge_rule, physical_points, triangle_rule

__all__ = [
    "PenaltyConfig", "InvalidPenaltyError", "DWDGForms", "assemble_ah", "penalty_matrix",
    "load_vector", "energy_norm", "energy_norm_squared", "jump_seminorm_squared",
    "error_energy", "error_l2",
]


class InvalidPenaltyError(ValueError):
    """The penalty is too negative for the energy functional to be a norm."""


@dataclass(frozen=True)
class PenaltyConfig:
    gamma: float = 0.0

    def edge_weights(self, mesh) -> np.ndarray:
        return self.gamma / mesh.edge_length


def penalty_matrix(mesh, penalty: PenaltyConfig) -> sp.csr_matrix:
    """sum_e gamma/h_e <[v], [w]>_e with [v] = v+ on boundary edges."""
    J = jump_matrix(mesh)
    L = mesh.edge_length
    c = penalty.edge_weights(mesh) * L / 6.0
    ne = mesh.n_edges
    r = 2 * np.arange(ne)
    rows = np.concatenate([r, r, r + 1, r + 1])
    cols = np.concatenate([r, r + 1, r, r + 1])
    vals = np.concatenate([2 * c, c, c, 2 * c])
    W = sp.csr_matrix((vals, (rows, cols)), shape=(2 * ne, 2 * ne))
    return (J.T @ W @ J).tocsr()


def assemble_ah(mesh, lifting: LiftingSet, penalty: PenaltyConfig) -> sp.csr_matrix:
    if not lifting.bc_zero:
        raise ValueError("a_h needs the boundary-zero lifting")
    minv = lifting.mass_inv
    A = penalty_matrix(mesh, penalty)
    for key, B in lifting.B.items():
        A = A + 0.5 * (B.T @ (minv @ B))
    A = A.tocsr()
    A.sum_duplicates()
    return A


def jump_seminorm_squared(v: DGFunction, weights=None) -> np.ndarray:
    """Per-edge ||[v]||^2_{L2(e)}, optionally scaled by per-edge weights.

    Evaluated with an edge Gauss rule, independently of the penalty matrix.
    """
    mesh = v.mesh
    jv = (jump_matrix(mesh) @ v.coefficients).reshape(-1, 2)
    rule = edge_rule(2)
    s = rule.points
    vals = jv[:, :1] * (1 - s)[None, :] + jv[:, 1:] * s[None, :]
    per_edge = mesh.edge_length * (vals ** 2 @ rule.weights)
    if weights is not None:
        per_edge = per_edge * weights
    return per_edge


def _gradient_part(lifting: LiftingSet, coeffs: np.ndarray, target=None) -> float:
    """1/2 sum_s ||target - grad^s v||^2 with target=None meaning zero."""
    M = lifting.mass
    total = 0.0
    for sign in SIGNS:
        for i in DIRECTIONS:
            d = lifting[i, sign] @ coeffs
            if target is not None:
                d = target[i - 1] - d
            total += 0.5 * float(d @ (M @ d))
    return total


def energy_norm_squared(v: DGFunction, lifting: LiftingSet, penalty: PenaltyConfig) -> float:
    grad = _gradient_part(lifting, v.coefficients)
    jumps = jump_seminorm_squared(v, penalty.edge_weights(v.mesh)).sum()
    return grad + float(jumps)


def _checked_sqrt(sq: float, scale: float) -> float:
    if sq < 0:
        if sq < -1e-12 * max(scale, 1e-300):
            raise InvalidPenaltyError(
                f"squared energy norm is negative ({sq:.3e}); penalty too negative")
        return 0.0
    return float(np.sqrt(sq))


def energy_norm(v: DGFunction, lifting: LiftingSet, penalty: PenaltyConfig) -> float:
    grad = _gradient_part(lifting, v.coefficients)
    jumps = float(jump_seminorm_squared(v, penalty.edge_weights(v.mesh)).sum())
    return _checked_sqrt(grad + jumps, grad + abs(jumps))


def projected_gradient(mesh, grad_exact, degree: int = 7) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise L2 projection onto broken P1 of both gradient components."""
    dm = p1_dofmap(mesh)
    minv = mass_inverse(mesh, dm)
    out = []
    for i in range(2):
        def comp(x, y, i=i):
            return grad_exact(x, y)[i]
        out.append(minv @ load_vector(mesh, comp, dm, degree))
    return tuple(out)


def error_energy(grad_exact, v_h: DGFunction, lifting: LiftingSet,
                 penalty: PenaltyConfig, degree: int = 7) -> float:
    """Energy norm of (exact - v_h) for an exact function vanishing on the boundary.

    The exact function has no jumps and zero boundary trace, so both of its
    one-sided discrete gradients reduce to the elementwise L2 projection of
    its analytic gradient `grad_exact(x, y) -> (gx, gy)`; its jumps vanish.
    `grad_exact=None` stands for the zero function.
    """
    target = None
    if grad_exact is not None:
        target = projected_gradient(v_h.mesh, grad_exact, degree)
    grad = _gradient_part(lifting, v_h.coefficients, target)
    jumps = float(jump_seminorm_squared(v_h, penalty.edge_weights(v_h.mesh)).sum())
    return _checked_sqrt(grad + jumps, grad + abs(jumps))


def error_l2(exact, v_h: DGFunction, degree: int = 7) -> float:
    """||exact - v_h||_{L2} by elementwise quadrature; `exact=None` means zero."""
    mesh = v_h.mesh
    rule = triangle_rule(degree)
    vh = v_h.at_barycentric(rule.points)
    if exact is None:
        diff = vh
    else:
        x = physical_points(mesh, rule)
        diff = exact(x[..., 0], x[..., 1]) - vh
    sq = np.sum(2.0 * mesh.area[:, None] * rule.weights[None, :] * diff ** 2)
    return float(np.sqrt(sq))


@dataclass
class DWDGForms:
    """Everything assembled once per (mesh, gamma) and shared by the solvers."""

    mesh: object
    penalty: PenaltyConfig
    lifting: LiftingSet = field(repr=False)
    A: sp.csr_matrix = field(repr=False)

    @classmethod
    def build(cls, mesh, gamma: float) -> "DWDGForms":
        penalty = PenaltyConfig(float(gamma))
        lifting = build_lifting(mesh, bc_zero=True)
        return cls(mesh, penalty, lifting, assemble_ah(mesh, lifting, penalty))

    @property
    def gamma(self) -> float:
        return self.penalty.gamma

    @property
    def state_dofmap(self):
        return self.lifting.dofmap

    @cached_property
    def mass(self) -> sp.csr_matrix:
        return self.lifting.mass

    @cached_property
    def mass_p0(self) -> sp.csr_matrix:
        return mass_matrix(self.mesh, p0_dofmap(self.mesh))

    @cached_property
    def mixed_mass(self) -> sp.csr_matrix:
        return mixed_mass_p1_p0(self.mesh)

    @cached_property
    def factorization(self):
        from .solve import factor
        return factor(self.A)
