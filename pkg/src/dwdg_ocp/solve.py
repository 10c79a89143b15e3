"""Sparse direct solves against the a_h matrix."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dg_space import DGFunction, load_vector

RESIDUAL_TOL = 1e-10


class FactorizationError(RuntimeError):
    """Breakdown of the sparse factorization, usually an inadmissible penalty."""


class SolveError(RuntimeError):
    pass


class Factorization:
    """Sparse LU of a symmetric matrix, reusable across right-hand sides.

    LU with symmetric-mode ordering is used instead of Cholesky so that the
    indefinite matrices produced by a too-negative penalty still factor and
    are caught by the residual check rather than by a breakdown.
    """

    def __init__(self, A: sp.spmatrix):
        A = sp.csc_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        self.A = A.tocsr()
        try:
            self._lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                                 options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise FactorizationError(f"sparse LU failed: {exc}") from exc
        piv = np.abs(self._lu.U.diagonal())
        tiny = piv <= 1e-14 * max(piv.max(initial=0.0), 1.0)
        if np.any(tiny):
            k = int(np.flatnonzero(tiny)[0])
            raise FactorizationError(
                f"zero pivot at position {k} (column {int(self._lu.perm_c[k])}); "
                "the penalty parameter is probably inadmissible")

    @property
    def shape(self):
        return self.A.shape

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        x = self._lu.solve(b)
        bnorm = np.linalg.norm(b)
        r = b - self.A @ x
        if np.linalg.norm(r) > RESIDUAL_TOL * bnorm:
            x += self._lu.solve(r)  # one step of iterative refinement
            r = b - self.A @ x
            if np.linalg.norm(r) > RESIDUAL_TOL * bnorm:
                raise SolveError(
                    f"residual {np.linalg.norm(r):.3e} exceeds {RESIDUAL_TOL:g} * ||b||")
        return x


def factor(A: sp.spmatrix) -> Factorization:
    return Factorization(A)


def poisson_solve(f, mesh, gamma: float = 0.0, forms=None) -> DGFunction:
    """y_h with a_h(y_h, v) = (f, v) for every broken P1 v."""
    from .forms import DWDGForms

    if forms is None:
        forms = DWDGForms.build(mesh, gamma)
    rhs = load_vector(mesh, f, forms.state_dofmap, degree=7)
    return DGFunction(mesh, forms.state_dofmap, forms.factorization.solve(rhs))
