"""
Discrete optimality system for the box-constrained control problem.

State and adjoint live in broken P1; the control is broken P0 (k=0) or
broken P1 (k=1). Both control spaces decouple cell by cell, so the control
part of the optimality system reduces to a small exact solve per triangle.
The outer loop alternates state solve, adjoint solve and control update and
stops once the active sets settle and the control stops moving.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dg_space import (P1_MASS_REF, DGFunction, load_vector, p0_dofmap, p1_dofmap)
from .forms import DWDGForms
from .quadrature import physical_points, triangle_rule

log = logging.getLogger(__name__)

UNBOUNDED_BELOW = -math.inf
UNBOUNDED_ABOVE = math.inf


@dataclass
class OcpConfig:
    y_d: Callable
    beta: float = 1.0
    u_a: float = UNBOUNDED_BELOW
    u_b: float = UNBOUNDED_ABOVE
    k: int = 0
    gamma: float = 0.0
    tol: float = 1e-10
    max_iter: int = 100
    f: Optional[Callable] = None  # extra state source, -lap y = u + f

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.u_a < self.u_b:
            raise ValueError(f"need u_a < u_b, got [{self.u_a}, {self.u_b}]")
        if self.k not in (0, 1):
            raise ValueError(f"control degree must be 0 or 1, got {self.k}")


@dataclass
class OcpSolution:
    y: DGFunction
    u: DGFunction
    p: DGFunction
    iterations: int
    kkt_residual: float
    converged: bool
    history: list = field(default_factory=list, repr=False)


def _clamp(v, u_a, u_b):
    # np.clip is exact on the bounds, and +-inf bounds leave values untouched
    return np.clip(v, u_a, u_b)


def control_update_p0(p_h: DGFunction, beta: float, u_a: float = UNBOUNDED_BELOW,
                      u_b: float = UNBOUNDED_ABOVE) -> DGFunction:
    """Cellwise minimiser: clamp(-mean_T(p_h)/beta, u_a, u_b)."""
    avg = p_h.cell_values.mean(axis=1)
    u = _clamp(-avg / beta, u_a, u_b)
    return DGFunction(p_h.mesh, p0_dofmap(p_h.mesh), u)


def _patterns(u_a, u_b):
    states = ["F"]
    if np.isfinite(u_a):
        states.append("L")
    if np.isfinite(u_b):
        states.append("U")
    pats = list(itertools.product(states, repeat=3))
    # all-free first, then by number of free nodes; cheapest common cases first
    pats.sort(key=lambda pat: -pat.count("F"))
    return pats


def solve_box_qp3(K: np.ndarray, c: np.ndarray, beta: float, u_a: float, u_b: float):
    """Exact solution of min beta/2 u'K_t u + u'c_t, u_a <= u <= u_b, for each t.

    K is (nt, 3, 3) SPD, c is (nt, 3). Every active/free pattern is tried and
    the one passing the primal feasibility and multiplier sign checks is
    kept. Returns the (nt, 3) solution.
    """
    nt = c.shape[0]
    u = np.full((nt, 3), np.nan)
    done = np.zeros(nt, dtype=bool)
    bound_scale = max([1.0] + [abs(b) for b in (u_a, u_b) if np.isfinite(b)])
    ftol = 1e-12 * bound_scale
    for pat in _patterns(u_a, u_b):
        todo = np.flatnonzero(~done)
        if todo.size == 0:
            break
        Kt, ct = K[todo], c[todo]
        free = [j for j in range(3) if pat[j] == "F"]
        fixed = [j for j in range(3) if pat[j] != "F"]
        cand = np.empty((todo.size, 3))
        for j in fixed:
            cand[:, j] = u_a if pat[j] == "L" else u_b
        if free:
            rhs = -ct[:, free] / beta
            if fixed:
                rhs -= np.einsum("tij,tj->ti", Kt[np.ix_(np.arange(todo.size), free, fixed)],
                                 cand[:, fixed])
            Kff = Kt[:, free][:, :, free]
            cand[:, free] = np.linalg.solve(Kff, rhs[..., None])[..., 0]
        g = beta * np.einsum("tij,tj->ti", Kt, cand) + ct
        gscale = 1e-11 * (beta * np.abs(Kt).sum(axis=2).max(axis=1) * np.abs(cand).max(axis=1)
                          + np.abs(ct).max(axis=1) + 1e-300)
        ok = np.ones(todo.size, dtype=bool)
        for j in range(3):
            if pat[j] == "F":
                ok &= (cand[:, j] >= u_a - ftol) & (cand[:, j] <= u_b + ftol)
            elif pat[j] == "L":
                ok &= g[:, j] >= -gscale
            else:
                ok &= g[:, j] <= gscale
        hit = todo[ok]
        u[hit] = cand[ok]
        done[hit] = True
    if not done.all():
        raise RuntimeError(f"no KKT pattern accepted on {np.count_nonzero(~done)} triangles")
    return _clamp(u, u_a, u_b)


def element_mass_blocks(mesh) -> np.ndarray:
    return mesh.area[:, None, None] * P1_MASS_REF[None]


def control_update_p1(p_h: DGFunction, beta: float, u_a: float = UNBOUNDED_BELOW,
                      u_b: float = UNBOUNDED_ABOVE, mass_blocks=None) -> DGFunction:
    """Per-triangle box QP: min beta/2 u'M_T u + u'M_T p_T over [u_a, u_b]^3."""
    mesh = p_h.mesh
    K = element_mass_blocks(mesh) if mass_blocks is None else mass_blocks
    P = p_h.cell_values
    c = np.einsum("tij,tj->ti", K, P)
    u = solve_box_qp3(K, c, beta, u_a, u_b)
    return DGFunction(mesh, p1_dofmap(mesh, control=True), u.ravel())


def control_update(p_h: DGFunction, config: OcpConfig) -> DGFunction:
    if config.k == 0:
        return control_update_p0(p_h, config.beta, config.u_a, config.u_b)
    return control_update_p1(p_h, config.beta, config.u_a, config.u_b)


def control_mass(forms: DWDGForms, k: int):
    return forms.mass_p0 if k == 0 else forms.mass


def _control_rhs(forms: DWDGForms, u: DGFunction):
    if u.dofmap.kind == "P0":
        return forms.mixed_mass @ u.coefficients
    return forms.mass @ u.coefficients


def _l2(M, v):
    return float(np.sqrt(max(v @ (M @ v), 0.0)))


def active_sets(u: DGFunction, u_a: float, u_b: float):
    c = u.coefficients
    return c <= u_a, c >= u_b


def state_solve(forms: DWDGForms, u: DGFunction, b_f=None) -> DGFunction:
    rhs = _control_rhs(forms, u)
    if b_f is not None:
        rhs = rhs + b_f
    return DGFunction(forms.mesh, forms.state_dofmap, forms.factorization.solve(rhs))


def adjoint_solve(forms: DWDGForms, y: DGFunction, b_yd: np.ndarray) -> DGFunction:
    rhs = forms.mass @ y.coefficients - b_yd
    return DGFunction(forms.mesh, forms.state_dofmap, forms.factorization.solve(rhs))


def source_vector(forms: DWDGForms, config: OcpConfig):
    if config.f is None:
        return None
    return load_vector(forms.mesh, config.f, forms.state_dofmap, degree=7)


def initial_control(mesh, config: OcpConfig) -> DGFunction:
    dm = p0_dofmap(mesh) if config.k == 0 else p1_dofmap(mesh, control=True)
    return DGFunction(mesh, dm, np.full(dm.ndof, _clamp(0.0, config.u_a, config.u_b)))


def pdas_solve(config: OcpConfig, mesh=None, forms: Optional[DWDGForms] = None) -> OcpSolution:
    """Active-set fixed-point iteration on the discrete optimality system.

    One factorization of a_h serves every state and adjoint solve. The
    update is damped (theta halved) if the active sets keep changing for more
    than five consecutive iterations.
    """
    if forms is None:
        if mesh is None:
            raise ValueError("need a mesh or assembled forms")
        forms = DWDGForms.build(mesh, config.gamma)
    mesh = forms.mesh
    Mu = control_mass(forms, config.k)
    b_yd = load_vector(mesh, config.y_d, forms.state_dofmap, degree=7)
    b_f = source_vector(forms, config)

    u = initial_control(mesh, config)
    sets = active_sets(u, config.u_a, config.u_b)
    theta = 1.0
    changing = 0
    history = []
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        y = state_solve(forms, u, b_f)
        p = adjoint_solve(forms, y, b_yd)
        u_new = control_update(p, config)
        if theta < 1.0:
            u_new = DGFunction(mesh, u.dofmap, u.coefficients + theta * (u_new.coefficients - u.coefficients))
        new_sets = active_sets(u_new, config.u_a, config.u_b)
        same = all(np.array_equal(a, b) for a, b in zip(sets, new_sets))
        step = _l2(Mu, u_new.coefficients - u.coefficients)
        size = _l2(Mu, u_new.coefficients)
        history.append(step)
        log.debug("iter %d: step %.3e, theta %.3g, sets %s", it, step, theta,
                  "fixed" if same else "changed")
        u, sets = u_new, new_sets
        if same and step <= config.tol * max(1.0, size):
            converged = True
            break
        changing = 0 if same else changing + 1
        if changing > 5:
            theta *= 0.5
            changing = 0
            log.info("active sets cycling; damping reduced to %g", theta)

    y = state_solve(forms, u, b_f)
    p = adjoint_solve(forms, y, b_yd)
    sol = OcpSolution(y, u, p, it, 0.0, converged, history)
    sol.kkt_residual = kkt_residual(sol, config, forms, b_yd)
    if not converged:
        log.warning("no convergence after %d iterations (last step %.3e)", it, history[-1])
    return sol


def kkt_residuals(solution: OcpSolution, config: OcpConfig, forms: DWDGForms,
                  b_yd=None) -> dict:
    """State, adjoint and control-optimality residuals of a candidate triple.

    The equation residuals are Euclidean norms relative to max(1, ||rhs||);
    the control residual is the L2 distance between u and its own update.
    """
    if b_yd is None:
        b_yd = load_vector(forms.mesh, config.y_d, forms.state_dofmap, degree=7)
    A = forms.A
    rs = _control_rhs(forms, solution.u)
    b_f = source_vector(forms, config)
    if b_f is not None:
        rs = rs + b_f
    ra = forms.mass @ solution.y.coefficients - b_yd
    state = np.linalg.norm(A @ solution.y.coefficients - rs) / max(1.0, np.linalg.norm(rs))
    adjoint = np.linalg.norm(A @ solution.p.coefficients - ra) / max(1.0, np.linalg.norm(ra))
    u_re = control_update(solution.p, config)
    control = _l2(control_mass(forms, config.k), u_re.coefficients - solution.u.coefficients)
    return {"state": float(state), "adjoint": float(adjoint), "control": control}


def kkt_residual(solution: OcpSolution, config: OcpConfig, forms: DWDGForms, b_yd=None) -> float:
    return max(kkt_residuals(solution, config, forms, b_yd).values())


def objective(y: DGFunction, u: DGFunction, config: OcpConfig, forms: DWDGForms) -> float:
    """J_h = 1/2 ||y - y_d||^2 + beta/2 ||u||^2."""
    mesh = forms.mesh
    rule = triangle_rule(7)
    x = physical_points(mesh, rule)
    d = y.at_barycentric(rule.points) - config.y_d(x[..., 0], x[..., 1])
    track = np.sum(2.0 * mesh.area[:, None] * rule.weights[None, :] * d ** 2)
    reg = _l2(control_mass(forms, config.k), u.coefficients) ** 2
    return float(0.5 * track + 0.5 * config.beta * reg)
