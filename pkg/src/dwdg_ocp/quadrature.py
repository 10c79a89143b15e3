"""
Quadrature on the reference triangle {(x, y): x, y >= 0, x + y <= 1} and the
reference edge [0, 1].

Triangle rules are fully symmetric with positive weights (Dunavant). Points
are stored in barycentric coordinates, weights sum to the reference area 1/2.
Edge rules are Gauss-Legendre mapped to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray  # (nq, 3) barycentric or (nq,) parametric
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)


def _orbit(kind, params):
    if kind == "c":
        return [(1 / 3, 1 / 3, 1 / 3)]
    if kind == "s21":
        a = params[0]
        b = 1.0 - 2.0 * a
        return [(a, a, b), (a, b, a), (b, a, a)]
    a, b = params
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


# (exactness degree, [(orbit kind, orbit params, weight normalised to sum 1)])
_TRIANGLE_TABLES = {
    1: (1, [("c", (), 1.0)]),
    2: (2, [("s21", (1 / 6,), 1 / 3)]),
    4: (4, [
        ("s21", (0.445948490915965,), 0.223381589678011),
        ("s21", (0.091576213509771,), 0.109951743655322),
    ]),
    5: (5, [
        ("c", (), 0.225),
        ("s21", (0.470142064105115,), 0.132394152788506),
        ("s21", (0.101286507323456,), 0.125939180544827),
    ]),
    6: (6, [
        ("s21", (0.24928674517091226,), 0.11678627572637744),
        ("s21", (0.06308901449150205,), 0.05084490637020631),
        ("s111", (0.05314504984481764, 0.3103524510337826), 0.08285107561837479),
    ]),
    8: (8, [
        ("c", (), 0.144315607677787),
        ("s21", (0.459292588292723,), 0.095091634267285),
        ("s21", (0.170569307751760,), 0.103217370534718),
        ("s21", (0.050547228317031,), 0.032458497623198),
        ("s111", (0.008394777409958, 0.263112829634638), 0.027230314174435),
    ]),
}

# requested degree -> shipped table
_TRIANGLE_CHOICE = {1: 1, 2: 2, 3: 4, 4: 4, 5: 5, 6: 6, 7: 8}


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadRule:
    """Symmetric positive rule exact for polynomials of at least `degree`."""
    if degree not in _TRIANGLE_CHOICE:
        raise ValueError(f"unsupported triangle quadrature degree {degree}; use 1..7")
    exact, orbits = _TRIANGLE_TABLES[_TRIANGLE_CHOICE[degree]]
    pts, wts = [], []
    for kind, params, w in orbits:
        for p in _orbit(kind, params):
            pts.append(p)
            wts.append(w)
    points = np.array(pts)
    weights = 0.5 * np.array(wts)
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(points, weights, exact)


@lru_cache(maxsize=None)
def edge_rule(degree: int) -> QuadRule:
    """Gauss-Legendre rule on [0, 1] exact for polynomials of `degree`."""
    if not 1 <= degree <= 9:
        raise ValueError(f"unsupported edge quadrature degree {degree}; use 1..9")
    n = degree // 2 + 1
    x, w = np.polynomial.legendre.leggauss(n)
    points = 0.5 * (x + 1.0)
    weights = 0.5 * w
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(points, weights, 2 * n - 1)


def physical_points(mesh, rule: QuadRule) -> np.ndarray:
    """Quadrature points on every triangle, shape (nt, nq, 2)."""
    p = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
    return np.einsum("qj,tjd->tqd", rule.points, p)


def integrate(mesh, f, degree: int = 7) -> float:
    """Integral of a vectorised f(x, y) over the whole mesh."""
    rule = triangle_rule(degree)
    x = physical_points(mesh, rule)
    vals = f(x[..., 0], x[..., 1])
    return float(np.sum(2.0 * mesh.area[:, None] * rule.weights[None, :] * vals))
