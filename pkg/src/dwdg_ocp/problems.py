"""
Manufactured test problems on the unit square with known optimal triples.

Both examples share the state sin(pi x1) sin(pi x2), the adjoint
-2 pi^2 sin sin and the target (1 + 4 pi^4) sin sin; the second one clamps
the control to [3, 15], which makes the constraints active near the
boundary and in the centre. Clamping breaks -lap(y) = u, so the second
example carries the state source f = -lap(y) - u, which vanishes wherever
the bounds are inactive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import sympy as sp

X1, X2 = sp.symbols("x1 x2", real=True)
_S = sp.sin(sp.pi * X1) * sp.sin(sp.pi * X2)

Y_BAR = _S
P_BAR = -2 * sp.pi ** 2 * _S
Y_D = (1 + 4 * sp.pi ** 4) * _S
U_FREE = 2 * sp.pi ** 2 * _S

SELF_CHECK_TOL = 1e-10


def _lambdify(expr) -> Callable:
    f = sp.lambdify((X1, X2), expr, "numpy")

    def g(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(f(x, y), np.broadcast(x, y).shape).astype(float)
    return g


def _lambdify_grad(expr) -> Callable:
    dx, dy = _lambdify(sp.diff(expr, X1)), _lambdify(sp.diff(expr, X2))

    def g(x, y):
        return dx(x, y), dy(x, y)
    return g


@dataclass(frozen=True)
class ExampleSpec:
    identifier: int
    y_bar: Callable
    u_bar: Callable
    p_bar: Callable
    y_d: Callable
    grad_y_bar: Callable
    grad_p_bar: Callable
    u_a: float
    u_b: float
    f: Optional[Callable] = None
    beta: float = 1.0

    @property
    def bounds(self) -> tuple[float, float]:
        return self.u_a, self.u_b


def _u_bar(u_a, u_b):
    f = _lambdify(U_FREE)

    def u(x, y):
        return np.clip(f(x, y), u_a, u_b)
    return u


def _source(u_a, u_b):
    f = _lambdify(U_FREE)

    def src(x, y):
        v = f(x, y)
        return v - np.clip(v, u_a, u_b)
    return src


@lru_cache(maxsize=None)
def get_example(identifier: int) -> ExampleSpec:
    if identifier == 1:
        u_a, u_b = -math.inf, math.inf
    elif identifier == 2:
        u_a, u_b = 3.0, 15.0
    else:
        raise ValueError(f"unknown example {identifier}; choose 1 or 2")
    ex = ExampleSpec(
        identifier=identifier,
        y_bar=_lambdify(Y_BAR),
        u_bar=_u_bar(u_a, u_b),
        p_bar=_lambdify(P_BAR),
        y_d=_lambdify(Y_D),
        grad_y_bar=_lambdify_grad(Y_BAR),
        grad_p_bar=_lambdify_grad(P_BAR),
        u_a=u_a,
        u_b=u_b,
        f=_source(u_a, u_b) if identifier == 2 else None,
    )
    self_check(ex)
    return ex


def self_check(ex: ExampleSpec, n: int = 41) -> None:
    """Verify the optimality system of the example on a point grid.

    Checks -lap(y) = u + f, -lap(p) = y - y_d, and that
    u = clip(-p/beta, u_a, u_b) pointwise, which is the variational
    inequality written as a projection.
    """
    s = np.linspace(0.0, 1.0, n)
    x, y = np.meshgrid(s, s)
    lap = lambda e: -(sp.diff(e, X1, 2) + sp.diff(e, X2, 2))  # noqa: E731
    scale = float(4 * math.pi ** 4 + 1)

    state_res = _lambdify(lap(Y_BAR))(x, y) - ex.u_bar(x, y)
    if ex.f is not None:
        state_res = state_res - ex.f(x, y)
    adj_res = _lambdify(lap(P_BAR) - (Y_BAR - Y_D))(x, y)
    vi_res = ex.u_bar(x, y) - np.clip(-ex.p_bar(x, y) / ex.beta, ex.u_a, ex.u_b)
    for name, r in (("state", state_res), ("adjoint", adj_res), ("projection", vi_res)):
        if np.max(np.abs(r)) > SELF_CHECK_TOL * scale:
            raise AssertionError(f"example {ex.identifier}: {name} identity violated "
                                 f"(max {np.max(np.abs(r)):.3e})")
