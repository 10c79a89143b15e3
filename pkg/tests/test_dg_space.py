import numpy as np
import pytest

from dwdg_ocp.dg_space import (DGFunction, DofMap, P1_MASS_REF, interpolate_nodal, l2_norm,
                               load_vector, mass_inverse, mass_matrix, mixed_mass_p1_p0,
                               p0_dofmap, p1_dofmap, project_cellavg)
from dwdg_ocp.forms import error_l2
from dwdg_ocp.mesh import build_crisscross
from dwdg_ocp.problems import get_example

from conftest import collapsed_gauss, fitted_rate


def test_evaluate_constant_and_linear(meshes):
    m = meshes(2)
    dm = p1_dofmap(m)
    f = DGFunction(m, dm, np.full(dm.ndof, 2.5))
    assert f.evaluate(5, m.centroid[5]) == pytest.approx(2.5)
    x1 = interpolate_nodal(m, lambda x, y: x)
    for t in range(m.n_triangles):
        assert x1.evaluate(t, m.centroid[t]) == pytest.approx(m.centroid[t, 0])
    q = DGFunction(m, p0_dofmap(m), np.arange(m.n_triangles, dtype=float))
    assert q.evaluate(7, m.vertices[m.triangles[7, 0]]) == 7.0
    with pytest.raises(IndexError):
        q.evaluate(m.n_triangles, (0.0, 0.0))


def test_wrong_coefficient_length(meshes):
    m = meshes(1)
    with pytest.raises(ValueError):
        DGFunction(m, p1_dofmap(m), np.zeros(5))
    with pytest.raises(ValueError):
        DofMap("P2", 4)


def test_cellavg_of_constant_and_linear(meshes):
    m = meshes(3)
    c = project_cellavg(m, lambda x, y: 4.0 + 0 * x)
    np.testing.assert_allclose(c.coefficients, 4.0)
    lin = project_cellavg(m, lambda x, y: 1 + 2 * x - 3 * y)
    np.testing.assert_allclose(lin.coefficients, 1 + 2 * m.centroid[:, 0] - 3 * m.centroid[:, 1],
                               atol=1e-13)


def test_cellavg_is_l2_orthogonal(meshes, rng):
    m = meshes(2)
    g = lambda x, y: x ** 3 - 2 * x * y ** 2 + y  # noqa: E731
    q = project_cellavg(m, g)
    test = rng.standard_normal(m.n_triangles)
    rule_pts, w = collapsed_gauss(5)
    total = 0.0
    for t in range(m.n_triangles):
        p = m.vertices[m.triangles[t]]
        x = p[0] + rule_pts[:, :1] * (p[1] - p[0]) + rule_pts[:, 1:] * (p[2] - p[0])
        r = g(x[:, 0], x[:, 1]) - q.coefficients[t]
        total += test[t] * 2 * m.area[t] * np.sum(w * r)
    assert abs(total) < 1e-10


def test_cellavg_and_interpolation_rates():
    ex = get_example(1)
    Ns = [4, 8, 16, 32]
    e0, e1 = [], []
    for N in Ns:
        m = build_crisscross(N)
        e0.append(error_l2(ex.u_bar, project_cellavg(m, ex.u_bar)))
        e1.append(error_l2(ex.y_bar, interpolate_nodal(m, ex.y_bar)))
    hs = [1 / (2 * N) for N in Ns]
    assert fitted_rate(hs, e0) == pytest.approx(1.0, abs=0.05)
    assert fitted_rate(hs, e1) == pytest.approx(2.0, abs=0.1)


def test_interpolating_linear_is_exact(meshes):
    m = meshes(3)
    f = interpolate_nodal(m, lambda x, y: 2 - x + 5 * y)
    assert error_l2(lambda x, y: 2 - x + 5 * y, f) < 1e-13


def test_interpolant_respects_bounds(meshes):
    m = meshes(4)
    g = lambda x, y: np.clip(30 * np.sin(np.pi * x) * np.sin(np.pi * y), 3, 15)  # noqa: E731
    c = interpolate_nodal(m, g, control=True).coefficients
    assert c.min() >= 3 and c.max() <= 15


def test_mass_matrices(meshes, rng):
    m = meshes(1)
    M0 = mass_matrix(m, p0_dofmap(m)).toarray()
    np.testing.assert_allclose(M0, 0.25 * np.eye(4))
    m = meshes(3)
    M = mass_matrix(m, p1_dofmap(m))
    ones = np.ones(M.shape[0])
    assert ones @ M @ ones == pytest.approx(1.0)
    x = rng.standard_normal(M.shape[0])
    assert x @ M @ x > 0
    np.testing.assert_allclose((mass_inverse(m, p1_dofmap(m)) @ M).toarray(), np.eye(M.shape[0]),
                               atol=1e-12)
    np.testing.assert_allclose(np.linalg.inv(P1_MASS_REF) @ P1_MASS_REF, np.eye(3), atol=1e-12)


def test_mixed_mass_matches_l2_pairing(meshes, rng):
    m = meshes(2)
    C = mixed_mass_p1_p0(m)
    q = rng.standard_normal(m.n_triangles)
    v = rng.standard_normal(3 * m.n_triangles)
    # (v, q) = sum_T q_T |T| mean(v_T)
    ref = np.sum(q * m.area * v.reshape(-1, 3).mean(axis=1))
    assert v @ (C @ q) == pytest.approx(ref)


def test_load_vector_basics(meshes):
    m = meshes(2)
    dm = p1_dofmap(m)
    np.testing.assert_array_equal(load_vector(m, lambda x, y: 0 * x, dm), 0.0)
    assert load_vector(m, lambda x, y: 1 + 0 * x, dm).sum() == pytest.approx(1.0)
    assert load_vector(m, lambda x, y: 1 + 0 * x, p0_dofmap(m)).sum() == pytest.approx(1.0)


def _oracle_load(m, g, n=10):
    pts, w = collapsed_gauss(n)  # exact to degree 18
    lam = np.stack([1 - pts[:, 0] - pts[:, 1], pts[:, 0], pts[:, 1]], axis=1)
    out = []
    for t in range(m.n_triangles):
        x = lam @ m.vertices[m.triangles[t]]
        out.append(2 * m.area[t] * (w * g(x[:, 0], x[:, 1])) @ lam)
    return np.concatenate(out)


def test_load_vector_exact_for_polynomials(meshes):
    m = meshes(2)
    g = lambda x, y: x ** 4 * y ** 3 - 3 * x ** 2 * y + 2  # noqa: E731
    np.testing.assert_allclose(load_vector(m, g, p1_dofmap(m)), _oracle_load(m, g),
                               rtol=0, atol=1e-12)


def test_load_vector_against_high_order_oracle(meshes):
    m = meshes(2)
    yd = get_example(1).y_d
    ref = _oracle_load(m, yd)
    # degree-8 truncation on a transcendental integrand: ~1e-8 of entries of size ~6
    np.testing.assert_allclose(load_vector(m, yd, p1_dofmap(m)), ref, rtol=0,
                               atol=5e-9 * np.abs(ref).max())


def test_l2_norm_matches_quadrature(meshes, rng):
    m = meshes(3)
    f = DGFunction(m, p1_dofmap(m), rng.standard_normal(3 * m.n_triangles))
    assert l2_norm(f) == pytest.approx(error_l2(None, f), rel=1e-12)
