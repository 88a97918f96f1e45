import numpy as np
import pytest

from fluxrec import basis as fb
from fluxrec.quadrature import gl_rule, gll_rule


def tensor_points(nodes, dim):
    if dim == 1:
        return nodes[:, None]
    grids = np.meshgrid(*([nodes] * dim), indexing="ij")
    return np.stack([g.ravel(order="F") for g in grids], axis=1)


def test_lagrange_cardinal_property():
    for p in (1, 2, 3):
        for dim in (1, 2, 3):
            b = fb.TensorBasis(p, dim, "lagrange_gll")
            pts = tensor_points(gll_rule(p + 1).nodes, dim)
            A = fb.eval(b, pts)
            assert np.allclose(A, np.eye(b.Np), atol=1e-12)


def test_partition_of_unity():
    rng = np.random.default_rng(3)
    for dim in (1, 2, 3):
        b = fb.TensorBasis(3, dim, "lagrange_gll")
        pts = rng.uniform(-1, 1, (20, dim))
        A = fb.eval(b, pts)
        assert np.max(np.abs(A.sum(axis=1) - 1)) < 1e-13


def test_normalized_legendre_orthonormal():
    for p in (1, 2, 4):
        for dim in (1, 2):
            b = fb.TensorBasis(p, dim, "normalized_legendre")
            rule = gl_rule(p + 1)
            pts = tensor_points(rule.nodes, dim)
            w = np.ones(pts.shape[0])
            wg = np.meshgrid(*([rule.weights] * dim), indexing="ij")
            for g in wg:
                w *= g.ravel(order="F")
            A = fb.eval(b, pts)
            M = A.T @ (w[:, None] * A)
            assert np.allclose(M, np.eye(b.Np), atol=1e-12)


def test_normalized_legendre_point_values():
    b = fb.TensorBasis(1, 1, "normalized_legendre")
    A = fb.eval(b, np.array([[0.0]]))
    assert np.allclose(A, [[1 / np.sqrt(2), 0.0]], atol=1e-14)


def test_gradient_reproduces_polynomials():
    rng = np.random.default_rng(5)
    for p in (1, 3):
        for dim in (1, 2, 3):
            b = fb.TensorBasis(p, dim, "lagrange_gll")
            pts = rng.uniform(-1, 1, (15, dim))
            nodes = tensor_points(gll_rule(p + 1).nodes, dim)
            # interpolate u = sum of coordinates, gradient must be all ones
            u = nodes.sum(axis=1)
            grads = fb.gradient(b, pts)
            for G in grads:
                assert np.allclose(G @ u, np.ones(15), atol=1e-12)
            # gradient of a constant vanishes
            for G in grads:
                assert np.allclose(G @ np.ones(b.Np), 0.0, atol=1e-12)


def test_gradient_linear_hats():
    b = fb.TensorBasis(1, 1, "lagrange_gll")
    (G,) = fb.gradient(b, np.array([[0.3]]))
    assert np.allclose(G, [[-0.5, 0.5]], atol=1e-14)


def test_eval_partial_matches_kron_of_1d():
    rng = np.random.default_rng(7)
    p = 2
    b = fb.TensorBasis(p, 3, "lagrange_gll")
    pts = rng.uniform(-1, 1, (6, 3))
    sel = fb.DerivativeSelector(p, 0, p)
    A = fb.eval_partial(b, sel, pts)
    Fx = fb.eval_1d(b, pts[:, 0], p)
    Fy = fb.eval_1d(b, pts[:, 1], 0)
    Fz = fb.eval_1d(b, pts[:, 2], p)
    B = np.einsum("iz,iy,ix->izyx", Fz, Fy, Fx).reshape(6, -1)
    assert np.allclose(A, B, atol=1e-13)


def test_eval_partial_mode_degrees():
    # p-th derivative wipes out any mode of degree < p
    p = 2
    b = fb.TensorBasis(p, 1, "normalized_legendre")
    A = fb.eval_partial(b, fb.DerivativeSelector(p), np.array([[0.2], [0.7]]))
    assert np.allclose(A[:, 0], 0.0, atol=1e-14)
    assert np.allclose(A[:, 1], 0.0, atol=1e-14)
    # top mode: d^2/dx^2 of sqrt(5/2) * (3x^2-1)/2 = 3 sqrt(5/2)
    assert np.allclose(A[:, 2], 3 * np.sqrt(5 / 2), atol=1e-13)
    # first derivative of normalized P1 is the constant sqrt(3/2)
    b1 = fb.TensorBasis(1, 1, "normalized_legendre")
    A1 = fb.eval_partial(b1, fb.DerivativeSelector(1), np.array([[0.5]]))
    assert np.allclose(A1, [[0.0, np.sqrt(3 / 2)]], atol=1e-14)


def test_selector_validation():
    b = fb.TensorBasis(3, 2, "lagrange_gll")
    with pytest.raises(ValueError):
        fb.eval_partial(b, fb.DerivativeSelector(1, 0), np.zeros((1, 2)))
    with pytest.raises(ValueError):
        fb.eval_partial(b, fb.DerivativeSelector(0, 0), np.zeros((1, 2)))
    with pytest.raises(ValueError):
        fb.eval_partial(b, fb.DerivativeSelector(3, 0, 3), np.zeros((1, 2)))


def test_admissible_selectors():
    sels1 = fb.admissible_selectors(3, 1)
    assert [(s.s, s.v, s.w) for s, _ in sels1] == [(3, 0, 0)]
    sels2 = fb.admissible_selectors(2, 2)
    assert sorted((s.s, s.v) for s, _ in sels2) == [(0, 2), (2, 0), (2, 2)]
    assert sorted(e for _, e in sels2) == [1, 1, 2]
    sels3 = fb.admissible_selectors(2, 3)
    assert len(sels3) == 7
    assert sorted(e for _, e in sels3) == [1, 1, 1, 2, 2, 2, 3]


def test_legendre_transform_roundtrip():
    rng = np.random.default_rng(11)
    for dim in (1, 2, 3):
        T = fb.legendre_transform(2, dim)
        u = rng.standard_normal(T.shape[0])
        assert np.allclose(np.linalg.solve(T, T @ u), u, atol=1e-12)
    # constants: nodal all-ones vector maps to the single mean mode
    T = fb.legendre_transform(1, 2)
    m = T @ np.ones(4)
    assert abs(m[0] - 2.0) < 1e-12  # sqrt(2)^dim
    assert np.allclose(m[1:], 0.0, atol=1e-12)


def test_transform_agrees_with_change_of_basis():
    # T must convert nodal coefficients to modal ones exactly: evaluating
    # either expansion at random points gives the same function.
    rng = np.random.default_rng(13)
    p, dim = 3, 2
    T = fb.legendre_transform(p, dim)
    nodal = fb.TensorBasis(p, dim, "lagrange_gll")
    modal = fb.TensorBasis(p, dim, "normalized_legendre")
    u = rng.standard_normal((p + 1) ** dim)
    pts = rng.uniform(-1, 1, (9, dim))
    assert np.allclose(
        fb.eval(nodal, pts) @ u, fb.eval(modal, pts) @ (T @ u), atol=1e-11
    )
