"""Tensor-product polynomial bases of degree p per direction.

Two kinds are supported:

* ``LagrangeGLL`` -- nodal Lagrange polynomials on Gauss-Lobatto points
  (the solution basis),
* ``NormalizedLegendre`` -- orthonormal Legendre modes (the reference
  basis used for filter diagnostics).

Multi-indices are ordered x-fastest: column j of an evaluation matrix is
the basis function with 1D indices ``(j % n1, (j // n1) % n1, j // n1**2)``
for ``n1 = p + 1``.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg

from .quadrature import gl_rule, gll_rule


@dataclass(frozen=True)
class TensorBasis:
    p: int
    dim: int
    kind: str  # "lagrange_gll" | "normalized_legendre"

    def __post_init__(self):
        if self.kind not in ("lagrange_gll", "normalized_legendre"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.p < 0:
            raise ValueError(f"p must be >= 0, got {self.p}")

    @property
    def n1(self):
        return self.p + 1

    @property
    def Np(self):
        return (self.p + 1) ** self.dim


@dataclass(frozen=True)
class DerivativeSelector:
    """Mixed derivative order per direction; each entry is 0 or p and the
    total order must be at least p."""

    s: int
    v: int = 0
    w: int = 0

    def orders(self, dim):
        return (self.s, self.v, self.w)[:dim]


def admissible_selectors(p, dim):
    """All derivative selectors for degree p in `dim` dimensions, with the
    corresponding exponent of the 1D correction parameter."""
    out = []
    choices = [(0, p)] * dim + [(0, 0)] * (3 - dim)
    for s in choices[0] if dim >= 1 else (0,):
        for v in dict.fromkeys(choices[1]):
            for w in dict.fromkeys(choices[2]):
                if s + v + w >= p and s + v + w > 0:
                    out.append((DerivativeSelector(s, v, w), (s + v + w) // p))
    return out


def _check_selector(sel, p, dim):
    orders = (sel.s, sel.v, sel.w)
    for d in range(3):
        o = orders[d]
        if d < dim:
            if o not in (0, p):
                raise ValueError(f"selector order {o} not in {{0, {p}}}")
        elif o != 0:
            raise ValueError(f"selector uses direction {d} but dim={dim}")
    if sum(orders) < p:
        raise ValueError(f"selector total order {sum(orders)} < p={p}")


def _legendre_table(x, p, der):
    """[len(x) x (p+1)] table of the der-th derivative of the orthonormal
    Legendre polynomials at points x."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((x.size, p + 1))
    for k in range(p + 1):
        coef = np.zeros(k + 1)
        coef[k] = np.sqrt((2 * k + 1) / 2.0)
        if der > 0:
            coef = npleg.legder(coef, der)
        out[:, k] = npleg.legval(x, coef) if coef.size else 0.0
    return out


_vinv_cache: dict[int, np.ndarray] = {}


def _gll_vandermonde_inv(p):
    """Inverse of V[i,k] = P~_k(gll_i); Lagrange values follow from
    L(x) = P~(x) V^{-1}."""
    if p not in _vinv_cache:
        nodes = gll_rule(p + 1).nodes if p > 0 else np.array([0.0])
        V = _legendre_table(nodes, p, 0)
        _vinv_cache[p] = np.linalg.inv(V)
    return _vinv_cache[p]


def eval_1d(basis, x, der=0):
    """1D factor table [len(x) x (p+1)] of the der-th derivative."""
    table = _legendre_table(x, basis.p, der)
    if basis.kind == "lagrange_gll":
        table = table @ _gll_vandermonde_inv(basis.p)
    return table


def _tensor_eval(basis, points, orders):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None] if basis.dim == 1 else points[None, :]
    if points.shape[1] != basis.dim:
        raise ValueError(
            f"points have {points.shape[1]} coordinates, basis dim {basis.dim}"
        )
    factors = [
        eval_1d(basis, points[:, d], orders[d]) for d in range(basis.dim)
    ]
    if basis.dim == 1:
        return factors[0]
    if basis.dim == 2:
        out = np.einsum("iy,ix->iyx", factors[1], factors[0])
    else:
        out = np.einsum("iz,iy,ix->izyx", factors[2], factors[1], factors[0])
    return out.reshape(points.shape[0], basis.Np)


def eval(basis, points):
    """Evaluation matrix [n_points x Np]: entry (i, j) = chi_j(point_i)."""
    return _tensor_eval(basis, points, (0,) * basis.dim)


def eval_partial(basis, sel, points):
    """Mixed-derivative table for an admissible selector (each direction's
    order is 0 or p)."""
    _check_selector(sel, basis.p, basis.dim)
    return _tensor_eval(basis, points, sel.orders(basis.dim))


def gradient(basis, points):
    """First-derivative tables, one [n_points x Np] matrix per direction."""
    out = []
    for d in range(basis.dim):
        orders = [0] * basis.dim
        orders[d] = 1
        out.append(_tensor_eval(basis, points, tuple(orders)))
    return out


def legendre_transform(p, dim):
    """Change of basis T from Lagrange-GLL coefficients to orthonormal
    Legendre coefficients, built by projection on a GL volume rule."""
    rule = gl_rule(p + 1)
    nodal = TensorBasis(p, dim, "lagrange_gll")
    modal = TensorBasis(p, dim, "normalized_legendre")
    if dim == 1:
        pts = rule.nodes[:, None]
        w = rule.weights
    else:
        grids = np.meshgrid(*([rule.nodes] * dim), indexing="ij")
        pts = np.stack([g.ravel(order="F") for g in grids], axis=1)
        wg = np.meshgrid(*([rule.weights] * dim), indexing="ij")
        w = np.ones(pts.shape[0])
        for g in wg:
            w *= g.ravel(order="F")
    chi_modal = eval(modal, pts)
    chi_nodal = eval(nodal, pts)
    M_ref = chi_modal.T @ (w[:, None] * chi_modal)
    T = np.linalg.solve(M_ref, chi_modal.T @ (w[:, None] * chi_nodal))
    return T


if __name__ == "__main__":
    b = TensorBasis(3, 2, "lagrange_gll")
    pts = np.random.default_rng(0).uniform(-1, 1, (5, 2))
    A = eval(b, pts)
    print("partition of unity:", np.abs(A.sum(axis=1) - 1).max())
    T = legendre_transform(2, 2)
    print("T shape:", T.shape)
