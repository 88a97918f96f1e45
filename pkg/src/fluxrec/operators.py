"""Discrete operators on the reference element and per mesh element.

Reference operators (mass M, stiffness S, projection Pi, facet traces)
are metric-free and shared by every element.  Element operators carry the
metric terms: the mass M_m, the broken-norm matrix K_m built from the
correction-parameter ladder, the norm N_m = M_m + K_m with its Cholesky
factor, and the filter N_m^{-1} M_m.
"""

from dataclasses import dataclass, field

import numpy as np

from . import basis as fb
from .mesh import tensor_nodes
from .quadrature import gl_rule


class StabilityDomainError(RuntimeError):
    """Raised when N_m = M_m + K_m is not positive definite."""


@dataclass(frozen=True)
class CorrectionParameter:
    """1D correction parameter; mixed-derivative blocks get c_1d raised to
    the total-order exponent (1 per direction at order p)."""

    c_1d: float

    def coeff(self, exponent):
        return self.c_1d**exponent


C_DG = CorrectionParameter(0.0)

# Largest correction (per 1D degree) that keeps the full design order in a
# 1D upwind advection order study (order measured on the 16->32 element
# pair, kept when the observed slope stays above p + 0.75).  Located by
# geometric bisection, then rounded down.
C_PLUS = {2: 5.9e-1, 3: 1.8e-2, 4: 3.7e-4, 5: 4.5e-6}


def c_plus(p):
    """Tabulated accuracy-threshold correction for the 1D degree p."""
    if p not in C_PLUS:
        raise ValueError(f"no tabulated positive correction for p={p}")
    return C_PLUS[p]


def reference_normals(dim):
    """Unit reference normals for faces (-x, +x, -y, +y, -z, +z)."""
    out = np.zeros((2 * dim, dim))
    for d in range(dim):
        out[2 * d, d] = -1.0
        out[2 * d + 1, d] = 1.0
    return out


def facet_nodes_ref(rule, dim):
    """Reference facet cubature nodes per face, tensor products of a 1D
    rule over the tangential directions."""
    faces = []
    for f in range(2 * dim):
        d, side = divmod(f, 2)
        if dim == 1:
            faces.append(np.array([[1.0 if side else -1.0]]))
            continue
        tang = tensor_nodes(rule.nodes, dim - 1)
        pts = np.empty((tang.shape[0], dim))
        tdirs = [j for j in range(dim) if j != d]
        for k, j in enumerate(tdirs):
            pts[:, j] = tang[:, k]
        pts[:, d] = 1.0 if side else -1.0
        faces.append(pts)
    return faces


def tensor_weights(rule, dim):
    if dim == 0:
        return np.array([1.0])
    w = rule.weights
    out = w
    for _ in range(dim - 1):
        out = np.kron(w, out)  # earlier directions fastest
    return out


@dataclass(frozen=True)
class ReferenceOperators:
    basis: fb.TensorBasis
    volume_rule: object
    facet_rule: object
    volume_nodes: np.ndarray      # [Nv, dim]
    w_vol: np.ndarray             # [Nv]
    chi_v: np.ndarray             # [Nv, Np]
    grad_v: tuple                 # dim tables [Nv, Np]
    M: np.ndarray                 # [Np, Np]
    S: tuple                      # dim stiffness matrices
    Pi: np.ndarray                # [Np, Nv]
    D: tuple                      # dim differentiation matrices M^-1 S
    facet_nodes: tuple            # per face [Nfp, dim]
    w_fac: np.ndarray             # [Nfp]
    chi_f: tuple                  # per face [Nfp, Np]
    normals_ref: np.ndarray       # [2*dim, dim]

    @property
    def p(self):
        return self.basis.p

    @property
    def dim(self):
        return self.basis.dim

    @property
    def Np(self):
        return self.basis.Np


def build_reference(basis, volume_rule=None, facet_rule=None):
    """Assemble the metric-free reference tables for a solution basis."""
    p, dim = basis.p, basis.dim
    if volume_rule is None:
        volume_rule = gl_rule(p + 1)
    if facet_rule is None:
        facet_rule = gl_rule(volume_rule.n)
    if 2 * volume_rule.n - 1 < 2 * p - 1:
        raise ValueError(
            f"volume rule with {volume_rule.n} points is too weak for p={p}"
        )
    vol_nodes = tensor_nodes(volume_rule.nodes, dim)
    w_vol = tensor_weights(volume_rule, dim)
    chi_v = fb.eval(basis, vol_nodes)
    grad_v = tuple(fb.gradient(basis, vol_nodes))
    M = chi_v.T @ (w_vol[:, None] * chi_v)
    S = tuple(chi_v.T @ (w_vol[:, None] * g) for g in grad_v)
    Pi = np.linalg.solve(M, chi_v.T * w_vol[None, :])
    D = tuple(np.linalg.solve(M, Sd) for Sd in S)
    fnodes = facet_nodes_ref(facet_rule, dim)
    w_fac = tensor_weights(facet_rule, dim - 1)
    chi_f = tuple(fb.eval(basis, pts) for pts in fnodes)
    return ReferenceOperators(
        basis=basis,
        volume_rule=volume_rule,
        facet_rule=facet_rule,
        volume_nodes=vol_nodes,
        w_vol=w_vol,
        chi_v=chi_v,
        grad_v=grad_v,
        M=M,
        S=S,
        Pi=Pi,
        D=D,
        facet_nodes=tuple(fnodes),
        w_fac=w_fac,
        chi_f=chi_f,
        normals_ref=reference_normals(dim),
    )


# --- broken-norm matrix and filter -----------------------------------------

def build_Km(ref_ops, metric, c, dim=None):
    """K_m = sum over admissible mixed p-th derivatives of
    c^(total order / p) * (d^sel chi)^T W J_m (d^sel chi), batched over
    elements."""
    dim = ref_ops.dim if dim is None else dim
    p = ref_ops.p
    nel = metric.J_vol.shape[0]
    Np = ref_ops.Np
    K = np.zeros((nel, Np, Np))
    if c.c_1d == 0.0:
        return K
    wJ = ref_ops.w_vol[None, :] * metric.J_vol  # [nel, Nv]
    for sel, expo in fb.admissible_selectors(p, dim):
        P = fb.eval_partial(ref_ops.basis, sel, ref_ops.volume_nodes)
        K += c.coeff(expo) * np.einsum("vi,mv,vj->mij", P, wJ, P)
    return K


def build_Km_via_powers(ref_ops, metric, c, dim=None):
    """Equivalent K_m assembly through powers of the differentiation
    matrices, K_m = sum c^e (D^sel)^T M_m (D^sel); used as a cross-check."""
    dim = ref_ops.dim if dim is None else dim
    p = ref_ops.p
    M_m = np.einsum(
        "vi,mv,vj->mij",
        ref_ops.chi_v,
        ref_ops.w_vol[None, :] * metric.J_vol,
        ref_ops.chi_v,
    )
    nel, Np = M_m.shape[0], ref_ops.Np
    K = np.zeros((nel, Np, Np))
    if c.c_1d == 0.0:
        return K
    for sel, expo in fb.admissible_selectors(p, dim):
        Dsel = np.eye(Np)
        for d, order in enumerate(sel.orders(dim)):
            if order:
                Dsel = np.linalg.matrix_power(ref_ops.D[d], order) @ Dsel
        K += c.coeff(expo) * np.einsum("mij,ik,jl->mkl", M_m, Dsel, Dsel)
    return K


class SPDSolver:
    """Batched SPD solver: Cholesky factor kept, inverse applied from the
    factor, one refinement pass when the residual is above 1e-12."""

    def __init__(self, A, what="matrix"):
        self.A = A
        n = A.shape[-1]
        try:
            self.L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError as exc:
            raise StabilityDomainError(
                f"{what} is not positive definite"
            ) from exc
        Linv = np.linalg.solve(self.L, np.broadcast_to(np.eye(n), A.shape))
        self.Ainv = np.einsum("mki,mkj->mij", Linv, Linv)

    def solve(self, b):
        """Solve A x = b for b of shape [nel, n] or [nel, n, nrhs]."""
        squeeze = b.ndim == 2
        if squeeze:
            b = b[..., None]
        x = self.Ainv @ b
        r = b - self.A @ x
        scale = max(np.max(np.abs(b)), 1.0)
        if np.max(np.abs(r)) > 1e-12 * scale:
            x = x + self.Ainv @ r
        return x[..., 0] if squeeze else x


@dataclass
class ElementOperators:
    ref: ReferenceOperators
    metric: object
    topo: object
    c: CorrectionParameter
    M_m: np.ndarray          # [nel, Np, Np]
    K_m: np.ndarray
    N_m: np.ndarray
    M_solver: SPDSolver
    N_solver: SPDSolver

    @property
    def nel(self):
        return self.M_m.shape[0]


def build_element_operators(ref_ops, metric, topo, c=C_DG):
    """Assemble all per-element matrices for a mesh with metric data."""
    wJ = ref_ops.w_vol[None, :] * metric.J_vol
    M_m = np.einsum("vi,mv,vj->mij", ref_ops.chi_v, wJ, ref_ops.chi_v)
    K_m = build_Km(ref_ops, metric, c)
    N_m = M_m + K_m
    return ElementOperators(
        ref=ref_ops,
        metric=metric,
        topo=topo,
        c=c,
        M_m=M_m,
        K_m=K_m,
        N_m=N_m,
        M_solver=SPDSolver(M_m, "element mass matrix"),
        N_solver=SPDSolver(N_m, "norm matrix M_m + K_m"),
    )


def build_filter(element_ops):
    """ESFR filter F_m = N_m^{-1} M_m and its normalized-Legendre-basis
    counterpart T F_m T^{-1}."""
    F = element_ops.N_solver.solve(element_ops.M_m)
    T = fb.legendre_transform(element_ops.ref.p, element_ops.ref.dim)
    F_ref = np.einsum("ij,mjk,kl->mil", T, F, np.linalg.inv(T))
    return F, F_ref


def estimate_c_minus(ref_ops, p=None, dim=None, tol=1e-10):
    """Lower stability bound on c_1d: the infimum of values for which
    M + K(c) stays positive definite on the affine reference element,
    located by scan plus bisection on the smallest eigenvalue."""
    p = ref_ops.p if p is None else p
    dim = ref_ops.dim if dim is None else dim

    tables = [
        (fb.eval_partial(ref_ops.basis, sel, ref_ops.volume_nodes), expo)
        for sel, expo in fb.admissible_selectors(p, dim)
    ]
    w = ref_ops.w_vol

    def min_eig(c1d):
        cpar = CorrectionParameter(c1d)
        N = ref_ops.M.copy()
        for P, expo in tables:
            N += cpar.coeff(expo) * (P.T @ (w[:, None] * P))
        return np.linalg.eigvalsh(N)[0]

    # walk down from zero until the smallest eigenvalue goes negative
    lo, hi = None, 0.0
    step = 1e-6
    while step < 1e6:
        if min_eig(-step) < 0.0:
            lo = -step
            break
        hi = -step
        step *= 1.5
    if lo is None:
        raise RuntimeError("no loss of positive definiteness found")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if min_eig(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


if __name__ == "__main__":
    b = fb.TensorBasis(3, 1, "lagrange_gll")
    ref = build_reference(b)
    print("M symmetric:", np.allclose(ref.M, ref.M.T))
    print("Pi chi = I:", np.abs(ref.Pi @ ref.chi_v - np.eye(ref.Np)).max())
    print("c_minus(p=3, 1D):", estimate_c_minus(ref))
