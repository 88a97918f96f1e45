"""Metric terms for curvilinear elements.

The cofactor matrix C (rows = physical components, columns = reference
directions, C_{ni} = J * d xi_i / d x_n) and the Jacobian determinant J
are evaluated at volume and facet cubature nodes.  In 3D the default
"conservative curl" form first evaluates x_l grad(x_m) at the mapping's
grid nodes, re-reads those values as a degree-q field, and only then
takes its curl at the target nodes; the divergence of each row of C then
vanishes to machine precision (the interpolated argument is a polynomial
the mapping basis represents exactly, and div of curl is identically
zero).  The "cross_product" form instead evaluates the exact analytic
warp derivatives pointwise and forms grad(x_m) x grad(x_l) directly;
those entries are not polynomials, so their nodal divergence does not
vanish on warped meshes.  "cross_product_grid" samples the same exact
product at the grid nodes and interpolates — interpolation does not
commute with the divergence, so it fails too.  Both are kept as negative
controls.

2D meshes are lifted to one layer of a 3D slab with z = zeta, so the
same pipeline covers both dimensions; 1D is trivial (C = 1).
"""

from dataclasses import dataclass

import numpy as np

from . import basis as fb
from .basis import TensorBasis
from .quadrature import gll_rule

FORMS = (
    "conservative_curl",
    "invariant_curl",
    "cross_product",
    "cross_product_grid",
)

_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))  # rows (n, m, l)


class DegenerateMappingError(RuntimeError):
    pass


@dataclass
class MetricData:
    dim: int
    form: str
    C_vol: np.ndarray           # [nel, Nv, dim, dim]
    J_vol: np.ndarray           # [nel, Nv]
    C_fac: np.ndarray           # [nel, 2*dim, Nfp, dim, dim]
    J_fac: np.ndarray           # [nel, 2*dim, Nfp]
    normals_ref: np.ndarray     # [2*dim, dim]
    normals_scaled: np.ndarray  # [nel, 2*dim, Nfp, dim]  (= nhat_ref C^T)
    gcl: np.ndarray | None = None

    @property
    def nel(self):
        return self.J_vol.shape[0]


def _deriv_tables(mbasis, pts):
    """Evaluation and first-derivative tables of the mapping basis."""
    theta = fb.eval(mbasis, pts)
    grads = fb.gradient(mbasis, pts)
    return theta, grads


def _embed_2d_support(support, q):
    """Lift [nel, (q+1)^2, 2] support points to a z = zeta slab
    [nel, (q+1)^3, 3]."""
    nel, Nq2, _ = support.shape
    n1 = q + 1
    zeta = gll_rule(n1).nodes
    out = np.empty((nel, Nq2 * n1, 3))
    out[:, :, :2] = np.tile(support, (1, n1, 1))
    out[:, :, 2] = np.repeat(zeta, Nq2)[None, :]
    return out


def _apply_tables(tables, values):
    """Batched [T, Ng] x [nel, Ng, k] -> [nel, T, k, len(tables)]."""
    return np.stack([np.matmul(G[None], values) for G in tables], axis=-1)


def _metric_rows_3d(support, q, targets, form):
    """C [nel, T, 3, 3] and J [nel, T] for 3D support points (curl forms)."""
    mbasis = TensorBasis(q, 3, "lagrange_gll")
    grid_pts = _grid_nodes(q)
    _, grads_t = _deriv_tables(mbasis, targets)

    # Jacobian at targets (exact: x is a degree-q polynomial)
    dX_t = _apply_tables(grads_t, support)  # [nel, T, n, d]
    J = np.linalg.det(dX_t)

    C = np.empty(dX_t.shape)
    _, grads_g = _deriv_tables(mbasis, grid_pts)
    dX_g = _apply_tables(grads_g, support)
    for n, m, l in _CYCLIC:
        if form == "conservative_curl":
            A = support[:, :, l, None] * dX_g[:, :, m, :]  # [nel, Ng, 3]
        else:
            A = 0.5 * (
                support[:, :, l, None] * dX_g[:, :, m, :]
                - support[:, :, m, None] * dX_g[:, :, l, :]
            )
        dA = [np.matmul(G[None], A) for G in grads_t]
        C[:, :, n, 0] = -(dA[1][:, :, 2] - dA[2][:, :, 1])
        C[:, :, n, 1] = -(dA[2][:, :, 0] - dA[0][:, :, 2])
        C[:, :, n, 2] = -(dA[0][:, :, 1] - dA[1][:, :, 0])
    return C, J


def jacobian_at(mapping, targets):
    """Mapping-Jacobian determinant alone at reference points, [nel, T];
    the cheap path for volume weighting where no cofactor rows are needed."""
    supp = mapping.support_points
    _, grads = _deriv_tables(mapping.basis, targets)
    if mapping.dim == 1:
        return np.matmul(grads[0][None], supp)[:, :, 0]
    return np.linalg.det(_apply_tables(grads, supp))


def _grid_nodes(q):
    from .mesh import tensor_nodes

    return tensor_nodes(gll_rule(q + 1).nodes, 3)


def _analytic_dX(mapping, pts):
    """Exact d x_n / d xi_i at reference points: chain rule through the
    (affine) unwarped box coordinates and the closed-form warp derivative."""
    if mapping.support_unwarped is None:
        raise ValueError(
            "analytic metric forms need warp and support_unwarped on the Mapping"
        )
    from .mesh import warp_jacobian

    theta, grads = _deriv_tables(mapping.basis, pts)
    un = mapping.support_unwarped
    Xg = np.einsum("tg,mgd->mtd", theta, un)
    dXg = np.stack([np.einsum("tg,mgn->mtn", G, un) for G in grads], axis=-1)
    Jw = warp_jacobian(mapping.warp, Xg)
    return np.einsum("mtnk,mtki->mtni", Jw, dXg)


def _cross_C(dX):
    """Cofactor rows straight from first-derivative products."""
    dim = dX.shape[-1]
    C = np.empty_like(dX)
    if dim == 2:
        C[..., 0, 0] = dX[..., 1, 1]
        C[..., 0, 1] = -dX[..., 1, 0]
        C[..., 1, 0] = -dX[..., 0, 1]
        C[..., 1, 1] = dX[..., 0, 0]
    else:
        for n, m, l in _CYCLIC:
            C[..., n, :] = np.cross(dX[..., m, :], dX[..., l, :])
    return C


def _metrics_analytic(mapping, targets, form):
    """Negative-control forms: exact derivative products, either straight
    at the targets or sampled at grid nodes and interpolated."""
    if form == "cross_product":
        dX = _analytic_dX(mapping, targets)
        return _cross_C(dX), np.linalg.det(dX)
    dX_g = _analytic_dX(mapping, mapping.grid_nodes_ref)
    theta_t = fb.eval(mapping.basis, targets)
    C = np.einsum("tg,mgni->mtni", theta_t, _cross_C(dX_g))
    J = np.einsum("tg,mg->mt", theta_t, np.linalg.det(dX_g))
    return C, J


def _metrics_at(mapping, targets, form):
    """Dispatch on dimension and form; returns (C, J) at reference points."""
    dim, q = mapping.dim, mapping.q
    supp = mapping.support_points
    if dim == 1:
        theta, grads = _deriv_tables(mapping.basis, targets)
        J = np.einsum("tg,mg->mt", grads[0], supp[:, :, 0])
        C = np.ones(J.shape + (1, 1))
        return C, J
    if form in ("cross_product", "cross_product_grid"):
        return _metrics_analytic(mapping, targets, form)
    if form not in ("conservative_curl", "invariant_curl"):
        raise ValueError(f"unknown metric form {form!r}; options: {FORMS}")
    if dim == 2:
        supp3 = _embed_2d_support(supp, q)
        targets3 = np.hstack([targets, np.zeros((targets.shape[0], 1))])
        C3, J3 = _metric_rows_3d(supp3, q, targets3, form)
        return C3[:, :, :2, :2], J3
    return _metric_rows_3d(supp, q, targets, form)


def compute_metrics(mapping, element=None, volume_nodes=None, facet_nodes=None,
                    form="conservative_curl"):
    """Metric data at volume and facet cubature nodes.

    `element` selects a single element (None = all, batched).  `facet_nodes`
    is a sequence of per-face reference point sets.
    """
    if form not in FORMS:
        raise ValueError(f"unknown metric form {form!r}; options: {FORMS}")
    if volume_nodes is None or facet_nodes is None:
        raise ValueError("volume_nodes and facet_nodes are required")
    full = mapping
    if element is not None:
        from .mesh import Mapping

        un = mapping.support_unwarped
        full = Mapping(
            dim=mapping.dim,
            q=mapping.q,
            basis=mapping.basis,
            grid_nodes_ref=mapping.grid_nodes_ref,
            support_points=mapping.support_points[element : element + 1],
            warp=mapping.warp,
            support_unwarped=None if un is None else un[element : element + 1],
        )
    dim = full.dim
    C_vol, J_vol = _metrics_at(full, volume_nodes, form)
    _check_positive(J_vol, "volume")
    nfp = facet_nodes[0].shape[0]
    nel = C_vol.shape[0]
    C_fac = np.empty((nel, 2 * dim, nfp, dim, dim))
    J_fac = np.empty((nel, 2 * dim, nfp))
    for f in range(2 * dim):
        C_fac[:, f], J_fac[:, f] = _metrics_at(full, facet_nodes[f], form)
        _check_positive(J_fac[:, f], f"face {f}")
    normals_ref = np.zeros((2 * dim, dim))
    for d in range(dim):
        normals_ref[2 * d, d] = -1.0
        normals_ref[2 * d + 1, d] = 1.0
    normals_scaled = np.einsum("fi,mfkni->mfkn", normals_ref, C_fac)
    return MetricData(
        dim=dim,
        form=form,
        C_vol=C_vol,
        J_vol=J_vol,
        C_fac=C_fac,
        J_fac=J_fac,
        normals_ref=normals_ref,
        normals_scaled=normals_scaled,
    )


def _check_positive(J, where):
    if np.min(J) <= 1e-12:
        m, k = np.unravel_index(np.argmin(J), J.shape[:2] if J.ndim == 2 else J.shape)
        raise DegenerateMappingError(
            f"mapping degenerate at {where} node {k} of element {m}: J={J.min():.3e}"
        )


def gcl_residual(metric, ref_ops):
    """Per-row maximum of |sum_i d C_{ni} / d xi_i| over all volume nodes,
    with the divergence taken by the solution-degree nodal derivative."""
    dim = metric.dim
    # nodal derivative at volume nodes: grad chi(xi_v) Pi
    Dn = [g @ ref_ops.Pi for g in ref_ops.grad_v]
    out = np.zeros(dim)
    for n in range(dim):
        r = np.zeros_like(metric.J_vol)
        for i in range(dim):
            r += np.einsum("vk,mk->mv", Dn[i], metric.C_vol[:, :, n, i])
        out[n] = np.abs(r).max()
    metric.gcl = out
    return out


def facet_metric_consistency(topo, metric, interior_only=False):
    """Max mismatch of scaled normals across paired faces: the interior
    normal must be the exact negative of the neighbor's."""
    worst = 0.0
    for f in range(2 * metric.dim):
        mn = topo.neighbors[:, f]
        fn = topo.neighbor_face[0, f]  # uniform on a structured grid
        mine = metric.normals_scaled[:, f]
        theirs = metric.normals_scaled[mn, fn]
        mismatch = np.abs(mine + theirs).max(axis=(1, 2))
        if interior_only:
            boundary = np.any(topo.periodic_shift[:, f] != 0.0, axis=1)
            mismatch = mismatch[~boundary]
        if mismatch.size:
            worst = max(worst, mismatch.max())
    return worst
