"""Error norms and observed orders of accuracy.

Discretization errors are measured against a callable exact solution on a
refined Gauss-Legendre grid (p + 10 points per direction by default).  The
quadrature weight at each node uses the mapping Jacobian determinant
evaluated directly at that node -- error weighting only needs a consistent
volume element, not a discretely divergence-free one.
"""

from dataclasses import dataclass

import numpy as np

from . import basis as fb
from .mesh import physical_coords, tensor_nodes
from .metrics import jacobian_at
from .operators import tensor_weights
from .quadrature import gl_rule

OVERINT_EXTRA = 10


@dataclass(frozen=True)
class ErrorReport:
    l2: float
    linf: float
    dx: float
    p: int
    dim: int
    scheme: str = ""
    c: float = 0.0
    flux: str = ""


def refined_grid(p, dim, extra=OVERINT_EXTRA):
    """GL tensor grid with (p + extra) points per direction: (points, weights)."""
    rule = gl_rule(p + extra)
    return tensor_nodes(rule.nodes, dim), tensor_weights(rule, dim)


def _sampled_error(u, exact_fn, mapping, basis, extra):
    pts, w = refined_grid(basis.p, basis.dim, extra)
    theta = fb.eval(basis, pts)
    uq = np.einsum("qj,mj->mq", theta, u)
    uex = exact_fn(physical_coords(mapping, pts))
    return uq - uex, w, jacobian_at(mapping, pts)


def error_norms(u, exact_fn, mapping, basis, extra=OVERINT_EXTRA):
    """(L2, Linf) of u - exact over the refined grid."""
    err, w, J = _sampled_error(u, exact_fn, mapping, basis, extra)
    l2 = np.sqrt(np.sum(err * err * (w[None, :] * J)))
    return float(l2), float(np.max(np.abs(err)))


def l2_error(u, exact_fn, mapping, basis, extra=OVERINT_EXTRA):
    return error_norms(u, exact_fn, mapping, basis, extra)[0]


def linf_error(u, exact_fn, mapping, basis, extra=OVERINT_EXTRA):
    return error_norms(u, exact_fn, mapping, basis, extra)[1]


def ooa(levels):
    """Observed orders from a refinement ladder of (dx, err) pairs.

    slope_k = log(err_{k-1}/err_k) / log(dx_{k-1}/dx_k); a repeated error
    gives slope 0.
    """
    out = []
    for (dx0, e0), (dx1, e1) in zip(levels[:-1], levels[1:]):
        out.append(float(np.log(e0 / e1) / np.log(dx0 / dx1)))
    return out


if __name__ == "__main__":
    from .mesh import build_mesh

    from .quadrature import gll_rule

    basis = fb.TensorBasis(3, 2, "lagrange_gll")
    nodes = tensor_nodes(gll_rule(basis.p + 1).nodes, 2)
    f = lambda X: np.sin(np.pi * X[..., 0]) * np.sin(np.pi * X[..., 1])
    ladder = []
    for nel in (4, 8, 16):
        mapping, topo = build_mesh(2, nel, q=basis.p, warp="nonsym2d")
        u = f(physical_coords(mapping, nodes))
        dx = 2.0 / (nel * (basis.p + 1))
        ladder.append((dx, l2_error(u, f, mapping, basis)))
        print(f"nel={nel:3d}  L2={ladder[-1][1]:.3e}")
    print("OOA:", [f"{s:.2f}" for s in ooa(ladder)])
