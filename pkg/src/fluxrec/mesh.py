"""Periodic conforming curvilinear meshes on tensor-product grids.

A mesh is a Cartesian partition of a box, warped by an analytic map
applied to the global grid-node coordinates.  Mapping support points sit
at tensor Gauss-Lobatto (grid) nodes of degree q per direction, so two
elements sharing a face hold bitwise-identical support points there.

Element and node orderings are x-fastest: element (i, j, k) has linear
index i + nx*(j + ny*k), and tensor nodes run the first coordinate
fastest.  Faces are numbered (-x, +x, -y, +y, -z, +z).
"""

import csv
from dataclasses import dataclass

import numpy as np

from .basis import TensorBasis
from .quadrature import gll_rule


# --- analytic warps ---------------------------------------------------------

def warp_identity(X):
    return np.array(X, dtype=float, copy=True)


def warp_3d_heavy(X):
    """Heavily warped 3D map on [0,1]^3; not periodic in the last two
    directions (used for single-mesh metric and derivative studies)."""
    xi, eta, zeta = X[..., 0], X[..., 1], X[..., 2]
    out = np.empty_like(X)
    out[..., 0] = xi + 0.1 * (np.cos(np.pi * eta) + np.cos(np.pi * zeta))
    out[..., 1] = eta + 0.1 * np.exp(1.0 - eta) * (
        np.sin(np.pi * xi) + np.sin(np.pi * zeta)
    )
    out[..., 2] = zeta + 0.05 * (np.sin(2 * np.pi * xi) + np.sin(2 * np.pi * eta))
    return out


def warp_nonsym(X):
    """Nonsymmetrically warped 2D map on [-1,1]^2; the boundary
    displacement vanishes, so the periodic box stays conforming."""
    xi, eta = X[..., 0], X[..., 1]
    out = np.empty_like(X)
    out[..., 0] = xi + 0.1 * np.cos(0.5 * np.pi * xi) * np.cos(1.5 * np.pi * eta)
    out[..., 1] = eta + 0.1 * np.sin(2 * np.pi * xi) * np.cos(0.5 * np.pi * eta)
    return out


def warp_skewsym(X):
    """Skew-symmetrically warped 2D map on [0,1]^2 with periodic
    displacements (curved periodic boundaries)."""
    xi, eta = X[..., 0], X[..., 1]
    out = np.empty_like(X)
    out[..., 0] = xi - 0.1 * np.sin(2 * np.pi * eta)
    out[..., 1] = eta + 0.1 * np.sin(2 * np.pi * xi)
    return out


def _jac_identity(X):
    dim = X.shape[-1]
    return np.broadcast_to(np.eye(dim), X.shape + (X.shape[-1],)).copy()


def _jac_3d_heavy(X):
    xi, eta, zeta = X[..., 0], X[..., 1], X[..., 2]
    J = np.empty(X.shape + (3,))
    e = np.exp(1.0 - eta)
    J[..., 0, 0] = 1.0
    J[..., 0, 1] = -0.1 * np.pi * np.sin(np.pi * eta)
    J[..., 0, 2] = -0.1 * np.pi * np.sin(np.pi * zeta)
    J[..., 1, 0] = 0.1 * np.pi * e * np.cos(np.pi * xi)
    J[..., 1, 1] = 1.0 - 0.1 * e * (np.sin(np.pi * xi) + np.sin(np.pi * zeta))
    J[..., 1, 2] = 0.1 * np.pi * e * np.cos(np.pi * zeta)
    J[..., 2, 0] = 0.1 * np.pi * np.cos(2 * np.pi * xi)
    J[..., 2, 1] = 0.1 * np.pi * np.cos(2 * np.pi * eta)
    J[..., 2, 2] = 1.0
    return J


def _jac_nonsym(X):
    xi, eta = X[..., 0], X[..., 1]
    J = np.empty(X.shape + (2,))
    J[..., 0, 0] = 1.0 - 0.05 * np.pi * np.sin(0.5 * np.pi * xi) * np.cos(1.5 * np.pi * eta)
    J[..., 0, 1] = -0.15 * np.pi * np.cos(0.5 * np.pi * xi) * np.sin(1.5 * np.pi * eta)
    J[..., 1, 0] = 0.2 * np.pi * np.cos(2 * np.pi * xi) * np.cos(0.5 * np.pi * eta)
    J[..., 1, 1] = 1.0 - 0.05 * np.pi * np.sin(2 * np.pi * xi) * np.sin(0.5 * np.pi * eta)
    return J


def _jac_skewsym(X):
    xi, eta = X[..., 0], X[..., 1]
    J = np.empty(X.shape + (2,))
    J[..., 0, 0] = 1.0
    J[..., 0, 1] = -0.2 * np.pi * np.cos(2 * np.pi * eta)
    J[..., 1, 0] = 0.2 * np.pi * np.cos(2 * np.pi * xi)
    J[..., 1, 1] = 1.0
    return J


WARPS = {
    "identity": warp_identity,
    "heavy3d": warp_3d_heavy,
    "nonsym2d": warp_nonsym,
    "skewsym2d": warp_skewsym,
}

WARP_JACOBIANS = {
    "identity": _jac_identity,
    "heavy3d": _jac_3d_heavy,
    "nonsym2d": _jac_nonsym,
    "skewsym2d": _jac_skewsym,
}


def warp_jacobian(warp, X):
    """Analytic derivative of the warp map, [..., n, d] = dx_n/dX_d for
    unwarped global coordinates X."""
    return WARP_JACOBIANS[warp](np.asarray(X, dtype=float))

WARP_DOMAINS = {
    "heavy3d": [(0.0, 1.0)] * 3,
    "nonsym2d": [(-1.0, 1.0)] * 2,
    "skewsym2d": [(0.0, 1.0)] * 2,
}

WARP_DIMS = {"heavy3d": 3, "nonsym2d": 2, "skewsym2d": 2}


# --- mesh containers --------------------------------------------------------

@dataclass(frozen=True)
class Mapping:
    dim: int
    q: int
    basis: TensorBasis          # shape functions, Lagrange-GLL degree q
    grid_nodes_ref: np.ndarray  # [Nq, dim] tensor GLL reference nodes
    support_points: np.ndarray  # [nel, Nq, dim] physical mapping nodes
    warp: str = "identity"      # analytic warp the support points sample
    support_unwarped: np.ndarray = None  # [nel, Nq, dim] pre-warp coordinates

    @property
    def nel(self):
        return self.support_points.shape[0]


@dataclass(frozen=True)
class MeshTopology:
    dim: int
    nel_per_dir: tuple
    neighbors: np.ndarray       # [nel, 2*dim] neighbor element index
    neighbor_face: np.ndarray   # [nel, 2*dim] face index on the neighbor
    domain: np.ndarray          # [dim, 2]
    periodic_shift: np.ndarray  # [nel, 2*dim, dim] shift to neighbor frame

    @property
    def nel(self):
        return int(np.prod(self.nel_per_dir))

    @property
    def nfaces(self):
        return 2 * self.dim

    def facet_permutation(self, element, face, n_facet_nodes):
        # conforming structured grid with a shared tensor ordering on both
        # sides of every face
        return np.arange(n_facet_nodes)


def tensor_nodes(nodes_1d, dim):
    """Tensor grid of a 1D node set, x-fastest, as [n^dim, dim]."""
    nodes_1d = np.asarray(nodes_1d, dtype=float)
    if dim == 1:
        return nodes_1d[:, None]
    grids = np.meshgrid(*([nodes_1d] * dim), indexing="ij")
    return np.stack([g.ravel(order="F") for g in grids], axis=1)


def _element_nodes_1d(lo, hi, nel, q):
    """Per-element 1D grid-node coordinates [nel, q+1] with breakpoints
    shared bitwise between neighbors."""
    bp = np.linspace(lo, hi, nel + 1)
    ref = gll_rule(q + 1).nodes
    nodes = bp[:-1, None] + 0.5 * (ref + 1.0)[None, :] * np.diff(bp)[:, None]
    nodes[:, 0] = bp[:-1]
    nodes[:, -1] = bp[1:]
    return nodes


def build_mesh(dim, elements_per_dir, q, warp="identity", domain=None):
    """Build a periodic warped mesh; returns (Mapping, MeshTopology)."""
    if isinstance(elements_per_dir, int):
        nel_per_dir = (elements_per_dir,) * dim
    else:
        nel_per_dir = tuple(elements_per_dir)
    if len(nel_per_dir) != dim:
        raise ValueError("elements_per_dir does not match dim")
    if q < 1:
        raise ValueError(f"mapping degree q must be >= 1, got {q}")
    if warp not in WARPS:
        raise ValueError(f"unknown warp {warp!r}; options: {sorted(WARPS)}")
    if warp in WARP_DIMS and WARP_DIMS[warp] != dim:
        raise ValueError(f"warp {warp!r} is {WARP_DIMS[warp]}D, mesh is {dim}D")
    if domain is None:
        domain = WARP_DOMAINS.get(warp, [(0.0, 1.0)] * dim)
    domain = np.asarray(domain, dtype=float).reshape(dim, 2)

    nodes_1d = [
        _element_nodes_1d(domain[d, 0], domain[d, 1], nel_per_dir[d], q)
        for d in range(dim)
    ]
    nel = int(np.prod(nel_per_dir))
    n1 = q + 1
    Nq = n1**dim

    # unwarped support points, x-fastest over both nodes and elements
    support = np.empty((nel, Nq, dim))
    for m in range(nel):
        idx = np.unravel_index(m, nel_per_dir, order="F")
        coords = [nodes_1d[d][idx[d]] for d in range(dim)]
        if dim == 1:
            support[m, :, 0] = coords[0]
        else:
            grids = np.meshgrid(*coords, indexing="ij")
            for d in range(dim):
                support[m, :, d] = grids[d].ravel(order="F")
    unwarped = support.copy()
    support = WARPS[warp](support)

    # periodic face connectivity by index arithmetic
    neighbors = np.empty((nel, 2 * dim), dtype=int)
    neighbor_face = np.empty((nel, 2 * dim), dtype=int)
    shift = np.zeros((nel, 2 * dim, dim))
    extent = domain[:, 1] - domain[:, 0]
    for m in range(nel):
        idx = list(np.unravel_index(m, nel_per_dir, order="F"))
        for d in range(dim):
            for side, step in ((0, -1), (1, +1)):
                f = 2 * d + side
                nidx = list(idx)
                nidx[d] = (idx[d] + step) % nel_per_dir[d]
                neighbors[m, f] = np.ravel_multi_index(nidx, nel_per_dir, order="F")
                neighbor_face[m, f] = 2 * d + (1 - side)
                # shift maps this element's face coordinates into the
                # neighbor's frame: x_here + shift == x_neighbor
                if idx[d] + step < 0:
                    shift[m, f, d] = extent[d]
                elif idx[d] + step >= nel_per_dir[d]:
                    shift[m, f, d] = -extent[d]

    mapping = Mapping(
        dim=dim,
        q=q,
        basis=TensorBasis(q, dim, "lagrange_gll"),
        grid_nodes_ref=tensor_nodes(gll_rule(n1).nodes, dim),
        support_points=support,
        warp=warp,
        support_unwarped=unwarped,
    )
    topo = MeshTopology(
        dim=dim,
        nel_per_dir=nel_per_dir,
        neighbors=neighbors,
        neighbor_face=neighbor_face,
        domain=domain,
        periodic_shift=shift,
    )
    return mapping, topo


def physical_coords(mapping, points_ref, elements=None):
    """Map reference points [npts, dim] to physical space for each element;
    returns [nel, npts, dim]."""
    from .basis import eval as basis_eval

    theta = basis_eval(mapping.basis, points_ref)
    sp = mapping.support_points
    if elements is not None:
        sp = sp[elements]
    return np.matmul(theta[None], sp)


def mesh_to_csv(mapping, path):
    """Dump support points as rows (element, node, x, y, z)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["element", "node", "x", "y", "z"])
        for m in range(mapping.nel):
            for i in range(mapping.support_points.shape[1]):
                xyz = np.zeros(3)
                xyz[: mapping.dim] = mapping.support_points[m, i]
                writer.writerow([m, i, *(repr(float(v)) for v in xyz)])


if __name__ == "__main__":
    mapping, topo = build_mesh(2, 4, q=3, warp="nonsym2d")
    print("elements:", mapping.nel, "support pts/el:", mapping.support_points.shape[1])
    print("neighbor row 0:", topo.neighbors[0])
