"""Semi-discrete residuals for scalar linear advection on curved meshes.

Five assemblies of du_hat/dt share the same volume and surface building
blocks and differ in which bracket each inverse norm is applied to:

  dg_conservative       M^-1 [ -sum_i S_i fr_i - surface(F* - own ref flux) ]
  dg_nonconservative    M^-1 [ -chi^T W (C grad u . a) - surface(F* - n.a u-) ]
  dg_split              M^-1 [ -half of each volume term - split surface ]
  esfr_split            N^-1 applied to the whole split bracket
  esfr_classical_split  M^-1 on the split volume, N^-1 on the split surface

with fr_i the projected reference flux, F* the interface flux, and
N = M + K the broken-norm matrix carried by the element operators.
States are batched: u may be [nel, Np] or [nel, Np, B] and the residual
matches the input shape.
"""

from dataclasses import dataclass

import numpy as np

from .operators import C_DG, CorrectionParameter

FORMS = (
    "dg_conservative",
    "dg_nonconservative",
    "dg_split",
    "esfr_split",
    "esfr_classical_split",
)
FLUXES = ("central", "upwind")


@dataclass(frozen=True)
class SchemeConfig:
    form: str
    a: np.ndarray                    # advection speed, dim-vector
    flux: str = "upwind"
    c: CorrectionParameter = C_DG    # echoed for provenance; DG forms ignore it

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown scheme form {self.form!r}; options: {FORMS}")
        if self.flux not in FLUXES:
            raise ValueError(f"unknown flux {self.flux!r}; options: {FLUXES}")
        object.__setattr__(self, "a", np.atleast_1d(np.asarray(self.a, dtype=float)))


def _with_batch(u):
    u = np.asarray(u, dtype=float)
    if u.ndim == 2:
        return u[:, :, None], True
    return u, False


def interior_traces(u, ops):
    """Facet values of the owning element, [nel, 2*dim, Nfp, B]."""
    return np.stack(
        [np.einsum("kj,mjb->mkb", cf, u) for cf in ops.ref.chi_f], axis=1
    )


def exterior_traces(traces, ops):
    """Neighbor-side facet values gathered through the topology."""
    topo = ops.topo
    return traces[topo.neighbors, topo.neighbor_face]


def numerical_flux(u_minus, u_plus, scaled_normal, a, flux):
    """Interface flux in reference form: n.a is the scaled-normal speed.

    central: n.a (u- + u+)/2
    upwind:  central minus |n.a| (u+ - u-)/2 (exact upwinding for scalar
    advection, realized as local Lax-Friedrichs with the exact speed)
    """
    na = scaled_normal @ np.asarray(a, dtype=float)
    avg = 0.5 * na[..., None] * (u_minus + u_plus)
    if flux == "central":
        return avg
    if flux == "upwind":
        return avg - 0.5 * np.abs(na)[..., None] * (u_plus - u_minus)
    raise ValueError(f"unknown flux {flux!r}; options: {FLUXES}")


def _advection_pieces(u, ops, a):
    """Nodal solution, contracted metric rows, and reference-flux coeffs."""
    ref, met = ops.ref, ops.metric
    u_v = np.einsum("vj,mjb->mvb", ref.chi_v, u)
    arc = np.einsum("n,mvni->mvi", a, met.C_vol)  # (a . C rows) per direction
    fr_nodal = arc[:, :, :, None] * u_v[:, :, None, :]
    fhat_r = np.einsum("pv,mvib->mpib", ref.Pi, fr_nodal)
    return u_v, arc, fhat_r


def reference_flux_coeffs(u, ops, a):
    """Projected reference flux per direction, [nel, Np, dim] (+batch)."""
    u3, flat = _with_batch(u)
    _, _, fhat_r = _advection_pieces(u3, ops, np.atleast_1d(np.asarray(a, float)))
    return fhat_r[..., 0] if flat else fhat_r


def _volume_conservative(ops, fhat_r):
    S = np.stack(ops.ref.S)
    return np.einsum("ipq,mqib->mpb", S, fhat_r)


def _volume_nonconservative(u, ops, arc):
    ref = ops.ref
    Gu = np.stack(
        [np.einsum("vj,mjb->mvb", g, u) for g in ref.grad_v], axis=2
    )  # [nel, Nv, dim, B]
    integrand = np.einsum("mvi,mvib->mvb", arc, Gu)
    return np.einsum("vp,v,mvb->mpb", ref.chi_v, ref.w_vol, integrand)


def _surface_lift(u, ops, cfg, fhat_r, kind):
    """chi_f^T W_f of the interface bracket, summed over faces.

    kind selects the interior correction subtracted from F*: the element's
    own normal reference flux ("conservative"), the normal physical flux of
    the interior trace ("nonconservative"), or half of each ("split").
    """
    ref, met = ops.ref, ops.metric
    ut = interior_traces(u, ops)
    uext = exterior_traces(ut, ops)
    Fstar = numerical_flux(ut, uext, met.normals_scaled, cfg.a, cfg.flux)
    na = met.normals_scaled @ cfg.a
    dim = ref.dim
    tr = np.empty_like(Fstar)
    for f in range(2 * dim):
        d, side = divmod(f, 2)
        sign = -1.0 if side == 0 else 1.0
        tr[:, f] = sign * np.einsum("kj,mjb->mkb", ref.chi_f[f], fhat_r[:, :, d, :])
    if kind == "conservative":
        bracket = Fstar - tr
    elif kind == "nonconservative":
        bracket = Fstar - na[..., None] * ut
    else:
        bracket = Fstar - 0.5 * na[..., None] * ut - 0.5 * tr
    out = 0.0
    for f in range(2 * dim):
        out = out + np.einsum(
            "kp,k,mkb->mpb", ref.chi_f[f], ref.w_fac, bracket[:, f]
        )
    return out


def residual_dg_conservative(u, ops, cfg):
    u3, flat = _with_batch(u)
    _, _, fhat_r = _advection_pieces(u3, ops, cfg.a)
    rhs = -_volume_conservative(ops, fhat_r)
    rhs -= _surface_lift(u3, ops, cfg, fhat_r, "conservative")
    out = ops.M_solver.solve(rhs)
    return out[..., 0] if flat else out


def residual_dg_nonconservative(u, ops, cfg):
    u3, flat = _with_batch(u)
    _, arc, fhat_r = _advection_pieces(u3, ops, cfg.a)
    rhs = -_volume_nonconservative(u3, ops, arc)
    rhs -= _surface_lift(u3, ops, cfg, fhat_r, "nonconservative")
    out = ops.M_solver.solve(rhs)
    return out[..., 0] if flat else out


def _split_parts(u, ops, cfg):
    _, arc, fhat_r = _advection_pieces(u, ops, cfg.a)
    vol = 0.5 * (
        _volume_conservative(ops, fhat_r) + _volume_nonconservative(u, ops, arc)
    )
    surf = _surface_lift(u, ops, cfg, fhat_r, "split")
    return vol, surf


def residual_dg_split(u, ops, cfg):
    u3, flat = _with_batch(u)
    vol, surf = _split_parts(u3, ops, cfg)
    out = ops.M_solver.solve(-vol - surf)
    return out[..., 0] if flat else out


def residual_esfr_split(u, ops, cfg):
    u3, flat = _with_batch(u)
    vol, surf = _split_parts(u3, ops, cfg)
    out = ops.N_solver.solve(-vol - surf)
    return out[..., 0] if flat else out


def residual_esfr_classical_split(u, ops, cfg):
    u3, flat = _with_batch(u)
    vol, surf = _split_parts(u3, ops, cfg)
    out = ops.M_solver.solve(-vol) + ops.N_solver.solve(-surf)
    return out[..., 0] if flat else out


RESIDUALS = {
    "dg_conservative": residual_dg_conservative,
    "dg_nonconservative": residual_dg_nonconservative,
    "dg_split": residual_dg_split,
    "esfr_split": residual_esfr_split,
    "esfr_classical_split": residual_esfr_classical_split,
}


def residual(u, ops, cfg):
    return RESIDUALS[cfg.form](u, ops, cfg)


def split_divergence_volume(f_nodal, ops, norm="esfr"):
    """Split-form approximation of div(f) from nodal physical flux values.

    f_nodal: [nel, Nv, dim] (+ optional batch axis) values of a flux field
    at the volume nodes.  Returns coefficients of the approximate
    divergence: half the conservative reference-flux divergence plus half
    the metric-contracted derivative of the projected physical flux, solved
    against N (norm="esfr") or M (norm="dg").  Used by the pure
    volume-term accuracy study.
    """
    ref, met = ops.ref, ops.metric
    f3 = np.asarray(f_nodal, dtype=float)
    flat = f3.ndim == 3
    if flat:
        f3 = f3[..., None]
    # conservative: project the reference flux, differentiate
    fr_nodal = np.einsum("mvni,mvnb->mvib", met.C_vol, f3)
    fhat_r = np.einsum("pv,mvib->mpib", ref.Pi, fr_nodal)
    vol_c = _volume_conservative(ops, fhat_r)
    # nonconservative: project the physical flux, differentiate, contract
    fhat = np.einsum("pv,mvnb->mpnb", ref.Pi, f3)
    Gf = np.stack(
        [np.einsum("vj,mjnb->mvnb", g, fhat) for g in ref.grad_v], axis=3
    )  # [nel, Nv, dim(n), dim(i), B]
    integrand = np.einsum("mvni,mvnib->mvb", met.C_vol, Gf)
    vol_nc = np.einsum("vp,v,mvb->mpb", ref.chi_v, ref.w_vol, integrand)
    solver = ops.N_solver if norm == "esfr" else ops.M_solver
    out = solver.solve(0.5 * (vol_c + vol_nc))
    return out[..., 0] if flat else out
