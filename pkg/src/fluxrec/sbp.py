"""Hybridized summation-by-parts verification path.

Assembles the skew-hybridized reference operator (volume nodes plus all
facet nodes) and its metric-weighted counterpart, then evaluates the
advection residual as a Hadamard product with a two-point central flux.
The point of the module is the equivalence check: this assembly must
reproduce the filtered split-form residual from `schemes` to round-off.
It is verification-only and stays off every performance path.

Hybrid node ordering: volume cubature nodes first, then facet cubature
nodes face by face (-x, +x, -y, +y, -z, +z).
"""

from dataclasses import dataclass

import numpy as np

from . import schemes as fs


@dataclass
class HybridizedOperator:
    dim: int
    Nv: int
    Nfp: int
    P_hyb_T: np.ndarray   # [Np, Nh] interpolation to hybrid nodes, transposed
    Q_tilde: tuple        # per reference direction, [Nh, Nh]
    Q_m: np.ndarray       # [nel, dim, Nh, Nh] metric-weighted operators
    C_hyb: np.ndarray     # [nel, Nh, dim, dim] metric rows at hybrid nodes

    @property
    def Nh(self):
        return self.P_hyb_T.shape[1]


def build_hybridized(ops):
    """Assemble the hybridized operators for existing element operators."""
    ref, met = ops.ref, ops.metric
    dim, Np = ref.dim, ref.Np
    Nv = ref.chi_v.shape[0]
    Nfp = ref.chi_f[0].shape[0]
    nfaces = 2 * dim
    Nh = Nv + nfaces * Nfp

    Minv_chifT = [np.linalg.solve(ref.M, cf.T) for cf in ref.chi_f]
    W_chi_v = ref.w_vol[:, None] * ref.chi_v

    Q_tilde = []
    for i in range(dim):
        Q = W_chi_v @ ref.D[i] @ ref.Pi
        Qt = np.zeros((Nh, Nh))
        Qt[:Nv, :Nv] = 0.5 * (Q - Q.T)
        for f in range(nfaces):
            nhat = ref.normals_ref[f, i]
            if nhat == 0.0:
                continue
            sl = slice(Nv + f * Nfp, Nv + (f + 1) * Nfp)
            lift = W_chi_v @ (Minv_chifT[f] * ref.w_fac[None, :])
            Qt[:Nv, sl] = 0.5 * nhat * lift
            Qt[sl, :Nv] = -0.5 * nhat * (ref.w_fac[:, None] * ref.chi_f[f]) @ ref.Pi
            Qt[sl, sl] = np.diag(0.5 * nhat * ref.w_fac)
        Q_tilde.append(Qt)

    nel = met.C_vol.shape[0]
    C_hyb = np.concatenate(
        [met.C_vol, met.C_fac.reshape(nel, nfaces * Nfp, dim, dim)], axis=1
    )
    Q_m = np.zeros((nel, dim, Nh, Nh))
    for n in range(dim):
        for j in range(dim):
            c = C_hyb[:, :, n, j]
            Q_m[:, n] += 0.5 * (
                c[:, :, None] * Q_tilde[j][None] + Q_tilde[j][None] * c[:, None, :]
            )

    P_hyb_T = np.hstack([ref.chi_v.T] + [cf.T for cf in ref.chi_f])
    return HybridizedOperator(
        dim=dim, Nv=Nv, Nfp=Nfp, P_hyb_T=P_hyb_T,
        Q_tilde=tuple(Q_tilde), Q_m=Q_m, C_hyb=C_hyb,
    )


def two_point_volume(u_hyb, hyb, a):
    """sum_n (2 Q_m^n o F^n) 1 for the central two-point advective flux.

    With (F^n)_{jk} = a_n (u_j + u_k)/2 the Hadamard contraction collapses
    to a_n (u o (Q_m^n 1) + Q_m^n u) per direction.
    """
    out = np.zeros_like(u_hyb)
    for n in range(hyb.dim):
        Qn = hyb.Q_m[:, n]
        out += a[n] * (
            u_hyb * np.einsum("mjk->mj", Qn)
            + np.einsum("mjk,mk->mj", Qn, u_hyb)
        )
    return out


def hadamard_residual(u, hyb, ops, cfg):
    """du/dt from the hybridized operator plus interface correction."""
    ref, met = ops.ref, ops.metric
    a = np.asarray(cfg.a, dtype=float)
    u_hyb = np.einsum("ph,mp->mh", hyb.P_hyb_T, u)
    vol = np.einsum("ph,mh->mp", hyb.P_hyb_T, two_point_volume(u_hyb, hyb, a))

    nfaces = 2 * ref.dim
    tr = u_hyb[:, hyb.Nv:].reshape(-1, nfaces, hyb.Nfp)
    tr_out = fs.exterior_traces(tr[..., None], ops)[..., 0]
    fstar = fs.numerical_flux(
        tr[..., None], tr_out[..., None], met.normals_scaled, a, cfg.flux
    )[..., 0]
    na = np.einsum("mfkn,n->mfk", met.normals_scaled, a)
    corr = fstar - na * tr
    surf = sum(
        np.einsum("kp,k,mk->mp", ref.chi_f[f], ref.w_fac, corr[:, f])
        for f in range(nfaces)
    )
    return ops.N_solver.solve(-(vol + surf)[..., None])[..., 0]
