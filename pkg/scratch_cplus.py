"""1D accuracy-knee bisection: largest c keeping OOA >= p+0.75 at (16,32)."""
import numpy as np

import fluxrec.operators as fop
import fluxrec.harness as fh
import fluxrec.diagnostics as fd
import fluxrec.schemes as fs
import fluxrec.timeint as ft


def l2_at(p, nel, c):
    mapping, topo, ops = fh.build_system(1, p, nel, domain=[(-1.0, 1.0)], c=c)
    scheme = fs.SchemeConfig("esfr_split", a=[1.0], flux="upwind", c=ops.c)
    dx = 2.0 / (nel * (p + 1))
    u0 = fh.interpolate(lambda X: np.sin(np.pi * X[..., 0]), mapping, p)
    # dt=0.5dx swamps the spatial order with RK4 time error for p >= 4
    dt_factor = 0.5 if p <= 3 else 0.05
    state, _ = ft.run(ft.SolutionState(u=u0), ops, scheme, 2.0, dt_factor * dx)
    exact = lambda X: np.sin(np.pi * (X[..., 0] - 2.0))
    l2, _ = fd.error_norms(state.u, exact, mapping, ops.ref.basis)
    return dx, l2


def ooa_at(p, c):
    (dx0, e0), (dx1, e1) = l2_at(p, 16, c), l2_at(p, 32, c)
    return np.log(e0 / e1) / np.log(dx0 / dx1)


for p in (4, 5):
    thr = p + 0.75
    o0 = ooa_at(p, 0.0)
    lo, hi = 1e-9, 10.0
    assert ooa_at(p, lo) >= thr, (p, o0)
    while ooa_at(p, hi) >= thr:
        hi *= 10.0
    for _ in range(24):
        mid = np.sqrt(lo * hi)
        if ooa_at(p, mid) >= thr:
            lo = mid
        else:
            hi = mid
    import fluxrec.basis as fb
    ref1 = fop.build_reference(fb.TensorBasis(p, 1, "lagrange_gll"))
    print(f"p={p}: ooa(c=0)={o0:.3f}  knee in [{lo:.4e}, {hi:.4e}]  "
          f"|c_minus|={abs(fop.estimate_c_minus(ref1)):.4e}")
