import numpy as np

import fluxrec.harness as fh
import fluxrec.schemes as fs

for warp, nel in (("skewsym2d", 4), ("nonsym2d", 8)):
    prob = fh.advection_problem(warp, "ooa")
    extent = prob.domain[0][1] - prob.domain[0][0]
    for p in (2, 3, 4):
        mapping, topo, ops = fh.build_system(2, p, nel, warp=warp,
                                             domain=prob.domain, c=0.0)
        scheme = fs.SchemeConfig("esfr_split", a=prob.a, flux="upwind", c=ops.c)
        A = fh.assemble_global_operator(ops, scheme)
        dt = 0.5 * fh.node_spacing(extent, nel, p)
        R = fh.rk4_step_matrix(A, dt)
        lam = np.linalg.eigvals(A)
        amp = np.max(np.abs(np.linalg.eigvals(R)))
        print(f"{warp} p={p} nel={nel}: dt*rho(A)={dt*np.max(np.abs(lam)):.3f} "
              f"max|eig R|={amp:.6f}")
