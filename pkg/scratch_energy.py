import time

import numpy as np

import fluxrec.harness as fh
import fluxrec.schemes as fs
import fluxrec.timeint as ft


def run_dt(scale):
    """ESFRSplit c=0 central, Grid-1 setup, with dt scaled by `scale`."""
    prob = fh.advection_problem("nonsym2d", "energy")
    mapping, topo, ops = fh.build_system(2, 3, 8, warp="nonsym2d", c=0.0)
    scheme = fs.SchemeConfig("esfr_split", a=prob.a, flux="central", c=0.0)
    dx = fh.node_spacing(2.0, 8, 3)
    dt = prob.dt_factor * dx * scale
    A = fh.assemble_global_operator(ops, scheme)
    R = fh.rk4_step_matrix(A, dt)
    u = fh.interpolate(prob.u0, mapping, 3).reshape(-1)
    shape = (ops.nel, ops.ref.Np)
    E0, _ = ft.monitor_values(u.reshape(shape), ops)
    n = int(round(10.0 / dt))
    for _ in range(n):
        u = R @ u
    E, _ = ft.monitor_values(u.reshape(shape), ops)
    return (E - E0) / E0, n * dt


for s in (1.0, 0.5):
    t0 = time.time()
    drift, T = run_dt(s)
    print(f"dt scale {s}: drift {drift:.6e} over T={T:.4f}  [{time.time()-t0:.1f}s]")

print()
print("spatial-drift monitor, Grid-1 rows:")
for form, c, flux in [
    ("esfr_split", 0.0, "central"),
    ("esfr_split", 0.0, "upwind"),
    ("dg_conservative", 0.0, "central"),
]:
    cfg = fh.ExperimentConfig(experiment="energy", dim=2, p=3, form=form,
                              c=c, flux=flux, warp="nonsym2d")
    t0 = time.time()
    records, spatial = fh.energy_run(cfg)
    verdict = fh.judge_energy(records, spatial)
    print(f"{form:22s} {flux:8s} spatial {spatial:+.3e}  "
          f"(cons,mono,div,Edrift)={verdict}  [{time.time()-t0:.1f}s]")
