import numpy as np

import fluxrec.harness as fh

for overint in (False, True):
    for flux in ("central", "upwind"):
        cfg = fh.ExperimentConfig(experiment="energy", dim=2, p=3,
                                  form="dg_conservative", c=0.0, flux=flux,
                                  warp="nonsym2d", overint=overint)
        records, spatial = fh.energy_run(cfg)
        E = np.array([r.energy for r in records])
        dE = np.diff(E)
        up = dE.max()
        n_up = int((dE > 0).sum())
        rule = "(p+3)^2" if overint else "(p+1)^2"
        print(f"{rule} {flux:8s}: max step dE {up:+.3e} ({up/E[0]:+.3e} rel), "
              f"{n_up}/{len(dE)} rising steps, spatial {spatial:+.3e}")
