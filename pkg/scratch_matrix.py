import time

import fluxrec.harness as fh

for warp in ("nonsym2d", "skewsym2d"):
    for overint in (False, True):
        rule = "(p+3)^2" if overint else "(p+1)^2"
        t0 = time.time()
        cfg = fh.ExperimentConfig(experiment="energy", dim=2, p=3,
                                  warp=warp, overint=overint)
        verdicts = fh.energy_study(cfg)
        print(f"\n=== {warp}  {rule}  [{time.time()-t0:.0f}s] ===")
        for v in verdicts:
            yn = lambda b: "Yes" if b else "No"
            print(f"{v.form:22s} c={v.c:<9.3g} {v.flux:8s} "
                  f"cons={yn(v.conserved):3s} mono={yn(v.monotone):3s} "
                  f"div={v.diverged}  spatial={v.spatial_drift:+.3e} "
                  f"Edrift={v.final_drift:+.3e}")
