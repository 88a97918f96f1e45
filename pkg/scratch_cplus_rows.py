import fluxrec.harness as fh
import fluxrec.operators as fop

yn = lambda b: "Yes" if b else "No"
for warp in ("nonsym2d", "skewsym2d"):
    for overint in (False, True):
        for form in ("esfr_split", "esfr_classical_split"):
            for flux in ("central", "upwind"):
                cfg = fh.ExperimentConfig(
                    experiment="energy", dim=2, p=3, form=form,
                    c=fop.c_plus(3), flux=flux, warp=warp, overint=overint)
                records, spatial = fh.energy_run(cfg)
                cons, mono, div, drift = fh.judge_energy(records, spatial)
                rule = "(p+3)^2" if overint else "(p+1)^2"
                print(f"{warp:10s} {rule} {form:22s} {flux:8s} "
                      f"cons={yn(cons):3s} mono={yn(mono):3s} div={div} "
                      f"spatial={spatial:+.3e}")
