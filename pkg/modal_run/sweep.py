"""
Modal wrapper for acceptance-scale verification sweeps.

    modal run modal_run/sweep.py -- --claim gauss --p 3 --samples 10000
    modal run modal_run/sweep.py -- --claim diag --p 5 --samples 10000 --seed 7
"""
import logging

import modal
from modal_run.image import build_image

from khl.verifiers.sweep import run_sweep, sweep_summary

app = modal.App("khl-sweep", image=build_image())


@app.function(timeout=3600, cpu=8.0)
def sweep(
    claim: str = "gauss",
    p: float = 3.0,
    samples: int = 10000,
    seed: int = 0,
    n_min: int = 1,
    n_max: int = 12,
):
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    reports = run_sweep(claim, p, samples, seed, n_min=n_min, n_max=n_max, jobs=8, progress=False)
    return sweep_summary(reports)


@app.local_entrypoint()
def main(
    claim: str = "gauss",
    p: float = 3.0,
    samples: int = 10000,
    seed: int = 0,
    n_min: int = 1,
    n_max: int = 12,
):
    r = sweep.remote(claim=claim, p=p, samples=samples, seed=seed, n_min=n_min, n_max=n_max)
    for k, v in r.items():
        print(f"  {k}: {v}")
