"""
Modal wrapper for conjecture searches.

    modal run modal_run/search.py -- --conjecture gauss --p 6 --samples 100000
    modal run modal_run/search.py -- --conjecture crit --strategy near_diagonal
"""
import logging

import modal
from modal_run.image import build_image

from khl.explorer.sampling import SearchConfig
from khl.explorer.search import build_search

app = modal.App("khl-search", image=build_image())


@app.function(timeout=7200, cpu=8.0)
def search(
    conjecture: str = "gauss",
    p: float = 3.0,
    n_min: int = 1,
    n_max: int = 8,
    samples: int = 10000,
    seed: int = 0,
    strategy: str = "simplex",
):
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    cfg = SearchConfig(p=p, n_min=n_min, n_max=n_max, samples=samples, seed=seed, strategy=strategy)
    return build_search(conjecture)(cfg, jobs=8).to_dict()


@app.local_entrypoint()
def main(
    conjecture: str = "gauss",
    p: float = 3.0,
    n_min: int = 1,
    n_max: int = 8,
    samples: int = 10000,
    seed: int = 0,
    strategy: str = "simplex",
):
    r = search.remote(
        conjecture=conjecture,
        p=p,
        n_min=n_min,
        n_max=n_max,
        samples=samples,
        seed=seed,
        strategy=strategy,
    )
    for k, v in r.items():
        print(f"  {k}: {v}")
