"""Run the zoom-in ESS search over a few parameter sets and dump JSON.

    python scripts/ess_search.py --seeds 0 1 2 > runs/ess.json
"""
import argparse
import json

from broodsim import EssConfig, GameParams, ess_search
from broodsim.cli import _jsonable

PARAM_SETS = [(2.0, 0.5, 0.5), (1.0, 0.2, 0.3), (3.0, 1.0, 0.5), (1.0, 0.6, 0.5)]

ap = argparse.ArgumentParser()
ap.add_argument("--seeds", type=int, nargs="+", default=[0])
ap.add_argument("--workers", type=int, default=1)
args = ap.parse_args()

out = []
for h, e, i in PARAM_SETS:
    for seed in args.seeds:
        res = ess_search(GameParams(h, e, i), EssConfig(seed=seed, workers=args.workers))
        out.append({"h": h, "e": e, "i": i, "seed": seed, **res.to_dict()})
print(json.dumps(_jsonable(out), indent=2))
