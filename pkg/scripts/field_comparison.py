"""Replicator field next to the ABM displacement field, written as CSV.

    python scripts/field_comparison.py --out-dir runs/fields [--plot]
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from broodsim import GameParams, abm_vector_field, analytic_field, nash_equilibrium


def write(path, samples):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p_s", "p_i", "p_c", "v_s", "v_i", "v_c", "source", "reps"])
        for s in samples:
            w.writerow([*(format(x, ".9g") for x in (*s.point.as_tuple(), *s.displacement)), s.source, s.reps])


def to_xy(p):
    # sitter vertex bottom-left, identifier bottom-right, cheater on top
    p = np.asarray(p)
    return p[..., 1] + 0.5 * p[..., 2], np.sqrt(3) / 2 * p[..., 2]


def plot(params, ana, abm, path):
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(11, 5))
    ne = nash_equilibrium(params).as_tuple()
    for ax, samples, title in ((axes[0], abm, "ABM"), (axes[1], ana, "replicator")):
        P = np.array([s.point.as_tuple() for s in samples])
        V = np.array([s.displacement for s in samples])
        x, y = to_xy(P)
        u, v = to_xy(P + V)
        ax.quiver(x, y, u - x, v - y, angles="xy")
        ax.plot(*to_xy(ne), "ko")
        ax.plot([0, 1, 0.5, 0], [0, 0, np.sqrt(3) / 2, 0], "k-", lw=0.8)
        ax.set_title(title)
        ax.set_aspect("equal")
        ax.axis("off")
    fig.savefig(path, dpi=150, bbox_inches="tight")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--h", type=float, default=2.0)
    ap.add_argument("--e", type=float, default=0.5)
    ap.add_argument("--i", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--reps", type=int, default=150)
    ap.add_argument("--spacing", type=int, default=15)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-dir", type=Path, default=Path("runs/fields"))
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()

    params = GameParams(args.h, args.e, args.i)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    ana = analytic_field(params, args.spacing)
    abm = abm_vector_field(params, args.n, args.reps, args.spacing, args.seed, args.workers)
    write(args.out_dir / "analytic.csv", ana)
    write(args.out_dir / "abm.csv", abm)
    if args.plot:
        plot(params, ana, abm, args.out_dir / "fields.png")
    print(f"wrote {len(ana)} + {len(abm)} rows to {args.out_dir}")


if __name__ == "__main__":
    main()
