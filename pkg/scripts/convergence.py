"""How fast Monte Carlo payoff estimates approach the analytic values.

    python scripts/convergence.py --n 400 --schedule 100 400 1600 6400
"""
import argparse

from broodsim import GameParams, SimplexPoint, convergence_study, nash_equilibrium

ap = argparse.ArgumentParser()
ap.add_argument("--h", type=float, default=2.0)
ap.add_argument("--e", type=float, default=0.5)
ap.add_argument("--i", type=float, default=0.5)
ap.add_argument("--point", type=float, nargs=3, default=None, help="defaults to the equilibrium")
ap.add_argument("--n", type=int, default=400)
ap.add_argument("--schedule", type=int, nargs="+", default=[100, 400, 1600, 6400, 25600])
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

params = GameParams(args.h, args.e, args.i)
point = SimplexPoint(*args.point) if args.point else nash_equilibrium(params)
table = convergence_study(point, params, args.n, args.schedule, args.seed)

print(f"point {point.as_tuple()}  analytic {table.analytic}")
print(f"{'reps':>7}  {'|err| S':>10} {'|err| C':>10}  {'se S':>10} {'se C':>10}")
for reps, err, se in table.rows:
    cell = lambda x: "-" if x is None else f"{x:.2e}"
    print(f"{reps:>7}  {cell(err[0]):>10} {cell(err[2]):>10}  {cell(se[0]):>10} {cell(se[2]):>10}")
print(f"log-log stderr slope: {table.slope}")
