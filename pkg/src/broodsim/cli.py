"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 domain error, 3 I/O error.
Floats are written with 9 significant digits so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import abm, analysis
from .core import DomainError, GameParams, SimplexPoint, expected_payoffs, is_neg_inf, nash_equilibrium

EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 1, 2, 3

FIELD_COLUMNS = ["p_s", "p_i", "p_c", "v_s", "v_i", "v_c", "source", "reps"]
SIMULATE_COLUMNS = ["gen", "p_s", "p_i", "p_c", "mean_u_s", "mean_u_i", "mean_u_c"]
TYPE_NAMES = ("sitter", "identifier", "cheater")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    if x is None:
        return ""
    if is_neg_inf(x):
        return "-inf"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".9g")
    return str(x)


def _jsonable(x):
    if is_neg_inf(x):
        return "-inf"
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        return float(format(x, ".9g"))
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):  # numpy scalar
        return _jsonable(x.item())
    return str(x)


def render(columns, rows, fmt_name: str) -> str:
    if fmt_name == "json":
        return json.dumps([_jsonable(dict(zip(columns, r))) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def render_doc(doc, fmt_name: str, columns=None, rows=None) -> str:
    if fmt_name == "json":
        return json.dumps(_jsonable(doc), indent=2) + "\n"
    return render(columns, rows, "csv")


def _params(args) -> GameParams:
    return GameParams(args.h, args.e, args.i)


def _point(args) -> SimplexPoint:
    return SimplexPoint(*args.point)


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def cmd_ne(args) -> str:
    ne = nash_equilibrium(_params(args))
    payoff = args.h - args.e - args.i
    doc = {"p_S": ne.p_S, "p_I": ne.p_I, "p_C": ne.p_C, "payoff": payoff}
    return render_doc(doc, args.format or "json", ["p_s", "p_i", "p_c", "payoff"],
                      [[ne.p_S, ne.p_I, ne.p_C, payoff]])


def cmd_payoffs(args) -> str:
    pv = expected_payoffs(_point(args), _params(args))
    doc = {"e_S": pv.e_S, "e_I": pv.e_I, "e_C": pv.e_C}
    return render_doc(doc, args.format or "csv", ["e_s", "e_i", "e_c"], [list(pv.as_tuple())])


def cmd_field(args) -> str:
    params = _params(args)
    if args.spacing < 2:
        raise DomainError("--spacing must be >= 2")
    rows = []
    if args.source in ("analytic", "both"):
        for s in analysis.analytic_field(params, args.spacing):
            rows.append([*s.point.as_tuple(), *s.displacement, s.source, s.reps])
    if args.source in ("abm", "both"):
        if args.seed is None:
            raise UsageError("--seed is required for --source abm/both")
        if args.n is None:
            raise UsageError("--n is required for --source abm/both")
        for s in analysis.abm_vector_field(params, args.n, args.reps, args.spacing, args.seed,
                                           args.workers, args.mu):
            rows.append([*s.point.as_tuple(), *s.displacement, s.source, s.reps])
    return render(FIELD_COLUMNS, rows, args.format or "csv")


def cmd_simulate(args) -> str:
    params = _params(args)
    counts = abm.PopulationCounts.from_point(_point(args), args.n)
    state = abm.init_model(counts, params, args.mu, args.seed)
    rows = []
    for gen, p, rep in abm.run(state, args.gens, workers=args.workers):
        rows.append([gen, *p.as_tuple(), *rep.mean_utility])
    return render(SIMULATE_COLUMNS, rows, args.format or "csv")


def cmd_estimate(args) -> str:
    params = _params(args)
    point = _point(args)
    est = analysis.estimate_payoffs_mc(point, params, args.n, args.reps, args.seed, args.workers)
    ref = expected_payoffs(point, params).as_tuple()
    rows = []
    for k, name in enumerate(TYPE_NAMES):
        if est.mean[k] is None:
            continue
        m, se, a = est.mean[k], est.stderr[k], ref[k]
        if is_neg_inf(a):
            z = None
        elif se > 0:
            z = (m - a) / se
        else:
            z = 0.0 if m == a else None
        rows.append([name, est.counts.as_tuple()[k], m, se, a, z])
    return render(["type", "count", "mean", "stderr", "analytic", "z"], rows, args.format or "csv")


def cmd_converge(args) -> str:
    table = analysis.convergence_study(_point(args), _params(args), args.n, args.schedule,
                                       args.seed, args.workers)
    cols = ["reps", "abs_err_s", "abs_err_i", "abs_err_c", "stderr_s", "stderr_i", "stderr_c", "slope"]
    rows = [[reps, *err, *se, table.slope] for reps, err, se in table.rows]
    doc = {
        "point": list(table.point.as_tuple()),
        "analytic": list(table.analytic),
        "rows": [dict(zip(cols[:-1], r[:-1])) for r in rows],
        "type_slopes": list(table.type_slopes),
        "slope": table.slope,
    }
    return render_doc(doc, args.format or "csv", cols, rows)


def cmd_ess(args) -> str:
    cfg = analysis.EssConfig(
        initial_m=args.spacing,
        n_schedule=args.n_schedule,
        reps_schedule=args.reps_schedule,
        refinement=args.refine,
        target_cell=args.target,
        trajectory_length=args.traj_len,
        seed=args.seed,
        mutation_rate=args.mu,
        workers=args.workers,
    )
    result = analysis.ess_search(_params(args), cfg)
    cols = ["p_s", "p_i", "p_c", "residual", "re_1", "im_1", "re_2", "im_2",
            "classification", "ess_flag"]
    rows = []
    for c in result.candidates:
        ev = [x for z in c.eigenvalues for x in (z.real, z.imag)]
        rows.append([*c.location.as_tuple(), c.residual, *ev, c.classification, c.ess_flag])
    return render_doc(result.to_dict(), args.format or "json", cols, rows)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="broodsim", description="Nest-parasitism game toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seed_required=False):
        p.add_argument("--h", type=float, required=True, help="utility per hatched own egg")
        p.add_argument("--e", type=float, required=True, help="cost per egg sat on")
        p.add_argument("--i", type=float, required=True, help="cost of identifying eggs")
        p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--workers", type=int, default=1)
        if seed_required is not None:
            p.add_argument("--seed", type=int, required=seed_required)
        p.add_argument("--mu", type=float, default=0.0, help="mutation rate")

    def point(p, default=None):
        p.add_argument("--point", type=float, nargs=3, metavar=("P_S", "P_I", "P_C"),
                       required=default is None, default=default)

    p = sub.add_parser("ne", help="closed-form interior equilibrium")
    common(p, seed_required=None)
    p.set_defaults(fn=cmd_ne)

    p = sub.add_parser("payoffs", help="analytic expected payoffs at a point")
    common(p, seed_required=None)
    point(p)
    p.set_defaults(fn=cmd_payoffs)

    p = sub.add_parser("field", help="replicator and/or ABM vector field on a lattice")
    common(p)
    p.add_argument("--source", choices=["abm", "analytic", "both"], default="analytic")
    p.add_argument("--spacing", type=int, default=15, help="lattice order m (spacing 1/m)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--reps", type=int, default=150)
    p.set_defaults(fn=cmd_field)

    p = sub.add_parser("simulate", help="run the ABM for several generations")
    common(p, seed_required=True)
    point(p, default=[1 / 3, 1 / 3, 1 / 3])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gens", type=int, required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("estimate", help="Monte Carlo payoff estimate at a point")
    common(p, seed_required=True)
    point(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("converge", help="Monte Carlo error against replicate count")
    common(p, seed_required=True)
    point(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--schedule", type=_int_list, default=(100, 400, 1600, 6400))
    p.set_defaults(fn=cmd_converge)

    p = sub.add_parser("ess", help="zoom-in ESS search with analytic validation")
    common(p, seed_required=True)
    p.add_argument("--spacing", type=int, default=10, help="initial lattice order")
    p.add_argument("--n-schedule", type=_int_list, default=(100, 300, 1000))
    p.add_argument("--reps-schedule", type=_int_list, default=(50, 150, 500))
    p.add_argument("--refine", type=int, default=2)
    p.add_argument("--target", type=float, default=1 / 80, help="target cell size")
    p.add_argument("--traj-len", type=int, default=200)
    p.set_defaults(fn=cmd_ess)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        text = args.fn(args)
    except UsageError as exc:
        parser.error(str(exc))
    except DomainError as exc:
        print(f"broodsim {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.out is None:
        sys.stdout.write(text)
        return 0
    try:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"broodsim {args.command}: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
