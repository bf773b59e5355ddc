"""Exit criteria. Each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s -q``.
"""
import csv
import itertools
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from broodsim.abm import PopulationCounts, account, init_model, step
from broodsim.analysis import abm_vector_field, analytic_field, convergence_study, direction_cosine
from broodsim.cli import main
from broodsim.core import GameParams, SimplexPoint, expected_payoffs, nash_equilibrium, payoff_residual
from broodsim.dynamics import classify_fixed_point, integrate_trajectory, replicator_rhs

CANON = GameParams(2.0, 0.5, 0.5)
CANON_FLAGS = ["--h", "2", "--e", "0.5", "--i", "0.5"]


@pytest.fixture
def verdict(capsys):
    def report(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}  {title}  {detail}")
        assert ok, f"criterion {n} failed: {detail}"
    return report


def test_criterion_1_equilibrium_closed_form(verdict):
    t0 = time.perf_counter()
    rs = np.random.default_rng(20240101)
    worst_res, worst_dev, n = 0.0, 0.0, 0
    while n < 100:
        h, e, i = rs.uniform(0, 3, size=3)
        if min(h, e, i) <= 0 or h - e - i <= 0:
            continue
        n += 1
        params = GameParams(h, e, i)
        ne = nash_equilibrium(params)
        H, E, I = (Fraction(x) for x in (h, e, i))
        exact = (E * (H - E - I) / (H * (I + E)), E / H, I / (I + E))
        worst_dev = max(worst_dev, max(abs(float(Fraction(a) - b)) for a, b in zip(ne.as_tuple(), exact)))
        worst_res = max(worst_res, payoff_residual(ne, params))
    elapsed = time.perf_counter() - t0
    ok = worst_res <= 1e-10 and worst_dev <= 1e-12 and elapsed < 1.0
    verdict(1, "closed-form equilibrium on 100 random param sets", ok,
            f"max residual={worst_res:.2e} max dev={worst_dev:.2e} t={elapsed:.2f}s")


def test_criterion_2_canonical_equilibrium(verdict):
    ne = nash_equilibrium(CANON)
    pay = expected_payoffs(ne, CANON).as_tuple()
    dev = max(abs(a - b) for a, b in zip(ne.as_tuple(), (0.25, 0.25, 0.5)))
    pdev = max(abs(p - 1.0) for p in pay)
    verdict(2, "canonical equilibrium (0.25, 0.25, 0.5), payoff 1", dev <= 1e-12 and pdev <= 1e-12,
            f"point dev={dev:.1e} payoff dev={pdev:.1e}")


def test_criterion_3_exact_finite_population_identities(verdict):
    t0 = time.perf_counter()
    h, e, i = Fraction(2), Fraction(1, 2), Fraction(1, 2)
    checked, bad = 0, []
    for N in range(1, 7):
        for n_S in range(N + 1):
            for n_I in range(N - n_S + 1):
                n_C = N - n_S - n_I
                M = n_S + n_I
                if M == 0:
                    continue
                counts = PopulationCounts(n_S, n_I, n_C)
                outcomes = list(itertools.product(range(M), repeat=n_C))
                sums = [Fraction(0)] * 3
                ident_vals = set()
                for targets in outcomes:
                    acc = account(counts, CANON, targets)
                    hat, sat = acc["hatched"], acc["sat"]
                    tot = (h * hat[0] - e * sat[0], h * hat[1] - e * sat[1] - i * n_I, h * hat[2])
                    for k, n in enumerate((n_S, n_I, n_C)):
                        if n:
                            sums[k] += tot[k] / n
                    if n_I:
                        ident_vals.add(tot[1] / n_I)
                        ident_vals.add(Fraction(acc["means"][1]))
                mean = [s / len(outcomes) for s in sums]
                want = (h - e * (1 + Fraction(n_C, M)), h - e - i, h * Fraction(n_S, M))
                for k, n in enumerate((n_S, n_I, n_C)):
                    if n and mean[k] != want[k]:
                        bad.append((counts, k))
                if n_I and ident_vals != {h - e - i}:
                    bad.append((counts, "identifier variance"))
                checked += 1
    elapsed = time.perf_counter() - t0
    verdict(3, "exhaustive N<=6 payoff identities", not bad and elapsed < 10,
            f"{checked} count vectors, {len(bad)} mismatches, t={elapsed:.2f}s")


def test_criterion_4_monte_carlo_convergence(verdict):
    t0 = time.perf_counter()
    table = convergence_study(nash_equilibrium(CANON), CANON, 400, (100, 400, 1600, 6400), seed=2024)
    elapsed = time.perf_counter() - t0
    within = True
    for reps, err, se in table.rows:
        for k in range(3):
            within &= err[k] <= 3 * se[k] if se[k] > 0 else err[k] == 0
    ok = within and abs(table.slope + 0.5) <= 0.1 and elapsed < 120
    verdict(4, "MC means within 3 SE of 1.0, stderr slope -0.5 +- 0.1", ok,
            f"slope={table.slope:.3f} t={elapsed:.1f}s")


def test_criterion_5_vector_field_agreement(verdict):
    t0 = time.perf_counter()
    m = 10
    abm = abm_vector_field(CANON, N=300, reps=150, m=m, seed=5)
    ana = analytic_field(CANON, m)
    cos = [direction_cosine(a.displacement, b.displacement)
           for a, b in zip(abm, ana) if min(a.point.as_tuple()) >= 0.1 - 1e-12]
    mean_cos = float(np.mean(cos))
    ne = np.array(nash_equilibrium(CANON).as_tuple())
    zeros_ok = True
    for s in ana:
        p = np.array(s.point.as_tuple())
        is_special = np.abs(p - ne).max() < 1e-12 or p.max() == 1.0
        is_zero = all(v == 0 for v in s.displacement)
        zeros_ok &= is_zero == is_special
    elapsed = time.perf_counter() - t0
    ok = mean_cos >= 0.8 and zeros_ok and elapsed < 300 and len(cos) == 36
    verdict(5, "ABM vs replicator field direction", ok,
            f"mean cosine={mean_cos:.4f} over {len(cos)} points, zeros only at NE/vertices={zeros_ok}, t={elapsed:.1f}s")


def test_criterion_6_no_ess(tmp_path, verdict):
    t0 = time.perf_counter()
    out = tmp_path / "ess.json"
    code = main(["ess", *CANON_FLAGS, "--seed", "0", "--out", str(out)])
    doc = json.loads(out.read_text())
    elapsed = time.perf_counter() - t0
    interior = [c for c in doc["candidates"] if min(c["location"]) > 0]
    near = (len(interior) == 1 and
            sum(abs(a - b) for a, b in zip(interior[0]["location"], (0.25, 0.25, 0.5))) <= 0.02)
    not_stable = bool(interior) and interior[0]["classification"] not in ("stable-node", "stable-spiral")
    rep = classify_fixed_point(nash_equilibrium(CANON), CANON)
    # independent oracle: exact Jacobian of the reduced system
    x, y = sp.symbols("x y")
    c = 1 - x - y
    ES = 2 - sp.Rational(1, 2) * (1 + c / (x + y))
    EC = 2 * x / (x + y)
    mean = x * ES + y * 1 + c * EC
    J = sp.Matrix([x * (ES - mean), y * (1 - mean)]).jacobian([x, y]).subs({x: sp.Rational(1, 4), y: sp.Rational(1, 4)})
    exact = sorted((complex(v) for v in J.eigenvals()), key=lambda z: z.imag)
    fd = sorted(rep.eigenvalues, key=lambda z: z.imag)
    eig_ok = all(abs(a - b) < 1e-6 for a, b in zip(fd, exact)) and all(z.real > 0 for z in fd)
    ok = code == 0 and near and not_stable and doc["ess_found"] is False and eig_ok and elapsed < 300
    verdict(6, "zoom-in search finds the NE and no ESS", ok,
            f"interior={len(interior)} eig={fd[0]:.4f},{fd[1]:.4f} ess_found={doc['ess_found']} t={elapsed:.1f}s")


def test_criterion_7_determinism_and_parallel_equivalence(tmp_path, verdict):
    rs = np.random.default_rng(7)
    seeds = rs.integers(0, 2**63, size=50)
    mismatched = []
    for seed in seeds:
        outputs = []
        for tag, workers in (("a", 1), ("b", 1), ("c", 2), ("d", 8)):
            path = tmp_path / f"{seed}-{tag}.csv"
            code = main(["simulate", *CANON_FLAGS, "--n", "300", "--gens", "50", "--seed", str(seed),
                         "--point", "0.25", "0.25", "0.5", "--mu", "0.01",
                         "--workers", str(workers), "--out", str(path)])
            assert code == 0
            outputs.append(path.read_bytes())
        if len(set(outputs)) != 1 or len(outputs[0].splitlines()) != 51:
            mismatched.append(int(seed))
    verdict(7, "byte-identical output over 50 seeds, workers {1,2,8}, reruns", not mismatched,
            f"{len(mismatched)} mismatching seeds")


def test_criterion_8_conservation_suite(verdict):
    t0 = time.perf_counter()
    rs = np.random.default_rng(8)
    n_cases = 10_000
    failures = {"simplex": 0, "tangency": 0, "eggs": 0, "population": 0}
    for _ in range(n_cases):
        e, i = rs.uniform(0.01, 1.5, size=2)
        h = rs.uniform(0.01, 3.0)
        params = GameParams(h, e, i)
        p = SimplexPoint(*rs.dirichlet([1, 1, 1]))
        v = replicator_rhs(p, params).as_tuple()
        if abs(sum(v)) > 1e-12 * max(1.0, max(map(abs, v))):
            failures["tangency"] += 1
        traj = integrate_trajectory(p, params, dt=0.01, steps=5).as_array()
        if np.abs(traj.sum(axis=1) - 1).max() > 1e-9 or traj.min() < 0:
            failures["simplex"] += 1
        counts = PopulationCounts(*(int(x) for x in rs.integers(0, 30, size=3)))
        if counts.N == 0:
            counts = PopulationCounts(1, 0, 0)
        _, rep = step(init_model(counts, params, float(rs.uniform(0, 0.2)), int(rs.integers(0, 2**63))))
        M = counts.nests
        laid = M + (counts.n_C if M else 0)
        if rep.eggs_laid != laid or sum(rep.eggs_hatched) + rep.eggs_discarded != laid:
            failures["eggs"] += 1
        if rep.post_counts.N != counts.N:
            failures["population"] += 1
    elapsed = time.perf_counter() - t0
    ok = not any(failures.values()) and elapsed < 60
    verdict(8, f"conservation invariants over {n_cases} random cases", ok,
            f"failures={failures} t={elapsed:.1f}s")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
