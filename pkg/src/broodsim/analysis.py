"""Monte Carlo payoff estimates, ABM vector fields and the zoom-in ESS search.

Every independent work unit (replicate, lattice point, trajectory) draws its
seed from ``(seed, unit coordinates)``, so fanning units across threads does
not change any output.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.optimize import minimize

from . import rng
from .abm import AgentType, PopulationCounts, init_model, step
from .core import DomainError, GameParams, SimplexPoint, expected_payoffs, is_neg_inf
from .dynamics import (
    REST_TOL,
    FixedPointReport,
    _rhs_array,
    classify_fixed_point,
    lattice,
    lattice_point,
    replicator_rhs,
)

# unit-kind tags mixed into derived seeds
_MC, _FIELD, _TRAJ, _CONV = 11, 12, 13, 14


def _map(fn, items, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class MCEstimate:
    """Across-replicate mean utility per type; ``None`` marks absent types."""

    point: SimplexPoint
    counts: PopulationCounts
    N: int
    reps: int
    mean: tuple
    stderr: tuple


def estimate_payoffs_mc(point: SimplexPoint, params: GameParams, N: int, reps: int,
                        seed: int, workers: int = 1) -> MCEstimate:
    """Mean per-type utility over ``reps`` independent single generations.

    Reproduction is switched off: only the utility accounting is measured.
    """
    if reps < 1:
        raise DomainError("reps must be >= 1")
    if N < 3:
        raise DomainError("N must be >= 3")
    if not isinstance(point, SimplexPoint):
        point = SimplexPoint(*point)
    counts = PopulationCounts.from_point(point, N)

    def one(r):
        state = init_model(counts, params, 0.0, rng.derive_key(seed, _MC, r))
        return step(state, reproduce=False)[1].mean_utility

    samples = _map(one, range(reps), workers)
    means, errs = [], []
    for t in AgentType:
        if counts[t] == 0:
            means.append(None)
            errs.append(None)
            continue
        col = np.array([s[t] for s in samples])
        means.append(float(col.mean()))
        errs.append(float(col.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0)
    return MCEstimate(point, counts, N, reps, tuple(means), tuple(errs))


@dataclass(frozen=True)
class FieldSample:
    point: SimplexPoint
    displacement: tuple
    reps: int
    source: str  # "abm" or "analytic"


def analytic_field(params: GameParams, m: int) -> list[FieldSample]:
    if m < 2:
        raise DomainError("lattice order m must be >= 2")
    out = []
    for abc in lattice(m):
        p = lattice_point(abc, m)
        out.append(FieldSample(p, replicator_rhs(p, params).as_tuple(), 0, "analytic"))
    return out


def _abm_displacement(params, N, reps, m, abc, seed, mutation_rate):
    counts = PopulationCounts.from_point(lattice_point(abc, m), N)
    pre = np.array(counts.to_point().as_tuple())
    acc = np.zeros(3)
    for r in range(reps):
        state = init_model(counts, params, mutation_rate,
                           rng.derive_key(seed, _FIELD, m, abc[0], abc[1], r))
        post = step(state)[0].counts.to_point()
        acc += np.array(post.as_tuple()) - pre
    return acc / reps


def abm_vector_field(params: GameParams, N: int, reps: int = 150, m: int = 15, seed: int = 0,
                     workers: int = 1, mutation_rate: float = 0.0,
                     points: Optional[list] = None) -> list[FieldSample]:
    """Mean one-generation displacement of the ABM at each lattice point.

    ``points`` restricts evaluation to a subset of lattice triples; results
    for a triple do not depend on which others are evaluated.
    """
    if m < 2:
        raise DomainError("lattice order m must be >= 2")
    if N < m:
        raise DomainError("N must be >= m")
    if reps < 1:
        raise DomainError("reps must be >= 1")
    pts = lattice(m) if points is None else list(points)
    disp = _map(lambda abc: _abm_displacement(params, N, reps, m, abc, seed, mutation_rate),
                pts, workers)
    return [FieldSample(lattice_point(abc, m), tuple(float(x) for x in d), reps, "abm")
            for abc, d in zip(pts, disp)]


def direction_cosine(u, v) -> float:
    """Cosine between two tangent vectors in the ``(p_S, p_I)`` chart."""
    a = np.asarray(u, dtype=float)[:2]
    b = np.asarray(v, dtype=float)[:2]
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return float("nan")
    return float(a @ b / (na * nb))


@dataclass(frozen=True)
class ConvergenceTable:
    """Rows of ``(reps, abs_error, stderr)`` with per-type tuples.

    ``slope`` is the mean over types of the log-log fit of stderr against
    reps; deterministic types (zero stderr) are left out of the fit.
    """

    point: SimplexPoint
    analytic: tuple
    rows: list
    type_slopes: tuple
    slope: Optional[float]


def convergence_study(point: SimplexPoint, params: GameParams, N: int, reps_schedule,
                      seed: int, workers: int = 1) -> ConvergenceTable:
    sched = [int(r) for r in reps_schedule]
    if len(sched) < 3 or any(b <= a for a, b in zip(sched, sched[1:])) or sched[0] < 1:
        raise DomainError("reps schedule must be strictly increasing with length >= 3")
    if not isinstance(point, SimplexPoint):
        point = SimplexPoint(*point)
    ref = expected_payoffs(point, params)
    if is_neg_inf(ref.e_S):
        raise DomainError("analytic payoff is -inf at this point")
    ref = ref.as_tuple()
    rows = []
    for k, reps in enumerate(sched):
        est = estimate_payoffs_mc(point, params, N, reps, rng.derive_key(seed, _CONV, k), workers)
        err = tuple(None if m is None else abs(m - a) for m, a in zip(est.mean, ref))
        rows.append((reps, err, est.stderr))
    slopes = []
    x = np.log(np.array(sched, dtype=float))
    for t in range(3):
        se = [row[2][t] for row in rows]
        if any(s is None or s <= 0 for s in se):
            slopes.append(None)
            continue
        slopes.append(float(np.polyfit(x, np.log(se), 1)[0]))
    usable = [s for s in slopes if s is not None]
    slope = float(np.mean(usable)) if usable else None
    return ConvergenceTable(point, ref, rows, tuple(slopes), slope)


# ---------------------------------------------------------------------------
# ESS search


@dataclass(frozen=True)
class EssConfig:
    """Zoom-in search settings. Cell size at level 0 is ``1 / initial_m``."""

    initial_m: int = 10
    n_schedule: tuple = (100, 300, 1000)
    reps_schedule: tuple = (50, 150, 500)
    refinement: int = 2
    target_cell: float = 1 / 80
    trajectory_length: int = 200
    seed: int = 0
    mutation_rate: float = 0.0
    workers: int = 1

    def __post_init__(self):
        if self.initial_m < 2:
            raise DomainError("initial lattice order must be >= 2")
        if self.refinement < 2:
            raise DomainError("refinement factor must be >= 2")
        if not self.target_cell > 0 or self.trajectory_length < 1:
            raise DomainError("target cell and trajectory length must be positive")
        if not self.n_schedule or not self.reps_schedule:
            raise DomainError("N and reps schedules must be non-empty")
        if min(self.n_schedule) < 1 or min(self.reps_schedule) < 1:
            raise DomainError("N and reps schedules must be positive")

    def level_orders(self) -> list[int]:
        """Lattice order per level; stops once the cell would be <= target."""
        orders = []
        m = self.initial_m
        while m * self.target_cell < 1 - 1e-12:
            orders.append(m)
            m *= self.refinement
        return orders or [self.initial_m]


@dataclass
class LevelTrace:
    level: int
    m: int
    cell_size: float
    N: int
    reps: int
    active_points: int
    attractor_regions: list = field(default_factory=list)
    rest_regions: list = field(default_factory=list)


@dataclass
class EssSearchResult:
    candidates: list
    trace: list
    ess_found: bool

    def to_dict(self) -> dict:
        return {
            "ess_found": self.ess_found,
            "candidates": [c.to_dict() for c in self.candidates],
            "trace": [vars(t) for t in self.trace],
        }


def _endpoint(params, N, m, abc, length, seed, mutation_rate):
    counts = PopulationCounts.from_point(lattice_point(abc, m), N)
    state = init_model(counts, params, mutation_rate, rng.derive_key(seed, _TRAJ, m, abc[0], abc[1]))
    for _ in range(length):
        if mutation_rate == 0 and max(state.counts.as_tuple()) == N:
            break  # fixated; absorbing without mutation
        state = step(state)[0]
    return np.array(state.counts.to_point().as_tuple())


def _cluster_medoids(points: np.ndarray, radius: float) -> list[np.ndarray]:
    """Single-linkage clusters at ``radius``; one medoid per cluster."""
    if len(points) == 0:
        return []
    if len(points) == 1:
        labels = np.array([1])
    else:
        labels = fcluster(linkage(points, method="single"), t=radius, criterion="distance")
    out = []
    for lab in sorted(set(labels.tolist()), key=lambda l: np.flatnonzero(labels == l)[0]):
        members = points[labels == lab]
        d = np.linalg.norm(members[:, None, :] - members[None, :, :], axis=2).sum(axis=1)
        out.append(members[int(np.argmin(d))])
    return out


def _triangles(m: int):
    for a in range(m):
        for b in range(m - a):
            yield ((a + 1, b), (a, b + 1), (a, b))
            if a + b <= m - 2:
                yield ((a + 1, b), (a + 1, b + 1), (a, b + 1))


def _winding(vectors) -> int:
    angles = [math.atan2(v[1], v[0]) for v in vectors]
    total = 0.0
    for k in range(len(angles)):
        d = angles[(k + 1) % len(angles)] - angles[k]
        total += (d + math.pi) % (2 * math.pi) - math.pi
    return round(total / (2 * math.pi))


def _rest_regions(field_by_ab: dict, m: int) -> list[np.ndarray]:
    """Centroids of lattice cells whose corner displacements wind around zero."""
    out = []
    for tri in _triangles(m):
        if not all(ab in field_by_ab for ab in tri):
            continue
        vecs = [field_by_ab[ab][:2] for ab in tri]
        if any(np.hypot(*v) == 0 for v in vecs):
            continue
        if _winding(vecs) != 0:
            pts = np.array([[a / m, b / m, (m - a - b) / m] for a, b in tri])
            out.append(pts.mean(axis=0))
    return out


def _merge_centers(centers, radius):
    kept = []
    for c in centers:
        if all(np.abs(c - k).max() > radius for k in kept):
            kept.append(c)
    return kept


def _project_simplex(z):
    x, y = float(z[0]), float(z[1])
    p = np.array([x, y, 1.0 - x - y])
    # Euclidean projection onto the probability simplex
    u = np.sort(p)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, 4)
    rho = np.flatnonzero(u - css / idx > 0)[-1]
    return np.maximum(p - css[rho] / (rho + 1), 0.0)


def polish_rest_point(start, params: GameParams) -> Optional[SimplexPoint]:
    """Nearest rest point of the analytic dynamics, by derivative-free search.

    Returns ``None`` when the local minimum of ``|rhs|`` is not a rest point.
    """
    h, e, i = params.h, params.e, params.i
    start = np.asarray(start, dtype=float)

    def speed2(z):
        p = _project_simplex(z)
        off = (z[0] - p[0]) ** 2 + (z[1] - p[1]) ** 2
        v = _rhs_array(p, h, e, i)
        return float(v @ v) + off

    best = start
    if speed2(start[:2]) > 1e-24:
        res = minimize(speed2, start[:2], method="Nelder-Mead",
                       options={"xatol": 1e-13, "fatol": 1e-26, "maxiter": 5000})
        best = _project_simplex(res.x)
        if speed2(best[:2]) > 1e-12:
            # second pass restarts the simplex at the current best point
            res = minimize(speed2, best[:2], method="Nelder-Mead",
                           options={"xatol": 1e-14, "fatol": 1e-28, "maxiter": 5000})
            best = _project_simplex(res.x)
    snapped = np.where(best < 1e-6, 0.0, best)
    snapped = snapped / snapped.sum()
    if np.linalg.norm(_rhs_array(snapped, h, e, i)) <= max(np.linalg.norm(_rhs_array(best, h, e, i)), 1e-9):
        best = snapped
    if np.linalg.norm(_rhs_array(best, h, e, i)) > REST_TOL:
        return None
    return SimplexPoint(*best)


def ess_search(params: GameParams, config: EssConfig = EssConfig()) -> EssSearchResult:
    """Locate candidate ESS with the ABM, zooming in level by level.

    Each level runs the ABM from every active lattice point. Two kinds of
    region are kept: clusters of trajectory endpoints (attractors of the
    finite population) and lattice cells whose mean one-step displacement
    winds around zero (rest points the finite population drifts away from).
    The next level only visits the finer lattice near those regions. Final
    regions are polished onto exact rest points of the replicator dynamics
    and classified there.
    """
    cfg = config
    orders = cfg.level_orders()
    trace = []
    regions: list[np.ndarray] = []
    prev_cell = None
    for level, m in enumerate(orders):
        N = cfg.n_schedule[min(level, len(cfg.n_schedule) - 1)]
        reps = cfg.reps_schedule[min(level, len(cfg.reps_schedule) - 1)]
        N = max(N, m)
        cell = 1.0 / m
        if level == 0:
            active = lattice(m)
        else:
            reach = 1.5 * prev_cell
            active = [abc for abc in lattice(m)
                      if any(np.abs(np.array(abc) / m - c).max() <= reach for c in regions)]
        samples = abm_vector_field(params, N, reps, m, cfg.seed, cfg.workers,
                                   cfg.mutation_rate, points=active)
        field_by_ab = {abc[:2]: np.array(s.displacement) for abc, s in zip(active, samples)}
        ends = _map(lambda abc: _endpoint(params, N, m, abc, cfg.trajectory_length,
                                          cfg.seed, cfg.mutation_rate), active, cfg.workers)
        attract = _cluster_medoids(np.array(ends), cell)
        rest = _rest_regions(field_by_ab, m)
        trace.append(LevelTrace(level, m, cell, N, reps, len(active),
                                [c.tolist() for c in attract], [c.tolist() for c in rest]))
        regions = _merge_centers(attract + rest, cell / 2)
        prev_cell = cell
        if not regions:
            break

    candidates: list[FixedPointReport] = []
    for c in regions:
        p = polish_rest_point(c, params)
        if p is None:
            continue
        if any(np.abs(np.array(p.as_tuple()) - np.array(q.location.as_tuple())).max() < 1e-6
               for q in candidates):
            continue
        candidates.append(classify_fixed_point(p, params))
    return EssSearchResult(candidates, trace, any(c.ess_flag for c in candidates))
