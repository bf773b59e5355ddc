"""Generational agent-based model of the nest game.

One generation runs fixed phases: lay, cheat, identify, sit/hatch, account,
reproduce. Agents are identified by consecutive integers, sitters first, then
identifiers, then cheaters. A nest is identified by its owner.

Randomness comes from counter-based streams keyed by
``(seed, generation, phase, agent)``. Agent actions produce intents that are
merged in ascending agent order, so ``parallel_step`` gives the same bits for
any worker count.
"""
from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Mapping, Optional

import numpy as np

from . import rng
from .core import DomainError, GameParams, SimplexPoint


class AgentType(IntEnum):
    SITTER = 0
    IDENTIFIER = 1
    CHEATER = 2


@dataclass(frozen=True)
class PopulationCounts:
    n_S: int
    n_I: int
    n_C: int

    def __post_init__(self):
        for name in ("n_S", "n_I", "n_C"):
            v = getattr(self, name)
            if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, np.integer)) or v < 0:
                raise DomainError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def N(self) -> int:
        return self.n_S + self.n_I + self.n_C

    @property
    def nests(self) -> int:
        return self.n_S + self.n_I

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n_S, self.n_I, self.n_C)

    def __getitem__(self, t: AgentType) -> int:
        return self.as_tuple()[int(t)]

    def to_point(self) -> SimplexPoint:
        if self.N == 0:
            raise DomainError("empty population has no proportions")
        return SimplexPoint(self.n_S / self.N, self.n_I / self.N, self.n_C / self.N)

    @classmethod
    def from_point(cls, point: SimplexPoint, N: int) -> "PopulationCounts":
        """Largest-remainder apportionment of ``N`` agents to ``point``.

        Ties on the remainder go to the earlier type (S, then I, then C).
        """
        if N < 1:
            raise DomainError("N must be >= 1")
        if not isinstance(point, SimplexPoint):
            point = SimplexPoint(*point)
        raw = [p * N for p in point.as_tuple()]
        base = [math.floor(r) for r in raw]
        short = N - sum(base)
        order = sorted(range(3), key=lambda k: (-(raw[k] - base[k]), k))
        for k in order[:short]:
            base[k] += 1
        return cls(*base)


@dataclass(frozen=True)
class ModelState:
    counts: PopulationCounts
    params: GameParams
    mutation_rate: float = 0.0
    rng_seed: int = 0
    generation_index: int = 0
    nest_registry: Mapping[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class GenerationReport:
    """Accounting for one generation.

    Per-type tuples are ordered (sitter, identifier, cheater). Means are
    ``None`` for types with no agents. ``nest_registry`` maps nest owner to
    the number of cheater eggs laid there (nonzero entries only).
    """

    generation_index: int
    pre_counts: PopulationCounts
    post_counts: PopulationCounts
    total_utility: tuple
    mean_utility: tuple
    eggs_hatched: tuple
    eggs_sat: tuple
    eggs_laid: int
    eggs_discarded: int
    nest_registry: Mapping[int, int]

    def mean(self, t: AgentType) -> Optional[float]:
        return self.mean_utility[int(t)]

    def total(self, t: AgentType) -> float:
        return self.total_utility[int(t)]


def init_model(counts: PopulationCounts, params: GameParams, mutation_rate: float = 0.0,
               seed: int = 0) -> ModelState:
    if not isinstance(counts, PopulationCounts):
        counts = PopulationCounts(*counts)
    if counts.N == 0:
        raise DomainError("population must contain at least one agent")
    if not 0.0 <= mutation_rate <= 1.0:
        raise DomainError("mutation_rate must lie in [0, 1]")
    if not 0 <= int(seed) < 2**64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    return ModelState(counts, params, float(mutation_rate), int(seed), 0, {})


@functools.lru_cache(maxsize=None)
def _pool(workers: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=workers, thread_name_prefix="broodsim")


def _chunks(lo: int, hi: int, workers: int) -> list[tuple[int, int]]:
    bounds = np.linspace(lo, hi, workers + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def _fan_out(fn, lo: int, hi: int, workers: int) -> list:
    """Apply ``fn(a, b)`` to contiguous id ranges; results in ascending-id order."""
    parts = _chunks(lo, hi, workers)
    if workers == 1:
        return [fn(a, b) for a, b in parts]
    return list(_pool(workers).map(lambda ab: fn(*ab), parts))


def cheater_targets(counts: PopulationCounts, seed: int, generation: int,
                    workers: int = 1) -> np.ndarray:
    """Nest chosen by each cheater, indexed by cheater rank.

    Each cheater's choice depends only on its own stream, so this is the
    per-agent lay intent.
    """
    M = counts.nests
    if M == 0 or counts.n_C == 0:
        return np.zeros(0, dtype=np.int64)
    key = rng.derive_key(seed, generation, rng.CHEAT)

    def intents(a, b):
        u = rng.uniforms(key, np.arange(a, b, dtype=np.uint64))
        return np.minimum((u * M).astype(np.int64), M - 1)

    return np.concatenate(_fan_out(intents, M, counts.N, workers))


def account(counts: PopulationCounts, params: GameParams, targets) -> dict:
    """Integer egg tallies and utilities for a given set of cheater choices.

    ``targets[j]`` is the nest owner chosen by the j-th cheater. Utility per
    type is ``h * hatched - e * sat - i * identifiers``.
    """
    n_S, n_I, n_C = counts.as_tuple()
    M = n_S + n_I
    targets = np.asarray(targets, dtype=np.int64)
    registry = np.bincount(targets, minlength=M) if M else np.zeros(0, dtype=np.int64)
    in_sitters = int(registry[:n_S].sum())
    discarded = int(registry[n_S:M].sum())
    hatched = (n_S, n_I, in_sitters)
    sat = (n_S + in_sitters, n_I, 0)
    h, e, i = params.h, params.e, params.i
    # every identifier earns the same, so its mean is the per-agent value
    per_identifier = h - e - i
    totals = (
        h * hatched[0] - e * sat[0],
        per_identifier * n_I,
        h * hatched[2],
    )
    means = [t / n if n else None for t, n in zip(totals, counts.as_tuple())]
    if n_I:
        means[1] = per_identifier
    means = tuple(means)
    return {
        "registry": registry,
        "hatched": hatched,
        "sat": sat,
        "totals": totals,
        "means": means,
        "laid": M + len(targets),
        "discarded": discarded,
    }


def reproduce(totals, pre_counts: PopulationCounts, mutation_rate: float, seed: int,
              generation: int = 0, workers: int = 1) -> PopulationCounts:
    """Resample ``N`` offspring with type weights ``max(0, total utility)``.

    All-zero weights carry the counts forward. Each offspring then switches
    to one of the other two types with probability ``mutation_rate``.
    """
    w = np.array([max(0.0, float(t)) for t in totals])
    if not np.all(np.isfinite(w)):
        raise DomainError("utility totals must be finite")
    total = w.sum()
    if total == 0:
        return pre_counts
    N = pre_counts.N
    cdf = np.cumsum(w) / total
    last = int(np.flatnonzero(w)[-1])
    k_type = rng.derive_key(seed, generation, rng.REPRODUCE)
    k_flag = rng.derive_key(seed, generation, rng.MUTATE_FLAG)
    k_target = rng.derive_key(seed, generation, rng.MUTATE_TARGET)

    def offspring(a, b):
        ids = np.arange(a, b, dtype=np.uint64)
        kind = np.minimum(np.searchsorted(cdf, rng.uniforms(k_type, ids), side="right"), last)
        if mutation_rate > 0:
            flip = rng.uniforms(k_flag, ids) < mutation_rate
            shift = 1 + (rng.uniforms(k_target, ids) * 2).astype(np.int64)
            kind = np.where(flip, (kind + shift) % 3, kind)
        return np.bincount(kind, minlength=3)

    tallies = _fan_out(offspring, 0, N, workers)
    return PopulationCounts(*(int(x) for x in np.sum(tallies, axis=0)))


def _advance(state: ModelState, workers: int, with_reproduction: bool):
    counts, params, gen = state.counts, state.params, state.generation_index
    targets = cheater_targets(counts, state.rng_seed, gen, workers)
    acc = account(counts, params, targets)
    if with_reproduction:
        post = reproduce(acc["totals"], counts, state.mutation_rate, state.rng_seed, gen, workers)
    else:
        post = counts
    reg = acc["registry"]
    nz = np.flatnonzero(reg)
    report = GenerationReport(
        generation_index=gen,
        pre_counts=counts,
        post_counts=post,
        total_utility=acc["totals"],
        mean_utility=acc["means"],
        eggs_hatched=acc["hatched"],
        eggs_sat=acc["sat"],
        eggs_laid=acc["laid"],
        eggs_discarded=acc["discarded"],
        nest_registry=dict(zip(nz.tolist(), reg[nz].tolist())),
    )
    new_state = replace(state, counts=post, generation_index=gen + 1, nest_registry={})
    return new_state, report


def step(state: ModelState, reproduce: bool = True):
    """Advance one generation. Returns ``(new_state, report)``.

    With ``reproduce=False`` the population is carried over unchanged, which
    is what payoff measurement wants.
    """
    return _advance(state, 1, reproduce)


def parallel_step(state: ModelState, workers: int, reproduce: bool = True):
    """Same as :func:`step`, with agent intents computed across ``workers`` threads."""
    if workers < 1:
        raise DomainError("workers must be >= 1")
    return _advance(state, workers, reproduce)


def run(state: ModelState, generations: int, workers: int = 1):
    """Step ``generations`` times; yields ``(generation, proportions, report)``
    after each generation, numbered from 1."""
    if generations < 0:
        raise DomainError("generations must be >= 0")
    out = []
    for _ in range(generations):
        state, report = _advance(state, workers, True)
        out.append((state.generation_index, state.counts.to_point(), report))
    return out
