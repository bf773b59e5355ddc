"""Continuous-time replicator dynamics on the strategy simplex."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import DomainError, GameParams, SimplexPoint, _payoff_floats, payoff_residual

CLIP_TOL = 1e-6
STABILITY_TOL = 1e-7
REST_TOL = 1e-6
FD_STEP = 1e-6

CLASSIFICATIONS = (
    "stable-node",
    "stable-spiral",
    "unstable-node",
    "unstable-spiral",
    "saddle",
    "center-marginal",
)


class IntegrationError(RuntimeError):
    def __init__(self, step_index, point):
        super().__init__(f"integration left the simplex at step {step_index}: {point}")
        self.step_index = step_index


@dataclass(frozen=True)
class TangentVector:
    v_S: float
    v_I: float
    v_C: float

    def as_tuple(self):
        return (self.v_S, self.v_I, self.v_C)

    def __iter__(self):
        return iter(self.as_tuple())

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.v_S**2 + self.v_I**2 + self.v_C**2))


@dataclass(frozen=True)
class Trajectory:
    times: tuple
    points: tuple
    dt: float

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array([p.as_tuple() for p in self.points])


@dataclass(frozen=True)
class FixedPointReport:
    location: SimplexPoint
    residual: float
    eigenvalues: tuple  # two complex numbers
    classification: str
    ess_flag: bool

    def to_dict(self) -> dict:
        return {
            "location": list(self.location.as_tuple()),
            "residual": self.residual,
            "eigenvalues": [{"re": z.real, "im": z.imag} for z in self.eigenvalues],
            "classification": self.classification,
            "ess_flag": self.ess_flag,
        }


def _rhs_array(p: np.ndarray, h: float, e: float, i: float) -> np.ndarray:
    """Replicator field on a raw triple, no validation.

    Works off-simplex wherever p_S + p_I != 0; the all-cheater state maps to 0.
    """
    s, d, c = p
    if s + d == 0:
        return np.zeros(3)
    pay = np.array(_payoff_floats(s, d, c, h, e, i))
    # a strategy that is absent contributes nothing, even where its payoff
    # would be huge in magnitude
    mean = sum(pk * ek for pk, ek in zip(p, pay) if pk != 0)
    return np.array([pk * (ek - mean) if pk != 0 else 0.0 for pk, ek in zip(p, pay)])


def replicator_rhs(point: SimplexPoint, params: GameParams) -> TangentVector:
    """``v_k = p_k (E_k - mean payoff)``; the all-cheater vertex is a rest point."""
    if not isinstance(point, SimplexPoint):
        point = SimplexPoint(*point)
    v = _rhs_array(np.array(point.as_tuple()), params.h, params.e, params.i)
    return TangentVector(*map(float, v))


MAX_HALVINGS = 30


def _rk4_increment(p, dt, h, e, i):
    k1 = _rhs_array(p, h, e, i)
    k2 = _rhs_array(p + 0.5 * dt * k1, h, e, i)
    k3 = _rhs_array(p + 0.5 * dt * k2, h, e, i)
    k4 = _rhs_array(p + dt * k3, h, e, i)
    return dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_step(p, dt, h, e, i, step_index, depth=0):
    """One RK4 step, halved recursively when it would cross a face.

    Near the all-cheater vertex the field is not Lipschitz and a share can
    reach zero in finite time; substeps land on the face instead of past it.
    """
    q = p + _rk4_increment(p, dt, h, e, i)
    if q.min() >= -CLIP_TOL:
        q = np.clip(q, 0.0, None)
        return q / q.sum()
    if depth >= MAX_HALVINGS:
        raise IntegrationError(step_index, tuple(q))
    mid = _rk4_step(p, dt / 2, h, e, i, step_index, depth + 1)
    return _rk4_step(mid, dt / 2, h, e, i, step_index, depth + 1)


def integrate_trajectory(start: SimplexPoint, params: GameParams, dt: float = 0.01,
                         steps: int = 1000) -> Trajectory:
    """Fixed-step classical RK4, clipping float drift back onto the simplex."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    if steps < 0:
        raise DomainError("steps must be non-negative")
    if not isinstance(start, SimplexPoint):
        start = SimplexPoint(*start)
    h, e, i = params.h, params.e, params.i
    p = np.array(start.as_tuple())
    times = [0.0]
    points = [start]
    for n in range(1, steps + 1):
        p = _rk4_step(p, dt, h, e, i, n)
        times.append(n * dt)
        points.append(SimplexPoint(*p))
    return Trajectory(tuple(times), tuple(points), dt)


def lattice(m: int) -> list[tuple[int, int, int]]:
    """Barycentric lattice ``(a, b, c)`` with ``a + b + c = m``.

    Canonical order: ``a`` descending, then ``b`` descending.
    """
    if m < 1:
        raise DomainError("lattice order must be >= 1")
    return [(a, b, m - a - b) for a in range(m, -1, -1) for b in range(m - a, -1, -1)]


def lattice_point(abc, m: int) -> SimplexPoint:
    a, b, c = abc
    return SimplexPoint(a / m, b / m, c / m)


def vector_field_grid(params: GameParams, m: int = 15, workers: int = 1):
    """Replicator field at every lattice point of order ``m``, in lattice order."""
    if m < 2:
        raise DomainError("lattice order m must be >= 2")
    pts = [lattice_point(abc, m) for abc in lattice(m)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vecs = list(ex.map(lambda p: replicator_rhs(p, params), pts))
    else:
        vecs = [replicator_rhs(p, params) for p in pts]
    return list(zip(pts, vecs))


def _feasible(z, tol=1e-15) -> bool:
    x, y = z
    return x >= -tol and y >= -tol and x + y <= 1 + tol


def _reduced(z, params):
    x, y = z
    v = _rhs_array(np.array([x, y, 1.0 - x - y]), params.h, params.e, params.i)
    return v[:2]


def reduced_jacobian(point: SimplexPoint, params: GameParams, step: float = FD_STEP) -> np.ndarray:
    """Jacobian of the dynamics in the chart ``(p_S, p_I)``.

    Central differences where the stencil stays in the simplex, one-sided
    differences into the simplex elsewhere. Directional derivatives along the
    three edge directions are combined, so vertices work too.
    """
    z0 = np.array([point.p_S, point.p_I])
    f0 = _reduced(z0, params)
    dirs, derivs = [], []
    for d in (np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([1.0, -1.0])):
        fwd, bwd = z0 + step * d, z0 - step * d
        if _feasible(fwd) and _feasible(bwd):
            g = (_reduced(fwd, params) - _reduced(bwd, params)) / (2 * step)
        elif _feasible(fwd):
            g = (_reduced(fwd, params) - f0) / step
        elif _feasible(bwd):
            g = (f0 - _reduced(bwd, params)) / step
        else:
            continue
        dirs.append(d)
        derivs.append(g)
        if len(dirs) == 2:
            break
    D = np.column_stack(dirs)
    G = np.column_stack(derivs)
    return G @ np.linalg.inv(D)


def classify_eigenvalues(eigs, tol: float = STABILITY_TOL) -> str:
    re = [z.real for z in eigs]
    complex_pair = abs(eigs[0].imag) > tol
    if any(abs(r) < tol for r in re):
        return "center-marginal"
    if complex_pair:
        return "stable-spiral" if re[0] < 0 else "unstable-spiral"
    if all(r < 0 for r in re):
        return "stable-node"
    if all(r > 0 for r in re):
        return "unstable-node"
    return "saddle"


def classify_fixed_point(candidate: SimplexPoint, params: GameParams,
                         step: float = FD_STEP) -> FixedPointReport:
    """Linear stability of an (approximate) rest point of the dynamics."""
    if not isinstance(candidate, SimplexPoint):
        candidate = SimplexPoint(*candidate)
    speed = replicator_rhs(candidate, params).norm
    if speed > REST_TOL:
        raise DomainError(f"not a rest point: |rhs| = {speed:.3g}")
    J = reduced_jacobian(candidate, params, step)
    eigs = np.linalg.eigvals(J)
    eigs = tuple(sorted((complex(z) for z in eigs), key=lambda z: (z.real, z.imag)))
    label = classify_eigenvalues(eigs)
    ess = all(z.real < -STABILITY_TOL for z in eigs)
    if candidate.is_interior:
        residual = payoff_residual(candidate, params)
    else:
        residual = speed
    return FixedPointReport(candidate, residual, eigs, label, ess)
