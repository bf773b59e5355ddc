"""Game parameters, simplex geometry and the analytic payoff model.

Three strategies share a population: sitters (S) hatch everything in their
nest, identifiers (I) pay a flat cost to throw out foreign eggs, and
cheaters (C) lay their single egg in a random nest and never sit.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Iterator

SUM_TOL = 1e-9
NEG_TOL = 1e-12


class DomainError(ValueError):
    """Raised when an input lies outside an operation's domain."""


class NoInteriorEquilibrium(DomainError):
    """Raised when h - e - i <= 0, so payoffs cannot equalize in the interior."""


class _NegativeInfinity:
    """Payoff of sitters when no nests exist.

    Orders below every finite number but refuses arithmetic, so it cannot
    silently turn a mean into nan or -inf.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NEG_INF"

    def __str__(self):
        return "-inf"

    def __reduce__(self):
        return (_NegativeInfinity, ())

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("broodsim.NEG_INF")

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self

    def _no_arith(self, *_):
        raise DomainError("arithmetic on the -inf payoff sentinel is undefined")

    __add__ = __radd__ = __sub__ = __rsub__ = _no_arith
    __mul__ = __rmul__ = __truediv__ = __rtruediv__ = _no_arith
    __neg__ = __float__ = _no_arith


NEG_INF = _NegativeInfinity()


def is_neg_inf(value) -> bool:
    return value is NEG_INF


@dataclass(frozen=True)
class GameParams:
    """Payoff constants: ``h`` per hatched own egg, ``e`` per egg sat on,
    ``i`` for identifying eggs."""

    h: float
    e: float
    i: float

    def __post_init__(self):
        for name in ("h", "e", "i"):
            v = getattr(self, name)
            if isinstance(v, bool) or not (isinstance(v, numbers.Real) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a finite positive number, got {v!r}")
            object.__setattr__(self, name, float(v))

    @property
    def interior_ne_exists(self) -> bool:
        return self.h - self.e - self.i > 0

    def scaled(self, c: float) -> "GameParams":
        return GameParams(self.h * c, self.e * c, self.i * c)


@dataclass(frozen=True)
class SimplexPoint:
    """Population shares ``(p_S, p_I, p_C)``.

    Small float drift is tolerated: the sum may be off by up to 1e-9 and
    components may dip to -1e-12. Accepted points are clipped and
    renormalized so stored values sum to one.
    """

    p_S: float
    p_I: float
    p_C: float

    def __post_init__(self):
        comps = (float(self.p_S), float(self.p_I), float(self.p_C))
        if not all(math.isfinite(c) for c in comps):
            raise DomainError(f"non-finite simplex component in {comps}")
        if min(comps) < -NEG_TOL:
            raise DomainError(f"negative simplex component in {comps}")
        total = math.fsum(comps)
        if abs(total - 1.0) > SUM_TOL:
            raise DomainError(f"simplex components sum to {total!r}, not 1")
        comps = tuple(max(c, 0.0) for c in comps)
        total = math.fsum(comps)
        if total != 1.0:
            comps = tuple(c / total for c in comps)
        object.__setattr__(self, "p_S", comps[0])
        object.__setattr__(self, "p_I", comps[1])
        object.__setattr__(self, "p_C", comps[2])

    def __iter__(self) -> Iterator[float]:
        return iter((self.p_S, self.p_I, self.p_C))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_S, self.p_I, self.p_C)

    @property
    def is_interior(self) -> bool:
        return self.p_S > 0 and self.p_I > 0 and self.p_C > 0

    @property
    def nests(self) -> float:
        """Share of the population owning a nest."""
        return self.p_S + self.p_I


@dataclass(frozen=True)
class PayoffVector:
    e_S: object  # float or NEG_INF
    e_I: float
    e_C: float

    def as_tuple(self):
        return (self.e_S, self.e_I, self.e_C)

    def __iter__(self):
        return iter(self.as_tuple())

    @property
    def finite(self) -> bool:
        return not is_neg_inf(self.e_S)


def _payoff_floats(p_S, p_I, p_C, h, e, i):
    """Raw payoff formulas for ``p_S + p_I > 0``.

    No simplex validation; the stability code evaluates slightly outside the
    simplex through this.
    """
    nests = p_S + p_I
    return h - e * (1.0 + p_C / nests), h - e - i, h * p_S / nests


def expected_payoffs(point: SimplexPoint, params: GameParams) -> PayoffVector:
    """Expected utility of each strategy at population state ``point``.

    With no nests at all, sitters get the ``NEG_INF`` sentinel and cheaters
    get 0.
    """
    if not isinstance(point, SimplexPoint):
        point = SimplexPoint(*point)
    h, e, i = params.h, params.e, params.i
    if point.nests == 0:
        return PayoffVector(NEG_INF, h - e - i, 0.0)
    return PayoffVector(*_payoff_floats(point.p_S, point.p_I, point.p_C, h, e, i))


def nash_equilibrium(params: GameParams) -> SimplexPoint:
    """Closed-form interior equilibrium where all three payoffs coincide."""
    h, e, i = params.h, params.e, params.i
    if not params.interior_ne_exists:
        raise NoInteriorEquilibrium(
            f"h - e - i = {h - e - i!r} <= 0; no interior equilibrium"
        )
    return SimplexPoint(e * (h - e - i) / (h * (i + e)), e / h, i / (i + e))


def payoff_residual(point: SimplexPoint, params: GameParams) -> float:
    """Largest pairwise gap between the three expected payoffs.

    Only defined for interior points.
    """
    if not isinstance(point, SimplexPoint):
        point = SimplexPoint(*point)
    if not point.is_interior:
        raise DomainError("payoff_residual needs an interior point")
    pv = expected_payoffs(point, params)
    vals = pv.as_tuple()
    return max(vals) - min(vals)
