"""Prefractal approximations of symmetric Cantor-like sets and flag queries.

A set is described by a :class:`~falcon.models.CantorSetSpec`: ``m`` children of
ratio ``r`` spread evenly over the base interval, so the first child starts
at ``lo`` and the last one ends at ``hi``. Closed intervals are used
throughout, gap endpoints belong to the set.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from .exceptions import ArgumentError, DepthCapError, DomainError
from .models import CantorSetSpec, EngineConfig

logger = logging.getLogger(__name__)

# Distances closer than this (relative to the base length) count as a tie.
TIE_TOLERANCE = 1e-12

ArrayLike = Union[float, np.ndarray]


class IntervalList(BaseModel):
    """Depth-n prefractal: ``m**depth`` disjoint closed intervals sorted ascending."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: CantorSetSpec
    depth: int
    lefts: np.ndarray
    rights: np.ndarray

    @property
    def count(self) -> int:
        return int(self.lefts.size)

    @property
    def intervals(self) -> List[Tuple[float, float]]:
        return [(float(l), float(u)) for l, u in zip(self.lefts, self.rights)]

    @property
    def total_length(self) -> float:
        return float(np.sum(self.rights - self.lefts))

    def contains(self, x: ArrayLike) -> Union[bool, np.ndarray]:
        """Vectorized membership test in the union of the intervals."""
        xs = np.asarray(x, dtype=float)
        tol = TIE_TOLERANCE * self.spec.length
        idx = np.searchsorted(self.rights, xs - tol, side="left")
        safe = np.minimum(idx, self.count - 1)
        inside = (idx < self.count) & (self.lefts[safe] <= xs + tol)
        return bool(inside) if inside.ndim == 0 else inside

    def gap_intervals(self) -> List[Tuple[float, float]]:
        """Open gaps between consecutive intervals."""
        mask = self.rights[:-1] < self.lefts[1:]
        return [(float(u), float(l)) for u, l in zip(self.rights[:-1][mask], self.lefts[1:][mask])]

    def covers(self, other: "IntervalList") -> bool:
        """True when every interval of ``other`` lies inside one interval of this list."""
        idx = np.searchsorted(self.rights, other.lefts, side="left")
        if np.any(idx >= self.count):
            return False
        tol = TIE_TOLERANCE * self.spec.length
        return bool(
            np.all(self.lefts[idx] <= other.lefts + tol)
            & np.all(other.rights <= self.rights[idx] + tol)
        )


# Largest denominator whose integer numerators convert to float exactly.
EXACT_DENOMINATOR = 2**53


@lru_cache(maxsize=64)
def rational_ratio(r: float, max_denominator: int = 10**6) -> Optional[Tuple[int, int]]:
    """``(p, q)`` with ``p / q == r`` in double precision, or None for other ratios."""
    frac = Fraction(r).limit_denominator(max_denominator)
    if frac.numerator <= 0 or float(frac) != r:
        return None
    return frac.numerator, frac.denominator


@lru_cache(maxsize=64)
def _unit_endpoints(m: int, r: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    ratio = rational_ratio(r)
    if ratio is not None and (m - 1) * ratio[1] ** n <= EXACT_DENOMINATOR:
        # integer numerators over (m - 1) * q**n, one rounding per endpoint
        p, q = ratio
        num = np.zeros(1, dtype=np.int64)
        digits = np.arange(m, dtype=np.int64) * (q - p)
        for k in range(n):
            num = (num[:, None] * q + digits[None, :] * p**k).ravel()
        den = float((m - 1) * q**n)
        lefts = num / den
        rights = (num + (m - 1) * p**n) / den
    else:
        lefts = np.zeros(1)
        offsets = np.arange(m) * (1.0 - r) / (m - 1)
        scale = 1.0
        for _ in range(n):
            lefts = (lefts[:, None] + offsets[None, :] * scale).ravel()
            scale *= r
        rights = lefts + r**n
    if n > 0:
        rights[-1] = 1.0
    lefts.flags.writeable = False
    rights.flags.writeable = False
    return lefts, rights


def check_depth(spec: CantorSetSpec, n: int, config: Optional[EngineConfig] = None) -> None:
    """Raise unless a depth-n prefractal may be enumerated under ``config``."""
    config = config or EngineConfig.from_env()
    if n < 0:
        raise ArgumentError(f"depth must be non-negative, got {n}")
    if n > config.depth_cap:
        raise DepthCapError(
            f"depth {n} exceeds the configured depth cap {config.depth_cap}",
            depth=n,
            cap=config.depth_cap,
        )
    if float(spec.m) ** n > config.max_intervals:
        raise DepthCapError(
            f"depth {n} needs {spec.m}**{n} intervals, above the budget of {config.max_intervals}",
            depth=n,
            cap=config.depth_cap,
        )


def max_enumerable_depth(spec: CantorSetSpec, config: Optional[EngineConfig] = None) -> int:
    """Deepest level whose interval list fits the configured budget."""
    config = config or EngineConfig.from_env()
    by_budget = int(np.floor(np.log(config.max_intervals) / np.log(spec.m) + 1e-9))
    return max(0, min(config.depth_cap, by_budget))


def prefractal(spec: CantorSetSpec, n: int, config: Optional[EngineConfig] = None) -> IntervalList:
    """Depth-n image of the base interval under the set's iterated function system."""
    check_depth(spec, n, config)
    unit_lefts, unit_rights = _unit_endpoints(spec.m, spec.r, n)
    width = spec.length * spec.r**n
    lefts = spec.lo + spec.length * unit_lefts
    rights = spec.lo + spec.length * unit_rights
    rights[-1] = spec.hi
    lefts.flags.writeable = False
    rights.flags.writeable = False
    logger.debug(f"prefractal depth {n}: {lefts.size} intervals of width {width:.3e}")
    return IntervalList(spec=spec, depth=n, lefts=lefts, rights=rights)


def flag(intervals: IntervalList, interval: Tuple[float, float]) -> int:
    """Flag function: 1 if the closed interval meets the prefractal, else 0.

    A finite-depth flag over-reports: ``flag = 0`` at depth n stays 0 at every
    deeper depth, while ``flag = 1`` may drop to 0 deeper unless the interval
    contains a point of the limit set (e.g. an endpoint).
    """
    a, b = float(interval[0]), float(interval[1])
    spec = intervals.spec
    tol = TIE_TOLERANCE * spec.length
    if a > b:
        raise ArgumentError(f"interval endpoints out of order: [{a}, {b}]")
    if a < spec.lo - tol or b > spec.hi + tol:
        raise ArgumentError(f"[{a}, {b}] is not inside the base interval [{spec.lo}, {spec.hi}]")
    idx = int(np.searchsorted(intervals.rights, a - tol, side="left"))
    return int(idx < intervals.count and intervals.lefts[idx] <= b + tol)


def _nearest_scalar(spec: CantorSetSpec, n: int, x: float) -> float:
    cur_lo = spec.lo
    cur_len = spec.length
    step = spec.spacing
    for _ in range(n):
        pos = (x - cur_lo) / cur_len
        i = min(max(int(pos // step), 0), spec.m - 1)
        child_lo = cur_lo + i * step * cur_len
        child_hi = child_lo + spec.r * cur_len
        if x <= child_hi:
            cur_lo, cur_len = child_lo, cur_len * spec.r
            continue
        next_lo = cur_lo + (i + 1) * step * cur_len
        if (x - child_hi) <= (next_lo - x) + TIE_TOLERANCE * spec.length:
            return child_hi
        return next_lo
    return x


def nearest_point_in_prefractal(
    spec: CantorSetSpec, n: int, x: ArrayLike, config: Optional[EngineConfig] = None
) -> ArrayLike:
    """Closest point of the depth-n prefractal to ``x``, ties broken toward ``lo``.

    Works by descending the child digits of ``x``, so no interval list is built
    and only the depth cap applies.
    """
    config = config or EngineConfig.from_env()
    if n < 0:
        raise ArgumentError(f"depth must be non-negative, got {n}")
    if n > config.depth_cap:
        raise DepthCapError(
            f"depth {n} exceeds the configured depth cap {config.depth_cap}",
            depth=n,
            cap=config.depth_cap,
        )
    xs = np.asarray(x, dtype=float)
    tol = TIE_TOLERANCE * spec.length
    if np.any(xs < spec.lo - tol) or np.any(xs > spec.hi + tol):
        raise DomainError(f"x must lie in [{spec.lo}, {spec.hi}]", value=float(np.max(xs)))
    xs = np.clip(xs, spec.lo, spec.hi)
    if xs.ndim == 0:
        return _nearest_scalar(spec, n, float(xs))
    return np.array([_nearest_scalar(spec, n, float(v)) for v in xs.ravel()]).reshape(xs.shape)
