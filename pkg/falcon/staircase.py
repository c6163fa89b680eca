"""Coarse-grained mass, gamma-dimension and the integral staircase function."""

import logging
import math
from typing import Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import gamma as gamma_fn

from .cache import CacheManager, cached_function
from .cantor import TIE_TOLERANCE, flag, max_enumerable_depth, prefractal, rational_ratio
from .exceptions import ArgumentError, ConvergenceError, DomainError
from .models import CantorSetSpec, DimensionEstimate, EngineConfig, MassReport

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Cell width, in half-ulps of the position, below which endpoints are not snapped to.
SNAP_RESOLUTION = 1024


def _check_mass_args(a: float, b: float, alpha: float) -> None:
    if not a < b:
        raise ArgumentError(f"interval must satisfy a < b, got [{a}, {b}]")
    if not 0.0 < alpha <= 1.0:
        raise ArgumentError(f"alpha must lie in (0, 1], got {alpha}")


def mesh_depth(spec: CantorSetSpec, delta: float) -> int:
    """Shallowest prefractal level whose intervals are no wider than ``delta``."""
    if delta >= spec.length:
        return 0
    n = math.log(delta / spec.length) / math.log(spec.r)
    return max(0, math.ceil(n - 1e-9))


def coarse_mass(
    spec: CantorSetSpec,
    a: float,
    b: float,
    alpha: float,
    delta: float,
    config: Optional[EngineConfig] = None,
) -> float:
    """Coarse-grained mass of F ∩ [a, b] at mesh ``delta``.

    Minimum over two partition families: the gap-aligned one (prefractal
    intervals as cells, gap bodies flagged 0, endpoint shims taken to zero
    width) and the uniform partition of mesh ``delta``. The result is an upper
    bound on the infimum over all partitions.
    """
    _check_mass_args(a, b, alpha)
    if delta <= 0:
        raise ArgumentError(f"delta must be positive, got {delta}")
    config = config or EngineConfig.from_env()
    weight = float(gamma_fn(alpha + 1.0))

    n = mesh_depth(spec, delta)
    intervals = prefractal(spec, n, config)
    tol = TIE_TOLERANCE * spec.length
    full = (intervals.lefts >= a - tol) & (intervals.rights <= b + tol)
    left = np.maximum(intervals.lefts[~full], a)
    right = np.minimum(intervals.rights[~full], b)
    touching = right >= left
    # whole cells all have the exact width length * r**n
    whole = int(np.count_nonzero(full)) * (spec.length * spec.r**n) ** alpha
    clipped = float(np.sum((right[touching] - left[touching]) ** alpha))
    gap_aligned = weight * (whole + clipped)

    cells = math.ceil((b - a) / delta - 1e-9)
    if cells > config.uniform_cells:
        return gap_aligned

    fine = prefractal(spec, min(n + 2, max_enumerable_depth(spec, config)), config)
    edges = a + (b - a) * np.arange(cells + 1) / cells
    idx = np.searchsorted(fine.rights, edges[:-1], side="left")
    safe = np.minimum(idx, fine.count - 1)
    flagged = (idx < fine.count) & (fine.lefts[safe] <= edges[1:])
    uniform = weight * int(np.count_nonzero(flagged)) * ((b - a) / cells) ** alpha
    return min(gap_aligned, uniform)


def mass(
    spec: CantorSetSpec,
    a: float,
    b: float,
    alpha: float,
    config: Optional[EngineConfig] = None,
) -> MassReport:
    """Mass function gamma^alpha(F, a, b) extrapolated from a geometric mesh sequence.

    Meshes follow the set's own ratio, ``delta_n = (hi - lo) * r**n``. The
    trend is read from the least-squares slope of ``log gamma_delta`` over the
    finest meshes: a negative slope means the limit is 0, a positive one
    means it diverges, a flat one is a converged mass.
    """
    _check_mass_args(a, b, alpha)
    config = config or EngineConfig.from_env()
    finest = min(config.mass_depth, max_enumerable_depth(spec, config))
    depths = list(range(1, finest + 1))
    deltas = [spec.length * spec.r**n for n in depths]
    values = [coarse_mass(spec, a, b, alpha, d, config) for d in deltas]
    report = MassReport(alpha_used=alpha, delta_sequence=deltas, gamma_delta_values=values)

    if len(values) < max(config.mass_fit_points, 3):
        report.gamma_limit = values[-1] if values else float("nan")
        logger.warning(f"mass at alpha={alpha}: only {len(values)} meshes within budget")
        return report

    tail = np.asarray(values[-config.mass_fit_points :])
    if np.any(tail <= 0.0):
        report.status = "zero"
        report.gamma_limit = 0.0
        return report

    index = np.arange(tail.size, dtype=float)
    slope = float(np.polyfit(index, np.log(tail), 1)[0])
    report.log_ratio = slope
    if slope < -config.mass_tolerance:
        report.status = "zero"
        report.gamma_limit = 0.0
    elif slope > config.mass_tolerance:
        report.status = "divergent"
        report.gamma_limit = float("inf")
    else:
        report.status = "converged"
        report.gamma_limit = values[-1]
    logger.debug(f"mass alpha={alpha:.6f}: slope={slope:.3e} -> {report.status}")
    return report


def gamma_dimension(
    spec: CantorSetSpec,
    a: Optional[float] = None,
    b: Optional[float] = None,
    config: Optional[EngineConfig] = None,
    width: float = 1e-6,
) -> DimensionEstimate:
    """Bisection on alpha for the point where the mass flips between infinity and zero."""
    config = config or EngineConfig.from_env()
    a = spec.lo if a is None else a
    b = spec.hi if b is None else b
    if not a < b:
        raise ArgumentError(f"interval must satisfy a < b, got [{a}, {b}]")
    if b < spec.lo or a > spec.hi:
        raise DomainError(f"[{a}, {b}] does not meet the set")
    coarse = prefractal(spec, min(8, max_enumerable_depth(spec, config)), config)
    if flag(coarse, (max(a, spec.lo), min(b, spec.hi))) == 0:
        raise DomainError(f"[{a}, {b}] does not meet the set")

    if mass(spec, a, b, 1.0, config).status != "zero":
        return DimensionEstimate(value=1.0, lower=1.0, upper=1.0)

    lower, upper, iterations = 0.0, 1.0, 0
    while upper - lower > width:
        mid = 0.5 * (lower + upper)
        iterations += 1
        status = mass(spec, a, b, mid, config).status
        if status == "converged":
            return DimensionEstimate(value=mid, lower=mid, upper=mid, iterations=iterations)
        if status == "divergent":
            lower = mid
        else:
            upper = mid
    logger.debug(f"gamma-dimension bracket [{lower:.8f}, {upper:.8f}] after {iterations} steps")
    return DimensionEstimate(
        value=0.5 * (lower + upper), lower=lower, upper=upper, iterations=iterations
    )


def precision_levels(base: float, bits: int = 53) -> int:
    """Digit levels after which a weight ``base**-k`` drops below ``2**-bits``."""
    return int(math.ceil(bits * math.log(2) / math.log(base))) + 1


def _dyadic(values: np.ndarray) -> Tuple[np.ndarray, int]:
    """Floats as exact integer numerators over one shared power-of-two denominator."""
    pairs = [float(v).as_integer_ratio() for v in values]
    den = max((d for _, d in pairs), default=1)
    return np.array([n * (den // d) for n, d in pairs], dtype=object), den


def _rational_digits(m: int, p: int, q: int, u: np.ndarray) -> np.ndarray:
    """Normalized staircase at unit positions in (0, 1) for the ratio ``p / q``.

    Digits are read in integer arithmetic from the exact value of each float.
    A position within half an ulp of the endpoint of a cell wider than
    ``SNAP_RESOLUTION`` half-ulps reads as that endpoint.
    """
    exact, den = _dyadic(np.concatenate([u, np.spacing(u) / 2]))
    num, slack = exact[: u.size], exact[u.size :]
    value = np.zeros(u.size)
    active = np.arange(u.size)
    # child i spans [i * step, i * step + width] in units of 1 / ((m - 1) * q)
    step, width = q - p, (m - 1) * p
    weight = 1.0
    for _ in range(precision_levels(m, bits=64)):
        if active.size == 0:
            break
        scaled = num[active] * ((m - 1) * q)
        tol = slack[active] * ((m - 1) * q)
        digit = scaled // (step * den)
        digit = np.where(digit > m - 1, m - 1, digit)
        offset = scaled - digit * (step * den)
        cell = width * den
        near = np.asarray(tol * SNAP_RESOLUTION <= cell, dtype=bool)
        low = near & np.asarray(offset <= tol, dtype=bool)
        high = np.asarray(offset > cell, dtype=bool) | (
            near & np.asarray(offset >= cell - tol, dtype=bool)
        )
        value[active] += weight * np.where(high, digit + 1, digit).astype(float) / m
        num[active] = offset
        slack[active] = tol
        den *= width
        active = active[~(low | high)]
        weight /= m
    if active.size:
        rest = (num[active] / den).astype(float)
        value[active] += weight * np.clip(rest, 0.0, 1.0)
    return value


def _float_digits(spec: CantorSetSpec, u: np.ndarray) -> np.ndarray:
    value = np.zeros(u.size)
    active = np.arange(u.size)
    step, m, r = spec.spacing, spec.m, spec.r
    weight = 1.0
    for _ in range(precision_levels(m)):
        if active.size == 0:
            break
        ua = u[active]
        digit = np.minimum(np.floor(ua / step), m - 1)
        offset = ua - digit * step
        inside = offset <= r
        value[active] += weight * np.where(inside, digit, digit + 1) / m
        u[active] = offset / r
        active = active[inside]
        weight /= m
    value[active] += weight * np.clip(u[active], 0.0, 1.0)
    return value


def cantor_function(spec: CantorSetSpec, x: ArrayLike) -> np.ndarray:
    """Normalized staircase of the set: 0 at ``lo``, 1 at ``hi``, flat on every gap.

    Evaluated by expanding ``x`` into child digits: a digit ``i`` contributes
    ``i / m`` of the current weight, landing in the gap after child ``i`` adds
    ``(i + 1) / m`` and stops. Rational ratios are expanded exactly; other
    ratios rescale in floating point.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    u = ((xs - spec.lo) / spec.length).ravel()
    value = np.where(u >= 1.0, 1.0, 0.0)
    inner = np.flatnonzero((u > 0.0) & (u < 1.0))
    ratio = rational_ratio(spec.r)
    if ratio is None:
        value[inner] = _float_digits(spec, u[inner])
    else:
        value[inner] = _rational_digits(spec.m, ratio[0], ratio[1], u[inner])
    return value.reshape(xs.shape)


def _rational_preimage(m: int, p: int, q: int, t: np.ndarray) -> np.ndarray:
    """Smallest unit position with normalized staircase value ``t`` in (0, 1)."""
    num, den = _dyadic(t)
    out = np.zeros(t.size)
    left = np.zeros(t.size, dtype=object)
    scale, pk = m - 1, 1
    active = np.arange(t.size)
    for _ in range(precision_levels(q / p, bits=64)):
        if active.size == 0:
            break
        scaled = num[active] * m
        digit = scaled // den
        rest = scaled - digit * den
        base = left[active] * q
        scale *= q
        done = np.asarray(rest == 0, dtype=bool)
        if done.any():
            # t ends on a step value: its flat run starts at the right end of child digit - 1
            ends = base[done] + (digit[done] - 1) * ((q - p) * pk) + (m - 1) * p * pk
            out[active[done]] = (ends / scale).astype(float)
        left[active] = base + digit * ((q - p) * pk)
        num[active] = rest
        active = active[~done]
        pk *= p
    if active.size:
        out[active] = (left[active] / scale).astype(float)
    return out


def _float_preimage(spec: CantorSetSpec, t: np.ndarray) -> np.ndarray:
    u = np.zeros_like(t)
    scale = 1.0
    m = spec.m
    for _ in range(precision_levels(m)):
        digit = np.clip(np.ceil(t * m) - 1.0, 0.0, m - 1)
        u += digit * spec.spacing * scale
        t = t * m - digit
        scale *= spec.r
    return np.minimum(u, 1.0)


def cantor_inverse(spec: CantorSetSpec, t: ArrayLike) -> np.ndarray:
    """Smallest x with normalized staircase value ``t`` (left end of a flat level set).

    The digit expansion is followed by a choice among ``x`` and its two
    neighbouring floats, keeping whichever reproduces ``t`` best.
    """
    t = np.clip(np.atleast_1d(np.asarray(t, dtype=float)), 0.0, 1.0).ravel()
    u = np.where(t >= 1.0, 1.0, 0.0)
    inner = np.flatnonzero((t > 0.0) & (t < 1.0))
    ratio = rational_ratio(spec.r)
    if ratio is None:
        u[inner] = _float_preimage(spec, t[inner].copy())
    else:
        u[inner] = _rational_preimage(spec.m, ratio[0], ratio[1], t[inner])
    x = spec.lo + spec.length * u
    candidates = np.stack(
        [
            x,
            np.maximum(np.nextafter(x, -np.inf), spec.lo),
            np.minimum(np.nextafter(x, np.inf), spec.hi),
        ]
    )
    miss = np.abs(cantor_function(spec, candidates) - t)
    return candidates[np.argmin(miss, axis=0), np.arange(t.size)]


def compute_normalization(spec: CantorSetSpec, config: Optional[EngineConfig] = None) -> float:
    """Total mass gamma^alpha(F, lo, hi) at the set's own dimension."""
    report = mass(spec, spec.lo, spec.hi, spec.alpha, config)
    if report.status != "converged" or not math.isfinite(report.gamma_limit):
        raise ConvergenceError(
            f"normalization of {spec.to_json_dict()} did not converge ({report.status})"
        )
    return report.gamma_limit


class StaircaseEvaluator(BaseModel):
    """Evaluator of the integral staircase S_F^alpha and its inverse.

    ``exact`` mode scales the normalized staircase by the total mass ``N``;
    ``power`` mode is the power-law proxy ``sign(x - a0) |x - a0|**alpha``.
    """

    model_config = ConfigDict(frozen=True)

    spec: CantorSetSpec
    a0: float
    normalization: float
    mode: Literal["exact", "power"] = "exact"
    alpha: float

    @classmethod
    def build(
        cls,
        spec: CantorSetSpec,
        mode: Literal["exact", "power"] = "exact",
        a0: Optional[float] = None,
        config: Optional[EngineConfig] = None,
        cache: Optional[CacheManager] = None,
    ) -> "StaircaseEvaluator":
        config = config or EngineConfig.from_env()
        a0 = spec.lo if a0 is None else float(a0)
        if not spec.lo <= a0 <= spec.hi:
            raise DomainError(f"origin a0={a0} must lie in [{spec.lo}, {spec.hi}]", value=a0)
        if mode == "power":
            normalization = spec.length**spec.alpha
        elif cache is not None:
            cached = cached_function(cache, expire_days=365, key_prefix="normalization")(
                _normalization_from_json
            )
            normalization = cached(spec.model_dump_json(), config.model_dump_json())
        else:
            normalization = compute_normalization(spec, config)
        logger.debug(f"staircase {mode} for {spec.to_json_dict()}: N={normalization:.15g}")
        return cls(spec=spec, a0=a0, normalization=normalization, mode=mode, alpha=spec.alpha)

    @classmethod
    def power_law(cls, alpha: float, lo: float = 0.0, hi: float = 1.0) -> "StaircaseEvaluator":
        """Power-law proxy of dimension ``alpha`` on [lo, hi], two children of ratio 2**(-1/alpha)."""
        if not 0.0 < alpha <= 1.0:
            raise ArgumentError(f"alpha must lie in (0, 1], got {alpha}")
        spec = CantorSetSpec(m=2, r=2.0 ** (-1.0 / alpha), lo=lo, hi=hi)
        return cls.build(spec, mode="power")

    @property
    def s_min(self) -> float:
        return float(self.staircase(self.spec.lo))

    @property
    def s_max(self) -> float:
        return float(self.staircase(self.spec.hi))

    def staircase(self, x: ArrayLike, strict: bool = False) -> ArrayLike:
        xs = np.asarray(x, dtype=float)
        if strict and (np.any(xs < self.spec.lo) or np.any(xs > self.spec.hi)):
            raise DomainError(f"x outside [{self.spec.lo}, {self.spec.hi}]")
        if self.mode == "power":
            d = xs - self.a0
            out = np.sign(d) * np.abs(d) ** self.alpha
        else:
            base = cantor_function(self.spec, self.a0)[0] if self.a0 != self.spec.lo else 0.0
            out = self.normalization * (cantor_function(self.spec, xs) - base)
            out = out.reshape(xs.shape)
        return float(out) if np.ndim(out) == 0 else out

    def inverse(self, s: ArrayLike) -> ArrayLike:
        ss = np.asarray(s, dtype=float)
        tol = 1e-12 * max(self.normalization, 1.0)
        if np.any(ss < self.s_min - tol) or np.any(ss > self.s_max + tol):
            raise DomainError(
                f"staircase value outside [{self.s_min}, {self.s_max}]", value=float(np.max(ss))
            )
        if self.mode == "power":
            out = self.a0 + np.sign(ss) * np.abs(ss) ** (1.0 / self.alpha)
            out = np.clip(out, self.spec.lo, self.spec.hi)
        else:
            base = cantor_function(self.spec, self.a0)[0] if self.a0 != self.spec.lo else 0.0
            out = cantor_inverse(self.spec, ss / self.normalization + base).reshape(ss.shape)
        return float(out) if np.ndim(out) == 0 else out


def _normalization_from_json(spec_json: str, config_json: str) -> float:
    spec = CantorSetSpec.model_validate_json(spec_json)
    return compute_normalization(spec, EngineConfig.model_validate_json(config_json))


def staircase(evaluator: StaircaseEvaluator, x: ArrayLike, strict: bool = False) -> ArrayLike:
    """S_F^alpha(x); below ``a0`` the signed branch ``-gamma(F, x, a0)`` applies."""
    return evaluator.staircase(x, strict=strict)


def staircase_inverse(evaluator: StaircaseEvaluator, s: ArrayLike) -> ArrayLike:
    """Smallest x with S_F^alpha(x) = s."""
    return evaluator.inverse(s)


__all__ = [
    "StaircaseEvaluator",
    "cantor_function",
    "cantor_inverse",
    "coarse_mass",
    "compute_normalization",
    "gamma_dimension",
    "mass",
    "staircase",
    "staircase_inverse",
]
