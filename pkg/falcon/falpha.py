"""Numeric F^alpha-derivatives and F^alpha-integrals against the staircase.

These are the independent oracles for the closed forms in :mod:`falcon.etp`
and :mod:`falcon.solver`. Stencils live in the staircase coordinate: the
nodes are ``S^-1(s_x + j h)`` with ``h = N m**-depth``, so every node is a
point of F and no stencil straddles a gap plateau.
"""

import logging
import math
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from .cantor import nearest_point_in_prefractal
from .etp import Profile
from .exceptions import ArgumentError, DepthCapError, DomainError, IntegrationError, StencilError
from .models import EngineConfig
from .staircase import ArrayLike, StaircaseEvaluator

logger = logging.getLogger(__name__)


class SampledFunction(BaseModel):
    """A real function on [lo, hi], evaluated through a vectorized callback."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    func: Callable[[np.ndarray], np.ndarray]
    lo: float = 0.0
    hi: float = 1.0
    staircase_profile: bool = False

    @classmethod
    def from_profile(cls, profile: Profile, evaluator: StaircaseEvaluator) -> "SampledFunction":
        """``x -> profile(S(x))``."""

        def func(x: np.ndarray) -> np.ndarray:
            return np.asarray(profile.evaluate(evaluator.staircase(x)), dtype=float)

        return cls(
            func=func, lo=evaluator.spec.lo, hi=evaluator.spec.hi, staircase_profile=True
        )

    def __call__(self, x: ArrayLike) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.func(xs), dtype=float), xs.shape)


def _as_sampled(f, evaluator: StaircaseEvaluator) -> SampledFunction:
    if isinstance(f, SampledFunction):
        return f
    if isinstance(f, Profile):
        return SampledFunction.from_profile(f, evaluator)
    return SampledFunction(func=f, lo=evaluator.spec.lo, hi=evaluator.spec.hi)


def _snap(evaluator: StaircaseEvaluator, x: np.ndarray, depth: int, config: EngineConfig):
    if evaluator.mode == "power":
        return np.clip(x, evaluator.spec.lo, evaluator.spec.hi)
    return np.asarray(nearest_point_in_prefractal(evaluator.spec, depth, x, config), dtype=float)


# Node offsets in units of h: centred, and one-sided from the low end of the range.
STENCILS = {
    1: (np.array([-1.0, 0.0, 1.0]), np.array([0.0, 1.0, 2.0])),
    2: (np.array([-1.0, 0.0, 1.0]), np.array([0.0, 1.0, 2.0, 3.0])),
}


def _stencil_weights(s_nodes: np.ndarray, at: np.ndarray, h: float, order: int) -> np.ndarray:
    """Weights of the ``order``-th derivative at ``at`` of the polynomial through the nodes."""
    t = (s_nodes - at[:, None]) / h
    k = t.shape[-1]
    vander = t[:, None, :] ** np.arange(k)[None, :, None]
    rhs = np.zeros((t.shape[0], k, 1))
    rhs[:, order, 0] = math.factorial(order)
    try:
        weights = np.linalg.solve(vander, rhs)[..., 0]
    except np.linalg.LinAlgError:
        raise StencilError("stencil nodes share a staircase value")
    return weights / h**order


def _sides(evaluator: StaircaseEvaluator, s_x: np.ndarray, h: float, reach: int) -> np.ndarray:
    """+1 where the stencil must look right of ``s_x``, -1 where left, 0 where centred."""
    s_min, s_max = evaluator.s_min, evaluator.s_max
    slack = 1e-12 * max(abs(s_max - s_min), 1.0)
    if reach * h > s_max - s_min + slack:
        raise StencilError(f"stencil width {reach * h} does not fit the staircase range")
    side = np.zeros(s_x.size, dtype=int)
    side[s_x - h < s_min - slack] = 1
    side[(s_x + h > s_max + slack) & (side == 0)] = -1
    return side


def _stencil(
    f: SampledFunction,
    evaluator: StaircaseEvaluator,
    x: np.ndarray,
    s_x: np.ndarray,
    h: float,
    offsets: np.ndarray,
    order: int,
) -> np.ndarray:
    s_targets = np.clip(s_x[:, None] + offsets[None, :] * h, evaluator.s_min, evaluator.s_max)
    x_nodes = np.asarray(evaluator.inverse(s_targets), dtype=float).reshape(s_targets.shape)
    centre = np.broadcast_to(offsets == 0.0, x_nodes.shape)
    x_nodes[centre] = np.broadcast_to(x[:, None], x_nodes.shape)[centre]
    s_nodes = np.asarray(evaluator.staircase(x_nodes), dtype=float)
    f_nodes = f(x_nodes)
    return np.sum(_stencil_weights(s_nodes, s_x, h, order) * f_nodes, axis=-1)


def _difference(
    f: SampledFunction,
    evaluator: StaircaseEvaluator,
    x: np.ndarray,
    s_x: np.ndarray,
    h: float,
    order: int,
    side: np.ndarray,
) -> np.ndarray:
    centred, one_sided = STENCILS[order]
    out = np.empty(x.size)
    for mask, offsets in (
        (side == 0, centred),
        (side > 0, one_sided),
        (side < 0, -one_sided[::-1]),
    ):
        if np.any(mask):
            out[mask] = _stencil(f, evaluator, x[mask], s_x[mask], h, offsets, order)
    return out


def _extrapolated(
    f,
    evaluator: StaircaseEvaluator,
    x: ArrayLike,
    order: int,
    stencil_depth: Optional[int],
    config: Optional[EngineConfig],
) -> ArrayLike:
    config = config or EngineConfig.from_env()
    depth = config.stencil_depth if stencil_depth is None else stencil_depth
    if depth < 4:
        raise ArgumentError(f"stencil_depth must be at least 4, got {depth}")
    if depth + 1 > config.depth_cap:
        raise DepthCapError(
            f"stencil depth {depth + 1} exceeds the depth cap {config.depth_cap}",
            depth=depth + 1,
            cap=config.depth_cap,
        )
    sampled = _as_sampled(f, evaluator)
    xs = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    # the depth + 1 prefractal lies inside the depth one, so both stencils share a centre
    x_in = _snap(evaluator, xs, depth + 1, config)
    s_x = np.asarray(evaluator.staircase(x_in), dtype=float).ravel()
    m = float(evaluator.spec.m)
    h = evaluator.normalization * m ** (-depth)
    try:
        side = _sides(evaluator, s_x, h, len(STENCILS[order][1]) - 1)
        coarse = _difference(sampled, evaluator, x_in, s_x, h, order, side)
        fine = _difference(sampled, evaluator, x_in, s_x, h / m, order, side)
    except StencilError as e:
        raise StencilError(str(e), x=float(x_in[0]), depth=depth)
    out = (m**2 * fine - coarse) / (m**2 - 1.0)
    out = out.reshape(np.shape(x))
    return float(out) if out.ndim == 0 else out


def falpha_derivative(
    f,
    evaluator: StaircaseEvaluator,
    x: ArrayLike,
    stencil_depth: Optional[int] = None,
    config: Optional[EngineConfig] = None,
) -> ArrayLike:
    """D^alpha f at ``x`` by a three-point stencil through F, Richardson-extrapolated.

    ``f`` may be a :class:`SampledFunction`, a :class:`~falcon.etp.Profile`
    (read as a function of ``S(x)``) or a vectorized callable of ``x``.
    Points outside the depth-``stencil_depth + 1`` prefractal are snapped onto
    it. Stencils are one-sided within ``h`` of either end of the range.
    """
    return _extrapolated(f, evaluator, x, 1, stencil_depth, config)


def falpha_derivative2(
    f,
    evaluator: StaircaseEvaluator,
    x: ArrayLike,
    stencil_depth: Optional[int] = None,
    config: Optional[EngineConfig] = None,
) -> ArrayLike:
    """(D^alpha)^2 f at ``x``: second difference through F in the staircase coordinate.

    Centred on three nodes, or on four one-sided nodes at the ends of the
    range, and extrapolated like :func:`falpha_derivative`.
    """
    return _extrapolated(f, evaluator, x, 2, stencil_depth, config)


def _riemann_stieltjes(
    f: SampledFunction,
    evaluator: StaircaseEvaluator,
    a: float,
    b: float,
    h: float,
    config: EngineConfig,
) -> float:
    s_a, s_b = float(evaluator.staircase(a)), float(evaluator.staircase(b))
    first = int(np.floor(s_a / h)) + 1
    last = int(np.ceil(s_b / h)) - 1
    count = max(0, last - first + 1)
    if count > config.max_intervals:
        raise DepthCapError(f"integral partition of {count} cells exceeds the interval budget")
    s_interior = h * np.arange(first, last + 1, dtype=float)
    s_interior = s_interior[(s_interior > s_a) & (s_interior < s_b)]
    x_breaks = np.concatenate(([a], np.atleast_1d(evaluator.inverse(s_interior)), [b]))
    s_breaks = np.asarray(evaluator.staircase(x_breaks), dtype=float)
    delta = np.diff(s_breaks)
    xi = np.atleast_1d(evaluator.inverse(0.5 * (s_breaks[:-1] + s_breaks[1:])))
    values = f(xi)
    if not np.all(np.isfinite(values)):
        bad = xi[~np.isfinite(values)][0]
        raise IntegrationError(f"integrand is not finite at x={bad}")
    return float(np.sum(values * delta))


def falpha_integral(
    f,
    evaluator: StaircaseEvaluator,
    a: float,
    b: float,
    refinement: Optional[int] = None,
    richardson: bool = True,
    config: Optional[EngineConfig] = None,
) -> float:
    """Riemann-Stieltjes sum of ``f`` against S over [a, b], midpoints taken in ``s``.

    Breakpoints sit at multiples of ``h = N m**-refinement`` in ``s``, mapped
    back through the staircase inverse, so gap plateaus contribute nothing.
    """
    config = config or EngineConfig.from_env()
    refinement = config.integral_refinement if refinement is None else refinement
    if refinement < 1:
        raise ArgumentError(f"refinement must be positive, got {refinement}")
    if a > b:
        raise ArgumentError(f"integral bounds out of order: [{a}, {b}]")
    spec = evaluator.spec
    tol = 1e-12 * spec.length
    if a < spec.lo - tol or b > spec.hi + tol:
        raise DomainError(f"[{a}, {b}] is not inside [{spec.lo}, {spec.hi}]")
    if a == b:
        return 0.0
    a, b = max(a, spec.lo), min(b, spec.hi)
    sampled = _as_sampled(f, evaluator)

    h = evaluator.normalization * float(spec.m) ** (-refinement)
    coarse = _riemann_stieltjes(sampled, evaluator, a, b, h, config)
    if not richardson:
        return coarse
    fine = _riemann_stieltjes(sampled, evaluator, a, b, h / spec.m, config)
    ratio = float(spec.m) ** 2
    result = (ratio * fine - coarse) / (ratio - 1.0)
    logger.debug(f"integral over [{a}, {b}]: {coarse:.15g} -> {fine:.15g} -> {result:.15g}")
    return result
