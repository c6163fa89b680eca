"""Stock worked examples and the curve families behind the published figures."""

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .etp import Profile, combine, make_term
from .exceptions import ArgumentError
from .models import CantorSetSpec, EngineConfig, InitialConditions, ProblemSpec
from .solver import (
    ConstCoeffFDE,
    LinearFDE,
    characteristic_roots,
    general_solution,
    homogeneous_basis,
    norm_bound_check,
    oscillator_amplitude,
    reduce_order,
    solve_ivp,
)
from .staircase import StaircaseEvaluator

logger = logging.getLogger(__name__)

DEFAULT_ALPHAS: Tuple[float, ...] = (0.5, 0.63, 0.8, 1.0)
SINGLE_ALPHA_FIGURES = (2, 3)
FIGURE_IDS = tuple(range(1, 8))

STOCK_PROBLEMS: List[ProblemSpec] = [
    ProblemSpec(
        name="ivp-real-roots",
        a=1.0,
        b=5.0,
        c=6.0,
        ic=InitialConditions(x0=0.0, f0=2.0, Df0=3.0),
        expected="9*exp(-2*s) - 7*exp(-3*s)",
    ),
    ProblemSpec(
        name="ivp-complex-roots",
        a=16.0,
        b=-8.0,
        c=145.0,
        ic=InitialConditions(x0=0.0, f0=-2.0, Df0=1.0),
        expected="-2*exp(0.25*s)*cos(3*s) + 0.5*exp(0.25*s)*sin(3*s)",
    ),
    ProblemSpec(name="damped-cosine", a=1.0, b=1.0, c=1.0),
    ProblemSpec(
        name="undetermined-coefficients",
        a=1.0,
        b=-3.0,
        c=-4.0,
        g="3*exp(2*s)",
        expected="-0.5*exp(2*s)",
    ),
    ProblemSpec(
        name="forced-oscillator",
        a=1.0,
        b=0.0,
        c=1.0,
        g="0.5*cos(0.8*s)",
        ic=InitialConditions(x0=0.0, f0=0.0, Df0=0.0),
        expected="25/18*cos(0.8*s) - 25/18*cos(s)",
    ),
    ProblemSpec(
        name="euler-reduction",
        type="linear",
        P="2*s^2",
        Q="3*s",
        R="-1",
        f1="s^-1",
        expected="s^0.5",
    ),
]


def stock_problem(name: str) -> ProblemSpec:
    for problem in STOCK_PROBLEMS:
        if problem.name == name:
            return problem
    raise ArgumentError(f"no stock problem named {name!r}")


def build_equation(problem: ProblemSpec):
    """The solver equation described by a problem document."""
    forcing = Profile.parse(problem.g) if problem.g else Profile()
    if problem.type == "const":
        return ConstCoeffFDE(a=problem.a, b=problem.b, c=problem.c, forcing=forcing)
    return LinearFDE(
        P=Profile.parse(problem.P),
        Q=Profile.parse(problem.Q),
        R=Profile.parse(problem.R),
        g=forcing,
    )


def random_profile(rng: np.random.Generator, max_terms: int = 3) -> Profile:
    """A profile of exponential and damped-trigonometric terms, finite on every s."""
    terms = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        coef = float(rng.uniform(-2.0, 2.0))
        rate = float(rng.uniform(-2.0, 2.0))
        if rng.random() < 0.5:
            terms.append(make_term(coef, 0.0, 0, rate))
        else:
            phase = "cos" if rng.random() < 0.5 else "sin"
            terms.append(make_term(coef, 0.0, 0, rate, float(rng.uniform(0.5, 3.0)), phase))
    return Profile.from_terms(terms)


# Figure curve families


def _evaluator(alpha: float, exact: bool, config: EngineConfig) -> StaircaseEvaluator:
    if not exact:
        return StaircaseEvaluator.power_law(alpha)
    spec = CantorSetSpec(m=2, r=2.0 ** (-1.0 / alpha))
    return StaircaseEvaluator.build(spec, mode="exact", config=config)


def _damped_cosine(config: EngineConfig) -> Profile:
    f1, f2 = homogeneous_basis(characteristic_roots(1.0, 1.0, 1.0, config))
    return combine(f1, f2, 1.0, 1.0)


def _real_roots_ivp(config: EngineConfig) -> Profile:
    problem = stock_problem("ivp-real-roots")
    return solve_ivp(build_equation(problem), problem.ic, config=config).solution


def _complex_roots_ivp(config: EngineConfig) -> Profile:
    problem = stock_problem("ivp-complex-roots")
    return solve_ivp(build_equation(problem), problem.ic, config=config).solution


def _forced_oscillator(config: EngineConfig) -> Profile:
    problem = stock_problem("forced-oscillator")
    return general_solution(build_equation(problem), problem.ic, config=config).solution


def _euler_curve(config: EngineConfig) -> Profile:
    problem = stock_problem("euler-reduction")
    f1 = Profile.parse(problem.f1)
    f2 = reduce_order(build_equation(problem), f1, method="symbolic", config=config)
    return combine(f2, f1, 2.0 / 3.0, 1.0)


CURVES: Dict[int, Callable[[EngineConfig], Profile]] = {
    1: _damped_cosine,
    3: _real_roots_ivp,
    4: _real_roots_ivp,
    5: _complex_roots_ivp,
    6: _forced_oscillator,
    7: _euler_curve,
}


def _curve_frame(profile: Profile, evaluator: StaircaseEvaluator, samples: int) -> pd.DataFrame:
    x = np.linspace(evaluator.spec.lo, evaluator.spec.hi, samples)
    s = np.asarray(evaluator.staircase(x), dtype=float)
    if profile.requires_positive:
        keep = s > 0.0
        x, s = x[keep], s[keep]
    return pd.DataFrame({"x": x, "s": s, "f": np.asarray(profile.evaluate(s), dtype=float)})


def _bounds_frame(
    evaluator: StaircaseEvaluator, samples: int, config: EngineConfig
) -> pd.DataFrame:
    problem = stock_problem("ivp-real-roots")
    bundle = solve_ivp(build_equation(problem), problem.ic, evaluator=evaluator, config=config)
    report = norm_bound_check(bundle, 5.0, 6.0, evaluator, n_samples=samples, config=config)
    return pd.DataFrame(
        {
            "x": [p.x for p in report.samples],
            "s": [p.s for p in report.samples],
            "norm": [p.norm for p in report.samples],
            "lower": [p.lower for p in report.samples],
            "upper": [p.upper for p in report.samples],
        }
    )


def figure_data(
    figure_id: int,
    alphas: Optional[Sequence[float]] = None,
    samples: int = 2001,
    exact: bool = False,
    config: Optional[EngineConfig] = None,
) -> List[Tuple[float, pd.DataFrame]]:
    """Sample grids ``(alpha, frame)`` for one figure.

    Power-law staircases ``S = x**alpha`` are used unless ``exact`` is set,
    in which case the exact staircase of the two-piece set of dimension
    ``alpha`` replaces them. Figures 2 and 3 are drawn for alpha = 0.63 only.
    """
    config = config or EngineConfig.from_env()
    if figure_id not in FIGURE_IDS:
        raise ArgumentError(f"figure must be one of {list(FIGURE_IDS)}, got {figure_id}")
    if samples < 2:
        raise ArgumentError(f"samples must be at least 2, got {samples}")
    alphas = [0.63] if figure_id in SINGLE_ALPHA_FIGURES else list(alphas or DEFAULT_ALPHAS)
    for alpha in alphas:
        if not 0.0 < alpha <= 1.0:
            raise ArgumentError(f"alpha values must lie in (0, 1], got {alpha}")

    profile = CURVES[figure_id](config) if figure_id in CURVES else None
    frames = []
    for alpha in alphas:
        evaluator = _evaluator(alpha, exact, config)
        if profile is None:
            frame = _bounds_frame(evaluator, samples, config)
        else:
            frame = _curve_frame(profile, evaluator, samples)
        if figure_id == 6:
            amplitude = oscillator_amplitude(1.0, 1.0, 0.5, 0.8)
            frame["beat"] = 2.0 * amplitude * np.sin(0.1 * frame["s"]) * np.sin(0.9 * frame["s"])
        logger.debug(f"figure {figure_id}, alpha={alpha}: {len(frame)} rows")
        frames.append((alpha, frame))
    return frames


def figure_filename(figure_id: int, alpha: float) -> str:
    return f"figure{figure_id}_alpha{alpha:g}.csv"


__all__ = [
    "DEFAULT_ALPHAS",
    "STOCK_PROBLEMS",
    "build_equation",
    "figure_data",
    "figure_filename",
    "random_profile",
    "stock_problem",
]
