"""Second alpha-order linear fractal differential equations in closed form.

Everything is solved in the staircase coordinate ``s = S(x)``, where
``D^alpha`` acts as ``d/ds`` on profiles. The fractal only enters when an
initial point ``x0`` is mapped to ``s0`` and when numeric cross-checks run
through :mod:`falcon.falpha`.
"""

import logging
import math
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import solve_ivp as integrate_ivp
from scipy.interpolate import CubicHermiteSpline

from .cantor import nearest_point_in_prefractal
from .etp import Profile, antiderivative, combine, differentiate, make_term, multiply
from .exceptions import (
    ArgumentError,
    ConvergenceError,
    DomainError,
    ResonanceError,
    SingularSystemError,
    UnsupportedTermError,
    WronskianZeroError,
)
from .falpha import SampledFunction, falpha_derivative, falpha_derivative2, falpha_integral
from .models import EngineConfig, InitialConditions, NormBoundReport, NormSample
from .staircase import ArrayLike, StaircaseEvaluator

logger = logging.getLogger(__name__)

WRONSKIAN_FLOOR = 1e-12


class ConstCoeffFDE(BaseModel):
    """``a D^{2a} f + b D^a f + c f = forcing``."""

    model_config = ConfigDict(frozen=True)

    a: float
    b: float
    c: float
    forcing: Profile = Field(default_factory=Profile)

    @property
    def homogeneous(self) -> bool:
        return self.forcing.is_zero()

    def without_forcing(self) -> "ConstCoeffFDE":
        return self.model_copy(update={"forcing": Profile()})

    def as_linear(self) -> "LinearFDE":
        return LinearFDE(
            P=Profile.constant(self.a),
            Q=Profile.constant(self.b),
            R=Profile.constant(self.c),
            g=self.forcing,
        )


class LinearFDE(BaseModel):
    """``P D^{2a} f + Q D^a f + R f = g`` with profile coefficients."""

    model_config = ConfigDict(frozen=True)

    P: Profile
    Q: Profile
    R: Profile
    g: Profile = Field(default_factory=Profile)

    @model_validator(mode="after")
    def check_leading(self) -> "LinearFDE":
        if self.P.is_zero():
            raise ValueError("leading coefficient P must not be the zero profile")
        return self

    @classmethod
    def parse(cls, P: str, Q: str, R: str, g: str = "0") -> "LinearFDE":
        return cls(P=Profile.parse(P), Q=Profile.parse(Q), R=Profile.parse(R), g=Profile.parse(g))

    def as_linear(self) -> "LinearFDE":
        return self

    def without_forcing(self) -> "LinearFDE":
        return self.model_copy(update={"g": Profile()})

    def normalized(self) -> Tuple[Profile, Profile, Profile]:
        """``(p, q, g / P)`` with ``p = Q / P`` and ``q = R / P``."""
        inverse = self.P.invert()
        return multiply(self.Q, inverse), multiply(self.R, inverse), multiply(self.g, inverse)


Equation = Union[ConstCoeffFDE, LinearFDE]


class RootClassification(BaseModel):
    """Roots of ``a r^2 + b r + c = 0``."""

    kind: Literal["real-distinct", "complex-pair", "repeated"]
    r1: Optional[float] = None
    r2: Optional[float] = None
    lam: Optional[float] = None
    nu: Optional[float] = None
    r: Optional[float] = None
    discriminant: float = 0.0


class NumericSolution(BaseModel):
    """Cubic Hermite representation of a solution on a grid of staircase values."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    s: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray

    @property
    def spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.s, self.values, self.derivatives, extrapolate=False)

    def _check(self, s: ArrayLike) -> np.ndarray:
        arr = np.asarray(s, dtype=float)
        tol = 1e-12 * max(1.0, abs(self.s[-1]))
        if np.any(arr < self.s[0] - tol) or np.any(arr > self.s[-1] + tol):
            raise DomainError(f"s outside the solved range [{self.s[0]}, {self.s[-1]}]")
        return np.clip(arr, self.s[0], self.s[-1])

    def evaluate(self, s: ArrayLike) -> ArrayLike:
        out = self.spline(self._check(s))
        return float(out) if np.ndim(out) == 0 else out

    def derivative_evaluate(self, s: ArrayLike) -> ArrayLike:
        out = self.spline.derivative()(self._check(s))
        return float(out) if np.ndim(out) == 0 else out


class SolutionBundle(BaseModel):
    """Fundamental pair, particular solution and constants of a solved problem."""

    basis: Tuple[Profile, Profile]
    constants: Optional[Tuple[float, float]] = None
    particular: Profile = Field(default_factory=Profile)
    solution: Profile
    x0: float = 0.0
    s0: float = 0.0
    wronskian_at_x0: float
    residual_max: float
    numeric_residual: Optional[float] = None
    difference_residual: Optional[float] = None
    norm_bound_report: Optional[NormBoundReport] = None
    alpha: float = 1.0

    @property
    def solution_space_dimension(self) -> float:
        """Reported as 2 alpha; carries no computational meaning."""
        return 2.0 * self.alpha

    def to_json_dict(self) -> dict:
        return {
            "basis": [str(self.basis[0]), str(self.basis[1])],
            "constants": list(self.constants) if self.constants is not None else None,
            "particular": str(self.particular),
            "solution": str(self.solution),
            "x0": self.x0,
            "s0": self.s0,
            "wronskian": self.wronskian_at_x0,
            "residual_max": self.residual_max,
            "numeric_residual": self.numeric_residual,
            "difference_residual": self.difference_residual,
            "solution_space_dimension": self.solution_space_dimension,
        }


def characteristic_roots(
    a: float, b: float, c: float, config: Optional[EngineConfig] = None
) -> RootClassification:
    """Classify the roots of ``a r^2 + b r + c``; near-zero discriminants count as repeated."""
    config = config or EngineConfig.from_env()
    if a == 0.0:
        raise ArgumentError("a = 0: the equation is not of second order")
    disc = b * b - 4.0 * a * c
    tau = config.disc_tolerance * max(b * b, 4.0 * abs(a * c))
    if abs(disc) <= tau:
        return RootClassification(kind="repeated", r=-b / (2.0 * a), discriminant=disc)
    if disc > 0.0:
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        roots = sorted([q / a, c / q], reverse=True)
        return RootClassification(kind="real-distinct", r1=roots[0], r2=roots[1], discriminant=disc)
    return RootClassification(
        kind="complex-pair",
        lam=-b / (2.0 * a),
        nu=math.sqrt(-disc) / (2.0 * abs(a)),
        discriminant=disc,
    )


def homogeneous_basis(roots: RootClassification) -> Tuple[Profile, Profile]:
    if roots.kind == "real-distinct":
        return Profile.exp(roots.r1), Profile.exp(roots.r2)
    if roots.kind == "complex-pair":
        return (
            Profile.trig(roots.nu, "cos", rate=roots.lam),
            Profile.trig(roots.nu, "sin", rate=roots.lam),
        )
    return Profile.exp(roots.r), Profile.from_terms([make_term(1.0, 1.0, 0, roots.r)])


def wronskian(f1, f2, s0: float) -> float:
    """``f1 f2' - f2 f1'`` at ``s0``."""
    return float(
        f1.evaluate(s0) * f2.derivative_evaluate(s0) - f2.evaluate(s0) * f1.derivative_evaluate(s0)
    )


def wronskian_profile(f1: Profile, f2: Profile) -> Profile:
    return multiply(f1, differentiate(f2)) - multiply(f2, differentiate(f1))


def project_out(pr: Profile, basis: Sequence[Profile]) -> Profile:
    """Drop every term whose key appears in one of the ``basis`` profiles."""
    keys = {key for f in basis for key in f.keys()}
    return Profile(terms=tuple(t for t in pr.terms if t.key() not in keys))


def _s_coordinate(
    evaluator: Optional[StaircaseEvaluator], x0: float, config: EngineConfig
) -> float:
    if evaluator is None:
        return float(x0)
    if evaluator.mode == "exact":
        x0 = float(nearest_point_in_prefractal(evaluator.spec, config.stencil_depth, x0, config))
    return float(evaluator.staircase(x0))


def _solve_constants(
    f1: Profile, f2: Profile, s0: float, f0: float, df0: float
) -> Tuple[float, float, float]:
    v1, d1 = f1.evaluate(s0), f1.derivative_evaluate(s0)
    v2, d2 = f2.evaluate(s0), f2.derivative_evaluate(s0)
    w = v1 * d2 - v2 * d1
    if abs(w) < WRONSKIAN_FLOOR:
        raise SingularSystemError(f"Wronskian {w:.3e} at s0={s0} is singular", wronskian=w)
    return (f0 * d2 - v2 * df0) / w, (v1 * df0 - d1 * f0) / w, w


def solve_ivp(
    eq: ConstCoeffFDE,
    ic: InitialConditions,
    evaluator: Optional[StaircaseEvaluator] = None,
    cross_check: bool = False,
    config: Optional[EngineConfig] = None,
) -> SolutionBundle:
    """Initial-value problem for a homogeneous constant-coefficient equation.

    Without an evaluator ``ic.x0`` is read directly as a staircase value.
    """
    config = config or EngineConfig.from_env()
    if not eq.homogeneous:
        raise ArgumentError("solve_ivp takes a homogeneous equation; use general_solution")
    basis = homogeneous_basis(characteristic_roots(eq.a, eq.b, eq.c, config))
    s0 = _s_coordinate(evaluator, ic.x0, config)
    c1, c2, w = _solve_constants(basis[0], basis[1], s0, ic.f0, ic.Df0)
    solution = combine(basis[0], basis[1], c1, c2)
    logger.debug(f"IVP ({eq.a}, {eq.b}, {eq.c}) at s0={s0}: c1={c1!r}, c2={c2!r}")

    bundle = SolutionBundle(
        basis=basis,
        constants=(c1, c2),
        solution=solution,
        x0=ic.x0,
        s0=s0,
        wronskian_at_x0=w,
        residual_max=residual(eq, solution, evaluator, config=config),
        alpha=evaluator.spec.alpha if evaluator is not None else 1.0,
    )
    if cross_check:
        if evaluator is None:
            raise ArgumentError("a numeric cross-check needs a staircase evaluator")
        bundle.numeric_residual = residual(eq, solution, evaluator, numeric=True, config=config)
    return bundle


def norm_bound_check(
    psi: Union[SolutionBundle, Profile],
    a1: float,
    a2: float,
    evaluator: Optional[StaircaseEvaluator] = None,
    x_range: Optional[Tuple[float, float]] = None,
    n_samples: int = 200,
    x0: Optional[float] = None,
    strict: bool = False,
    config: Optional[EngineConfig] = None,
) -> NormBoundReport:
    """Check ``||psi(x0)|| e^{-C|dS|} <= ||psi(x)|| <= ||psi(x0)|| e^{C|dS|}``.

    ``||psi|| = sqrt(psi^2 + (D psi)^2)`` and ``C = 2k`` with
    ``k = 1 + |a1| + |a2|``; ``strict`` uses ``C = k`` instead, which need not hold.
    """
    config = config or EngineConfig.from_env()
    profile = psi.solution if isinstance(psi, SolutionBundle) else psi
    k = 1.0 + abs(a1) + abs(a2)
    constant = k if strict else 2.0 * k

    if evaluator is not None:
        lo, hi = x_range or (evaluator.spec.lo, evaluator.spec.hi)
        xs = np.linspace(lo, hi, n_samples)
        if evaluator.mode == "exact":
            xs = np.asarray(
                nearest_point_in_prefractal(evaluator.spec, config.stencil_depth, xs, config)
            )
        ss = np.asarray(evaluator.staircase(xs), dtype=float)
    else:
        lo, hi = x_range or (0.0, 1.0)
        xs = ss = np.linspace(lo, hi, n_samples)

    if x0 is not None:
        s0 = _s_coordinate(evaluator, x0, config)
    elif isinstance(psi, SolutionBundle):
        s0 = psi.s0
    else:
        s0 = float(ss[0])

    def norm(s: np.ndarray) -> np.ndarray:
        return np.hypot(profile.evaluate(s), profile.derivative_evaluate(s))

    norms = np.atleast_1d(norm(ss))
    n0 = float(norm(np.asarray(s0)))
    spread = np.exp(constant * np.abs(ss - s0))
    lower, upper = n0 / spread, n0 * spread
    slack = 1e-12 * np.maximum(upper, 1.0)
    inside = (norms >= lower - slack) & (norms <= upper + slack)

    samples = [
        NormSample(x=float(x), s=float(s), norm=float(n), lower=float(l), upper=float(u))
        for x, s, n, l, u in zip(xs, ss, norms, lower, upper)
    ]
    report = NormBoundReport(
        k=k,
        bound_constant_used=constant,
        samples=samples,
        all_within=bool(np.all(inside)),
        strict=strict,
    )
    if not report.all_within:
        logger.info(f"{int(np.count_nonzero(~inside))} of {n_samples} samples leave the envelope")
    return report


def _vanishes(parts: List[Profile], config: EngineConfig) -> bool:
    total = Profile.from_terms(t for p in parts for t in p.terms)
    scale = max((p.max_coefficient for p in parts), default=0.0)
    return total.is_zero(config.chop_tolerance, scale)


def is_exact(eq: LinearFDE, config: Optional[EngineConfig] = None) -> bool:
    """``P'' - Q' + R`` vanishes identically."""
    config = config or EngineConfig.from_env()
    return _vanishes(
        [differentiate(differentiate(eq.P)), -differentiate(eq.Q), eq.R], config
    )


def adjoint(eq: LinearFDE) -> LinearFDE:
    """Equation for the integrating factor: ``(P, 2P' - Q, P'' - Q' + R)``."""
    dP = differentiate(eq.P)
    return LinearFDE(
        P=eq.P,
        Q=dP.scale(2.0) - eq.Q,
        R=differentiate(dP) - differentiate(eq.Q) + eq.R,
    )


def is_self_adjoint(eq: LinearFDE, config: Optional[EngineConfig] = None) -> bool:
    """``P' = Q``."""
    config = config or EngineConfig.from_env()
    return _vanishes([differentiate(eq.P), -eq.Q], config)


def exact_first_integral(eq: LinearFDE, config: Optional[EngineConfig] = None) -> Profile:
    """``G = Q - P'``, so an exact equation reads ``D(P f' + G f) = 0``."""
    if not is_exact(eq, config):
        raise ArgumentError("equation is not exact")
    return eq.Q - differentiate(eq.P)


def _sample_grid(
    evaluator: Optional[StaircaseEvaluator],
    s_range: Optional[Tuple[float, float]],
    n_samples: int,
    positive: bool,
) -> np.ndarray:
    if s_range is None:
        s_range = (evaluator.s_min, evaluator.s_max) if evaluator is not None else (0.0, 1.0)
    lo, hi = s_range
    if positive and lo <= 0.0:
        lo = lo + 0.1 * (hi - lo) if hi > 0.0 else lo
        if lo <= 0.0:
            raise DomainError(f"profile needs s > 0 but the range is [{s_range[0]}, {hi}]")
    return np.linspace(lo, hi, n_samples)


def residual(
    eq: Equation,
    candidate: Union[Profile, NumericSolution],
    evaluator: Optional[StaircaseEvaluator] = None,
    n_samples: int = 64,
    s_range: Optional[Tuple[float, float]] = None,
    numeric: bool = False,
    stencil_depth: Optional[int] = None,
    relative: bool = False,
    config: Optional[EngineConfig] = None,
) -> float:
    """Largest ``|P f'' + Q f' + R f - g|`` over a sample of staircase values.

    The symbolic path substitutes exactly and returns 0.0 when the chopped
    residual profile vanishes; ``numeric=True`` uses F^alpha stencils instead and,
    with ``relative``, divides by the largest sampled magnitude of the summands.
    """
    config = config or EngineConfig.from_env()
    lin = eq.as_linear()
    positive = lin.P.requires_positive or lin.Q.requires_positive or lin.R.requires_positive
    positive = positive or lin.g.requires_positive
    if isinstance(candidate, Profile):
        positive = positive or candidate.requires_positive

    if not numeric:
        if not isinstance(candidate, Profile):
            raise ArgumentError("the symbolic residual needs a Profile candidate")
        d1 = differentiate(candidate)
        parts = [
            multiply(lin.P, differentiate(d1)),
            multiply(lin.Q, d1),
            multiply(lin.R, candidate),
        ]
        parts.append(-lin.g)
        total = Profile.from_terms(t for p in parts for t in p.terms)
        scale = max((p.max_coefficient for p in parts), default=0.0)
        chopped = total.chop(config.chop_tolerance, scale)
        if chopped.is_zero():
            return 0.0
        s = _sample_grid(evaluator, s_range, n_samples, positive)
        return float(np.max(np.abs(chopped.evaluate(s))))

    if evaluator is None:
        raise ArgumentError("a numeric residual needs a staircase evaluator")
    s = _sample_grid(evaluator, s_range, n_samples, positive)
    xs = np.asarray(evaluator.inverse(s), dtype=float)
    sampled = SampledFunction(
        func=lambda y: np.asarray(candidate.evaluate(evaluator.staircase(y))),
        lo=evaluator.spec.lo,
        hi=evaluator.spec.hi,
        staircase_profile=True,
    )
    d1 = falpha_derivative(sampled, evaluator, xs, stencil_depth, config)
    d2 = falpha_derivative2(sampled, evaluator, xs, stencil_depth, config)
    s_in = np.asarray(evaluator.staircase(xs), dtype=float)
    summands = [
        lin.P.evaluate(s_in) * d2,
        lin.Q.evaluate(s_in) * d1,
        lin.R.evaluate(s_in) * sampled(xs),
        -np.broadcast_to(lin.g.evaluate(s_in), s_in.shape),
    ]
    worst = float(np.max(np.abs(sum(summands))))
    if not relative:
        return worst
    scale = float(np.max(sum(np.abs(term) for term in summands)))
    return worst / scale if scale > 0.0 else worst


def reduce_order(
    eq: Equation,
    f1: Profile,
    s_range: Tuple[float, float] = (0.25, 1.0),
    check_at: Optional[float] = None,
    method: Literal["auto", "symbolic", "numeric"] = "auto",
    nodes: int = 129,
    config: Optional[EngineConfig] = None,
) -> Union[Profile, NumericSolution]:
    """Second solution ``f2 = f1 * int f1^-2 exp(-int p)``, leading coefficient 1.

    Falls back to integrating ``w = v'`` with scipy when a step leaves the
    term algebra; the result is then a :class:`NumericSolution` on ``s_range``.
    """
    config = config or EngineConfig.from_env()
    lin = eq.as_linear().without_forcing()
    error = residual(lin, f1, s_range=s_range, config=config)
    if error > config.residual_tolerance:
        raise ArgumentError(f"f1 = {f1} does not solve the equation (residual {error:.3e})")

    grid = np.linspace(s_range[0], s_range[1], 257)
    values = np.asarray(f1.evaluate(grid))
    if np.any(values == 0.0) or np.any(np.sign(values[1:]) != np.sign(values[:-1])):
        raise DomainError(f"f1 = {f1} vanishes on [{s_range[0]}, {s_range[1]}]")
    check_at = s_range[1] if check_at is None else check_at

    f2: Union[Profile, NumericSolution, None] = None
    if method != "numeric":
        try:
            f2 = _reduce_symbolic(lin, f1)
        except UnsupportedTermError as e:
            if method == "symbolic":
                raise
            logger.warning(f"reduction of order left the term algebra ({e}), integrating")
    if f2 is None:
        f2 = _reduce_numeric(lin, f1, s_range, nodes)

    w = wronskian(f1, f2, check_at)
    if abs(w) < WRONSKIAN_FLOOR:
        raise WronskianZeroError(f"W[f1, f2]({check_at}) = {w:.3e}")
    return f2


def _reduce_symbolic(lin: LinearFDE, f1: Profile) -> Profile:
    p = multiply(lin.Q, lin.P.invert())
    factor = (-antiderivative(p)).exponentiate()
    w = multiply(multiply(f1, f1).invert(), factor)
    f2 = project_out(multiply(f1, antiderivative(w)), [f1])
    if f2.is_zero():
        raise WronskianZeroError(f"reduction of order from {f1} gave a multiple of f1")
    return f2.scale(1.0 / f2.leading_coefficient)


def _reduce_numeric(
    lin: LinearFDE, f1: Profile, s_range: Tuple[float, float], nodes: int
) -> NumericSolution:
    def rhs(s: float, y: np.ndarray) -> List[float]:
        p = lin.Q.evaluate(s) / lin.P.evaluate(s)
        return [p, math.exp(-y[0]) / f1.evaluate(s) ** 2]

    grid = np.linspace(s_range[0], s_range[1], nodes)
    sol = integrate_ivp(
        rhs, s_range, [0.0, 0.0], method="DOP853", t_eval=grid, rtol=1e-11, atol=1e-13
    )
    if not sol.success:
        raise ConvergenceError(f"numeric reduction of order failed: {sol.message}")
    v = sol.y[1]
    w = np.exp(-sol.y[0]) / np.asarray(f1.evaluate(grid)) ** 2
    values = np.asarray(f1.evaluate(grid)) * v
    derivatives = np.asarray(f1.derivative_evaluate(grid)) * v + np.asarray(f1.evaluate(grid)) * w
    return NumericSolution(s=grid, values=values, derivatives=derivatives)


def undetermined_coefficients(
    eq: ConstCoeffFDE, forcing: Optional[Profile] = None
) -> Profile:
    """Particular solution for forcing terms ``A e^{lam s}`` and ``A e^{lam s} cos/sin(nu s)``."""
    forcing = eq.forcing if forcing is None else forcing
    out = []
    for t in forcing.terms:
        if t.power != 0.0 or t.log_exp != 0:
            raise UnsupportedTermError(
                f"undetermined coefficients cannot match {Profile(terms=(t,))}", term=t
            )
        z = complex(t.rate, t.freq)
        chi = eq.a * z * z + eq.b * z + eq.c
        scale = max(1.0, abs(eq.a) * abs(z) ** 2, abs(eq.b) * abs(z), abs(eq.c))
        if abs(chi) < 1e-12 * scale:
            raise ResonanceError(
                f"forcing exponent {z} is a characteristic root; use variation_of_parameters",
                characteristic_value=z,
            )
        if t.phase == "none":
            out.append(make_term(t.coef / chi.real, 0.0, 0, t.rate))
            continue
        w = t.coef / chi
        if t.phase == "cos":
            out += [
                make_term(w.real, 0.0, 0, t.rate, t.freq, "cos"),
                make_term(-w.imag, 0.0, 0, t.rate, t.freq, "sin"),
            ]
        else:
            out += [
                make_term(w.imag, 0.0, 0, t.rate, t.freq, "cos"),
                make_term(w.real, 0.0, 0, t.rate, t.freq, "sin"),
            ]
    return Profile.from_terms(out)


def variation_of_parameters(
    eq: Equation,
    f1: Profile,
    f2: Profile,
    x0: float = 0.0,
    evaluator: Optional[StaircaseEvaluator] = None,
    method: Literal["auto", "symbolic", "numeric"] = "auto",
    canonical: bool = True,
    nodes: int = 65,
    refinement: Optional[int] = None,
    config: Optional[EngineConfig] = None,
) -> Union[Profile, NumericSolution]:
    """``F = -f1 int_{s0}^{s} f2 g / W + f2 int_{s0}^{s} f1 g / W`` (``g`` divided by P).

    ``canonical`` removes components along ``f1`` and ``f2``; the numeric path
    integrates with :func:`falcon.falpha.falpha_integral` and ignores it.
    """
    config = config or EngineConfig.from_env()
    lin = eq.as_linear()
    if lin.g.is_zero():
        return Profile()
    s0 = _s_coordinate(evaluator, x0, config)

    if method != "numeric":
        try:
            return _variation_symbolic(lin, f1, f2, s0, canonical, config)
        except UnsupportedTermError as e:
            if method == "symbolic":
                raise
            logger.warning(f"variation of parameters leaves the term algebra ({e}); using quadrature")
    if evaluator is None:
        raise ArgumentError("numeric variation of parameters needs a staircase evaluator")
    return _variation_numeric(lin, f1, f2, x0, s0, evaluator, nodes, refinement, config)


def _variation_symbolic(
    lin: LinearFDE, f1: Profile, f2: Profile, s0: float, canonical: bool, config: EngineConfig
) -> Profile:
    w = wronskian_profile(f1, f2).chop(config.chop_tolerance)
    if w.is_zero():
        raise WronskianZeroError(f"W[{f1}, {f2}] vanishes identically")
    ratio = multiply(multiply(lin.g, lin.P.invert()), w.invert())
    big_a = antiderivative(-multiply(f2, ratio))
    big_b = antiderivative(multiply(f1, ratio))
    big_a = big_a - big_a.evaluate(s0)
    big_b = big_b - big_b.evaluate(s0)
    parts = [multiply(big_a, f1), multiply(big_b, f2)]
    scale = max(p.max_coefficient for p in parts)
    particular = (parts[0] + parts[1]).chop(config.chop_tolerance, scale)
    return project_out(particular, [f1, f2]) if canonical else particular


def _variation_numeric(
    lin: LinearFDE,
    f1: Profile,
    f2: Profile,
    x0: float,
    s0: float,
    evaluator: StaircaseEvaluator,
    nodes: int,
    refinement: Optional[int],
    config: EngineConfig,
) -> NumericSolution:
    s_nodes = np.linspace(s0, evaluator.s_max, nodes)
    x_nodes = np.asarray(evaluator.inverse(s_nodes), dtype=float)
    x_nodes[0] = min(max(x0, evaluator.spec.lo), evaluator.spec.hi)

    def weight(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        s = np.asarray(evaluator.staircase(x), dtype=float)
        w = f1.evaluate(s) * f2.derivative_evaluate(s) - f2.evaluate(s) * f1.derivative_evaluate(s)
        if np.any(np.abs(w) < WRONSKIAN_FLOOR):
            raise WronskianZeroError("Wronskian vanishes inside the integration range")
        return s, lin.g.evaluate(s) / (lin.P.evaluate(s) * w)

    def u1(x: np.ndarray) -> np.ndarray:
        s, r = weight(x)
        return -f2.evaluate(s) * r

    def u2(x: np.ndarray) -> np.ndarray:
        s, r = weight(x)
        return f1.evaluate(s) * r

    steps_a = [0.0]
    steps_b = [0.0]
    for left, right in zip(x_nodes[:-1], x_nodes[1:]):
        steps_a.append(falpha_integral(u1, evaluator, left, right, refinement, config=config))
        steps_b.append(falpha_integral(u2, evaluator, left, right, refinement, config=config))
    big_a, big_b = np.cumsum(steps_a), np.cumsum(steps_b)

    s_eval = np.asarray(evaluator.staircase(x_nodes), dtype=float)
    values = big_a * f1.evaluate(s_eval) + big_b * f2.evaluate(s_eval)
    derivatives = big_a * f1.derivative_evaluate(s_eval) + big_b * f2.derivative_evaluate(s_eval)
    return NumericSolution(s=s_eval, values=values, derivatives=derivatives)


def forced_oscillator(m: float, k: float, F0: float, omega: float) -> ConstCoeffFDE:
    """Undamped oscillator ``m f'' + k f = F0 cos(omega s)``."""
    if m <= 0 or k <= 0:
        raise ArgumentError(f"mass and stiffness must be positive, got m={m}, k={k}")
    return ConstCoeffFDE(a=m, b=0.0, c=k, forcing=Profile.trig(omega, "cos", c=F0))


def oscillator_amplitude(m: float, k: float, F0: float, omega: float) -> float:
    """``F0 / (m (omega0^2 - omega^2))`` with ``omega0^2 = k / m``."""
    denom = k - m * omega**2
    if abs(denom) < 1e-12 * max(k, m * omega**2):
        raise ResonanceError(f"omega={omega} is the natural frequency", characteristic_value=omega)
    return F0 / denom


def general_solution(
    eq: Equation,
    ic: Optional[InitialConditions] = None,
    evaluator: Optional[StaircaseEvaluator] = None,
    f1: Optional[Profile] = None,
    s_range: Tuple[float, float] = (0.25, 1.0),
    config: Optional[EngineConfig] = None,
) -> SolutionBundle:
    """Basis, particular solution and (with ``ic``) constants of ``eq``.

    For a forced constant-coefficient equation the particular solution from
    undetermined coefficients is compared with variation of parameters: their
    difference must solve the homogeneous equation (``difference_residual``).
    Variable coefficients need a known solution ``f1``.
    """
    config = config or EngineConfig.from_env()
    difference = None

    if isinstance(eq, ConstCoeffFDE):
        basis = homogeneous_basis(characteristic_roots(eq.a, eq.b, eq.c, config))
        x0 = ic.x0 if ic is not None else (evaluator.a0 if evaluator is not None else 0.0)
        homogeneous = eq.without_forcing()
        if eq.homogeneous:
            particular = Profile()
        else:
            try:
                particular = undetermined_coefficients(eq)
            except (ResonanceError, UnsupportedTermError) as e:
                logger.info(f"undetermined coefficients unavailable ({e}), varying parameters")
                particular = variation_of_parameters(
                    eq, *basis, x0=x0, evaluator=evaluator, method="symbolic", config=config
                )
            try:
                other = variation_of_parameters(
                    eq,
                    *basis,
                    x0=x0,
                    evaluator=evaluator,
                    method="symbolic",
                    canonical=False,
                    config=config,
                )
                difference = residual(homogeneous, particular - other, evaluator, config=config)
            except UnsupportedTermError as e:
                logger.debug(f"difference check skipped: {e}")
    else:
        if f1 is None:
            raise ArgumentError("variable-coefficient equations need a known solution f1")
        f2 = reduce_order(eq, f1, s_range, method="symbolic", config=config)
        basis = (f1, f2)
        x0 = ic.x0 if ic is not None else s_range[0]
        if eq.g.is_zero():
            particular = Profile()
        else:
            particular = variation_of_parameters(
                eq, f1, f2, x0=x0, evaluator=evaluator, method="symbolic", config=config
            )

    s0 = _s_coordinate(evaluator, x0, config)
    if ic is not None:
        c1, c2, w = _solve_constants(
            basis[0],
            basis[1],
            s0,
            ic.f0 - particular.evaluate(s0),
            ic.Df0 - particular.derivative_evaluate(s0),
        )
        constants: Optional[Tuple[float, float]] = (c1, c2)
        solution = combine(basis[0], basis[1], c1, c2) + particular
    else:
        w = wronskian(basis[0], basis[1], s0)
        constants = None
        solution = particular

    residual_range = None if isinstance(eq, ConstCoeffFDE) else s_range
    return SolutionBundle(
        basis=basis,
        constants=constants,
        particular=particular,
        solution=solution,
        x0=x0,
        s0=s0,
        wronskian_at_x0=w,
        residual_max=residual(eq, solution, evaluator, s_range=residual_range, config=config),
        difference_residual=difference,
        alpha=evaluator.spec.alpha if evaluator is not None else 1.0,
    )
