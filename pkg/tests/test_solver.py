"""Tests for the closed-form fractal differential equation solver."""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp as scipy_solve_ivp

from falcon.etp import Profile, differentiate
from falcon.exceptions import (
    ArgumentError,
    DomainError,
    ResonanceError,
    UnsupportedTermError,
)
from falcon.models import InitialConditions
from falcon.problems import random_profile
from falcon.solver import (
    ConstCoeffFDE,
    LinearFDE,
    NumericSolution,
    adjoint,
    characteristic_roots,
    exact_first_integral,
    forced_oscillator,
    general_solution,
    homogeneous_basis,
    is_exact,
    is_self_adjoint,
    norm_bound_check,
    oscillator_amplitude,
    reduce_order,
    residual,
    solve_ivp,
    undetermined_coefficients,
    variation_of_parameters,
    wronskian,
)


class TestCharacteristicRoots:
    """Test root classification and the homogeneous basis."""

    def test_real_distinct(self, config):
        """Test r^2 + 5r + 6 = 0."""
        roots = characteristic_roots(1, 5, 6, config)
        assert roots.kind == "real-distinct"
        assert (roots.r1, roots.r2) == (pytest.approx(-2.0), pytest.approx(-3.0))

    def test_complex_pair(self, config):
        """Test r^2 + r + 1 = 0."""
        roots = characteristic_roots(1, 1, 1, config)
        assert roots.kind == "complex-pair"
        assert roots.lam == pytest.approx(-0.5)
        assert roots.nu == pytest.approx(math.sqrt(3) / 2)

    def test_repeated(self, config):
        """Test r^2 + 2r + 1 = 0 and its s*exp(rs) partner."""
        roots = characteristic_roots(1, 2, 1, config)
        assert roots.kind == "repeated"
        assert roots.r == pytest.approx(-1.0)
        f1, f2 = homogeneous_basis(roots)
        assert f2.isclose(Profile.parse("s*exp(-s)"))
        assert wronskian(f1, f2, 0.0) == pytest.approx(1.0)

    def test_first_order_rejected(self, config):
        """Test a = 0."""
        with pytest.raises(ArgumentError):
            characteristic_roots(0, 1, 1, config)

    def test_wronskian_of_exponentials(self):
        """Test W(e^-2s, e^-3s)(0) = -1."""
        assert wronskian(Profile.exp(-2.0), Profile.exp(-3.0), 0.0) == pytest.approx(-1.0)

    def test_random_coefficient_sweep(self, config):
        """Test every basis solves its equation with the expected Wronskian at 0."""
        rng = np.random.default_rng(2024)
        for _ in range(500):
            a = float(rng.uniform(0.5, 4.0)) * (1 if rng.random() < 0.5 else -1)
            b, c = (float(v) for v in rng.uniform(-5.0, 5.0, 2))
            roots = characteristic_roots(a, b, c, config)
            f1, f2 = homogeneous_basis(roots)
            eq = ConstCoeffFDE(a=a, b=b, c=c)
            assert residual(eq, f1, config=config) <= config.residual_tolerance
            assert residual(eq, f2, config=config) <= config.residual_tolerance
            if roots.kind == "real-distinct":
                expected = roots.r2 - roots.r1
            elif roots.kind == "complex-pair":
                expected = roots.nu
            else:
                expected = 1.0
            assert wronskian(f1, f2, 0.0) == pytest.approx(expected, rel=1e-9)


class TestInitialValueProblems:
    """Test solve_ivp."""

    def test_real_roots(self, config):
        """Test f'' + 5f' + 6f = 0, f(0) = 2, f'(0) = 3."""
        bundle = solve_ivp(
            ConstCoeffFDE(a=1, b=5, c=6), InitialConditions(x0=0, f0=2, Df0=3), config=config
        )
        assert bundle.solution.isclose(Profile.parse("9*exp(-2*s) - 7*exp(-3*s)"), rel=1e-12)
        assert bundle.constants == (pytest.approx(9.0), pytest.approx(-7.0))
        assert bundle.residual_max == 0.0
        assert bundle.wronskian_at_x0 == pytest.approx(-1.0)

    def test_complex_roots(self, config):
        """Test 16 f'' - 8 f' + 145 f = 0, f(0) = -2, f'(0) = 1."""
        bundle = solve_ivp(
            ConstCoeffFDE(a=16, b=-8, c=145), InitialConditions(x0=0, f0=-2, Df0=1), config=config
        )
        expected = Profile.parse("-2*exp(0.25*s)*cos(3*s) + 0.5*exp(0.25*s)*sin(3*s)")
        assert bundle.solution.isclose(expected, rel=1e-12)

    def test_on_fractal_support(self, exact_evaluator, config):
        """Test the closed form holds through the staircase with a numeric cross-check."""
        bundle = solve_ivp(
            ConstCoeffFDE(a=1, b=5, c=6),
            InitialConditions(x0=0, f0=2, Df0=3),
            evaluator=exact_evaluator,
            cross_check=True,
            config=config,
        )
        assert bundle.s0 == 0.0
        assert bundle.alpha == pytest.approx(math.log(2) / math.log(3))
        assert bundle.solution_space_dimension == pytest.approx(2 * bundle.alpha)
        assert bundle.numeric_residual < 1e-5

    def test_constants_linear_in_initial_data(self, config):
        """Test the constants depend linearly on (f0, Df0)."""
        rng = np.random.default_rng(4)
        for eq in (ConstCoeffFDE(a=1, b=5, c=6), ConstCoeffFDE(a=16, b=-8, c=145)):

            def constants(data):
                ic = InitialConditions(x0=0, f0=float(data[0]), Df0=float(data[1]))
                return np.array(solve_ivp(eq, ic, config=config).constants)

            for _ in range(20):
                u, v = rng.uniform(-3.0, 3.0, 2), rng.uniform(-3.0, 3.0, 2)
                lam = float(rng.uniform(-2.0, 2.0))
                combined = constants(u + lam * v)
                assert np.allclose(combined, constants(u) + lam * constants(v), rtol=0, atol=1e-12)

    def test_initial_point_inside_gap(self, exact_evaluator, config):
        """Test x0 in a gap is snapped onto the set before mapping to s0."""
        bundle = solve_ivp(
            ConstCoeffFDE(a=1, b=5, c=6),
            InitialConditions(x0=0.5, f0=1, Df0=0),
            evaluator=exact_evaluator,
            config=config,
        )
        assert bundle.s0 == pytest.approx(exact_evaluator.normalization / 2, abs=1e-9)
        assert bundle.solution.evaluate(bundle.s0) == pytest.approx(1.0)
        assert bundle.solution.derivative_evaluate(bundle.s0) == pytest.approx(0.0, abs=1e-12)

    def test_forced_equation_rejected(self, config):
        """Test solve_ivp only takes homogeneous equations."""
        eq = ConstCoeffFDE(a=1, b=0, c=1, forcing=Profile.exp(1.0))
        with pytest.raises(ArgumentError):
            solve_ivp(eq, InitialConditions(), config=config)

    def test_cross_check_needs_evaluator(self, config):
        """Test a cross-check without a staircase."""
        with pytest.raises(ArgumentError):
            solve_ivp(ConstCoeffFDE(a=1, b=5, c=6), InitialConditions(), cross_check=True)

    def test_matches_scipy_reference(self, config):
        """Test random IVPs at alpha = 1 against an adaptive Runge-Kutta integration."""
        rng = np.random.default_rng(11)
        s = np.linspace(0.0, 1.0, 21)
        for _ in range(20):
            a = float(rng.uniform(0.5, 4.0))
            b, c, f0, df0 = (float(v) for v in rng.uniform(-5.0, 5.0, 4))
            bundle = solve_ivp(
                ConstCoeffFDE(a=a, b=b, c=c), InitialConditions(f0=f0, Df0=df0), config=config
            )
            reference = scipy_solve_ivp(
                lambda t, y: [y[1], -(b * y[1] + c * y[0]) / a],
                (0.0, 1.0),
                [f0, df0],
                method="RK45",
                t_eval=s,
                rtol=1e-11,
                atol=1e-12,
            )
            scale = max(1.0, float(np.max(np.abs(reference.y[0]))))
            assert np.max(np.abs(bundle.solution.evaluate(s) - reference.y[0])) < 1e-6 * scale


class TestNormBound:
    """Test the exponential envelope check."""

    def test_solution_within_envelope(self, config):
        """Test the IVP solution with a1 = 5, a2 = 6."""
        psi = Profile.parse("9*exp(-2*s) - 7*exp(-3*s)")
        report = norm_bound_check(psi, 5.0, 6.0, config=config)
        assert report.all_within
        assert report.k == 12.0
        assert report.bound_constant_used == 24.0
        assert len(report.samples) == 200

    def test_strict_constant(self, config):
        """Test strict mode uses k itself."""
        psi = Profile.parse("9*exp(-2*s) - 7*exp(-3*s)")
        report = norm_bound_check(psi, 5.0, 6.0, strict=True, config=config)
        assert report.strict
        assert report.bound_constant_used == 12.0

    def test_fast_growth_escapes(self, config):
        """Test exp(30 s) leaves the envelope of a1 = 5, a2 = 6."""
        report = norm_bound_check(Profile.exp(30.0), 5.0, 6.0, config=config)
        assert not report.all_within

    def test_bundle_on_fractal(self, exact_evaluator, config):
        """Test a solved bundle sampled through the staircase."""
        bundle = solve_ivp(
            ConstCoeffFDE(a=1, b=5, c=6),
            InitialConditions(x0=0, f0=2, Df0=3),
            evaluator=exact_evaluator,
            config=config,
        )
        report = norm_bound_check(bundle, 5.0, 6.0, exact_evaluator, n_samples=50, config=config)
        assert report.all_within
        assert all(0.0 <= p.s <= exact_evaluator.normalization + 1e-12 for p in report.samples)


class TestExactness:
    """Test exactness, adjoints and self-adjointness."""

    def test_exact_equation(self, config):
        """Test s^2 f'' + 3s f' + f is exact with first integral G = s."""
        eq = LinearFDE.parse("s^2", "3*s", "1")
        assert is_exact(eq, config)
        assert exact_first_integral(eq, config).isclose(Profile.parse("s"))

    def test_inexact_equation(self, config):
        """Test f'' + f is not exact."""
        eq = LinearFDE.parse("1", "0", "1")
        assert not is_exact(eq, config)
        with pytest.raises(ArgumentError):
            exact_first_integral(eq, config)

    def test_adjoint_of_constant_equation(self):
        """Test the adjoint of (1, 3, 2) is (1, -3, 2)."""
        adj = adjoint(ConstCoeffFDE(a=1, b=3, c=2).as_linear())
        assert adj.P.isclose(Profile.constant(1.0))
        assert adj.Q.isclose(Profile.constant(-3.0))
        assert adj.R.isclose(Profile.constant(2.0))

    def test_self_adjoint(self, config):
        """Test P' = Q."""
        assert is_self_adjoint(LinearFDE.parse("s^2", "2*s", "5"), config)
        assert not is_self_adjoint(LinearFDE.parse("s^2", "3*s", "5"), config)

    def test_adjoint_is_involution(self):
        """Test adjoint(adjoint(L)) = L for random coefficient profiles."""
        rng = np.random.default_rng(5)
        for _ in range(100):
            eq = LinearFDE(P=random_profile(rng), Q=random_profile(rng), R=random_profile(rng))
            twice = adjoint(adjoint(eq))
            assert twice.P.isclose(eq.P, rel=1e-9, abs_tol=1e-9)
            assert twice.Q.isclose(eq.Q, rel=1e-9, abs_tol=1e-9)
            assert twice.R.isclose(eq.R, rel=1e-9, abs_tol=1e-9)

    def test_exact_equation_has_unit_integrating_factor(self, config):
        """Test mu = 1 solves the adjoint of an exact equation."""
        rng = np.random.default_rng(8)
        for _ in range(20):
            P, Q = random_profile(rng), random_profile(rng)
            eq = LinearFDE(P=P, Q=Q, R=differentiate(Q) - differentiate(differentiate(P)))
            assert is_exact(eq, config)
            assert residual(adjoint(eq), Profile.constant(1.0), config=config) <= 1e-12

    def test_zero_leading_coefficient(self):
        """Test P = 0 is rejected."""
        with pytest.raises(ValueError):
            LinearFDE.parse("0", "1", "1")


class TestReductionOfOrder:
    """Test reduce_order."""

    def test_free_particle(self, config):
        """Test f'' = 0 with f1 = 1 gives f2 = s."""
        f2 = reduce_order(LinearFDE.parse("1", "0", "0"), Profile.constant(1.0), config=config)
        assert f2.isclose(Profile.parse("s"))

    def test_repeated_root(self, config):
        """Test f'' - 2f' + f = 0 with f1 = e^s gives s e^s."""
        f2 = reduce_order(ConstCoeffFDE(a=1, b=-2, c=1), Profile.exp(1.0), config=config)
        assert f2.isclose(Profile.parse("s*exp(s)"))

    def test_euler_equation(self, config):
        """Test 2s^2 f'' + 3s f' - f = 0 with f1 = 1/s gives s^0.5."""
        eq = LinearFDE.parse("2*s^2", "3*s", "-1")
        f2 = reduce_order(eq, Profile.parse("s^-1"), config=config)
        assert f2.isclose(Profile.parse("s^0.5"))
        assert residual(eq, f2, s_range=(0.25, 1.0), config=config) == 0.0

    def test_numeric_fallback(self, config):
        """Test the integrated second solution of f'' = 0 from f1 = 1."""
        f2 = reduce_order(
            LinearFDE.parse("1", "0", "0"), Profile.constant(1.0), method="numeric", config=config
        )
        assert isinstance(f2, NumericSolution)
        assert f2.evaluate(0.5) == pytest.approx(0.25, abs=1e-9)
        assert f2.derivative_evaluate(0.75) == pytest.approx(1.0, abs=1e-9)
        with pytest.raises(DomainError):
            f2.evaluate(2.0)

    def test_wrong_known_solution(self, config):
        """Test f1 must solve the equation."""
        with pytest.raises(ArgumentError):
            reduce_order(LinearFDE.parse("1", "0", "1"), Profile.exp(1.0), config=config)

    def test_vanishing_known_solution(self, config):
        """Test f1 with a zero inside the range."""
        with pytest.raises(DomainError):
            reduce_order(
                LinearFDE.parse("1", "0", "1"),
                Profile.parse("cos(s)"),
                s_range=(0.25, 2.0),
                config=config,
            )


class TestParticularSolutions:
    """Test undetermined coefficients and variation of parameters."""

    def test_exponential_forcing(self):
        """Test f'' + f = e^s gives e^s / 2."""
        eq = ConstCoeffFDE(a=1, b=0, c=1, forcing=Profile.exp(1.0))
        assert undetermined_coefficients(eq).isclose(Profile.parse("0.5*exp(s)"))

    def test_growing_forcing(self):
        """Test f'' - 3f' - 4f = 3 e^2s gives -e^2s / 2."""
        eq = ConstCoeffFDE(a=1, b=-3, c=-4, forcing=Profile.parse("3*exp(2*s)"))
        assert undetermined_coefficients(eq).isclose(Profile.parse("-0.5*exp(2*s)"))

    def test_resonance(self):
        """Test forcing at a characteristic root."""
        eq = ConstCoeffFDE(a=1, b=-3, c=-4, forcing=Profile.exp(4.0))
        with pytest.raises(ResonanceError):
            undetermined_coefficients(eq)

    def test_power_forcing_unsupported(self):
        """Test forcing outside the exponential-trigonometric family."""
        eq = ConstCoeffFDE(a=1, b=0, c=1, forcing=Profile.parse("s"))
        with pytest.raises(UnsupportedTermError):
            undetermined_coefficients(eq)

    def test_variation_matches_undetermined(self, config):
        """Test both methods agree up to a homogeneous solution."""
        eq = ConstCoeffFDE(a=1, b=-3, c=-4, forcing=Profile.parse("3*exp(2*s)"))
        f1, f2 = homogeneous_basis(characteristic_roots(1, -3, -4, config))
        varied = variation_of_parameters(eq, f1, f2, config=config)
        assert varied.isclose(Profile.parse("-0.5*exp(2*s)"), rel=1e-9, abs_tol=1e-12)

    def test_unforced_variation(self, config):
        """Test zero forcing gives the zero particular solution."""
        eq = ConstCoeffFDE(a=1, b=0, c=1)
        assert variation_of_parameters(eq, Profile.exp(1.0), Profile.exp(-1.0)).is_zero()

    def test_numeric_variation(self, exact_evaluator, config):
        """Test quadrature against the symbolic particular solution vanishing at s0."""
        eq = forced_oscillator(1.0, 1.0, 0.5, 0.8)
        f1, f2 = homogeneous_basis(characteristic_roots(1, 0, 1, config))
        symbolic = variation_of_parameters(
            eq, f1, f2, evaluator=exact_evaluator, canonical=False, config=config
        )
        numeric = variation_of_parameters(
            eq, f1, f2, evaluator=exact_evaluator, method="numeric", nodes=9, config=config
        )
        assert isinstance(numeric, NumericSolution)
        assert np.allclose(numeric.values, symbolic.evaluate(numeric.s), atol=1e-7)

    def test_numeric_variation_growing_forcing(self, exact_evaluator, config):
        """Test quadrature against the closed form for f'' - 3f' - 4f = 3 e^2s at 50 nodes."""
        eq = ConstCoeffFDE(a=1, b=-3, c=-4, forcing=Profile.parse("3*exp(2*s)"))
        f1, f2 = homogeneous_basis(characteristic_roots(1, -3, -4, config))
        symbolic = variation_of_parameters(
            eq, f1, f2, evaluator=exact_evaluator, canonical=False, config=config
        )
        numeric = variation_of_parameters(
            eq,
            f1,
            f2,
            evaluator=exact_evaluator,
            method="numeric",
            nodes=50,
            refinement=7,
            config=config,
        )
        assert numeric.s.size == 50
        assert np.allclose(numeric.values, symbolic.evaluate(numeric.s), rtol=1e-7, atol=1e-8)

    def test_oscillator_amplitude(self):
        """Test F0 / (m (omega0^2 - omega^2))."""
        assert oscillator_amplitude(1.0, 1.0, 0.5, 0.8) == pytest.approx(25 / 18)
        with pytest.raises(ResonanceError):
            oscillator_amplitude(1.0, 1.0, 0.5, 1.0)
        with pytest.raises(ArgumentError):
            forced_oscillator(0.0, 1.0, 0.5, 0.8)


class TestGeneralSolution:
    """Test general_solution."""

    def test_forced_oscillator_from_rest(self, config):
        """Test the beat solution starting from rest."""
        bundle = general_solution(
            forced_oscillator(1.0, 1.0, 0.5, 0.8), InitialConditions(), config=config
        )
        expected = Profile.parse("25/18*cos(0.8*s) - 25/18*cos(s)")
        assert bundle.solution.isclose(expected, rel=1e-9, abs_tol=1e-12)
        assert bundle.difference_residual is not None
        assert bundle.difference_residual <= config.residual_tolerance

    def test_particular_without_initial_data(self, config):
        """Test no constants are fixed without initial data."""
        eq = ConstCoeffFDE(a=1, b=-3, c=-4, forcing=Profile.parse("3*exp(2*s)"))
        bundle = general_solution(eq, config=config)
        assert bundle.constants is None
        assert bundle.solution.isclose(Profile.parse("-0.5*exp(2*s)"))
        assert bundle.wronskian_at_x0 == pytest.approx(-5.0)

    def test_resonant_forcing_varies_parameters(self, config):
        """Test f'' - 3f' - 4f = e^4s falls back to s e^4s / 5."""
        eq = ConstCoeffFDE(a=1, b=-3, c=-4, forcing=Profile.exp(4.0))
        bundle = general_solution(eq, config=config)
        assert bundle.particular.isclose(Profile.parse("0.2*s*exp(4*s)"), rel=1e-9)
        assert bundle.residual_max <= config.residual_tolerance

    def test_variable_coefficients(self, config):
        """Test the Euler equation basis from a known solution."""
        eq = LinearFDE.parse("2*s^2", "3*s", "-1")
        bundle = general_solution(eq, f1=Profile.parse("s^-1"), config=config)
        assert bundle.basis[1].isclose(Profile.parse("s^0.5"))
        assert bundle.residual_max == 0.0

    def test_variable_coefficients_need_known_solution(self, config):
        """Test a linear equation without f1."""
        with pytest.raises(ArgumentError):
            general_solution(LinearFDE.parse("2*s^2", "3*s", "-1"), config=config)

    def test_json_form(self, config):
        """Test the serialized bundle."""
        bundle = solve_ivp(
            ConstCoeffFDE(a=1, b=5, c=6), InitialConditions(f0=2, Df0=3), config=config
        )
        data = bundle.to_json_dict()
        assert data["constants"] == [pytest.approx(9.0), pytest.approx(-7.0)]
        assert Profile.parse(data["solution"]).isclose(bundle.solution)
        assert data["solution_space_dimension"] == 2.0
