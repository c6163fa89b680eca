"""Tests for the numeric F^alpha-derivative and F^alpha-integral."""

import math

import numpy as np
import pytest

from falcon.etp import Profile
from falcon.exceptions import ArgumentError, DepthCapError, DomainError
from falcon.falpha import (
    SampledFunction,
    falpha_derivative,
    falpha_derivative2,
    falpha_integral,
)
from falcon.models import EngineConfig
from falcon.problems import random_profile


class TestDerivative:
    """Test the stencil derivative through F."""

    def test_staircase_has_unit_derivative(self, exact_evaluator, config):
        """Test D^alpha S = 1 across the set, endpoints included."""
        xs = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        got = falpha_derivative(Profile.parse("s"), exact_evaluator, xs, config=config)
        assert np.allclose(got, 1.0, atol=1e-9)

    def test_constant_has_zero_derivative(self, exact_evaluator, config):
        """Test D^alpha of a constant."""
        got = falpha_derivative(Profile.constant(4.0), exact_evaluator, [0.2, 0.7], config=config)
        assert np.allclose(got, 0.0, atol=1e-9)

    def test_exponential(self, exact_evaluator, config):
        """Test D^alpha exp(2S) = 2 exp(2S) at S = 0.5."""
        x = exact_evaluator.inverse(0.5)
        got = falpha_derivative(Profile.exp(2.0), exact_evaluator, x, config=config)
        assert isinstance(got, float)
        assert got == pytest.approx(2 * math.e, rel=1e-6)

    def test_callable_of_x(self, exact_evaluator, config):
        """Test a plain callable of x, here S(x)^2."""
        xs = np.array([0.25, 0.75])

        def squared(x):
            return np.asarray(exact_evaluator.staircase(x)) ** 2

        got = falpha_derivative(squared, exact_evaluator, xs, config=config)
        expected = 2 * exact_evaluator.staircase(xs)
        assert np.allclose(got, expected, rtol=1e-6)

    def test_power_law_proxy(self, power_evaluator, config):
        """Test D^alpha S = 1 for the power-law staircase."""
        got = falpha_derivative(Profile.parse("s"), power_evaluator, [0.3, 0.9], config=config)
        assert np.allclose(got, 1.0, atol=1e-9)

    def test_second_derivative_of_square(self, exact_evaluator, config):
        """Test (D^alpha)^2 S^2 = 2."""
        x = exact_evaluator.inverse(0.4)
        got = falpha_derivative2(Profile.parse("s^2"), exact_evaluator, x, config=config)
        assert got == pytest.approx(2.0, rel=1e-6)

    def test_second_derivative_at_origin(self, exact_evaluator, config):
        """Test (D^alpha)^2 exp(-2S) = 4 at S = 0 with one-sided stencils."""
        got = falpha_derivative2(Profile.exp(-2.0), exact_evaluator, 0.0, config=config)
        assert got == pytest.approx(4.0, rel=1e-6)

    def test_second_derivative_near_both_ends(self, exact_evaluator, config):
        """Test (D^alpha)^2 exp(-2S) within one stencil width of S = 0 and at S = N."""
        n = exact_evaluator.normalization
        xs = np.atleast_1d(exact_evaluator.inverse(np.array([5e-4, 9e-4, 0.5 * n, n - 5e-4, n])))
        s = exact_evaluator.staircase(xs)
        got = falpha_derivative2(Profile.exp(-2.0), exact_evaluator, xs, config=config)
        assert np.allclose(got, 4.0 * np.exp(-2.0 * s), rtol=1e-6)

    def test_first_derivative_at_ends(self, exact_evaluator, config):
        """Test D^alpha exp(-2S) = -2 exp(-2S) at both ends of the range."""
        n = exact_evaluator.normalization
        got = falpha_derivative(Profile.exp(-2.0), exact_evaluator, [0.0, 1.0], config=config)
        assert np.allclose(got, [-2.0, -2.0 * math.exp(-2.0 * n)], rtol=1e-6)

    def test_linearity(self, exact_evaluator, config):
        """Test D^alpha (f + 3g) = D^alpha f + 3 D^alpha g."""
        xs = exact_evaluator.inverse(np.array([0.1, 0.3, 0.6, 0.85]))
        f, g = Profile.parse("exp(-2*s)"), Profile.parse("s^2*cos(s)")
        combined = falpha_derivative(f + g.scale(3.0), exact_evaluator, xs, config=config)
        separate = falpha_derivative(f, exact_evaluator, xs, config=config) + 3.0 * np.asarray(
            falpha_derivative(g, exact_evaluator, xs, config=config)
        )
        assert np.allclose(combined, separate, rtol=1e-9, atol=1e-9)

    def test_gapless_set_is_classical(self, unit_evaluator, config):
        """Test alpha = 1 reduces to the ordinary derivative."""
        xs = np.array([0.2, 0.5, 0.8])
        f = SampledFunction(func=lambda x: np.sin(3.0 * x))
        got = falpha_derivative(f, unit_evaluator, xs, config=config)
        h = 1e-4
        central = (np.sin(3.0 * (xs + h)) - np.sin(3.0 * (xs - h))) / (2 * h)
        assert np.allclose(got, central, rtol=1e-6)
        assert np.allclose(got, 3.0 * np.cos(3.0 * xs), rtol=1e-7)

    def test_shallow_stencil_rejected(self, exact_evaluator, config):
        """Test stencil depth below 4."""
        with pytest.raises(ArgumentError):
            falpha_derivative(
                Profile.parse("s"), exact_evaluator, 0.5, stencil_depth=3, config=config
            )

    def test_stencil_beyond_depth_cap(self, exact_evaluator):
        """Test the refined stencil must fit under the depth cap."""
        with pytest.raises(DepthCapError):
            falpha_derivative(
                Profile.parse("s"), exact_evaluator, 0.5, config=EngineConfig(depth_cap=8)
            )


class TestIntegral:
    """Test the Riemann-Stieltjes integral against S."""

    def test_unit_integrand(self, exact_evaluator, config):
        """Test the integral of 1 over [lo, hi] is the total mass."""
        got = falpha_integral(Profile.constant(1.0), exact_evaluator, 0.0, 1.0, config=config)
        assert got == pytest.approx(exact_evaluator.normalization, rel=1e-12)

    def test_fundamental_theorem(self, exact_evaluator, config):
        """Test the integral of exp(S) is exp(N) - 1."""
        n = exact_evaluator.normalization
        got = falpha_integral(Profile.exp(1.0), exact_evaluator, 0.0, 1.0, config=config)
        assert got == pytest.approx(math.exp(n) - 1.0, rel=1e-7)

    def test_partial_range(self, exact_evaluator, config):
        """Test an integral starting inside a gap picks up no gap mass."""
        n = exact_evaluator.normalization
        got = falpha_integral(Profile.parse("2*s"), exact_evaluator, 0.5, 1.0, config=config)
        assert got == pytest.approx(n**2 - (n / 2) ** 2, rel=1e-7)

    def test_gapless_set_is_lebesgue(self, unit_evaluator, config):
        """Test the integral of x dx on [0, 1] is 1/2."""
        f = SampledFunction(func=lambda x: x)
        assert falpha_integral(f, unit_evaluator, 0.0, 1.0, config=config) == pytest.approx(0.5)

    def test_linearity(self, exact_evaluator, config):
        """Test the integral of f + 3g is the integral of f plus three times that of g."""
        f, g = Profile.exp(1.0), Profile.parse("s^2")
        combined = falpha_integral(f + g.scale(3.0), exact_evaluator, 0.1, 0.9, config=config)
        separate = falpha_integral(f, exact_evaluator, 0.1, 0.9, config=config)
        separate += 3.0 * falpha_integral(g, exact_evaluator, 0.1, 0.9, config=config)
        assert combined == pytest.approx(separate, rel=1e-12)

    def test_fundamental_theorem_with_stencil_derivative(self, exact_evaluator, config):
        """Test the integral of the numeric D^alpha f is f(N) - f(0) for random profiles."""
        rng = np.random.default_rng(2)
        n = exact_evaluator.normalization
        for _ in range(3):
            profile = random_profile(rng)

            def derivative(x, profile=profile):
                return falpha_derivative(profile, exact_evaluator, x, config=config)

            got = falpha_integral(
                derivative, exact_evaluator, 0.0, 1.0, refinement=5, config=config
            )
            ends = [float(profile.evaluate(0.0)), float(profile.evaluate(n))]
            scale = max(abs(ends[0]), abs(ends[1]), 1.0)
            assert abs(got - (ends[1] - ends[0])) <= 1e-6 * scale

    def test_empty_range(self, exact_evaluator, config):
        """Test a = b."""
        assert falpha_integral(Profile.exp(1.0), exact_evaluator, 0.3, 0.3, config=config) == 0.0

    def test_bounds_out_of_order(self, exact_evaluator, config):
        """Test a > b."""
        with pytest.raises(ArgumentError):
            falpha_integral(Profile.exp(1.0), exact_evaluator, 0.8, 0.2, config=config)

    def test_bounds_outside_base(self, exact_evaluator, config):
        """Test bounds leaving [lo, hi]."""
        with pytest.raises(DomainError):
            falpha_integral(Profile.exp(1.0), exact_evaluator, 0.0, 2.0, config=config)

    def test_refinement_must_be_positive(self, exact_evaluator, config):
        """Test refinement 0."""
        with pytest.raises(ArgumentError):
            falpha_integral(
                Profile.exp(1.0), exact_evaluator, 0.0, 1.0, refinement=0, config=config
            )

    def test_without_richardson(self, exact_evaluator, config):
        """Test the plain midpoint sum is already close."""
        n = exact_evaluator.normalization
        got = falpha_integral(
            Profile.exp(1.0), exact_evaluator, 0.0, 1.0, richardson=False, config=config
        )
        assert got == pytest.approx(math.exp(n) - 1.0, rel=1e-5)
