"""Tests for the verification runner."""

import logging
from unittest.mock import patch

import pytest

from falcon.core import VerificationRunner
from falcon.models import CantorSetSpec, EngineConfig, ProblemSpec
from falcon.problems import STOCK_PROBLEMS, stock_problem


@pytest.fixture(scope="module")
def verifier():
    """Runner on the middle-third set without a normalization cache."""
    return VerificationRunner(EngineConfig())


class TestVerificationRunner:
    """Test VerificationRunner class."""

    def test_default_set(self, verifier):
        """Test problems without a set run on the middle-third set."""
        assert verifier.default_set == CantorSetSpec.middle_third()
        assert verifier.cache_manager is None

    def test_evaluator_built_once(self, verifier):
        """Test evaluators are reused per set."""
        first = verifier.evaluator_for(None)
        assert verifier.evaluator_for(CantorSetSpec.middle_third()) is first
        assert first.mode == "exact"

    def test_real_roots_problem(self, verifier):
        """Test every check on the real-roots initial value problem."""
        results = verifier.verify_problem(stock_problem("ivp-real-roots"))
        checks = {r.check: r for r in results}
        assert set(checks) == {
            "symbolic-residual",
            "wronskian",
            "basis-residual-1",
            "basis-residual-2",
            "expected",
            "numeric-residual",
            "fundamental-theorem",
            "norm-bound",
        }
        assert all(r.passed for r in results), [r for r in results if not r.passed]
        assert checks["norm-bound"].value == pytest.approx(24.0)

    def test_wrong_expected_profile(self, verifier):
        """Test a wrong claim fails only the expected check."""
        problem = stock_problem("ivp-real-roots").model_copy(update={"expected": "exp(-s)"})
        results = verifier.verify_problem(problem, "wrong")
        failed = [r.check for r in results if not r.passed]
        assert failed == ["expected"]
        assert all(r.problem == "wrong" for r in results)

    def test_forced_problem(self, verifier):
        """Test a forced problem compares its two particular solutions."""
        results = verifier.verify_problem(stock_problem("undetermined-coefficients"))
        checks = {r.check for r in results}
        assert "difference-residual" in checks
        assert "norm-bound" not in checks
        assert all(r.passed for r in results), [r for r in results if not r.passed]

    def test_reduction_problem(self, verifier):
        """Test a variable-coefficient problem checks its reduced basis."""
        results = verifier.verify_problem(stock_problem("euler-reduction"))
        checks = {r.check for r in results}
        assert "expected" in checks
        assert "norm-bound" not in checks
        assert all(r.passed for r in results), [r for r in results if not r.passed]

    def test_failed_problem_recorded(self, caplog):
        """Test a problem that cannot be solved becomes a solve failure."""
        broken = ProblemSpec(name="broken", type="linear", P="1", Q="0", R="1")
        runner = VerificationRunner(EngineConfig())
        with caplog.at_level(logging.INFO):
            stats = runner.run([broken])
        assert stats.total_problems == 1
        assert stats.failed_checks == 1
        assert stats.failures[0].check == "solve"
        assert stats.errors[0]["problem"] == "broken"
        assert "Verification Summary:" in caplog.text

    def test_empty_run(self):
        """Test an empty problem list."""
        stats = VerificationRunner(EngineConfig()).run([])
        assert stats.total_checks == 0
        assert stats.failures == []

    def test_random_derivative_checks(self, verifier):
        """Test seeded random profiles pass the derivative oracle."""
        results = verifier.random_derivative_checks(5, seed=1)
        assert [r.problem for r in results] == [f"random-1-{i}" for i in range(5)]
        assert all(r.check == "derivative-oracle" for r in results)
        assert all(r.passed for r in results), [r for r in results if not r.passed]

    def test_random_checks_reproducible(self, verifier):
        """Test equal seeds draw equal profiles."""
        first = verifier.random_derivative_checks(3, seed=7)
        second = verifier.random_derivative_checks(3, seed=7)
        assert [r.detail for r in first] == [r.detail for r in second]

    def test_cache_enabled(self):
        """Test the runner owns a cache manager when caching is on."""
        with patch("falcon.core.CacheManager") as mock_cache:
            runner = VerificationRunner(EngineConfig(cache_normalizations=True))
        assert runner.cache_manager is mock_cache.return_value


@pytest.mark.slow
class TestStockRun:
    """Run every stock problem end to end."""

    def test_all_stock_problems_pass(self):
        """Test the stock list with random derivative draws."""
        stats = VerificationRunner(EngineConfig()).run(STOCK_PROBLEMS, random_profiles=10, seed=0)
        assert stats.total_problems == len(STOCK_PROBLEMS)
        assert stats.failures == [], stats.failures
        assert stats.errors == []
        assert stats.passed_checks == stats.total_checks
