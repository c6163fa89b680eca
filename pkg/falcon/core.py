"""Cross-oracle verification of solved problems."""

import logging
import time
from typing import Dict, List, Optional, Tuple

import numpy as np

from .cache import CacheManager
from .cantor import nearest_point_in_prefractal
from .etp import Profile, differentiate
from .exceptions import FalconError
from .falpha import falpha_derivative, falpha_integral
from .models import CantorSetSpec, CheckResult, EngineConfig, ProblemSpec, VerificationStats
from .problems import build_equation, random_profile
from .solver import (
    ConstCoeffFDE,
    SolutionBundle,
    general_solution,
    norm_bound_check,
    residual,
)
from .staircase import StaircaseEvaluator

logger = logging.getLogger(__name__)

NUMERIC_TOLERANCE = 1e-5
EXPECTED_TOLERANCE = 1e-9


class VerificationRunner:
    """Runs symbolic and numeric oracles against every problem and collects the results."""

    def __init__(
        self,
        config: Optional[EngineConfig] = None,
        default_set: Optional[CantorSetSpec] = None,
        numeric_tolerance: float = NUMERIC_TOLERANCE,
    ):
        self.config = config or EngineConfig.from_env()
        self.default_set = default_set or CantorSetSpec.middle_third()
        self.numeric_tolerance = numeric_tolerance
        self.cache_manager = CacheManager() if self.config.cache_normalizations else None
        self.stats = VerificationStats()
        self._evaluators: Dict[str, StaircaseEvaluator] = {}

        if self.config.debug_mode:
            logging.basicConfig(
                level=logging.DEBUG, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            )

    def run(
        self, problems: List[ProblemSpec], random_profiles: int = 0, seed: int = 0
    ) -> VerificationStats:
        """
        Verify every problem, then ``random_profiles`` seeded derivative draws.

        Args:
            problems: Validated problem documents
            random_profiles: Number of random profiles for the derivative oracle
            seed: Seed of the random draws

        Returns:
            VerificationStats with one CheckResult per check
        """
        start_time = time.time()
        self.stats.total_problems = len(problems)
        logger.info(f"Verifying {len(problems)} problems")

        for i, problem in enumerate(problems):
            name = problem.name or f"problem-{i}"
            try:
                results = self.verify_problem(problem, name)
            except Exception as e:
                self.stats.errors.append(
                    {"problem": name, "error": str(e), "type": type(e).__name__}
                )
                logger.error(f"Failed to verify {name}: {e}")
                results = [CheckResult(problem=name, check="solve", passed=False, detail=str(e))]
            self._record(results)

        if random_profiles:
            self._record(self.random_derivative_checks(random_profiles, seed))

        self.stats.processing_time = time.time() - start_time
        self._log_summary()
        return self.stats

    def _record(self, results: List[CheckResult]) -> None:
        for result in results:
            self.stats.results.append(result)
            self.stats.total_checks += 1
            if result.passed:
                self.stats.passed_checks += 1
            else:
                self.stats.failed_checks += 1
                logger.debug(f"{result.problem}: {result.check} failed ({result.detail})")

    def evaluator_for(self, spec: Optional[CantorSetSpec]) -> StaircaseEvaluator:
        """Exact staircase of ``spec``, built once per set."""
        spec = spec or self.default_set
        key = spec.model_dump_json()
        if key not in self._evaluators:
            self._evaluators[key] = StaircaseEvaluator.build(
                spec, mode="exact", config=self.config, cache=self.cache_manager
            )
        return self._evaluators[key]

    def verify_problem(self, problem: ProblemSpec, name: str = "") -> List[CheckResult]:
        name = name or problem.name or "problem"
        eq = build_equation(problem)
        evaluator = self.evaluator_for(problem.set)
        f1 = Profile.parse(problem.f1) if problem.f1 else None
        s_range = (0.25 * evaluator.s_max, evaluator.s_max)
        bundle = general_solution(
            eq, problem.ic, evaluator=evaluator, f1=f1, s_range=s_range, config=self.config
        )
        logger.info(f"{name}: solution {bundle.solution}")

        tol = self.config.residual_tolerance
        results = [
            self._bounded(name, "symbolic-residual", bundle.residual_max, tol),
            self._wronskian(name, bundle),
        ]
        homogeneous = eq.without_forcing()
        for i, f in enumerate(bundle.basis, 1):
            error = residual(homogeneous, f, s_range=s_range, config=self.config)
            results.append(self._bounded(name, f"basis-residual-{i}", error, tol))

        if problem.expected is not None:
            results.append(self._expected(name, problem, bundle))
        if bundle.difference_residual is not None:
            results.append(
                self._bounded(name, "difference-residual", bundle.difference_residual, tol)
            )

        numeric_range = None if isinstance(eq, ConstCoeffFDE) else s_range
        candidate, target = self._primary(bundle, eq, homogeneous)
        error = residual(
            target,
            candidate,
            evaluator,
            s_range=numeric_range,
            numeric=True,
            relative=True,
            config=self.config,
        )
        results.append(self._bounded(name, "numeric-residual", error, self.numeric_tolerance))
        results.append(self._fundamental_theorem(name, candidate, evaluator, numeric_range))

        if isinstance(eq, ConstCoeffFDE) and eq.homogeneous and problem.ic is not None:
            report = norm_bound_check(
                bundle, eq.b / eq.a, eq.c / eq.a, evaluator, config=self.config
            )
            results.append(
                CheckResult(
                    problem=name,
                    check="norm-bound",
                    passed=report.all_within,
                    value=report.bound_constant_used,
                    detail=f"{len(report.samples)} samples, C = {report.bound_constant_used:g}",
                )
            )
        return results

    @staticmethod
    def _primary(bundle: SolutionBundle, eq, homogeneous) -> Tuple[Profile, object]:
        """The profile the numeric oracles check, with the equation it solves."""
        if not bundle.solution.is_zero():
            return bundle.solution, eq
        return bundle.basis[0], homogeneous

    @staticmethod
    def _bounded(name: str, check: str, value: float, tolerance: float) -> CheckResult:
        return CheckResult(
            problem=name,
            check=check,
            passed=bool(np.isfinite(value) and value <= tolerance),
            value=float(value),
            tolerance=tolerance,
        )

    @staticmethod
    def _wronskian(name: str, bundle: SolutionBundle) -> CheckResult:
        w = bundle.wronskian_at_x0
        return CheckResult(
            problem=name,
            check="wronskian",
            passed=bool(np.isfinite(w) and abs(w) > 1e-12),
            value=w,
            detail=f"W at s0={bundle.s0:g}",
        )

    def _expected(self, name: str, problem: ProblemSpec, bundle: SolutionBundle) -> CheckResult:
        """Claimed profile against the solution, or the second basis function when there is none."""
        try:
            expected = Profile.parse(problem.expected)
        except FalconError as e:
            return CheckResult(problem=name, check="expected", passed=False, detail=str(e))
        unforced = problem.g is None or Profile.parse(problem.g).is_zero()
        got = bundle.basis[1] if problem.ic is None and unforced else bundle.solution
        difference = got - expected
        return CheckResult(
            problem=name,
            check="expected",
            passed=got.isclose(expected, rel=EXPECTED_TOLERANCE, abs_tol=EXPECTED_TOLERANCE),
            value=difference.max_coefficient,
            tolerance=EXPECTED_TOLERANCE,
            detail=f"got {got}, expected {expected}",
        )

    def _fundamental_theorem(
        self,
        name: str,
        candidate: Profile,
        evaluator: StaircaseEvaluator,
        s_range: Optional[Tuple[float, float]],
    ) -> CheckResult:
        """``int_a^b D^alpha psi dS = psi(b) - psi(a)``."""
        lo, hi = s_range or (evaluator.s_min, evaluator.s_max)
        a = float(evaluator.inverse(lo))
        b = evaluator.spec.hi
        s_a, s_b = float(evaluator.staircase(a)), float(evaluator.staircase(b))
        exact = float(candidate.evaluate(s_b) - candidate.evaluate(s_a))
        integral = falpha_integral(differentiate(candidate), evaluator, a, b, config=self.config)
        scale = max(abs(float(candidate.evaluate(s_a))), abs(float(candidate.evaluate(s_b))), 1.0)
        error = abs(integral - exact) / scale
        return CheckResult(
            problem=name,
            check="fundamental-theorem",
            passed=error <= self.numeric_tolerance,
            value=error,
            tolerance=self.numeric_tolerance,
            detail=f"integral {integral:.12g}, difference {exact:.12g}",
        )

    def random_derivative_checks(self, count: int, seed: int = 0) -> List[CheckResult]:
        """Numeric F^alpha-derivatives of random profiles against their symbolic derivatives."""
        rng = np.random.default_rng(seed)
        evaluator = self.evaluator_for(None)
        spec = evaluator.spec
        results = []
        for i in range(count):
            profile = random_profile(rng)
            xs = np.asarray(
                nearest_point_in_prefractal(
                    spec,
                    self.config.stencil_depth + 1,
                    rng.uniform(spec.lo, spec.hi, 50),
                    self.config,
                )
            )
            s = np.asarray(evaluator.staircase(xs), dtype=float)
            numeric = np.asarray(falpha_derivative(profile, evaluator, xs, config=self.config))
            symbolic = np.asarray(differentiate(profile).evaluate(s))
            scale = max(float(np.max(np.abs(symbolic))), 1.0)
            error = float(np.max(np.abs(numeric - symbolic))) / scale
            results.append(
                CheckResult(
                    problem=f"random-{seed}-{i}",
                    check="derivative-oracle",
                    passed=error <= self.numeric_tolerance,
                    value=error,
                    tolerance=self.numeric_tolerance,
                    detail=str(profile),
                )
            )
        return results

    def _log_summary(self) -> None:
        logger.info("=" * 50)
        logger.info("Verification Summary:")
        logger.info(f"Total problems: {self.stats.total_problems}")
        logger.info(f"Total checks: {self.stats.total_checks}")
        logger.info(f"Passed: {self.stats.passed_checks}")
        logger.info(f"Failed: {self.stats.failed_checks}")
        logger.info(f"Processing time: {self.stats.processing_time:.2f} seconds")

        if self.stats.errors:
            logger.warning(f"Errors encountered: {len(self.stats.errors)}")
            for error in self.stats.errors[:5]:
                logger.warning(f"  - {error['problem']}: {error['error']}")

        logger.info("=" * 50)
