"""Command-line interface for Falcon."""

import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import click
import numpy as np
import pandas as pd
from pydantic import ValidationError

from . import __version__
from .cache import CacheManager
from .core import VerificationRunner
from .etp import Profile, antiderivative, differentiate
from .exceptions import FalconError, QuadratureFallback
from .falpha import falpha_derivative, falpha_integral
from .models import CantorSetSpec, EngineConfig, RunConfig
from .problems import STOCK_PROBLEMS, build_equation, figure_data, figure_filename
from .solver import general_solution, residual
from .staircase import StaircaseEvaluator, gamma_dimension, mass
from .validators import load_problems, load_set_spec

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _parse_alphas(ctx, param, value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def _run_config(**kwargs) -> RunConfig:
    try:
        return RunConfig(**{k: v for k, v in kwargs.items() if v is not None})
    except ValidationError as e:
        raise click.BadParameter(str(e))


def _engine_config(ctx: click.Context) -> EngineConfig:
    return EngineConfig.from_env(
        debug_mode=ctx.obj.get("debug", False),
        cache_normalizations=ctx.obj.get("cache", False),
    )


def _cache(config: EngineConfig) -> Optional[CacheManager]:
    return CacheManager() if config.cache_normalizations else None


def _load_set(spec_path: Optional[str]) -> CantorSetSpec:
    return load_set_spec(spec_path) if spec_path else CantorSetSpec.middle_third()


def _write_csv(df: pd.DataFrame, output_path: Optional[str]) -> None:
    if output_path:
        Path(output_path).parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(output_path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Wrote {len(df)} rows to {output_path}")
    else:
        click.echo(df.to_csv(index=False, float_format=FLOAT_FORMAT), nl=False)


def _write_json(data, output_path: Optional[str]) -> None:
    text = json.dumps(data, indent=2)
    if output_path:
        Path(output_path).parent.mkdir(parents=True, exist_ok=True)
        Path(output_path).write_text(text + "\n")
        logger.info(f"Wrote {output_path}")
    else:
        click.echo(text)


def _fail(e: Exception, debug: bool) -> None:
    code = e.exit_code if isinstance(e, FalconError) else 1
    logger.error(f"{type(e).__name__}: {e}")
    if debug:
        logger.exception("Full traceback:")
    sys.exit(code)


@click.group()
@click.option("--debug", is_flag=True, help="Enable debug logging")
@click.option("--cache", is_flag=True, help="Cache staircase normalizations on disk")
@click.version_option(version=__version__, prog_name="falcon")
@click.pass_context
def cli(ctx, debug: bool, cache: bool):
    """Falcon - calculus on Cantor-like fractal sets."""
    log_level = logging.DEBUG if debug else logging.INFO
    logging.basicConfig(
        level=log_level, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    ctx.ensure_object(dict)
    ctx.obj["debug"] = debug
    ctx.obj["cache"] = cache


@cli.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True), help="Set spec JSON file")
@click.option("--out", "output_path", type=click.Path(), help="Output CSV (default: stdout)")
@click.option("--samples", type=int, default=None, help="Grid size (default: 2001)")
@click.option("--mode", type=click.Choice(["exact", "power", "both"]), default="both")
@click.option("--a0", type=float, default=None, help="Staircase origin (default: lower end)")
@click.pass_context
def staircase(ctx, spec_path, output_path, samples, mode, a0):
    """Tabulate the integral staircase on a uniform grid."""
    cfg = _run_config(
        command="staircase",
        spec_path=spec_path,
        output_path=output_path,
        samples=samples,
        mode=mode,
    )
    try:
        config = _engine_config(ctx)
        spec = _load_set(cfg.spec_path)
        x = np.linspace(spec.lo, spec.hi, cfg.samples)
        columns = {"x": x}
        if cfg.mode in ("exact", "both"):
            exact = StaircaseEvaluator.build(
                spec, mode="exact", a0=a0, config=config, cache=_cache(config)
            )
            columns["S_exact"] = np.asarray(exact.staircase(x))
        if cfg.mode in ("power", "both"):
            power = StaircaseEvaluator.build(spec, mode="power", a0=a0, config=config)
            columns["S_power"] = np.asarray(power.staircase(x))
        _write_csv(pd.DataFrame(columns), cfg.output_path)
    except FalconError as e:
        _fail(e, ctx.obj["debug"])


@cli.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True), help="Set spec JSON file")
@click.option("--out", "output_path", type=click.Path(), help="Output JSON (default: stdout)")
@click.option("--width", type=float, default=1e-6, help="Bisection bracket width")
@click.pass_context
def dimension(ctx, spec_path, output_path, width):
    """Estimate the gamma-dimension and report the mass sequence at it."""
    cfg = _run_config(command="dimension", spec_path=spec_path, output_path=output_path)
    try:
        config = _engine_config(ctx)
        spec = _load_set(cfg.spec_path)
        estimate = gamma_dimension(spec, spec.lo, spec.hi, config, width=width)
        report = mass(spec, spec.lo, spec.hi, estimate.value, config)
        report = report.model_copy(
            update={"dim_estimate": estimate.value, "dim_width": estimate.width}
        )
        logger.info(f"gamma-dimension {estimate.value:.6f} (similarity {spec.alpha:.6f})")
        _write_json(report.model_dump(mode="json"), cfg.output_path)
    except FalconError as e:
        _fail(e, ctx.obj["debug"])


@cli.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True), required=True)
@click.option("--out", "output_path", type=click.Path(), help="Output JSON (default: stdout)")
@click.option("--csv", "csv_path", type=click.Path(), help="Also write (x, s, f) samples")
@click.option("--samples", type=int, default=201, help="Sample count for --csv")
@click.option("--mode", type=click.Choice(["exact", "power"]), default="exact")
@click.option(
    "--cross-check/--no-cross-check",
    default=True,
    help="Add the numeric F^alpha residual (default: on)",
)
@click.pass_context
def solve(ctx, spec_path, output_path, csv_path, samples, mode, cross_check):
    """Solve the problems of a problem-spec file."""
    cfg = _run_config(
        command="solve", spec_path=spec_path, output_path=output_path, samples=samples, mode=mode
    )
    try:
        config = _engine_config(ctx)
        problems = load_problems(cfg.spec_path)
        reports, frames = [], []
        for problem in problems:
            eq = build_equation(problem)
            evaluator = None
            if problem.set is not None:
                evaluator = StaircaseEvaluator.build(
                    problem.set, mode=cfg.mode, config=config, cache=_cache(config)
                )
            f1 = Profile.parse(problem.f1) if problem.f1 else None
            bundle = general_solution(eq, problem.ic, evaluator=evaluator, f1=f1, config=config)
            if cross_check and evaluator is not None:
                bundle.numeric_residual = residual(
                    eq, bundle.solution, evaluator, numeric=True, relative=True, config=config
                )
            report = {"name": problem.name, **bundle.to_json_dict()}
            reports.append(report)

            if csv_path:
                lo, hi = (problem.set.lo, problem.set.hi) if problem.set else (0.0, 1.0)
                x = np.linspace(lo, hi, cfg.samples)
                s = np.asarray(evaluator.staircase(x)) if evaluator is not None else x
                if bundle.solution.requires_positive:
                    x, s = x[s > 0.0], s[s > 0.0]
                frames.append(
                    pd.DataFrame(
                        {"problem": problem.name, "x": x, "s": s, "f": bundle.solution.evaluate(s)}
                    )
                )
        _write_json(reports[0] if len(reports) == 1 else reports, cfg.output_path)
        if csv_path:
            _write_csv(pd.concat(frames, ignore_index=True), csv_path)
    except FalconError as e:
        _fail(e, ctx.obj["debug"])


@cli.command()
@click.option("--figure", "figure_id", type=click.IntRange(1, 7), required=True)
@click.option(
    "--alphas",
    callback=_parse_alphas,
    default="0.5,0.63,0.8,1.0",
    help="Comma-separated alpha values (default: 0.5,0.63,0.8,1.0)",
)
@click.option("--samples", type=int, default=None, help="Grid size (default: 2001)")
@click.option("--exact", is_flag=True, help="Use exact staircases instead of x**alpha")
@click.option(
    "--out", "output_path", type=click.Path(), default="falcon_figures", help="Output directory"
)
@click.pass_context
def figure(ctx, figure_id, alphas, samples, exact, output_path):
    """Write the sample grids of one figure, one CSV per alpha."""
    cfg = _run_config(
        command="figure",
        output_path=output_path,
        samples=samples,
        alpha_list=alphas,
        figure=figure_id,
        exact=exact,
    )
    try:
        config = _engine_config(ctx)
        out_dir = Path(cfg.output_path)
        out_dir.mkdir(parents=True, exist_ok=True)
        for alpha, frame in figure_data(
            cfg.figure, cfg.alpha_list, cfg.samples, exact=cfg.exact, config=config
        ):
            path = out_dir / figure_filename(cfg.figure, alpha)
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
            click.echo(str(path))
    except FalconError as e:
        _fail(e, ctx.obj["debug"])


@cli.command()
@click.option(
    "--spec", "spec_path", type=click.Path(exists=True), help="Problem file (default: stock set)"
)
@click.option("--random", "random_profiles", type=int, default=0, help="Random derivative draws")
@click.option("--seed", type=int, default=0, help="Seed of the random draws")
@click.pass_context
def verify(ctx, spec_path, random_profiles, seed):
    """Run the cross-oracle suite; exit 0 iff every check passes."""
    cfg = _run_config(command="verify", spec_path=spec_path, seed=seed)
    try:
        config = _engine_config(ctx)
        problems = load_problems(cfg.spec_path) if cfg.spec_path else list(STOCK_PROBLEMS)
        if not problems and not random_profiles:
            click.echo("0 checks: the problem list is empty")
            return
        stats = VerificationRunner(config).run(problems, random_profiles, cfg.seed)
    except FalconError as e:
        _fail(e, ctx.obj["debug"])
        return

    click.echo(f"{stats.passed_checks}/{stats.total_checks} checks passed")
    if stats.failed_checks:
        columns = {"problem", "check", "value", "tolerance", "detail"}
        table = pd.DataFrame([r.model_dump(include=columns) for r in stats.failures])
        click.echo("\nFailed checks:", err=True)
        click.echo(table.to_string(index=False), err=True)
        sys.exit(1)


@cli.command()
@click.option("--profile", "profile_text", required=True, help="Profile in s, e.g. 'exp(-2*s)'")
@click.option("--spec", "spec_path", type=click.Path(exists=True), help="Set spec JSON file")
@click.option("--x", "points", type=float, multiple=True, help="Evaluation points")
@click.option("--samples", type=int, default=11, help="Grid size when no --x is given")
@click.option("--mode", type=click.Choice(["exact", "power"]), default="exact")
@click.option("--depth", type=int, default=None, help="Stencil depth")
@click.option("--out", "output_path", type=click.Path(), help="Output CSV (default: stdout)")
@click.pass_context
def deriv(ctx, profile_text, spec_path, points, samples, mode, depth, output_path):
    """Numeric F^alpha-derivative of a profile next to its symbolic derivative."""
    cfg = _run_config(
        command="deriv", spec_path=spec_path, output_path=output_path, samples=samples, mode=mode
    )
    try:
        config = _engine_config(ctx)
        spec = _load_set(cfg.spec_path)
        profile = Profile.parse(profile_text)
        evaluator = StaircaseEvaluator.build(
            spec, mode=cfg.mode, config=config, cache=_cache(config)
        )
        if points:
            x = np.asarray(points, dtype=float)
        else:
            x = np.linspace(spec.lo, spec.hi, cfg.samples)
        numeric = np.atleast_1d(falpha_derivative(profile, evaluator, x, depth, config))
        s = np.atleast_1d(evaluator.staircase(x))
        symbolic = np.atleast_1d(differentiate(profile).evaluate(s))
        _write_csv(
            pd.DataFrame({"x": x, "s": s, "numeric": numeric, "symbolic": symbolic}),
            cfg.output_path,
        )
    except FalconError as e:
        _fail(e, ctx.obj["debug"])


@cli.command()
@click.option("--profile", "profile_text", required=True, help="Integrand profile in s")
@click.option("--a", "lower", type=float, required=True)
@click.option("--b", "upper", type=float, required=True)
@click.option("--spec", "spec_path", type=click.Path(exists=True), help="Set spec JSON file")
@click.option("--mode", type=click.Choice(["exact", "power"]), default="exact")
@click.option("--refinement", type=int, default=None, help="Partition refinement level")
@click.option("--out", "output_path", type=click.Path(), help="Output JSON (default: stdout)")
@click.pass_context
def integrate(ctx, profile_text, lower, upper, spec_path, mode, refinement, output_path):
    """F^alpha-integral of a profile over [a, b], with the closed form when one exists."""
    cfg = _run_config(
        command="integrate", spec_path=spec_path, output_path=output_path, mode=mode
    )
    try:
        config = _engine_config(ctx)
        spec = _load_set(cfg.spec_path)
        profile = Profile.parse(profile_text)
        evaluator = StaircaseEvaluator.build(
            spec, mode=cfg.mode, config=config, cache=_cache(config)
        )
        numeric = falpha_integral(profile, evaluator, lower, upper, refinement, config=config)
        s_a, s_b = float(evaluator.staircase(lower)), float(evaluator.staircase(upper))
        try:
            primitive = antiderivative(profile)
            closed: Optional[float] = float(primitive.evaluate(s_b) - primitive.evaluate(s_a))
        except QuadratureFallback:
            closed = None
        report = {"a": lower, "b": upper, "s_a": s_a, "s_b": s_b}
        _write_json({**report, "numeric": numeric, "closed_form": closed}, cfg.output_path)
    except FalconError as e:
        _fail(e, ctx.obj["debug"])


@cli.command()
def cache_stats():
    """Show normalization cache statistics."""
    cache = CacheManager()
    stats = cache.get_stats()

    click.echo("\nCache Statistics:")
    click.echo("=" * 40)
    for key, value in stats.items():
        click.echo(f"{key:.<20} {value}")


@cli.command()
@click.confirmation_option(prompt="Are you sure you want to clear the cache?")
def clear_cache():
    """Clear the normalization cache."""
    cache = CacheManager()
    cache.clear()
    click.echo("Cache cleared")


def main():
    """Main entry point."""
    cli(prog_name="falcon")


if __name__ == "__main__":
    main()
