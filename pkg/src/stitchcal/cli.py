"""Batch command-line surface.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 invariant
violation (for example a mask that does not match its declared camera
size). Standard output carries only the result path; diagnostics go to
standard error at the verbosity selected by the ESC_LOG environment
variable (error, info, or debug).
"""

from __future__ import annotations

import csv
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import click

from .config import RunConfig, load_config
from .errors import ConfigError, StitchcalError
from .field import blurred_template, render_template, standard_markings
from .raster import save_image
from .runner import (
    ABLATION_VARIANTS,
    run_ablate,
    run_calibrate,
    run_simulate,
    run_sweep,
    scaled_blur,
    write_artifacts,
)

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INVARIANT = 4

logger = logging.getLogger(__name__)


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("ESC_LOG", "error").lower(), logging.ERROR
    )
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def _apply_overrides(cfg: RunConfig, seed, out, threads, lam, generations) -> RunConfig:
    if seed is not None:
        cfg = replace(cfg, seed=seed, evolution=replace(cfg.evolution, seed=seed))
    if out is not None:
        cfg = replace(cfg, output_dir=out)
    if threads is not None:
        cfg = replace(cfg, threads=threads)
    if lam is not None:
        try:
            cfg = replace(cfg, weights=type(cfg.weights)(lambda_tradeoff=lam))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if generations is not None:
        try:
            cfg = replace(cfg, evolution=replace(cfg.evolution, generations=generations))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return cfg


def _guarded(fn):
    try:
        fn()
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except (StitchcalError, ValueError) as exc:
        logger.error("invariant violation: %s", exc)
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INVARIANT)


def _shared_options(fn):
    fn = click.option("--config", "config_path", required=True, type=click.Path(), help="Run configuration (JSON).")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the config seed.")(fn)
    fn = click.option("--out", type=click.Path(), default=None, help="Override the output directory.")(fn)
    fn = click.option("--threads", type=int, default=None, help="Loss-evaluation threads (0 = auto).")(fn)
    fn = click.option("--lambda", "lam", type=float, default=None, help="Override the stitch/projection trade-off.")(fn)
    fn = click.option("--generations", type=int, default=None, help="Override the generation count.")(fn)
    return fn


@click.group()
def main() -> None:
    """Multi-camera extrinsic refinement over a crowned sports field."""
    _setup_logging()


@main.command()
@_shared_options
def calibrate(config_path, seed, out, threads, lam, generations) -> None:
    """Refine extrinsics from per-camera masks and start poses."""

    def go():
        cfg = _apply_overrides(load_config(config_path), seed, out, threads, lam, generations)
        result = run_calibrate(cfg)
        click.echo(str(write_artifacts(result, cfg.output_dir)))

    _guarded(go)


@main.command()
@_shared_options
def simulate(config_path, seed, out, threads, lam, generations) -> None:
    """Build a synthetic drifted scene, recalibrate it, and report metrics."""

    def go():
        cfg = _apply_overrides(load_config(config_path), seed, out, threads, lam, generations)
        result = run_simulate(cfg)
        click.echo(str(write_artifacts(result, cfg.output_dir)))

    _guarded(go)


@main.command()
@click.argument("variant", type=click.Choice(ABLATION_VARIANTS))
@_shared_options
def ablate(variant, config_path, seed, out, threads, lam, generations) -> None:
    """Run one ablation variant: full, no_3d (flat estimator), or no_stitch."""

    def go():
        cfg = _apply_overrides(load_config(config_path), seed, out, threads, lam, generations)
        result = run_ablate(cfg, variant)
        out_dir = Path(cfg.output_dir) / variant
        click.echo(str(write_artifacts(result, out_dir)))

    _guarded(go)


@main.command("sweep-lambda")
@click.option("--values", default="0,0.25,0.5,0.75,1.0", show_default=True,
              help="Comma-separated trade-off values.")
@_shared_options
def sweep_lambda(values, config_path, seed, out, threads, lam, generations) -> None:
    """Simulate once per trade-off value (shared seed) and emit a CSV."""

    def go():
        cfg = _apply_overrides(load_config(config_path), seed, out, threads, lam, generations)
        try:
            lams = [float(v) for v in values.split(",") if v.strip() != ""]
        except ValueError as exc:
            raise ConfigError(f"bad --values list: {exc}") from exc
        if not lams:
            raise ConfigError("--values must contain at least one number")
        results = run_sweep(cfg, lams)
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "sweep.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda", "stitch_px", "tre_cm"])
            for lam_value, result in results:
                m = result.report.metrics or {}
                writer.writerow([lam_value, m.get("stitch_px"), m.get("tre_cm")])
        click.echo(str(path))

    _guarded(go)


@main.command("render-template")
@_shared_options
def render_template_cmd(config_path, seed, out, threads, lam, generations) -> None:
    """Write the binary marking template and its blurred composite."""

    def go():
        cfg = _apply_overrides(load_config(config_path), seed, out, threads, lam, generations)
        markings = standard_markings(cfg.field.length_m, cfg.field.width_m)
        binary = render_template(markings, cfg.evaluate_resolution)
        blurred = blurred_template(binary, scaled_blur(cfg.blur, cfg.evaluate_resolution))
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_image(binary, out_dir / "template.png")
        save_image(blurred, out_dir / "template_blurred.png")
        click.echo(str(out_dir / "template.png"))

    _guarded(go)


if __name__ == "__main__":
    main()
