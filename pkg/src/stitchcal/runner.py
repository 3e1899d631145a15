"""Run orchestration shared by the CLI, the estimator, and the test suite.

A run builds the scene (synthetic or from mask files), renders the
templates, evolves the joint pose vector, and evaluates metrics against
ground truth when it is available. Ground-truth mask renders are memoized
in-process because they depend only on (field, markings, camera), not on
the seed.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import CalibrationReport, CameraConfig, RunConfig, config_echo
from .errors import ConfigError, DimensionMismatch, StitchcalError
from .evolve import EvolveTrace, evolve
from .field import BlurSpec, MarkingSet, PlayfieldModel, blurred_template, render_template, standard_markings
from .fitness import LossWeights, SceneInputs, decode_genome, loss_total
from .geometry import canonicalize_rotation
from .raster import BirdsEyeFrame, GrayImage, load_image, save_image, warp_to_birdseye
from .simulate import (
    CameraModel,
    SceneTruth,
    apply_drift,
    metric_iou,
    metric_roe,
    metric_roe_geodesic,
    metric_stitch,
    metric_tre,
    render_mask,
)

logger = logging.getLogger(__name__)

# Blur radii in the config are expressed in pixels of the reference
# evaluation raster; rebuilding the template at another resolution keeps
# the blur's physical width constant.
BLUR_REFERENCE_RESOLUTION = 0.1

_mask_cache: dict[tuple, GrayImage] = {}


def _cached_render_mask(field: PlayfieldModel, markings: MarkingSet, cam: CameraModel) -> GrayImage:
    key = (
        field,
        markings.length_m,
        markings.width_m,
        cam.k.tobytes(),
        cam.rotation.tobytes(),
        cam.translation.tobytes(),
        cam.width,
        cam.height,
    )
    if key not in _mask_cache:
        logger.info("rendering ground-truth mask for camera at %s", np.round(cam.translation, 3))
        _mask_cache[key] = render_mask(field, markings, cam)
    return _mask_cache[key]


def scaled_blur(blur: BlurSpec, resolution: float) -> BlurSpec:
    return blur.scaled(BLUR_REFERENCE_RESOLUTION / resolution)


@dataclass
class RunResult:
    report: CalibrationReport
    trace: EvolveTrace
    poses: list[tuple[np.ndarray, np.ndarray]]
    start_poses: list[tuple[np.ndarray, np.ndarray]]
    warps: list[GrayImage]
    template_eval: GrayImage
    scene: SceneTruth | None


def _load_masks(cfg: RunConfig) -> list[GrayImage]:
    masks = []
    for i, cc in enumerate(cfg.cameras):
        if cc.mask_path is None:
            raise ConfigError(f"cameras[{i}] has no mask_path and no synthetic truth to render from")
        mask = load_image(cc.mask_path)
        if (mask.width, mask.height) != (cc.image_width, cc.image_height):
            raise DimensionMismatch(
                f"mask {cc.mask_path} is {mask.width}x{mask.height}, camera {i} declares "
                f"{cc.image_width}x{cc.image_height}"
            )
        masks.append(mask)
    return masks


def _start_poses(cfg: RunConfig, scene: SceneTruth | None) -> list[tuple[np.ndarray, np.ndarray]]:
    poses = []
    for i, cc in enumerate(cfg.cameras):
        if cc.start_pose is not None:
            poses.append(cc.start_pose)
        elif scene is not None:
            poses.append(scene.start_poses[i])
        else:
            raise ConfigError(f"cameras[{i}] needs a start_pose")
    return poses


def prepare_scene(cfg: RunConfig, drifted: bool) -> tuple[SceneTruth | None, list[GrayImage], MarkingSet]:
    """Resolve ground truth, start poses, and input masks for a run.

    With ``drifted`` the start poses are the truth poses corrupted by the
    config's drift spec (the "outdated" calibration); otherwise explicit
    start poses from the camera blocks take precedence.
    """
    markings = standard_markings(cfg.field.length_m, cfg.field.width_m)
    scene = None
    if cfg.truth_poses is not None:
        cams = tuple(
            CameraModel(cc.intrinsics, r, l, cc.image_width, cc.image_height)
            for cc, (r, l) in zip(cfg.cameras, cfg.truth_poses)
        )
        if drifted:
            if cfg.drift is None:
                raise ConfigError("simulation requires a drift block")
            rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(9,)))
            starts = tuple(apply_drift(cam.pose, cfg.drift, rng) for cam in cams)
        else:
            starts = tuple(
                cc.start_pose if cc.start_pose is not None else cam.pose
                for cc, cam in zip(cfg.cameras, cams)
            )
        scene = SceneTruth(field=cfg.field, cameras=cams, start_poses=starts)

    if any(cc.mask_path for cc in cfg.cameras):
        masks = _load_masks(cfg)
    elif scene is not None:
        masks = [_cached_render_mask(cfg.field, markings, cam) for cam in scene.cameras]
    else:
        raise ConfigError("config provides neither mask paths nor synthetic truth")
    return scene, masks, markings


def execute(cfg: RunConfig, drifted: bool, estimator_field: PlayfieldModel | None = None) -> RunResult:
    """Run one full calibration and package the results.

    ``estimator_field`` overrides the field model used by the optimizer
    and the stitch/IoU warps (the scene truth keeps the config's field);
    this is how the flat-field ablation works.
    """
    t_start = time.perf_counter()
    scene, masks, markings = prepare_scene(cfg, drifted)
    est_field = estimator_field if estimator_field is not None else cfg.field

    frame_opt = BirdsEyeFrame.for_field(est_field, cfg.optimize_resolution)
    template_opt = blurred_template(
        render_template(markings, cfg.optimize_resolution),
        scaled_blur(cfg.blur, cfg.optimize_resolution),
    )
    scene_inputs = SceneInputs(
        masks=tuple(masks),
        intrinsics=tuple(cc.intrinsics for cc in cfg.cameras),
        field=est_field,
        template=template_opt,
        frame=frame_opt,
    )
    start_poses = _start_poses(cfg, scene)

    logger.info(
        "evolving %d cameras for %d generations (mu=%d, lambda=%d, seed=%d)",
        cfg.n_cameras,
        cfg.evolution.generations,
        cfg.evolution.mu,
        cfg.evolution.lambda_offspring,
        cfg.evolution.seed,
    )
    loss_fn = lambda genome: loss_total(genome, scene_inputs, cfg.weights)
    best, trace = evolve(loss_fn, start_poses, cfg.evolution, threads=cfg.threads)
    poses = [
        (canonicalize_rotation(r), l) for r, l in decode_genome(best.genome, cfg.n_cameras)
    ]

    frame_eval = BirdsEyeFrame.for_field(est_field, cfg.evaluate_resolution)
    template_eval = render_template(markings, cfg.evaluate_resolution)
    warps = []
    for (r, l), mask, cc in zip(poses, masks, cfg.cameras):
        warped, _ = warp_to_birdseye(mask, cc.intrinsics, r, l, est_field, frame_eval)
        warps.append(warped)

    metrics = None
    if scene is not None:
        truth = scene.truth_poses()
        metrics = {
            "tre_cm": metric_tre(poses, truth),
            "roe_deg": metric_roe(poses, truth),
            "roe_geodesic_deg": metric_roe_geodesic(poses, truth),
            "iou_pct": metric_iou(poses, scene, frame_eval, template_eval, masks, est_field),
        }
        if scene.n_cameras == 2:
            metrics["stitch_px"] = metric_stitch(poses, scene, frame_eval, est_field)
        logger.info("metrics: %s", metrics)

    report = CalibrationReport(
        poses=poses,
        metrics=metrics,
        loss_summary={
            "initial_best": trace.best_loss[0],
            "final_best": float(best.loss),
            "generations": cfg.evolution.generations,
        },
        config=config_echo(cfg),
        wall_clock_s=time.perf_counter() - t_start,
    )
    return RunResult(
        report=report,
        trace=trace,
        poses=poses,
        start_poses=list(start_poses),
        warps=warps,
        template_eval=template_eval,
        scene=scene,
    )


def write_artifacts(result: RunResult, out_dir) -> Path:
    """Write report.json, timing sidecar, trace.csv, and inspection PNGs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = result.report.write(out)
    result.trace.write_csv(out / "trace.csv")
    for i, warp in enumerate(result.warps):
        save_image(warp, out / f"warp_cam{i}.png")
    preview = np.zeros((result.template_eval.height, result.template_eval.width, 3), dtype=np.uint8)
    stacked = np.maximum.reduce([w.values for w in result.warps]) if result.warps else None
    if stacked is not None:
        preview[..., 0] = np.rint(stacked * 255.0).astype(np.uint8)
    preview[..., 1] = np.rint(result.template_eval.values * 255.0).astype(np.uint8)
    from PIL import Image

    Image.fromarray(preview, mode="RGB").save(out / "preview.png", format="PNG")
    return report_path


def run_calibrate(cfg: RunConfig) -> RunResult:
    """Calibrate from explicit start poses (masks from files or synthetic truth)."""
    return execute(cfg, drifted=False)


def run_simulate(cfg: RunConfig) -> RunResult:
    """Build the truth scene, drift it into a Start, render masks, calibrate."""
    if cfg.truth_poses is None:
        raise ConfigError("simulation requires a truth block (or the default synthetic rig)")
    return execute(cfg, drifted=True)


ABLATION_VARIANTS = ("full", "no_3d", "no_stitch")


def run_ablate(cfg: RunConfig, variant: str) -> RunResult:
    """Run one ablation: flat estimator field (no_3d) or lambda = 0 (no_stitch)."""
    if variant not in ABLATION_VARIANTS:
        raise ConfigError(f"unknown ablation variant {variant!r}; choose from {ABLATION_VARIANTS}")
    if variant == "full":
        return run_simulate(cfg)
    if variant == "no_3d":
        return execute(cfg, drifted=True, estimator_field=cfg.field.flattened())
    return execute(replace(cfg, weights=LossWeights(0.0)), drifted=True)


def run_sweep(cfg: RunConfig, values) -> list[tuple[float, RunResult]]:
    """One simulation per lambda value, sharing the config's seed."""
    results = []
    for lam in values:
        results.append((float(lam), run_simulate(replace(cfg, weights=LossWeights(float(lam))))))
    return results
