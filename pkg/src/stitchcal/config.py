"""Run configuration (JSON) and calibration reports.

All config quantities are SI (meters, radians); display units (cm,
degrees, bird's-eye pixels) appear only in reports. Wall-clock time is
written to a sidecar file so report.json stays byte-deterministic for a
given (config, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError
from .evolve import ESConfig
from .field import BlurSpec, PlayfieldModel
from .fitness import LossWeights
from .geometry import check_intrinsics, intrinsics_matrix
from .simulate import (
    DEFAULT_FOCAL_PX,
    DEFAULT_IMAGE_HEIGHT,
    DEFAULT_IMAGE_WIDTH,
    CameraModel,
    DriftSpec,
    default_cameras,
)

REPORT_VERSION = "0.1.0"


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _vec3(value, name: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=np.float64).reshape(3)
    except Exception as exc:
        raise ConfigError(f"{name} must be a 3-vector") from exc
    _require(bool(np.all(np.isfinite(arr))), f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class CameraConfig:
    intrinsics: np.ndarray
    image_width: int
    image_height: int
    start_pose: tuple[np.ndarray, np.ndarray] | None = None
    mask_path: str | None = None


@dataclass
class RunConfig:
    field: PlayfieldModel = dc_field(default_factory=PlayfieldModel)
    cameras: list[CameraConfig] = dc_field(default_factory=list)
    truth_poses: list[tuple[np.ndarray, np.ndarray]] | None = None
    drift: DriftSpec | None = None
    evolution: ESConfig = dc_field(default_factory=ESConfig)
    weights: LossWeights = dc_field(default_factory=LossWeights)
    blur: BlurSpec = dc_field(default_factory=BlurSpec)
    optimize_resolution: float = 0.5
    evaluate_resolution: float = 0.1
    output_dir: str = "out"
    seed: int = 0
    threads: int = 0
    raw: dict = dc_field(default_factory=dict)

    @property
    def n_cameras(self) -> int:
        return len(self.cameras)

    def truth_cameras(self) -> list[CameraModel] | None:
        if self.truth_poses is None:
            return None
        return [
            CameraModel(cc.intrinsics, r, l, cc.image_width, cc.image_height)
            for cc, (r, l) in zip(self.cameras, self.truth_poses)
        ]


def _parse_field(block: dict) -> PlayfieldModel:
    length = float(block.get("length_m", 105.0))
    width = float(block.get("width_m", 68.0))
    try:
        return PlayfieldModel(
            length_m=length,
            width_m=width,
            ridge_height_m=float(block.get("ridge_height_m", 0.30)),
            ridge_x1_m=float(block.get("ridge_x1_m", length / 4.0)),
            ridge_x2_m=float(block.get("ridge_x2_m", 3.0 * length / 4.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid field block: {exc}") from exc


def _parse_pose(block, name: str) -> tuple[np.ndarray, np.ndarray]:
    _require(isinstance(block, dict), f"{name} must be an object")
    _require("rotation" in block and "translation" in block, f"{name} needs rotation and translation")
    return _vec3(block["rotation"], f"{name}.rotation"), _vec3(block["translation"], f"{name}.translation")


def _parse_camera(block: dict, index: int) -> CameraConfig:
    name = f"cameras[{index}]"
    _require(isinstance(block, dict), f"{name} must be an object")
    intr = block.get("intrinsics", {})
    size = block.get("image_size", [DEFAULT_IMAGE_WIDTH, DEFAULT_IMAGE_HEIGHT])
    _require(isinstance(size, (list, tuple)) and len(size) == 2, f"{name}.image_size must be [width, height]")
    try:
        k = intrinsics_matrix(
            float(intr.get("fx", DEFAULT_FOCAL_PX)),
            float(intr.get("fy", DEFAULT_FOCAL_PX)),
            float(intr.get("cx", (int(size[0]) - 1) / 2.0)),
            float(intr.get("cy", (int(size[1]) - 1) / 2.0)),
        )
        check_intrinsics(k)
    except ValueError as exc:
        raise ConfigError(f"invalid {name}.intrinsics: {exc}") from exc
    start = _parse_pose(block["start_pose"], f"{name}.start_pose") if "start_pose" in block else None
    return CameraConfig(
        intrinsics=k,
        image_width=int(size[0]),
        image_height=int(size[1]),
        start_pose=start,
        mask_path=block.get("mask_path"),
    )


def _parse_drift(block: dict) -> DriftSpec:
    try:
        return DriftSpec(
            sigma_translation=float(block.get("sigma_translation_m", 0.0)),
            sigma_rotation=float(block.get("sigma_rotation_rad", 0.0)),
            offset_rotation=_vec3(block["offset_rotation"], "drift.offset_rotation")
            if "offset_rotation" in block
            else None,
            offset_translation=_vec3(block["offset_translation"], "drift.offset_translation")
            if "offset_translation" in block
            else None,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid drift block: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    """Validate a parsed JSON document into a RunConfig."""
    _require(isinstance(data, dict), "config root must be a JSON object")
    field_model = _parse_field(data.get("field", {}))

    cam_blocks = data.get("cameras")
    if cam_blocks is None:
        rig = default_cameras(field_model)
        cameras = [CameraConfig(c.k, c.width, c.height) for c in rig]
        default_truth = [c.pose for c in rig]
    else:
        _require(isinstance(cam_blocks, list) and len(cam_blocks) >= 1, "cameras must be a non-empty list")
        cameras = [_parse_camera(b, i) for i, b in enumerate(cam_blocks)]
        default_truth = None

    truth = None
    if "truth" in data:
        block = data["truth"]
        _require(isinstance(block, dict) and "poses" in block, "truth block needs a poses list")
        poses = block["poses"]
        _require(isinstance(poses, list) and len(poses) == len(cameras), "truth.poses must match camera count")
        truth = [_parse_pose(p, f"truth.poses[{i}]") for i, p in enumerate(poses)]
    elif default_truth is not None:
        truth = default_truth

    ev = data.get("evolution", {})
    try:
        evolution = ESConfig(
            generations=int(ev.get("generations", 100)),
            mu=int(ev.get("mu", 64)),
            lambda_offspring=int(ev.get("lambda_offspring", 128)),
            sigma_rotation=float(ev.get("sigma_rotation_rad", 0.005)),
            sigma_translation=float(ev.get("sigma_translation_m", 0.1)),
            sigma_decay=float(ev.get("sigma_decay", 0.95)),
            seed=int(data.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid evolution block: {exc}") from exc

    loss_block = data.get("loss", {})
    try:
        weights = LossWeights(lambda_tradeoff=float(loss_block.get("lambda_tradeoff", 0.5)))
    except ValueError as exc:
        raise ConfigError(f"invalid loss block: {exc}") from exc

    blur_block = data.get("blur", {})
    try:
        blur = BlurSpec(tuple(blur_block.get("radii_px", (2.0, 4.0, 8.0, 16.0))))
    except ValueError as exc:
        raise ConfigError(f"invalid blur block: {exc}") from exc

    bird = data.get("birdseye", {})
    opt_res = float(bird.get("optimize_res_m_per_px", 0.5))
    eval_res = float(bird.get("evaluate_res_m_per_px", 0.1))
    _require(opt_res > 0 and eval_res > 0, "bird's-eye resolutions must be positive")

    drift = _parse_drift(data["drift"]) if "drift" in data else None

    threads = int(data.get("threads", 0))
    _require(threads >= 0, "threads must be >= 0")

    return RunConfig(
        field=field_model,
        cameras=cameras,
        truth_poses=truth,
        drift=drift,
        evolution=evolution,
        weights=weights,
        blur=blur,
        optimize_resolution=opt_res,
        evaluate_resolution=eval_res,
        output_dir=str(data.get("output_dir", "out")),
        seed=int(data.get("seed", 0)),
        threads=threads,
        raw=data,
    )


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def config_echo(cfg: RunConfig) -> dict:
    """Normalized effective configuration, echoed into reports."""
    echo: dict[str, Any] = {
        "field": {
            "length_m": cfg.field.length_m,
            "width_m": cfg.field.width_m,
            "ridge_height_m": cfg.field.ridge_height_m,
            "ridge_x1_m": cfg.field.ridge_x1_m,
            "ridge_x2_m": cfg.field.ridge_x2_m,
        },
        "cameras": [
            {
                "intrinsics": {
                    "fx": cc.intrinsics[0, 0],
                    "fy": cc.intrinsics[1, 1],
                    "cx": cc.intrinsics[0, 2],
                    "cy": cc.intrinsics[1, 2],
                },
                "image_size": [cc.image_width, cc.image_height],
                "mask_path": cc.mask_path,
            }
            for cc in cfg.cameras
        ],
        "evolution": {
            "generations": cfg.evolution.generations,
            "mu": cfg.evolution.mu,
            "lambda_offspring": cfg.evolution.lambda_offspring,
            "sigma_rotation_rad": cfg.evolution.sigma_rotation,
            "sigma_translation_m": cfg.evolution.sigma_translation,
            "sigma_decay": cfg.evolution.sigma_decay,
        },
        "loss": {"lambda_tradeoff": cfg.weights.lambda_tradeoff},
        "blur": {"radii_px": list(cfg.blur.radii)},
        "birdseye": {
            "optimize_res_m_per_px": cfg.optimize_resolution,
            "evaluate_res_m_per_px": cfg.evaluate_resolution,
        },
        "seed": cfg.seed,
        "threads": cfg.threads,
    }
    if cfg.drift is not None:
        echo["drift"] = {
            "sigma_translation_m": cfg.drift.sigma_translation,
            "sigma_rotation_rad": cfg.drift.sigma_rotation,
        }
        if cfg.drift.offset_rotation is not None:
            echo["drift"]["offset_rotation"] = cfg.drift.offset_rotation.tolist()
        if cfg.drift.offset_translation is not None:
            echo["drift"]["offset_translation"] = cfg.drift.offset_translation.tolist()
    return echo


@dataclass
class CalibrationReport:
    """Recovered extrinsics plus metrics (only when ground truth is known)."""

    poses: list[tuple[np.ndarray, np.ndarray]]
    metrics: dict[str, float] | None
    loss_summary: dict[str, float]
    config: dict
    wall_clock_s: float = 0.0
    version: str = REPORT_VERSION

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "version": self.version,
            "cameras": [
                {"rotation": list(map(float, r)), "translation": list(map(float, l))}
                for r, l in self.poses
            ],
            "loss": self.loss_summary,
            "config": self.config,
        }
        if self.metrics is not None:
            out["metrics"] = self.metrics
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, directory: Path) -> Path:
        """Write report.json plus the wall-clock sidecar; returns the report path."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / "report.json"
        path.write_text(self.to_json())
        (directory / "timing.txt").write_text(f"wall_clock_seconds={self.wall_clock_s:.3f}\n")
        return path
