"""Scikit-learn style front end for the calibration engine.

``JointExtrinsicsRefiner`` treats the per-camera segmentation masks as
the data and the camera extrinsics as the fitted parameters, so it plugs
into sklearn tooling (``get_params``/``set_params``, cloning, grid
search over ``lambda_tradeoff`` or mutation strengths).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .evolve import ESConfig, evolve
from .field import BlurSpec, PlayfieldModel, blurred_template, render_template, standard_markings
from .fitness import LossWeights, SceneInputs, decode_genome, loss_total
from .geometry import canonicalize_rotation
from .raster import BirdsEyeFrame, warp_to_birdseye
from .validation import check_intrinsics_list, check_masks, check_poses


class JointExtrinsicsRefiner(BaseEstimator):
    """Jointly refine N camera poses against the field template, stitch-aware.

    Parameters mirror the run configuration: the field model, the loss
    trade-off, the evolution-strategy settings, and the bird's-eye
    resolution used during optimization.
    """

    def __init__(
        self,
        field: PlayfieldModel | None = None,
        lambda_tradeoff: float = 0.5,
        generations: int = 100,
        mu: int = 64,
        lambda_offspring: int = 128,
        sigma_rotation: float = 0.005,
        sigma_translation: float = 0.1,
        sigma_decay: float = 0.95,
        blur_radii: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0),
        optimize_resolution: float = 0.1,
        seed: int = 0,
        threads: int = 0,
    ):
        self.field = field
        self.lambda_tradeoff = lambda_tradeoff
        self.generations = generations
        self.mu = mu
        self.lambda_offspring = lambda_offspring
        self.sigma_rotation = sigma_rotation
        self.sigma_translation = sigma_translation
        self.sigma_decay = sigma_decay
        self.blur_radii = blur_radii
        self.optimize_resolution = optimize_resolution
        self.seed = seed
        self.threads = threads

    def _field(self) -> PlayfieldModel:
        return self.field if self.field is not None else PlayfieldModel()

    def _scene(self, masks, intrinsics) -> SceneInputs:
        field = self._field()
        markings = standard_markings(field.length_m, field.width_m)
        template = blurred_template(
            render_template(markings, self.optimize_resolution),
            BlurSpec(tuple(self.blur_radii)).scaled(0.1 / self.optimize_resolution),
        )
        return SceneInputs(
            masks=tuple(masks),
            intrinsics=tuple(intrinsics),
            field=field,
            template=template,
            frame=BirdsEyeFrame.for_field(field, self.optimize_resolution),
        )

    def fit(self, X, y=None, *, intrinsics, start_poses):
        """Refine the start poses against the masks in ``X``.

        X is a sequence of per-camera masks (GrayImage or 2-D arrays in
        [0, 1]); ``intrinsics`` and ``start_poses`` are per-camera. After
        fitting, ``rotations_`` and ``translations_`` hold the refined
        extrinsics in camera order.
        """
        masks = check_masks(X)
        n = len(masks)
        ks = check_intrinsics_list(intrinsics, n)
        starts = check_poses(start_poses, n)
        scene = self._scene(masks, ks)
        weights = LossWeights(self.lambda_tradeoff)
        cfg = ESConfig(
            generations=self.generations,
            mu=self.mu,
            lambda_offspring=self.lambda_offspring,
            sigma_rotation=self.sigma_rotation,
            sigma_translation=self.sigma_translation,
            sigma_decay=self.sigma_decay,
            seed=self.seed,
        )
        best, trace = evolve(lambda g: loss_total(g, scene, weights), starts, cfg, threads=self.threads)
        poses = [(canonicalize_rotation(r), l) for r, l in decode_genome(best.genome, n)]
        self.n_cameras_ = n
        self.intrinsics_ = ks
        self.rotations_ = np.array([r for r, _ in poses])
        self.translations_ = np.array([l for _, l in poses])
        self.loss_ = float(best.loss)
        self.trace_ = trace
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "rotations_"):
            raise NotFittedError("call fit before using this estimator")

    def poses_(self) -> list[tuple[np.ndarray, np.ndarray]]:
        self._check_fitted()
        return [(r.copy(), l.copy()) for r, l in zip(self.rotations_, self.translations_)]

    def transform(self, X, resolution: float = 0.1) -> np.ndarray:
        """Warp masks to bird's-eye view under the fitted poses.

        Returns an array of shape (n_cameras, height, width).
        """
        self._check_fitted()
        masks = check_masks(X)
        if len(masks) != self.n_cameras_:
            raise ValueError(f"expected {self.n_cameras_} masks, got {len(masks)}")
        field = self._field()
        frame = BirdsEyeFrame.for_field(field, resolution)
        out = []
        for mask, k, r, l in zip(masks, self.intrinsics_, self.rotations_, self.translations_):
            warped, _ = warp_to_birdseye(mask, k, r, l, field, frame)
            out.append(warped.values)
        return np.stack(out)

    def score(self, X, y=None) -> float:
        """Negative calibration loss of the fitted poses on ``X`` (higher is better)."""
        self._check_fitted()
        masks = check_masks(X)
        scene = self._scene(masks, self.intrinsics_)
        genome = np.concatenate([np.concatenate([r, l]) for r, l in zip(self.rotations_, self.translations_)])
        return -loss_total(genome, scene, LossWeights(self.lambda_tradeoff))
