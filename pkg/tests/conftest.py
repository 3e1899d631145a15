"""Shared fixtures: the default synthetic rig is expensive to render, so
ground-truth masks and templates are built once per session."""

from __future__ import annotations

import numpy as np
import pytest

import stitchcal as sc
from stitchcal.simulate import default_cameras


@pytest.fixture(scope="session")
def field():
    return sc.PlayfieldModel()


@pytest.fixture(scope="session")
def markings(field):
    return sc.standard_markings(field.length_m, field.width_m)


@pytest.fixture(scope="session")
def cameras(field):
    return default_cameras(field)


@pytest.fixture(scope="session")
def gt_masks(field, markings, cameras):
    return [sc.render_mask(field, markings, cam) for cam in cameras]


@pytest.fixture(scope="session")
def eval_frame(field):
    return sc.BirdsEyeFrame.for_field(field, 0.1)


@pytest.fixture(scope="session")
def eval_template(markings):
    return sc.render_template(markings, 0.1)


@pytest.fixture(scope="session")
def small_rig(field, markings):
    """A quarter-resolution rig for fast end-to-end tests."""
    cams = default_cameras(field, image_width=480, image_height=270, focal_px=312.5)
    masks = [sc.render_mask(field, markings, cam) for cam in cams]
    return cams, masks


def random_rotation_vector(rng: np.random.Generator, max_angle: float = np.pi) -> np.ndarray:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return axis * rng.uniform(0.0, max_angle)
