"""Geometry suite: rotation conversions, projection, and ray casting.

Random-pose round trips are checked against scipy's rotation module as an
independent oracle.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

import stitchcal.geometry as g
from stitchcal.errors import BehindCamera, NotARotation

from conftest import random_rotation_vector


class TestRodriguesToMatrix:
    def test_zero_rotation_is_identity(self):
        np.testing.assert_array_equal(g.rodrigues_to_matrix([0, 0, 0]), np.eye(3))

    def test_quarter_turn_about_z(self):
        expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        np.testing.assert_allclose(g.rodrigues_to_matrix([0, 0, np.pi / 2]), expected, atol=1e-15)

    def test_half_turn_about_x(self):
        np.testing.assert_allclose(
            g.rodrigues_to_matrix([np.pi, 0, 0]), np.diag([1.0, -1.0, -1.0]), atol=1e-15
        )

    def test_orthonormality_over_random_rotations(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            r = random_rotation_vector(rng)
            m = g.rodrigues_to_matrix(r)
            np.testing.assert_allclose(m @ m.T, np.eye(3), atol=1e-12)
            assert abs(np.linalg.det(m) - 1.0) < 1e-12

    def test_small_angle_branch_matches_scipy(self):
        for scale in (1e-9, 1e-10, 1e-12):
            r = np.array([1.0, -2.0, 0.5]) * scale
            np.testing.assert_allclose(
                g.rodrigues_to_matrix(r), Rotation.from_rotvec(r).as_matrix(), atol=1e-15
            )

    def test_matches_scipy_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            r = random_rotation_vector(rng)
            np.testing.assert_allclose(
                g.rodrigues_to_matrix(r), Rotation.from_rotvec(r).as_matrix(), atol=1e-12
            )


class TestMatrixToRodrigues:
    def test_identity(self):
        np.testing.assert_array_equal(g.matrix_to_rodrigues(np.eye(3)), np.zeros(3))

    def test_half_turn(self):
        np.testing.assert_allclose(
            g.matrix_to_rodrigues(np.diag([1.0, -1.0, -1.0])), [np.pi, 0, 0], atol=1e-12
        )

    def test_round_trip_example(self):
        r = np.array([0.1, -0.2, 0.3])
        np.testing.assert_allclose(g.matrix_to_rodrigues(g.rodrigues_to_matrix(r)), r, atol=1e-9)

    def test_round_trip_random(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            r = random_rotation_vector(rng)
            back = g.matrix_to_rodrigues(g.rodrigues_to_matrix(r))
            np.testing.assert_allclose(back, r, atol=1e-9)

    def test_near_pi_angles(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            r = axis * (np.pi - 10 ** rng.uniform(-9, -3))
            m = g.rodrigues_to_matrix(r)
            np.testing.assert_allclose(g.rodrigues_to_matrix(g.matrix_to_rodrigues(m)), m, atol=1e-9)

    def test_rejects_non_rotation(self):
        with pytest.raises(NotARotation):
            g.matrix_to_rodrigues(np.diag([1.0, 1.0, 2.0]))
        with pytest.raises(NotARotation):
            g.matrix_to_rodrigues(np.diag([1.0, 1.0, -1.0]))  # det = -1

    def test_angle_in_zero_pi(self):
        rng = np.random.default_rng(19)
        for _ in range(200):
            r = random_rotation_vector(rng, max_angle=2 * np.pi)
            angle = np.linalg.norm(g.matrix_to_rodrigues(g.rodrigues_to_matrix(r)))
            assert 0.0 <= angle <= np.pi + 1e-12


class TestCanonicalize:
    def test_small_vector_unchanged(self):
        r = np.array([0.1, 0.2, 0.3])
        np.testing.assert_array_equal(g.canonicalize_rotation(r), r)

    def test_wraps_angle(self):
        r = np.array([0.0, 0.0, 2 * np.pi + 0.5])
        out = g.canonicalize_rotation(r)
        np.testing.assert_allclose(out, [0, 0, 0.5], atol=1e-12)
        assert np.linalg.norm(g.canonicalize_rotation(np.array([7.0, 0.0, 0.0]))) < 2 * np.pi


class TestProjectionMatrix:
    def test_identity_pose(self):
        p = g.projection_matrix(np.eye(3), [0, 0, 0], [0, 0, 0])
        np.testing.assert_array_equal(p, np.hstack([np.eye(3), np.zeros((3, 1))]))

    def test_pure_translation(self):
        p = g.projection_matrix(np.eye(3), [0, 0, 0], [1, 2, 3])
        np.testing.assert_array_equal(p[:, 3], [1, 2, 3])
        np.testing.assert_array_equal(p[:, :3], np.eye(3))

    def test_quarter_turn_rows(self):
        p = g.projection_matrix(np.eye(3), [0, 0, np.pi / 2], [0, 0, 0])
        np.testing.assert_allclose(p[:, :3], [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)

    def test_linear_in_translation(self):
        rng = np.random.default_rng(23)
        k = g.intrinsics_matrix(800.0, 820.0, 640.0, 360.0)
        for _ in range(50):
            r = random_rotation_vector(rng)
            l = rng.normal(size=3)
            x = np.append(rng.normal(size=3) * 10, 1.0)
            delta = g.projection_matrix(k, r, l) @ x - g.projection_matrix(k, r, np.zeros(3)) @ x
            # exact up to cancellation ulps of the K R X terms
            np.testing.assert_allclose(delta, k @ l, atol=1e-9)


class TestProjectPoint:
    def test_optical_axis(self):
        p = g.projection_matrix(np.eye(3), [0, 0, 0], [0, 0, 0])
        assert g.project_point(p, [0, 0, 1]) == (0.0, 0.0)

    def test_perspective_divide(self):
        p = g.projection_matrix(np.eye(3), [0, 0, 0], [0, 0, 0])
        assert g.project_point(p, [2, 4, 2]) == (1.0, 2.0)

    def test_behind_camera(self):
        p = g.projection_matrix(np.eye(3), [0, 0, 0], [0, 0, 0])
        with pytest.raises(BehindCamera):
            g.project_point(p, [0, 0, -1])


class TestCastRay:
    def test_identity_center_pixel(self):
        ray = g.cast_ray(np.eye(3), [0, 0, 0], [0, 0, 0], (0, 0))
        np.testing.assert_array_equal(ray.origin, [0, 0, 0])
        np.testing.assert_allclose(ray.direction, [0, 0, 1], atol=1e-15)

    def test_origin_is_camera_center(self):
        ray = g.cast_ray(np.eye(3), [0, 0, 0], [0, 0, -10], (0, 0))
        np.testing.assert_allclose(ray.origin, [0, 0, 10], atol=1e-15)
        np.testing.assert_allclose(ray.direction, [0, 0, 1], atol=1e-15)

    def test_unit_direction(self):
        rng = np.random.default_rng(29)
        k = g.intrinsics_matrix(900.0, 950.0, 500.0, 400.0)
        for _ in range(100):
            ray = g.cast_ray(k, random_rotation_vector(rng), rng.normal(size=3), rng.uniform(0, 1000, 2))
            assert abs(np.linalg.norm(ray.direction) - 1.0) < 1e-12

    def test_round_trip_1000_random_poses(self):
        rng = np.random.default_rng(31)
        for _ in range(1000):
            k = g.intrinsics_matrix(
                rng.uniform(500, 2000), rng.uniform(500, 2000), rng.uniform(300, 1000), rng.uniform(200, 800)
            )
            r = random_rotation_vector(rng)
            l = rng.normal(size=3) * 10
            pixel = (rng.uniform(0, 2 * k[0, 2]), rng.uniform(0, 2 * k[1, 2]))
            ray = g.cast_ray(k, r, l, pixel)
            p = g.projection_matrix(k, r, l)
            for t in (0.5, 1.0, 8.0):
                u, v = g.project_point(p, ray.point_at(t))
                assert abs(u - pixel[0]) < 1e-6 and abs(v - pixel[1]) < 1e-6


class TestIntrinsics:
    def test_rejects_bad_focals(self):
        with pytest.raises(ValueError):
            g.intrinsics_matrix(-1.0, 1.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            g.check_intrinsics(np.array([[1, 0.1, 0], [0, 1, 0], [0, 0, 1.0]]))

    def test_camera_center(self):
        rng = np.random.default_rng(37)
        r = random_rotation_vector(rng)
        center = rng.normal(size=3)
        rot = g.rodrigues_to_matrix(r)
        np.testing.assert_allclose(g.camera_center(r, -rot @ center), center, atol=1e-12)
