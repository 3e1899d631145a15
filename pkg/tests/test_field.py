"""Field suite: crowned surface, markings, template rendering, blur."""

from __future__ import annotations

from fractions import Fraction
from math import exp

import numpy as np
import pytest

import stitchcal as sc
from stitchcal.errors import DimensionsOutOfRange, OutOfField
from stitchcal.field import Arc, MarkingSet, Rect, Segment, Spot


class TestHeightAt:
    def test_corners_are_exactly_zero(self, field):
        for x in (0.0, field.length_m):
            for y in (0.0, field.width_m):
                assert field.height_at(x, y) == 0.0

    def test_ridge_points_at_crown_height(self, field):
        assert field.height_at(field.ridge_x1_m, field.width_m / 2) == pytest.approx(0.30, abs=1e-15)
        assert field.height_at(field.ridge_x2_m, field.width_m / 2) == pytest.approx(0.30, abs=1e-15)

    def test_hand_computed_interior_point(self):
        # four plane heights at (15, 17): 0.15, 0.45, 0.15, 0.90
        f = sc.PlayfieldModel(105, 68, 0.3, 30, 75)
        assert f.height_at(15, 17) == pytest.approx(0.15, abs=1e-12)

    def test_long_edges_are_flat(self, field):
        for x in np.linspace(0, field.length_m, 23):
            assert field.height_at(x, 0.0) == 0.0
            assert field.height_at(x, field.width_m) == 0.0

    def test_out_of_field(self, field):
        with pytest.raises(OutOfField):
            field.height_at(-0.1, 10.0)
        with pytest.raises(OutOfField):
            field.height_at(10.0, field.width_m + 0.1)

    def test_never_exceeds_crown(self, field):
        rng = np.random.default_rng(5)
        xs = rng.uniform(0, field.length_m, 5000)
        ys = rng.uniform(0, field.width_m, 5000)
        z = field.surface_height(xs, ys)
        assert np.all(z <= field.ridge_height_m + 1e-12)
        assert np.all(z >= 0.0)

    def test_concavity_random_chords(self, field):
        rng = np.random.default_rng(9)
        a = np.column_stack(
            [rng.uniform(0, field.length_m, 10000), rng.uniform(0, field.width_m, 10000)]
        )
        b = np.column_stack(
            [rng.uniform(0, field.length_m, 10000), rng.uniform(0, field.width_m, 10000)]
        )
        mid = 0.5 * (a + b)
        za = field.surface_height(a[:, 0], a[:, 1])
        zb = field.surface_height(b[:, 0], b[:, 1])
        zm = field.surface_height(mid[:, 0], mid[:, 1])
        assert np.all(zm >= 0.5 * (za + zb) - 1e-12)

    def test_plane_coplanarity_exact(self):
        # Each side plane must contain two corners and both ridge points;
        # verified with exact rational arithmetic on random dimensions.
        rng = np.random.default_rng(21)
        for _ in range(100):
            length = Fraction(rng.integers(900, 1200).item(), 10)
            width = Fraction(rng.integers(450, 900).item(), 10)
            h = Fraction(rng.integers(1, 60).item(), 100)
            x1 = Fraction(rng.integers(1, 45).item(), 100) * length
            x2 = Fraction(rng.integers(55, 99).item(), 100) * length
            p = (x1, width / 2, h)
            p2 = (x2, width / 2, h)
            for corner_a, corner_b in (
                ((Fraction(0), Fraction(0), Fraction(0)), (length, Fraction(0), Fraction(0))),
                ((Fraction(0), width, Fraction(0)), (length, width, Fraction(0))),
            ):
                # Volume of the tetrahedron spanned by the four points must vanish.
                v1 = tuple(corner_b[i] - corner_a[i] for i in range(3))
                v2 = tuple(p[i] - corner_a[i] for i in range(3))
                v3 = tuple(p2[i] - corner_a[i] for i in range(3))
                det = (
                    v1[0] * (v2[1] * v3[2] - v2[2] * v3[1])
                    - v1[1] * (v2[0] * v3[2] - v2[2] * v3[0])
                    + v1[2] * (v2[0] * v3[1] - v2[1] * v3[0])
                )
                assert det == 0

    def test_invalid_models_rejected(self):
        with pytest.raises(ValueError):
            sc.PlayfieldModel(ridge_x1_m=80.0, ridge_x2_m=30.0)
        with pytest.raises(ValueError):
            sc.PlayfieldModel(ridge_height_m=-0.1)

    def test_flattened(self, field):
        flat = field.flattened()
        assert flat.ridge_height_m == 0.0
        assert flat.height_at(30.0, 34.0) == 0.0


class TestStandardMarkings:
    def test_default_pitch_has_20_primitives(self, markings):
        assert len(markings.primitives) == 20

    def test_halfway_line_position(self, markings):
        halfway = [
            p for p in markings.primitives
            if isinstance(p, Segment) and p.x1 == p.x2 == 52.5
        ]
        assert len(halfway) == 1
        assert (halfway[0].y1, halfway[0].y2) == (0.0, 68.0)

    def test_center_circle_at_field_center(self):
        marks = sc.standard_markings(100, 64)
        circles = [p for p in marks.primitives if isinstance(p, Arc) and p.sweep >= 2 * np.pi]
        assert len(circles) == 1
        assert (circles[0].cx, circles[0].cy) == (50.0, 32.0)
        assert circles[0].radius == 9.15

    def test_dimensions_out_of_range(self):
        with pytest.raises(DimensionsOutOfRange):
            sc.standard_markings(80, 68)
        with pytest.raises(DimensionsOutOfRange):
            sc.standard_markings(105, 40)

    def test_primitives_inside_field(self, markings):
        for prim in markings.primitives:
            x0, y0, x1, y1 = prim.bounds()
            assert x0 >= -0.5 and y0 >= -0.5
            assert x1 <= markings.length_m + 0.5 and y1 <= markings.width_m + 0.5


class TestRenderTemplate:
    def test_default_dimensions_at_decimeter_resolution(self, eval_template):
        assert (eval_template.width, eval_template.height) == (1050, 680)

    def test_empty_marking_set(self):
        img = sc.render_template(MarkingSet(105.0, 68.0, ()), 0.1)
        assert img.values.sum() == 0.0

    def test_single_segment_band(self):
        marks = MarkingSet(105.0, 68.0, (Segment(1.0, 3.0, 9.0, 3.0, width=0.2),))
        img = sc.render_template(marks, 0.1)
        rows = set(np.nonzero(img.values)[0].tolist())
        assert rows == {29, 30}
        area = img.values.sum() * 0.1 * 0.1
        expected = 8.0 * 0.2 + np.pi * 0.1**2  # stadium: band plus end caps
        assert area == pytest.approx(expected, rel=0.03)

    def test_deterministic(self, markings):
        a = sc.render_template(markings, 0.1)
        b = sc.render_template(markings, 0.1)
        assert np.array_equal(a.values, b.values)

    def test_binary_output(self, eval_template):
        assert set(np.unique(eval_template.values)) <= {0.0, 1.0}

    def test_rect_outline_is_hollow(self):
        marks = MarkingSet(105.0, 68.0, (Rect(10.0, 10.0, 30.0, 30.0, width=0.2),))
        img = sc.render_template(marks, 0.1)
        assert img.values[200, 200] == 0.0  # interior of the rectangle
        assert img.values[100, 200] == 1.0  # on the top edge

    def test_spot_is_filled(self):
        marks = MarkingSet(105.0, 68.0, (Spot(20.0, 20.0, radius=0.5),))
        img = sc.render_template(marks, 0.1)
        assert img.values[200, 200] == 1.0
        area = img.values.sum() * 0.01
        assert area == pytest.approx(np.pi * 0.25, rel=0.05)


class TestBlurredTemplate:
    def test_empty_radius_list_is_identity(self, eval_template):
        out = sc.blurred_template(eval_template, sc.BlurSpec(()))
        assert np.array_equal(out.values, eval_template.values)

    def test_all_zero_stays_zero(self):
        img = sc.GrayImage(np.zeros((32, 32)))
        out = sc.blurred_template(img, sc.BlurSpec((2.0,)))
        assert out.values.sum() == 0.0

    def test_gaussian_falloff_of_isolated_pixel(self):
        values = np.zeros((41, 41))
        values[20, 20] = 1.0
        out = sc.blurred_template(sc.GrayImage(values), sc.BlurSpec((2.0,)))
        # One layer renormalized to peak 1; two pixels out the ratio is the
        # kernel ratio exp(-d^2 / (2 sigma^2)) = exp(-0.5).
        assert out.values[20, 20] == pytest.approx(1.0, abs=1e-12)
        assert out.values[20, 22] == pytest.approx(exp(-0.5), abs=1e-6)

    def test_pointwise_at_least_original(self, eval_template):
        out = sc.blurred_template(eval_template, sc.BlurSpec((2.0, 4.0)))
        assert np.all(out.values >= eval_template.values - 1e-15)
        assert np.all(out.values <= 1.0)

    def test_radii_validation(self):
        with pytest.raises(ValueError):
            sc.BlurSpec((0.0, 2.0))
        with pytest.raises(ValueError):
            sc.BlurSpec((2.0, 2.0))

    def test_scaled(self):
        spec = sc.BlurSpec((2.0, 4.0)).scaled(0.2)
        assert spec.radii == (0.4, 0.8)
