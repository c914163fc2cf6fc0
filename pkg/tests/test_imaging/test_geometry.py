"""Face crops, their coordinate transforms, and crop-window augmentation"""

import numpy as np
import pytest

from src.imaging.geometry import (
    CropTransform,
    clip_box,
    crop_face,
    expand_box,
    random_crop_augment,
    sample_crop_offset,
    translate_image,
)
from src.imaging.image import RgbImage
from src.numerics.resize import resize_array


class TestBoxes:
    def test_expand_by_ratio(self):
        assert expand_box((10, 10, 50, 50), 0.2) == pytest.approx((2, 2, 58, 58))

    def test_clip_to_image(self):
        assert clip_box((-5.0, 2.0, 70.0, 58.0), 64, 64) == (0.0, 2.0, 64.0, 58.0)

    def test_disjoint_box_rejected(self):
        with pytest.raises(ValueError):
            clip_box((100.0, 100.0, 120.0, 120.0), 64, 64)

    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError):
            expand_box((5.0, 5.0, 5.0, 9.0), 0.2)


class TestCropFace:
    def test_full_image_box_is_plain_resize(self, gradient_image):
        crop, transform = crop_face(gradient_image, (0, 0, 16, 12), expand_ratio=0.0, out_size=8)
        expected = resize_array(gradient_image.pixels.transpose(2, 0, 1).astype(np.float64), 8, 8)
        np.testing.assert_allclose(crop.pixels, np.clip(expected.transpose(1, 2, 0), 0, 1), atol=1e-6)
        assert transform.sx == pytest.approx(0.5)
        assert transform.sy == pytest.approx(8 / 12)

    def test_output_is_square(self, gradient_image):
        crop, _ = crop_face(gradient_image, (2, 2, 10, 9), out_size=20)
        assert (crop.height, crop.width) == (20, 20)

    def test_round_trip_landmarks(self, rng):
        img = RgbImage(rng.uniform(size=(40, 50, 3)))
        _, transform = crop_face(img, (10, 8, 30, 35), expand_ratio=0.2, out_size=64)
        points = rng.uniform(5, 35, size=(7, 2))
        np.testing.assert_allclose(transform.invert(transform.apply(points)), points, atol=1e-6)

    def test_landmark_tracks_image_content(self):
        pixels = np.zeros((40, 40, 3))
        pixels[20, 24] = 1.0
        crop, transform = crop_face(RgbImage(pixels), (8, 8, 32, 32), expand_ratio=0.0, out_size=48)
        col, row = transform.apply(np.array([24.0, 20.0]))
        peak = np.unravel_index(crop.pixels[..., 0].argmax(), (48, 48))
        assert abs(peak[0] - row) <= 1
        assert abs(peak[1] - col) <= 1


class TestTranslate:
    def test_content_moves_opposite_to_offset(self, gradient_image):
        out = translate_image(gradient_image, 2, 1)
        np.testing.assert_array_equal(out.pixels[0, 0], gradient_image.pixels[1, 2])
        np.testing.assert_array_equal(out.pixels[-1, -1], gradient_image.pixels[-1, -1])


class TestRandomCropAugment:
    def test_zero_margin_is_identity(self, gradient_image, rng):
        landmarks = np.array([[3.0, 4.0], [10.0, 8.0]])
        result = random_crop_augment(gradient_image, landmarks, rng, margin=0)
        assert result.offset == (0, 0)
        np.testing.assert_array_equal(result.image.pixels, gradient_image.pixels)
        np.testing.assert_array_equal(result.landmarks, landmarks)

    def test_seeded_runs_are_identical(self, gradient_image):
        landmarks = np.array([[5.0, 5.0], [9.0, 7.0]])
        a = random_crop_augment(gradient_image, landmarks, np.random.default_rng(9))
        b = random_crop_augment(gradient_image, landmarks, np.random.default_rng(9))
        assert a.offset == b.offset
        np.testing.assert_array_equal(a.image.pixels, b.image.pixels)

    def test_landmarks_stay_inside(self, rng):
        for _ in range(200):
            landmarks = rng.uniform(0, 31, size=(5, 2))
            dx, dy = sample_crop_offset(landmarks, (32, 32), 3, rng)
            assert -3 <= dx <= 3 and -3 <= dy <= 3
            moved = landmarks - np.array([dx, dy])
            assert moved.min() >= 0.0
            assert moved.max() <= 31.0

    def test_out_of_bounds_landmarks_do_not_constrain(self, rng):
        landmarks = np.array([[-4.0, 10.0], [12.0, 12.0]])
        for _ in range(50):
            dx, dy = sample_crop_offset(landmarks, (32, 32), 2, rng)
            assert -2 <= dx <= 2 and -2 <= dy <= 2


class TestCropTransform:
    def test_apply_formula(self):
        t = CropTransform(x0=2.0, y0=4.0, sx=2.0, sy=0.5)
        np.testing.assert_allclose(t.apply(np.array([[3.0, 6.0]])), [[2.5, 0.75]])
