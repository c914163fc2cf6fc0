"""Photo-style filters and Gaussian blur against direct formula oracles"""

import math

import numpy as np
import pytest

from src.imaging.filters import (
    DEFAULT_FILTERS,
    StyleFilterSet,
    StyleName,
    apply_style,
    gaussian_blur,
    gaussian_kernel,
    gray_style,
    light_style,
    luma,
    sketch_style,
)
from src.imaging.geometry import crop_face
from src.imaging.image import RgbImage


def _naive_blur(plane, sigma):
    kernel = gaussian_kernel(sigma)
    radius = len(kernel) // 2
    h, w = plane.shape
    out = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            total = 0.0
            for i in range(-radius, radius + 1):
                for j in range(-radius, radius + 1):
                    rr = min(max(r + i, 0), h - 1)
                    cc = min(max(c + j, 0), w - 1)
                    total += plane[rr, cc] * kernel[i + radius] * kernel[j + radius]
            out[r, c] = total
    return out


class TestGrayStyle:
    def test_pure_red(self):
        out = gray_style(RgbImage.filled(2, 2, (1.0, 0.0, 0.0)))
        np.testing.assert_allclose(out.pixels, 0.299, atol=1e-6)

    def test_white_stays_white(self):
        np.testing.assert_array_equal(gray_style(RgbImage.filled(2, 3, (1.0, 1.0, 1.0))).pixels, 1.0)

    def test_idempotent(self, gradient_image):
        once = gray_style(gradient_image)
        np.testing.assert_array_equal(gray_style(once).pixels, once.pixels)

    def test_luma_keeps_gray_pixels_exact(self):
        assert luma(RgbImage.filled(1, 1, (0.3, 0.3, 0.3)))[0, 0] == np.float32(0.3)


class TestLightStyle:
    def test_fixed_points(self):
        img = RgbImage(np.array([[[0.0, 1.0, 0.0]]]))
        np.testing.assert_allclose(light_style(img).pixels, [[[0.0, 1.0, 0.0]]])

    def test_quarter(self):
        out = light_style(RgbImage.filled(1, 1, (0.25, 0.25, 0.25)))
        assert out.pixels[0, 0, 0] == pytest.approx(0.25**0.55, abs=1e-6)
        assert out.pixels[0, 0, 0] == pytest.approx(0.4665, abs=1e-4)

    def test_monotone(self):
        values = np.linspace(0.0, 1.0, 11)
        img = RgbImage(np.repeat(values[None, :, None], 3, axis=2))
        out = light_style(img).pixels[0, :, 0]
        assert np.all(np.diff(out) > 0)


class TestSketchStyle:
    def test_constant_gray_dodges_to_white(self):
        out = sketch_style(RgbImage.filled(10, 10, (0.5, 0.5, 0.5)))
        assert out.pixels.min() > 0.99

    def test_channels_replicated(self, gradient_image):
        px = sketch_style(gradient_image).pixels
        np.testing.assert_array_equal(px[..., 0], px[..., 1])
        np.testing.assert_array_equal(px[..., 1], px[..., 2])

    def test_step_edge_matches_scalar_reference(self):
        plane = np.full((20, 20), 0.9)
        plane[:, 10:] = 0.1
        img = RgbImage(np.repeat(plane[..., None], 3, axis=2))
        g = img.pixels[..., 0].astype(np.float64)
        blurred = _naive_blur(1.0 - g, 0.04 * 20)
        expected = np.clip(g / (1.0 - blurred + 1e-4), 0.0, 1.0)
        out = sketch_style(img).pixels[..., 0]
        np.testing.assert_allclose(out, expected, atol=1e-5)
        # the dark response sits next to the edge
        assert out[10, 10] < out[10, 19]
        assert out[10, 0] == pytest.approx(1.0, abs=1e-3)


class TestGaussianBlur:
    def test_constant_image_unchanged(self):
        out = gaussian_blur(RgbImage.filled(8, 9, (0.2, 0.4, 0.6)), 1.3)
        np.testing.assert_allclose(out.pixels[0, 0], [0.2, 0.4, 0.6], atol=1e-6)
        np.testing.assert_allclose(out.pixels.std(axis=(0, 1)), 0.0, atol=1e-6)

    def test_impulse_gives_kernel_outer_product(self):
        pixels = np.zeros((15, 15, 3))
        pixels[7, 7] = 1.0
        out = gaussian_blur(RgbImage(pixels), 1.0).pixels[..., 0]
        kernel = gaussian_kernel(1.0)
        expected = np.zeros((15, 15))
        expected[4:11, 4:11] = np.outer(kernel, kernel)
        np.testing.assert_allclose(out, expected, atol=1e-6)
        assert out.sum() == pytest.approx(1.0, abs=1e-5)

    def test_kernel_radius(self):
        assert len(gaussian_kernel(1.0)) == 2 * math.ceil(3.0) + 1

    def test_non_positive_sigma(self, gradient_image):
        with pytest.raises(ValueError):
            gaussian_blur(gradient_image, 0.0)


class TestStyleRegistry:
    def test_default_set_has_three_styles(self):
        assert StyleFilterSet().names() == [StyleName.LIGHT, StyleName.GRAY, StyleName.SKETCH]
        assert len(DEFAULT_FILTERS) == 3

    def test_original_is_identity(self, gradient_image):
        assert apply_style(gradient_image, "original") is gradient_image

    def test_filters_keep_size(self, gradient_image):
        for name, fn in StyleFilterSet():
            out = fn(gradient_image)
            assert (out.height, out.width) == (gradient_image.height, gradient_image.width)
            assert apply_style(gradient_image, name.value).pixels.shape == out.pixels.shape

    def test_unknown_style(self, gradient_image):
        with pytest.raises(ValueError):
            apply_style(gradient_image, "sepia")


class TestFiltersCommuteWithCrop:
    @pytest.mark.parametrize("style", [gray_style, light_style])
    def test_pointwise_styles(self, style):
        ys, xs = np.mgrid[0:40, 0:40]
        smooth = RgbImage(
            np.stack([0.2 + 0.6 * xs / 39, 0.3 + 0.5 * ys / 39, 0.5 + 0.3 * np.sin(xs / 9.0)], axis=-1)
        )
        box = (8.0, 6.0, 30.0, 32.0)
        styled_then_cropped, _ = crop_face(style(smooth), box, out_size=24)
        cropped_then_styled = style(crop_face(smooth, box, out_size=24)[0])
        assert np.abs(styled_then_cropped.pixels - cropped_then_styled.pixels).max() <= 2e-2
