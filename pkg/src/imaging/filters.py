"""
Deterministic photo-style filters: Light, Gray and Sketch.

These formulas stand in for hand-made photo-editor styles whose exact recipes
are unknown; they only recolor pixels and never move content.
"""

import math
from enum import Enum
from typing import Callable, Dict

import numpy as np
from scipy.ndimage import correlate1d

from src.imaging.image import RgbImage

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
LIGHT_GAMMA = 0.55
SKETCH_SIGMA_RATIO = 0.04
SKETCH_EPS = 1e-4


class StyleName(str, Enum):
    ORIGINAL = "original"
    LIGHT = "light"
    GRAY = "gray"
    SKETCH = "sketch"


def luma(img: RgbImage) -> np.ndarray:
    """Y = 0.299R + 0.587G + 0.114B; pixels with R=G=B map to their own value exactly."""
    px = img.pixels
    y = (px.astype(np.float64) @ LUMA_WEIGHTS).astype(np.float32)
    already_gray = (px[..., 0] == px[..., 1]) & (px[..., 1] == px[..., 2])
    return np.where(already_gray, px[..., 0], y)


def _replicate(plane: np.ndarray) -> RgbImage:
    return RgbImage(np.repeat(plane[..., None], 3, axis=2))


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def blur_plane(plane: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian over the first two axes with edge clamping."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    kernel = gaussian_kernel(sigma)
    out = correlate1d(plane.astype(np.float64), kernel, axis=0, mode="nearest")
    return correlate1d(out, kernel, axis=1, mode="nearest")


def gaussian_blur(img: RgbImage, sigma: float) -> RgbImage:
    return RgbImage(blur_plane(img.pixels, sigma))


def gray_style(img: RgbImage) -> RgbImage:
    return _replicate(luma(img))


def light_style(img: RgbImage) -> RgbImage:
    return RgbImage(np.power(img.pixels.astype(np.float64), LIGHT_GAMMA))


def sketch_style(img: RgbImage) -> RgbImage:
    """Pencil sketch: color-dodge the luma by its blurred inverse."""
    g = luma(img).astype(np.float64)
    sigma = SKETCH_SIGMA_RATIO * min(img.height, img.width)
    b = blur_plane(1.0 - g, sigma)
    return _replicate(np.clip(g / (1.0 - b + SKETCH_EPS), 0.0, 1.0))


StyleFilter = Callable[[RgbImage], RgbImage]


class StyleFilterSet:
    """The three named photo-style filters applied to build styled datasets."""

    def __init__(self, filters: Dict[StyleName, StyleFilter] = None):
        self.filters = dict(filters or DEFAULT_FILTERS)

    def __iter__(self):
        return iter(self.filters.items())

    def __len__(self) -> int:
        return len(self.filters)

    def __getitem__(self, name) -> StyleFilter:
        return self.filters[StyleName(name)]

    def names(self):
        return list(self.filters)


DEFAULT_FILTERS: Dict[StyleName, StyleFilter] = {
    StyleName.LIGHT: light_style,
    StyleName.GRAY: gray_style,
    StyleName.SKETCH: sketch_style,
}


def apply_style(img: RgbImage, style) -> RgbImage:
    style = StyleName(style)
    if style is StyleName.ORIGINAL:
        return img
    return DEFAULT_FILTERS[style](img)
