"""Face cropping and crop-window augmentation with consistent landmark transforms."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.imaging.image import RgbImage
from src.numerics.resize import cubic_weight_matrix, sample_array

Box = Tuple[float, float, float, float]


@dataclass(frozen=True)
class CropTransform:
    """
    Affine map from original-image coordinates to crop coordinates.

    Coordinates are pixel-index based (pixel i has center i):
    u = (x - x0 + 0.5) * sx - 0.5
    """

    x0: float
    y0: float
    sx: float
    sy: float

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        out = np.empty_like(points)
        out[..., 0] = (points[..., 0] - self.x0 + 0.5) * self.sx - 0.5
        out[..., 1] = (points[..., 1] - self.y0 + 0.5) * self.sy - 0.5
        return out

    def invert(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        out = np.empty_like(points)
        out[..., 0] = (points[..., 0] + 0.5) / self.sx + self.x0 - 0.5
        out[..., 1] = (points[..., 1] + 0.5) / self.sy + self.y0 - 0.5
        return out


def expand_box(box: Box, ratio: float) -> Box:
    """Grow a box by ratio * width (height) on each horizontal (vertical) side."""
    x1, y1, x2, y2 = box
    if not (x2 > x1 and y2 > y1):
        raise ValueError(f"Degenerate face box {box}")
    dx, dy = ratio * (x2 - x1), ratio * (y2 - y1)
    return (x1 - dx, y1 - dy, x2 + dx, y2 + dy)


def clip_box(box: Box, width: int, height: int) -> Box:
    x1, y1, x2, y2 = box
    clipped = (max(0.0, x1), max(0.0, y1), min(float(width), x2), min(float(height), y2))
    if not (clipped[2] > clipped[0] and clipped[3] > clipped[1]):
        raise ValueError(f"Face box {box} does not overlap the {width}x{height} image")
    return clipped


def crop_face(
    img: RgbImage, box: Box, expand_ratio: float = 0.2, out_size: int = 64
) -> Tuple[RgbImage, CropTransform]:
    """
    Expand, clip and bicubic-resample a face box to out_size x out_size.

    Returns:
        The crop and the transform taking original coordinates to crop coordinates
    """
    x1, y1, x2, y2 = clip_box(expand_box(box, expand_ratio), img.width, img.height)
    transform = CropTransform(x0=x1, y0=y1, sx=out_size / (x2 - x1), sy=out_size / (y2 - y1))
    u = np.arange(out_size, dtype=np.float64)
    src_x = (u + 0.5) / transform.sx + x1 - 0.5
    src_y = (u + 0.5) / transform.sy + y1 - 0.5
    wy = cubic_weight_matrix(src_y, img.height)
    wx = cubic_weight_matrix(src_x, img.width)
    channels = img.pixels.transpose(2, 0, 1)
    crop = sample_array(channels, wy, wx).transpose(1, 2, 0)
    return RgbImage(crop), transform


def translate_image(img: RgbImage, dx: int, dy: int) -> RgbImage:
    """out[y, x] = in[y + dy, x + dx] with edge clamping; content moves by (-dx, -dy)."""
    rows = np.clip(np.arange(img.height) + dy, 0, img.height - 1)
    cols = np.clip(np.arange(img.width) + dx, 0, img.width - 1)
    return RgbImage(img.pixels[rows][:, cols])


@dataclass(frozen=True)
class AugmentResult:
    image: RgbImage
    landmarks: np.ndarray
    offset: Tuple[int, int]


def sample_crop_offset(
    landmarks: np.ndarray, size: Tuple[int, int], margin: int, rng: np.random.Generator
) -> Tuple[int, int]:
    """
    Draw an integer window shift within [-margin, margin] on each axis that keeps
    in-bounds landmarks inside the image.
    """
    width, height = size
    points = np.asarray(landmarks, dtype=np.float64).reshape(-1, 2)
    inside = (
        (points[:, 0] >= 0) & (points[:, 0] <= width - 1) & (points[:, 1] >= 0) & (points[:, 1] <= height - 1)
    )
    points = points[inside]
    offsets = []
    for axis, extent in ((0, width), (1, height)):
        lo, hi = -margin, margin
        if len(points):
            lo = max(lo, int(np.ceil(points[:, axis].max() - (extent - 1))))
            hi = min(hi, int(np.floor(points[:, axis].min())))
        offsets.append(int(rng.integers(lo, hi + 1)) if hi > lo else max(lo, min(0, hi)))
    return offsets[0], offsets[1]


def random_crop_augment(
    img: RgbImage, landmarks: np.ndarray, rng: np.random.Generator, margin: int = 3
) -> AugmentResult:
    """Randomly translate the crop window; landmarks move with the content."""
    dx, dy = sample_crop_offset(landmarks, (img.width, img.height), margin, rng)
    shifted = np.asarray(landmarks, dtype=np.float64) - np.array([dx, dy], dtype=np.float64)
    return AugmentResult(image=translate_image(img, dx, dy), landmarks=shifted, offset=(dx, dy))
