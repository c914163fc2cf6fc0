"""
Two-stream, three-stage cascaded belief-map landmark detector.

Both streams (original face I_o, style-aggregated face I_s) have their own
feature extractor that downsamples by 8. Stage 1 maps each stream's features
to belief maps H_o and H_s; stage 2 refines from concat(F_o, F_s, H_o, H_s);
stage 3 from concat(F_o, F_s, H_2). Every stage outputs K + 1 channels
(K landmarks + background).

Heatmap cell j sits at crop coordinate 8j: a crop coordinate x maps to heatmap
coordinate x / 8, and decoding samples crop pixel u at u / 8.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.models.configs import DetectorConfig, StreamMode
from src.numerics import functional as F
from src.numerics.layers import Conv2d, Module
from src.numerics.resize import cubic_weight_matrix, sample_array
from src.numerics.tensor import ShapeError, Tensor

logger = logging.getLogger(__name__)

STRIDE = 8
INPUT_OFFSET = 0.5


class FeatureExtractor(Module):
    """Four conv blocks with 2x2 max pooling after the first three: output at 1/8 resolution."""

    def __init__(self, channels: Sequence[int], rng: np.random.Generator):
        widths = [3] + list(channels)
        self.blocks = [Conv2d(widths[i], widths[i + 1], rng) for i in range(len(channels))]

    def forward(self, x: Tensor) -> Tensor:
        for i, block in enumerate(self.blocks):
            x = F.relu(block(x))
            if i < len(self.blocks) - 1:
                x = F.max_pool2(x)
        return x


class StageHead(Module):
    """Fully convolutional stage: two 3x3 conv + relu, then a 1x1 projection to K + 1 maps."""

    def __init__(self, in_channels: int, hidden: int, out_channels: int, init_std: float, rng: np.random.Generator):
        self.conv1 = Conv2d(in_channels, hidden, rng)
        self.conv2 = Conv2d(hidden, hidden, rng)
        self.project = Conv2d(hidden, out_channels, rng, kernel_size=1, init_std=init_std)

    def forward(self, x: Tensor) -> Tensor:
        return self.project(F.relu(self.conv2(F.relu(self.conv1(x)))))


@dataclass
class BeliefMaps:
    h_o: Tensor
    h_s: Tensor
    h_2: Tensor
    h_3: Tensor

    def __iter__(self):
        return iter((self.h_o, self.h_s, self.h_2, self.h_3))


class DetectorModel(Module):
    def __init__(self, config: DetectorConfig, rng: np.random.Generator):
        self.config = config
        k1 = config.num_landmarks + 1
        c = config.feature_channels
        hidden, std = config.head_channels, config.head_init_std
        self.extractor_o = FeatureExtractor(config.extractor_channels, rng)
        self.extractor_s = FeatureExtractor(config.extractor_channels, rng)
        self.stage1_o = StageHead(c, hidden, k1, std, rng)
        self.stage1_s = StageHead(c, hidden, k1, std, rng)
        self.stage2 = StageHead(2 * c + 2 * k1, hidden, k1, std, rng)
        self.stage3 = StageHead(2 * c + k1, hidden, k1, std, rng)

    @property
    def stream_mode(self) -> StreamMode:
        return StreamMode(self.config.stream_mode)

    def forward(self, image_o: Optional[Tensor], image_s: Optional[Tensor] = None) -> BeliefMaps:
        return forward(self, image_o, image_s)


def _check_input(x: Tensor, size: int, name: str) -> None:
    if x.ndim != 4 or x.shape[1] != 3 or x.shape[2:] != (size, size):
        raise ShapeError(f"Detector {name} must be [N, 3, {size}, {size}], got {x.shape}")


def forward(model: DetectorModel, image_o: Optional[Tensor], image_s: Optional[Tensor] = None) -> BeliefMaps:
    """
    Run the cascade on [0, 1] images.

    In original-only mode the aggregated stream sees I_o; in aggregated-only mode
    the original stream sees I_s.
    """
    mode = model.stream_mode
    if mode is StreamMode.ORIGINAL_ONLY:
        image_s = image_o
    elif mode is StreamMode.AGGREGATED_ONLY:
        image_o = image_s
    if image_o is None or image_s is None:
        raise ValueError(f"Stream mode {mode.value} needs both input images")
    size = model.config.input_size
    _check_input(image_o, size, "I_o")
    _check_input(image_s, size, "I_s")
    if image_o.shape != image_s.shape:
        raise ShapeError(f"Stream inputs differ in shape: {image_o.shape} vs {image_s.shape}")

    f_o = model.extractor_o(image_o - INPUT_OFFSET)
    f_s = model.extractor_s(image_s - INPUT_OFFSET)
    h_o = model.stage1_o(f_o)
    h_s = model.stage1_s(f_s)
    h_2 = model.stage2(F.concat_channels(f_o, f_s, h_o, h_s))
    h_3 = model.stage3(F.concat_channels(f_o, f_s, h_2))
    return BeliefMaps(h_o=h_o, h_s=h_s, h_2=h_2, h_3=h_3)


def detector_loss(h_o: Tensor, h_s: Tensor, h_2: Tensor, h_3: Tensor, target) -> Tensor:
    """Sum over the four stacks of the squared Frobenius distance to H*, averaged over the batch."""
    return (
        F.frobenius_sq_loss(h_o, target)
        + F.frobenius_sq_loss(h_s, target)
        + F.frobenius_sq_loss(h_2, target)
        + F.frobenius_sq_loss(h_3, target)
    )


def heatmap_coordinate(x):
    return np.asarray(x, dtype=np.float64) / STRIDE


def make_gt_beliefmaps(
    landmarks: np.ndarray,
    input_size: int,
    sigma: float,
    visibility: Optional[Sequence[bool]] = None,
) -> np.ndarray:
    """
    Ideal belief maps H* for one crop, shape (K + 1, input_size / 8, input_size / 8).

    Channel k is a unit-peak Gaussian at the landmark; invisible landmarks get an
    all-zero channel. The last channel is 1 - max_k G_k.
    """
    if input_size % STRIDE:
        raise ValueError(f"input_size must be divisible by {STRIDE}, got {input_size}")
    points = np.asarray(landmarks, dtype=np.float64).reshape(-1, 2)
    k = len(points)
    visible = np.ones(k, dtype=bool) if visibility is None else np.asarray(visibility, dtype=bool)
    clamped = np.clip(points, 0.0, input_size - 1.0)
    moved = np.any(clamped != points, axis=1) & visible
    if moved.any():
        logger.warning(f"Clamped out-of-bounds landmarks {np.flatnonzero(moved).tolist()} to the crop border")

    size = input_size // STRIDE
    grid = np.arange(size, dtype=np.float64)
    maps = np.zeros((k + 1, size, size), dtype=np.float64)
    centers = heatmap_coordinate(clamped)
    for i in range(k):
        if not visible[i]:
            continue
        gx = np.exp(-((grid - centers[i, 0]) ** 2) / (2.0 * sigma * sigma))
        gy = np.exp(-((grid - centers[i, 1]) ** 2) / (2.0 * sigma * sigma))
        maps[i] = np.outer(gy, gx)
    maps[k] = 1.0 - maps[:k].max(axis=0)
    return maps


# Cells added past each border before upsampling; covers the Catmull-Rom taps
BORDER_CELLS = 2
TIE_ATOL = 1e-9


def _extrapolate(inner2: np.ndarray, inner1: np.ndarray, edge: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """
    Continue a channel past its edge by fitting log-values of the last three cells
    with a quadratic. Gaussian peaks are reproduced exactly. Where the fit is not
    concave or a value is not positive, the edge value is repeated instead.
    """
    tiny = np.finfo(np.float64).tiny
    l2, l1, l0 = (np.log(np.maximum(v, tiny)) for v in (inner2, inner1, edge))
    curvature = (l2 - 2.0 * l1 + l0) / 2.0
    slope = (l0 - l1) + curvature
    valid = (curvature < 0) & (inner2 > 0) & (inner1 > 0) & (edge > 0)
    t = steps.reshape((1,) * edge.ndim + (-1,))
    log_values = l0[..., None] + slope[..., None] * t + curvature[..., None] * t * t
    ceiling = np.maximum(edge, 1.0)[..., None]
    fitted = np.exp(np.minimum(log_values, np.log(ceiling)))
    return np.where(valid[..., None], fitted, edge[..., None])


def _extend_axis(maps: np.ndarray, pad: int, axis: int) -> np.ndarray:
    moved = np.moveaxis(maps, axis, -1)
    steps = np.arange(1, pad + 1, dtype=np.float64)
    if moved.shape[-1] >= 3:
        high = _extrapolate(moved[..., -3], moved[..., -2], moved[..., -1], steps)
        low = _extrapolate(moved[..., 2], moved[..., 1], moved[..., 0], steps)[..., ::-1]
    else:
        high = np.repeat(moved[..., -1:], pad, axis=-1)
        low = np.repeat(moved[..., :1], pad, axis=-1)
    return np.moveaxis(np.concatenate([low, moved, high], axis=-1), -1, axis)


def upsample_beliefmaps(maps: np.ndarray, input_size: int) -> np.ndarray:
    """Bicubic upsampling of (C, h, w) maps to (C, input_size, input_size); crop pixel u samples cell u * h / input_size."""
    extended = _extend_axis(_extend_axis(maps.astype(np.float64), BORDER_CELLS, -2), BORDER_CELLS, -1)
    h, w = maps.shape[-2:]
    u = np.arange(input_size, dtype=np.float64)
    wy = cubic_weight_matrix(u * h / input_size + BORDER_CELLS, h + 2 * BORDER_CELLS)
    wx = cubic_weight_matrix(u * w / input_size + BORDER_CELLS, w + 2 * BORDER_CELLS)
    return sample_array(extended, wy, wx)


def decode_landmarks(h_3, input_size: int) -> np.ndarray:
    """
    Landmark crop coordinates from a (K + 1, h, w) stack: bicubic upsampling to
    input_size, then the first row-major argmax per landmark channel.
    """
    maps = h_3.data if isinstance(h_3, Tensor) else np.asarray(h_3)
    if maps.ndim != 3:
        raise ShapeError(f"decode_landmarks expects a (K + 1, h, w) stack, got {maps.shape}")
    upsampled = upsample_beliefmaps(maps[:-1], input_size)
    flat = upsampled.reshape(upsampled.shape[0], -1)
    # values within TIE_ATOL of the maximum count as ties
    best = np.argmax(flat >= flat.max(axis=1, keepdims=True) - TIE_ATOL, axis=1)
    rows, cols = np.divmod(best, input_size)
    return np.stack([cols, rows], axis=1).astype(np.float64)
