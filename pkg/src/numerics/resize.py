"""
Catmull-Rom bicubic resampling (a = -0.5) with half-pixel centers and
edge-clamped taps, expressed as separable weight matrices.
"""

import numpy as np

CATMULL_ROM_A = -0.5


def cubic_kernel(t: np.ndarray, a: float = CATMULL_ROM_A) -> np.ndarray:
    t = np.abs(np.asarray(t, dtype=np.float64))
    t2, t3 = t * t, t * t * t
    near = (a + 2.0) * t3 - (a + 3.0) * t2 + 1.0
    far = a * t3 - 5.0 * a * t2 + 8.0 * a * t - 4.0 * a
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def cubic_weight_matrix(positions: np.ndarray, in_size: int) -> np.ndarray:
    """
    Rows of interpolation weights for sampling a 1-D signal of length in_size.

    Args:
        positions: source coordinates in pixel-index units (pixel i has center i)
        in_size: length of the source axis

    Returns:
        (len(positions), in_size) matrix; out-of-range taps are clamped to the edge
    """
    positions = np.asarray(positions, dtype=np.float64)
    base = np.floor(positions).astype(np.int64)
    rows = np.arange(len(positions))
    weights = np.zeros((len(positions), in_size), dtype=np.float64)
    for tap in (-1, 0, 1, 2):
        idx = base + tap
        w = cubic_kernel(positions - idx)
        np.add.at(weights, (rows, np.clip(idx, 0, in_size - 1)), w)
    return weights


def resize_positions(in_size: int, out_size: int) -> np.ndarray:
    return (np.arange(out_size, dtype=np.float64) + 0.5) * (in_size / out_size) - 0.5


def resize_array(array: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bicubic resize over the last two axes of an array of any rank >= 2."""
    if out_h < 1 or out_w < 1:
        raise ValueError(f"Output size must be >= 1, got {out_h}x{out_w}")
    if array.ndim < 2:
        raise ValueError(f"Need at least 2 dims to resize, got shape {array.shape}")
    in_h, in_w = array.shape[-2:]
    wy = cubic_weight_matrix(resize_positions(in_h, out_h), in_h)
    wx = cubic_weight_matrix(resize_positions(in_w, out_w), in_w)
    return sample_array(array, wy, wx)


def sample_array(array: np.ndarray, wy: np.ndarray, wx: np.ndarray) -> np.ndarray:
    out = np.matmul(np.matmul(wy, array.astype(np.float64)), wx.T)
    return out.astype(array.dtype if np.issubdtype(array.dtype, np.floating) else np.float64)
