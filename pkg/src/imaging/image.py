"""RGB float images and 8-bit PNG I/O."""

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from PIL import Image

from src.numerics.tensor import Tensor


@dataclass(frozen=True)
class RgbImage:
    """Three-channel image with per-channel floats clamped to [0, 1], stored (H, W, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError(f"RgbImage needs shape (H, W, 3), got {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError(f"RgbImage needs width and height >= 1, got {pixels.shape[1]}x{pixels.shape[0]}")
        object.__setattr__(self, "pixels", np.clip(pixels, 0.0, 1.0).astype(np.float32))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def filled(cls, height: int, width: int, rgb: Sequence[float]) -> "RgbImage":
        return cls(np.broadcast_to(np.asarray(rgb, dtype=np.float32), (height, width, 3)))

    @classmethod
    def from_uint8(cls, array: np.ndarray) -> "RgbImage":
        return cls(np.asarray(array, dtype=np.float32) / 255.0)

    def to_uint8(self) -> np.ndarray:
        return np.rint(self.pixels.astype(np.float64) * 255.0).astype(np.uint8)

    def to_chw(self) -> np.ndarray:
        return np.ascontiguousarray(self.pixels.transpose(2, 0, 1))

    @classmethod
    def from_chw(cls, array: np.ndarray) -> "RgbImage":
        return cls(np.asarray(array).transpose(1, 2, 0))


def read_png(path: Union[str, Path]) -> RgbImage:
    with Image.open(path) as img:
        return RgbImage.from_uint8(np.asarray(img.convert("RGB")))


def write_png(image: RgbImage, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(image.to_uint8()).save(path, format="PNG")
    return path


def images_to_tensor(images: Sequence[RgbImage], offset: float = 0.0) -> Tensor:
    """Stack images into an NCHW tensor, optionally shifting values by offset."""
    batch = np.stack([img.to_chw() for img in images])
    return Tensor(batch - offset if offset else batch)


def tensor_to_images(batch: Tensor) -> list:
    return [RgbImage.from_chw(chw) for chw in batch.data]
