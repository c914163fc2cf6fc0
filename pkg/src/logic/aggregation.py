import logging
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from src.dataset.styled import transform_manifest_images
from src.imaging.image import RgbImage, images_to_tensor
from src.models.annotation import DatasetManifest, ManifestStyle
from src.numerics.resize import resize_array
from src.numerics.tensor import Tensor, no_grad

logger = logging.getLogger(__name__)

ImageFn = Callable[[Tensor], Tensor]


def training_size(generator: ImageFn) -> Optional[int]:
    """Square resolution a generator was trained at, if it records one."""
    return getattr(generator, "image_size", None)


def _resize_chw(pixels: np.ndarray, height: int, width: int) -> np.ndarray:
    if pixels.shape[-2:] == (height, width):
        return pixels
    return np.clip(resize_array(pixels, height, width), 0.0, 1.0)


def aggregate_style(
    image: RgbImage, g_to_a: ImageFn, g_to_b: ImageFn, working_size: Optional[int] = None
) -> RgbImage:
    """
    Style-aggregated face: pixelwise mean of the two transferred images, clamped to [0, 1].

    The generators run at working_size (default: g_to_a's training resolution,
    else the image's own size); the mean is resized back to the image size.
    """
    size = working_size if working_size is not None else training_size(g_to_a)
    chw = image.to_chw().astype(np.float64)
    if size is not None:
        chw = _resize_chw(chw, size, size)
    with no_grad():
        x = images_to_tensor([RgbImage.from_chw(chw)])
        to_a, to_b = g_to_a(x), g_to_b(x)
    if to_a.shape != x.shape or to_b.shape != x.shape:
        raise ValueError(f"Generators must preserve image size {x.shape}; got {to_a.shape} and {to_b.shape}")
    mean = np.clip(0.5 * (to_a.data.astype(np.float64) + to_b.data.astype(np.float64))[0], 0.0, 1.0)
    return RgbImage.from_chw(_resize_chw(mean, image.height, image.width))


def precompute_aggregated_manifest(
    manifest: DatasetManifest,
    g_to_a: ImageFn,
    g_to_b: ImageFn,
    out_dir: Union[str, Path],
) -> DatasetManifest:
    """Write the aggregated image of every record to out_dir; annotations and order are kept."""
    logger.info(f"Aggregating {len(manifest.records)} images of {manifest.name} into {out_dir}")
    return transform_manifest_images(
        manifest,
        lambda image: aggregate_style(image, g_to_a, g_to_b),
        out_dir,
        style=ManifestStyle.AGGREGATED,
        name=f"{manifest.name}-aggregated",
        operation="aggregate",
    )
