"""Images, PNG I/O, photo-style filters and crop geometry"""

from .image import RgbImage, read_png, write_png
from .filters import DEFAULT_FILTERS, StyleFilterSet, apply_style
from .geometry import CropTransform, crop_face

__all__ = [
    "RgbImage",
    "read_png",
    "write_png",
    "DEFAULT_FILTERS",
    "StyleFilterSet",
    "apply_style",
    "CropTransform",
    "crop_face",
]
