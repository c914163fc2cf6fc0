"""
Procedural synthetic faces with analytic landmarks.

Each face is drawn in a head-local frame (u, v), where the head is the unit
ellipse u^2 + v^2 <= 1, then mapped to the image by scale, roll and
translation. Landmarks are extrema of the same ellipses the renderer fills, so
they are exact by construction. Landmark order:

    0 left outer eye corner, 1 right outer eye corner, 2 nose tip,
    3 left mouth corner, 4 right mouth corner
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from src.dataset.store import MANIFEST_FILENAME, write_manifest
from src.imaging.filters import LUMA_WEIGHTS
from src.imaging.image import RgbImage, write_png
from src.models.annotation import DatasetManifest, FaceRecord, LandmarkAnnotation, ManifestStyle, Split
from src.models.configs import SynthParams
from src.utils.utils import get_worker_count, make_rng

logger = logging.getLogger(__name__)

NUM_SYNTH_LANDMARKS = 5
EYE_V = -0.18
EYE_U = 0.42
NOSE_V = 0.1
MOUTH_V = 0.5


def _dim(pixels: np.ndarray) -> np.ndarray:
    return 0.45 * pixels


def _faded(pixels: np.ndarray) -> np.ndarray:
    y = (pixels.astype(np.float64) @ LUMA_WEIGHTS)[..., None]
    return 0.15 + 0.7 * (0.6 * y + 0.4 * pixels)


# Hidden capture conditions; recorded in style_tag but never used as labels in training
CAPTURE_STYLES: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "plain": lambda pixels: pixels,
    "dim": _dim,
    "faded": _faded,
}


def apply_capture_style(img: RgbImage, name: str) -> RgbImage:
    if name not in CAPTURE_STYLES:
        raise ValueError(f"Unknown capture style {name!r}; choose one of {sorted(CAPTURE_STYLES)}")
    return RgbImage(CAPTURE_STYLES[name](img.pixels))


@dataclass(frozen=True)
class Ellipse:
    """Axis-aligned ellipse in head-local units."""

    u: float
    v: float
    half_u: float
    half_v: float

    def contains(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return ((u - self.u) / self.half_u) ** 2 + ((v - self.v) / self.half_v) ** 2 <= 1.0

    @property
    def left(self) -> Tuple[float, float]:
        return (self.u - self.half_u, self.v)

    @property
    def right(self) -> Tuple[float, float]:
        return (self.u + self.half_u, self.v)

    @property
    def bottom(self) -> Tuple[float, float]:
        return (self.u, self.v + self.half_v)


@dataclass(frozen=True)
class FaceGeometry:
    center: Tuple[float, float]
    half_width: float
    half_height: float
    roll: float  # radians
    yaw: float
    left_eye: Ellipse
    right_eye: Ellipse
    nose: Ellipse
    mouth: Ellipse
    hair_line: float

    def to_image(self, u, v) -> Tuple[np.ndarray, np.ndarray]:
        u, v = np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64)
        cos, sin = math.cos(self.roll), math.sin(self.roll)
        du, dv = u * self.half_width, v * self.half_height
        return self.center[0] + cos * du - sin * dv, self.center[1] + sin * du + cos * dv

    def to_local(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        cos, sin = math.cos(self.roll), math.sin(self.roll)
        dx, dy = x - self.center[0], y - self.center[1]
        return (cos * dx + sin * dy) / self.half_width, (-sin * dx + cos * dy) / self.half_height

    def landmarks(self) -> np.ndarray:
        local = [self.left_eye.left, self.right_eye.right, self.nose.bottom, self.mouth.left, self.mouth.right]
        u, v = np.array(local).T
        x, y = self.to_image(u, v)
        return np.stack([x, y], axis=1)

    def head_box(self) -> Tuple[float, float, float, float]:
        cos, sin = math.cos(self.roll), math.sin(self.roll)
        ext_x = math.hypot(self.half_width * cos, self.half_height * sin)
        ext_y = math.hypot(self.half_width * sin, self.half_height * cos)
        cx, cy = self.center
        return (cx - ext_x, cy - ext_y, cx + ext_x, cy + ext_y)


def sample_geometry(params: SynthParams, rng: np.random.Generator) -> FaceGeometry:
    size = params.image_size
    half_width = rng.uniform(*params.scale_range) * size
    half_height = half_width * rng.uniform(*params.aspect_range)
    roll = math.radians(rng.uniform(-params.roll_range_deg, params.roll_range_deg))
    yaw = rng.uniform(-params.yaw_range, params.yaw_range)
    offset = rng.uniform(-params.translate_range, params.translate_range, size=2) * size
    center = ((size - 1) / 2.0 + offset[0], (size - 1) / 2.0 + offset[1])

    # Features slide sideways with yaw; the nose slides furthest
    shift = 0.5 * yaw
    eye_half_u = rng.uniform(0.15, 0.2)
    eye_half_v = rng.uniform(0.07, 0.1)
    mouth_half_u = rng.uniform(0.24, 0.34)
    return FaceGeometry(
        center=center,
        half_width=half_width,
        half_height=half_height,
        roll=roll,
        yaw=yaw,
        left_eye=Ellipse(-EYE_U + shift, EYE_V, eye_half_u, eye_half_v),
        right_eye=Ellipse(EYE_U + shift, EYE_V, eye_half_u, eye_half_v),
        nose=Ellipse(1.3 * shift, NOSE_V, rng.uniform(0.07, 0.1), rng.uniform(0.13, 0.17)),
        mouth=Ellipse(shift, MOUTH_V, mouth_half_u, rng.uniform(0.06, 0.09)),
        hair_line=rng.uniform(-0.75, -0.5),
    )


def _palette(rng: np.random.Generator) -> Dict[str, np.ndarray]:
    tone = rng.uniform(0.45, 0.95)
    return {
        "background": rng.uniform(0.1, 0.9, size=3),
        "skin": np.array([tone, tone * rng.uniform(0.72, 0.84), tone * rng.uniform(0.55, 0.7)]),
        "hair": rng.uniform(0.02, 0.4) * np.array([1.0, rng.uniform(0.6, 0.9), rng.uniform(0.4, 0.7)]),
        "iris": rng.uniform(0.05, 0.45, size=3),
        "lips": np.array([rng.uniform(0.55, 0.8), rng.uniform(0.15, 0.3), rng.uniform(0.2, 0.35)]),
    }


def render_face(geometry: FaceGeometry, params: SynthParams, rng: np.random.Generator) -> RgbImage:
    """Paint the face on a supersampled grid and box-filter down to image_size."""
    size, ss = params.image_size, params.supersample
    palette = _palette(rng)
    coords = np.arange(size * ss, dtype=np.float64)
    sub = (coords + 0.5) / ss - 0.5  # sample positions in pixel-index units
    x, y = np.meshgrid(sub, sub)
    u, v = geometry.to_local(x, y)

    freq = rng.uniform(1.0, 4.0, size=2) * 2.0 * np.pi / size
    phase = rng.uniform(0, 2 * np.pi)
    texture = 0.08 * np.sin(freq[0] * x + freq[1] * y + phase)
    canvas = palette["background"][None, None, :] + texture[..., None]

    def paint(mask: np.ndarray, color) -> None:
        nonlocal canvas
        canvas = np.where(mask[..., None], color, canvas)

    head = u * u + v * v <= 1.0
    shading = 1.0 - 0.18 * (u * u + v * v)
    paint(head, palette["skin"][None, None, :] * shading[..., None])
    paint(head & (v < geometry.hair_line), palette["hair"])
    for eye in (geometry.left_eye, geometry.right_eye):
        brow = Ellipse(eye.u, eye.v - 2.0 * eye.half_v - 0.04, 1.05 * eye.half_u, 0.03)
        paint(brow.contains(u, v), palette["hair"])
        paint(eye.contains(u, v), np.array([0.95, 0.95, 0.92]))
        iris = Ellipse(eye.u, eye.v, 0.4 * eye.half_u, 0.9 * eye.half_v)
        paint(iris.contains(u, v), palette["iris"])
    paint(geometry.nose.contains(u, v), palette["skin"] * 0.8)
    paint(geometry.mouth.contains(u, v), palette["lips"])

    pixels = canvas.reshape(size, ss, size, ss, 3).mean(axis=(1, 3))
    pixels = pixels + rng.normal(0.0, 0.01, size=pixels.shape)
    return RgbImage(pixels)


def synth_face(
    params: SynthParams, rng: np.random.Generator, record_id: str = "face_00000"
) -> Tuple[FaceRecord, RgbImage]:
    """
    Render one random face under a randomly drawn capture style.

    Returns:
        The record (image_path relative to the manifest directory) and the image
    """
    geometry = sample_geometry(params, rng)
    capture = params.capture_styles[int(rng.integers(len(params.capture_styles)))]
    image = apply_capture_style(render_face(geometry, params, rng), capture)

    limit = float(params.image_size - 1)
    x1, y1, x2, y2 = geometry.head_box()
    box = (max(0.0, x1), max(0.0, y1), min(limit, x2), min(limit, y2))
    record = FaceRecord(
        record_id=record_id,
        image_path=f"images/{record_id}.png",
        box=box,
        annotation=LandmarkAnnotation.from_array(geometry.landmarks()),
        style_tag=capture,
        attributes={
            "roll_deg": math.degrees(geometry.roll),
            "yaw": geometry.yaw,
            "scale": geometry.half_width / params.image_size,
        },
    )
    return record, image


def generate_synthetic_dataset(
    params: SynthParams,
    count: int,
    seed: int,
    out_dir: Union[str, Path],
    split: Union[str, Split] = Split.TRAIN,
    name: Optional[str] = None,
) -> DatasetManifest:
    """
    Render count faces into out_dir/images and write out_dir/manifest.json.

    Each face draws from its own RNG derived from (seed, index), so the result
    is a pure function of (params, seed) regardless of worker scheduling.
    """
    out_dir = Path(out_dir)
    split = Split(split)
    prefix = f"{split.value}_"

    def _render(index: int) -> FaceRecord:
        record_id = f"{prefix}{index:05d}"
        record, image = synth_face(params, make_rng(seed, f"face-{index}"), record_id)
        write_png(image, out_dir / record.image_path)
        return record

    workers = get_worker_count()
    logger.info(f"Rendering {count} synthetic faces into {out_dir} with {workers} worker(s)")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        records: List[FaceRecord] = list(
            tqdm(pool.map(_render, range(count)), total=count, desc=f"synth {split.value}", disable=None)
        )

    style = ManifestStyle.SYNTHETIC_MIXED if len(params.capture_styles) > 1 else ManifestStyle.ORIGINAL
    manifest = DatasetManifest(
        name=name or f"synthetic-{split.value}",
        split=split,
        style=style,
        num_landmarks=NUM_SYNTH_LANDMARKS,
        records=records,
    )
    write_manifest(manifest, out_dir / MANIFEST_FILENAME)
    return manifest
