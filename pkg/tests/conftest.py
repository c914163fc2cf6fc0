"""Pytest configuration and fixtures"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.dataset.synth import generate_synthetic_dataset
from src.imaging.image import RgbImage
from src.models.annotation import DatasetManifest, FaceRecord, LandmarkAnnotation, ManifestStyle, Split
from src.models.configs import (
    ClassifierConfig,
    CycleTrainConfig,
    DataConfig,
    DetectorConfig,
    PipelineConfig,
    SynthParams,
)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run seeded acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long seeded acceptance run (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def gradient_image():
    """12x16 image whose channels are distinct ramps"""
    ys, xs = np.mgrid[0:12, 0:16]
    pixels = np.stack([xs / 15.0, ys / 11.0, (xs + ys) / 26.0], axis=-1)
    return RgbImage(pixels)


@pytest.fixture
def small_synth_params():
    return SynthParams(image_size=48, supersample=1, capture_styles=["plain", "dim", "faded"])


@pytest.fixture
def synth_manifest(tmp_path, small_synth_params):
    """Six rendered faces in a temporary directory"""
    return generate_synthetic_dataset(small_synth_params, 6, seed=7, out_dir=tmp_path / "faces", split="train")


@pytest.fixture
def sample_record():
    return FaceRecord(
        record_id="train_00000",
        image_path="images/train_00000.png",
        box=(10.0, 12.0, 50.0, 60.0),
        annotation=LandmarkAnnotation(
            points=[(20.0, 25.0), (40.0, 25.0), (30.0, 38.0), (22.0, 48.0), (38.0, 48.0)],
            visibility=[True] * 5,
        ),
        style_tag="plain",
        attributes={"roll_deg": 3.0, "yaw": 0.05, "scale": 0.27},
    )


@pytest.fixture
def sample_manifest(sample_record):
    return DatasetManifest(
        name="sample",
        split=Split.TRAIN,
        style=ManifestStyle.ORIGINAL,
        num_landmarks=5,
        records=[sample_record],
    )


@pytest.fixture
def tiny_detector_config():
    return DetectorConfig(
        input_size=16,
        num_landmarks=2,
        extractor_channels=[2, 2, 2, 3],
        head_channels=3,
        epochs=1,
        batch_size=2,
        augment_margin=0,
    )


def _tiny_pipeline_config(output_dir):
    return PipelineConfig(
        seed=3,
        paths={"output_dir": output_dir},
        data=DataConfig(
            train_count=8,
            test_count=4,
            synth=SynthParams(image_size=32, supersample=1, capture_styles=["plain", "dim", "faded"]),
        ),
        classifier=ClassifierConfig(image_size=16, channels=[4, 8, 8, 8], epochs=1, batch_size=8),
        kmeans={"k": 2},
        cycle=CycleTrainConfig(iterations=2, batch_size=2, image_size=16, base_channels=2, residual_blocks=1),
        detector=DetectorConfig(
            input_size=16,
            extractor_channels=[2, 2, 2, 3],
            head_channels=3,
            epochs=1,
            batch_size=4,
        ),
        cross_style={"enabled": True, "variants": ["san-no-gan", "san"], "detector_epochs": 1},
    )


@pytest.fixture
def tiny_pipeline_config(tmp_path):
    """Smallest config that runs every stage in seconds"""
    return _tiny_pipeline_config(tmp_path / "run")


@pytest.fixture(scope="session")
def tiny_pipeline_config_factory():
    return _tiny_pipeline_config
