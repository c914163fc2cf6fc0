"""
Seeded desk-scale acceptance runs. Slow; enable with --runslow.
"""

import numpy as np
import pytest

from src.config import settings
from src.config.presets import load_pipeline_config
from src.dataset.styled import generate_styled_dataset
from src.dataset.synth import generate_synthetic_dataset
from src.flows.pipeline_flow import run_pipeline
from src.imaging.image import read_png
from src.logic.cycle_gan import train_cycle_generators
from src.logic.detector import DetectorModel
from src.logic.detector_training import build_batch, crop_samples, fit_fixed_batch
from src.logic.style_classifier import train_style_classifier
from src.logic.style_discovery import discover_hidden_styles
from src.models.configs import ClassifierConfig, CycleTrainConfig, DetectorConfig, KMeansConfig, SynthParams
from src.numerics.optim import Optimizer

ACCEPTANCE_SEED = 0

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    """300 faces under three capture styles plus their Light, Gray and Sketch copies"""
    root = tmp_path_factory.mktemp("corpus")
    params = SynthParams(image_size=64, capture_styles=["plain", "dim", "faded"])
    original = generate_synthetic_dataset(params, 300, ACCEPTANCE_SEED, root / "original" / "train")
    styled = generate_styled_dataset(original, out_root=root)
    return original, [styled["light"], styled["gray"], styled["sketch"]]


@pytest.fixture(scope="module")
def discovery(corpus):
    original, styled = corpus
    trained = train_style_classifier(original, styled, ClassifierConfig(), seed=ACCEPTANCE_SEED)
    result = discover_hidden_styles(trained.model, original, KMeansConfig(k=3), seed=ACCEPTANCE_SEED)
    return trained, result


@pytest.fixture(scope="module")
def desk_run(tmp_path_factory):
    config = load_pipeline_config(
        config_path=settings.DESK_CONFIG_PATH,
        overrides={"seed": ACCEPTANCE_SEED, "paths": {"output_dir": str(tmp_path_factory.mktemp("desk") / "run")}},
    )
    return run_pipeline(config)


class TestStyleDiscovery:
    def test_classifier_accuracy(self, discovery):
        trained, _ = discovery
        assert trained.accuracy >= 0.95

    def test_cluster_purity(self, discovery):
        _, result = discovery
        assert result.purity >= 0.9


class TestCycleTraining:
    def test_cycle_loss_halves(self, corpus, discovery):
        original, _ = corpus
        _, result = discovery
        images = [read_png(original.image_path(r)) for r in original.records]
        images_a = [images[i] for i in result.cluster_a]
        images_b = [images[i] for i in result.cluster_b]
        cycle = train_cycle_generators(images_a, images_b, CycleTrainConfig(), seed=ACCEPTANCE_SEED)
        assert cycle.final_cycle_loss <= 0.5 * cycle.initial_cycle_loss


class TestDetectorOverfit:
    def test_fixed_batch_loss_drops_hundredfold(self, corpus):
        original, _ = corpus
        config = DetectorConfig(augment_margin=0)
        subset = original.model_copy(update={"records": original.records[:4]})
        samples = crop_samples(subset, config)
        image_o, image_s, target = build_batch(samples, config)
        model = DetectorModel(config, np.random.default_rng(ACCEPTANCE_SEED))
        optimizer = Optimizer.create(model.parameters(), "adam", config.lr)
        losses = fit_fixed_batch(model, image_o, image_s, target, optimizer, steps=500)
        assert losses[-1] <= 0.01 * losses[0]


class TestEndToEnd:
    def test_two_stream_test_nme(self, desk_run):
        assert desk_run["evaluate"].mean_nme <= 0.05

    def test_style_shift_hurts_base_variant(self, desk_run):
        matrix = desk_run["cross-style"]
        assert np.isfinite(matrix.grids["san"].to_numpy()).all()
        assert np.all(matrix.diagonal("san-no-gan") <= matrix.off_diagonal_row_means("san-no-gan"))

    def test_aggregation_helps_off_diagonal(self, desk_run):
        matrix = desk_run["cross-style"]
        assert matrix.off_diagonal_mean("san") <= matrix.off_diagonal_mean("san-no-gan")
