"""Cascaded belief-map detector: targets, decoding, stream modes and gradients"""

import numpy as np
import pytest

from src.imaging.image import RgbImage
from src.logic.detector import (
    DetectorModel,
    decode_landmarks,
    detector_loss,
    forward,
    heatmap_coordinate,
    make_gt_beliefmaps,
)
from src.logic.detector_training import crop_samples, evaluate_detector, fit_fixed_batch, train_detector
from src.models.configs import DetectorConfig, EvaluationConfig, StreamMode
from src.numerics.gradcheck import grad_check
from src.numerics.optim import Optimizer
from src.numerics.tensor import ShapeError, Tensor, default_dtype

GRAD_TOL = 1e-4


def _images(rng, n, size):
    return Tensor(rng.uniform(size=(n, 3, size, size)))


class TestBeliefMaps:
    def test_shape_and_background(self):
        maps = make_gt_beliefmaps(np.array([[10.0, 20.0], [40.0, 8.0]]), 64, 1.5)
        assert maps.shape == (3, 8, 8)
        np.testing.assert_allclose(maps[2], 1.0 - maps[:2].max(axis=0))
        assert maps[:2].max() <= 1.0

    def test_peak_is_one_on_grid_point(self):
        # x / 8 = (2, 3) lands on heatmap cell (row 3, col 2)
        maps = make_gt_beliefmaps(np.array([[16.0, 24.0], [0.0, 0.0]]), 64, 1.5)
        assert maps[0, 3, 2] == pytest.approx(1.0)
        assert heatmap_coordinate(16.0) == pytest.approx(2.0)

    def test_unit_offsets_from_peak(self):
        sigma = 1.5
        maps = make_gt_beliefmaps(np.array([[16.0, 24.0], [0.0, 0.0]]), 64, sigma)
        expected = np.exp(-1.0 / (2.0 * sigma * sigma))
        assert maps[0, 3, 3] == pytest.approx(expected)
        assert maps[0, 4, 2] == pytest.approx(expected)
        assert maps[0, 3, 1] == pytest.approx(expected)

    def test_background_far_from_landmarks(self):
        maps = make_gt_beliefmaps(np.array([[0.0, 0.0], [8.0, 0.0]]), 64, 1.5)
        assert maps[2, 7, 7] == pytest.approx(1.0, abs=1e-6)

    def test_invisible_channel_is_zero(self):
        maps = make_gt_beliefmaps(np.array([[10.0, 10.0], [30.0, 30.0]]), 64, 1.5, visibility=[True, False])
        assert not maps[1].any()

    def test_out_of_bounds_landmark_clamped(self, caplog):
        maps = make_gt_beliefmaps(np.array([[-20.0, 10.0], [30.0, 30.0]]), 64, 1.5)
        assert maps[0, :, 0].max() > maps[0, :, 7].max()
        assert "Clamped" in caplog.text

    def test_input_size_divisible_by_stride(self):
        with pytest.raises(ValueError):
            make_gt_beliefmaps(np.zeros((2, 2)), 60, 1.5)


class TestDecode:
    def test_round_trip_every_pixel(self):
        worst = 0.0
        xs = np.arange(64, dtype=np.float64)
        for y in range(64):
            points = np.stack([xs, np.full(64, float(y))], axis=1)
            decoded = decode_landmarks(make_gt_beliefmaps(points, 64, 1.5), 64)
            worst = max(worst, np.linalg.norm(decoded - points, axis=1).max())
        assert worst <= 5.0

    def test_grid_points_decode_exactly(self):
        grid = np.arange(0, 64, 8, dtype=np.float64)
        points = np.stack(np.meshgrid(grid, grid), axis=-1).reshape(-1, 2)
        decoded = decode_landmarks(make_gt_beliefmaps(points, 64, 1.5), 64)
        np.testing.assert_array_equal(decoded, points)

    def test_single_spike_decodes_inside_its_block(self):
        for row in range(8):
            for col in range(8):
                maps = np.zeros((2, 8, 8))
                maps[0, row, col] = 1.0
                x, y = decode_landmarks(maps, 64)[0]
                assert 8 * col <= x < 8 * col + 8
                assert 8 * row <= y < 8 * row + 8

    def test_uniform_map_decodes_to_origin(self):
        maps = np.full((3, 8, 8), 0.3)
        np.testing.assert_array_equal(decode_landmarks(maps, 64), np.zeros((2, 2)))

    def test_background_channel_ignored(self):
        maps = np.zeros((2, 8, 8))
        maps[0, 2, 5] = 1.0
        maps[1] = 5.0
        np.testing.assert_array_equal(decode_landmarks(maps, 64), [[40.0, 16.0]])

    def test_decode_needs_stack(self):
        with pytest.raises(ShapeError):
            decode_landmarks(np.zeros((8, 8)), 64)


class TestForward:
    def test_output_shapes(self, rng, tiny_detector_config):
        model = DetectorModel(tiny_detector_config, rng)
        x = _images(rng, 2, 16)
        maps = forward(model, x, x)
        for h in maps:
            assert h.shape == (2, 3, 2, 2)

    def test_original_only_needs_one_image(self, rng, tiny_detector_config):
        config = tiny_detector_config.model_copy(update={"stream_mode": StreamMode.ORIGINAL_ONLY})
        model = DetectorModel(config, rng)
        assert forward(model, _images(rng, 1, 16)).h_3.shape == (1, 3, 2, 2)

    def test_aggregated_only_uses_second_image(self, rng, tiny_detector_config):
        config = tiny_detector_config.model_copy(update={"stream_mode": StreamMode.AGGREGATED_ONLY})
        model = DetectorModel(config, rng)
        x_s = _images(rng, 1, 16)
        a = forward(model, None, x_s)
        b = forward(model, _images(rng, 1, 16), x_s)
        np.testing.assert_array_equal(a.h_3.data, b.h_3.data)

    def test_two_stream_needs_both(self, rng, tiny_detector_config):
        with pytest.raises(ValueError, match="needs both"):
            forward(DetectorModel(tiny_detector_config, rng), _images(rng, 1, 16))

    def test_swapping_streams_changes_outputs(self, rng):
        config = DetectorConfig(input_size=16, num_landmarks=2, extractor_channels=[4, 8, 8, 8], head_channels=8)
        model = DetectorModel(config, rng)
        x_a, x_b = _images(rng, 1, 16), _images(rng, 1, 16)
        straight = forward(model, x_a, x_b)
        swapped = forward(model, x_b, x_a)
        assert not np.allclose(straight.h_o.data, swapped.h_s.data)
        assert not np.allclose(straight.h_3.data, swapped.h_3.data)

    def test_original_only_ignores_aggregated_image(self, rng, tiny_detector_config):
        config = tiny_detector_config.model_copy(update={"stream_mode": StreamMode.ORIGINAL_ONLY})
        model = DetectorModel(config, rng)
        x_o = _images(rng, 1, 16)
        a = forward(model, x_o, _images(rng, 1, 16))
        b = forward(model, x_o, _images(rng, 1, 16))
        for h_a, h_b in zip(a, b):
            np.testing.assert_array_equal(h_a.data, h_b.data)

    def test_wrong_size(self, rng, tiny_detector_config):
        model = DetectorModel(tiny_detector_config, rng)
        x = _images(rng, 1, 24)
        with pytest.raises(ShapeError):
            forward(model, x, x)

    def test_loss_zero_at_target(self):
        target = make_gt_beliefmaps(np.array([[3.0, 4.0], [9.0, 12.0]]), 16, 1.5)[None]
        h = Tensor(target)
        assert detector_loss(h, h, h, h, target).item() == pytest.approx(0.0)

    def test_loss_all_ones_on_last_stage(self):
        target = np.zeros((1, 6, 8, 8))
        h = Tensor(target)
        loss = detector_loss(h, h, h, Tensor(target + 1.0), target)
        assert loss.item() == pytest.approx(384.0)

    def test_loss_matches_four_term_oracle(self, rng):
        target = rng.uniform(size=(2, 3, 4, 4))
        with default_dtype(np.float64):
            stacks = [Tensor(rng.uniform(size=target.shape)) for _ in range(4)]
        expected = 0.0
        for h in stacks:
            for n in range(target.shape[0]):
                for idx in np.ndindex(target.shape[1:]):
                    expected += (h.data[n][idx] - target[n][idx]) ** 2 / target.shape[0]
        assert detector_loss(*stacks, target).item() == pytest.approx(expected, rel=1e-5)


class TestGradients:
    def test_full_cascade_grad_check(self, tiny_detector_config):
        rng = np.random.default_rng(3)
        with default_dtype(np.float64):
            model = DetectorModel(tiny_detector_config, rng)
            x_o = _images(rng, 2, 16)
            x_s = _images(rng, 2, 16)
        target = np.stack(
            [make_gt_beliefmaps(rng.uniform(0, 15, size=(2, 2)), 16, tiny_detector_config.sigma_gt) for _ in range(2)]
        )
        params = model.parameters()
        inputs = [
            params["extractor_o.blocks.0.weight"],
            params["extractor_s.blocks.3.bias"],
            params["stage1_o.project.weight"],
            params["stage2.conv1.weight"],
            params["stage3.project.bias"],
        ]

        def loss(*_):
            return detector_loss(*forward(model, x_o, x_s), target)

        assert grad_check(loss, inputs, max_elements=12) <= GRAD_TOL

    def test_fixed_batch_loss_decreases(self, tiny_detector_config):
        rng = np.random.default_rng(0)
        model = DetectorModel(tiny_detector_config, rng)
        x = _images(rng, 2, 16)
        target = np.stack([make_gt_beliefmaps(np.array([[4.0, 4.0], [11.0, 10.0]]), 16, 1.5)] * 2)
        optimizer = Optimizer.create(model.parameters(), "adam", 1e-2)
        losses = fit_fixed_batch(model, x, x, target, optimizer, steps=25)
        assert len(losses) == 26
        assert losses[-1] < losses[0]


class TestTrainAndEvaluate:
    @pytest.fixture
    def config(self):
        return DetectorConfig(
            input_size=16, extractor_channels=[2, 2, 2, 3], head_channels=3, epochs=2, batch_size=3
        )

    def test_train_logs_each_epoch(self, synth_manifest, config):
        result = train_detector(synth_manifest, None, config, seed=1)
        assert len(result.log) == 2
        assert list(result.log.to_frame().columns) == ["epoch", "lr", "loss"]

    def test_training_is_seeded(self, synth_manifest, config):
        a = train_detector(synth_manifest, None, config, seed=5).model.state_dict()
        b = train_detector(synth_manifest, None, config, seed=5).model.state_dict()
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])

    def test_misaligned_aggregated_manifest(self, synth_manifest, config):
        shuffled = synth_manifest.model_copy(update={"records": list(reversed(synth_manifest.records))})
        with pytest.raises(ValueError, match="not aligned"):
            train_detector(synth_manifest, shuffled, config, seed=0)

    def test_evaluate_returns_nme_per_record(self, synth_manifest, config):
        model = train_detector(synth_manifest, None, config.model_copy(update={"epochs": 1}), seed=0).model
        result = evaluate_detector(model, synth_manifest, EvaluationConfig(), "san", test_style="original")
        assert result.record_ids == [r.record_id for r in synth_manifest.records]
        assert np.all(result.nme >= 0)
        assert result.normalizer == "interocular"
        assert set(result.attributes[0]) == {"roll_deg", "yaw", "scale"}

    def test_stream_transform_feeds_second_stream(self, synth_manifest, config):
        samples = crop_samples(synth_manifest, config, stream_transform=lambda img: RgbImage(1.0 - img.pixels))
        np.testing.assert_allclose(samples[0].crop_s.pixels, 1.0 - samples[0].crop_o.pixels, atol=1e-5)
