"""Checkpoint container and module state handling"""

import numpy as np
import pytest

from src.numerics.checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, load_into, save_checkpoint
from src.numerics.layers import Conv2d, Linear, Module
from src.numerics.tensor import ShapeError


class TinyNet(Module):
    def __init__(self, seed):
        rng = np.random.default_rng(seed)
        self.conv = Conv2d(3, 4, rng)
        self.heads = [Linear(4, 2, rng), Linear(4, 1, rng)]


class TestModuleParameters:
    def test_names_follow_attribute_order(self):
        names = list(TinyNet(0).parameters())
        assert names == [
            "conv.weight",
            "conv.bias",
            "heads.0.weight",
            "heads.0.bias",
            "heads.1.weight",
            "heads.1.bias",
        ]

    def test_num_parameters(self):
        assert TinyNet(0).num_parameters() == (4 * 3 * 9 + 4) + (2 * 4 + 2) + (1 * 4 + 1)

    def test_load_state_dict_rejects_missing_keys(self):
        state = TinyNet(0).state_dict()
        state.pop("conv.bias")
        with pytest.raises(KeyError, match="conv.bias"):
            TinyNet(1).load_state_dict(state)

    def test_load_state_dict_rejects_wrong_shape(self):
        state = TinyNet(0).state_dict()
        state["conv.bias"] = np.zeros(5)
        with pytest.raises(ShapeError):
            TinyNet(1).load_state_dict(state)


class TestCheckpoint:
    def test_round_trip_restores_parameters(self, tmp_path):
        source = TinyNet(0)
        save_checkpoint(source, tmp_path / "net.ckpt.json", metadata={"epochs": 3})
        target = TinyNet(1)
        checkpoint = load_into(target, tmp_path / "net.ckpt.json")
        assert checkpoint.metadata == {"epochs": 3}
        for name, value in source.state_dict().items():
            np.testing.assert_array_equal(target.state_dict()[name], value)

    def test_encoding_is_deterministic(self):
        state = TinyNet(0).state_dict()
        assert encode_checkpoint(state) == encode_checkpoint(dict(reversed(list(state.items()))))

    def test_saved_bytes_are_reproducible(self, tmp_path):
        save_checkpoint(TinyNet(4), tmp_path / "a.json")
        save_checkpoint(TinyNet(4), tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_values_stored_as_float32(self, tmp_path):
        save_checkpoint({"w": np.array([0.1], dtype=np.float64)}, tmp_path / "w.json")
        assert load_checkpoint(tmp_path / "w.json").params["w"].dtype == np.float32

    def test_wrong_format_rejected(self):
        with pytest.raises(ValueError, match="format"):
            decode_checkpoint('{"format": "other", "version": 1, "params": {}}')

    def test_truncated_data_rejected(self):
        text = encode_checkpoint({"w": np.zeros((2, 2))}).replace('"shape":[2,2]', '"shape":[3,2]')
        with pytest.raises(ValueError, match="values for shape"):
            decode_checkpoint(text)
