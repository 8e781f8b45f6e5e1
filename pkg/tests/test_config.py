"""Config validation and its JSON file round trip."""

import json

import pytest
import torch

from wavemark import TrainConfig, config_from_dict, load_config, save_config
from wavemark.exceptions import ConfigError


class TestValidation:
    def test_defaults_follow_reference_protocol(self):
        config = TrainConfig()
        assert config.image_size == 128
        assert config.message_length == 64
        assert config.num_blocks == 16
        assert config.batch_size == 16
        assert config.learning_rate == 1e-5
        assert (config.weight_encoding, config.weight_decoding, config.weight_low_band) == (0.1, 100.0, 0.1)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"image_size": 15},
            {"image_channels": 2},
            {"message_length": 0},
            {"num_blocks": 0},
            {"batch_size": 0},
            {"learning_rate": 0.0},
            {"coupling_scale": -1.0},
            {"weight_decoding": -0.5},
            {"precision": "float16"},
            {"distortions": "sepia:1"},
            {"distortions": ""},
            {"dense_depth": 1},
        ],
    )
    def test_invalid_values_rejected(self, overrides):
        with pytest.raises(ConfigError):
            TrainConfig(**overrides)

    def test_torch_dtype(self):
        assert TrainConfig(precision="float64").torch_dtype == torch.float64
        assert TrainConfig().torch_dtype == torch.float32

    def test_loss_weights_property(self):
        weights = TrainConfig(weight_encoding=1.0, weight_decoding=2.0, weight_low_band=3.0).loss_weights
        assert (weights.encoding, weights.decoding, weights.low_band) == (1.0, 2.0, 3.0)

    def test_architecture_subset(self):
        arch = TrainConfig().architecture()
        assert "message_length" in arch and "steps" not in arch


class TestFileRoundTrip:
    def test_save_and_load(self, tmp_path):
        config = TrainConfig(image_size=64, message_length=16, num_blocks=8, seed=3)
        path = tmp_path / "config.json"
        save_config(config, path)
        assert load_config(path).to_dict() == config.to_dict()

    def test_unknown_keys_rejected_with_valid_list(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"mesage_length": 16}))
        with pytest.raises(ConfigError, match="valid keys"):
            load_config(path)

    def test_partial_file_uses_defaults(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"message_length": 30}))
        config = load_config(path)
        assert config.message_length == 30
        assert config.image_size == 128

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_non_object_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("[1, 2, 3]")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.json")

    def test_config_from_dict(self):
        config = config_from_dict({"message_length": 8, "image_size": 32})
        assert config.message_length == 8
        with pytest.raises(ConfigError):
            config_from_dict({"bogus": 1})
