"""End-to-end model composition and checkpoint round trips."""

import pytest
import torch

from wavemark import WatermarkModel, haar_dwt, load_checkpoint, save_checkpoint
from wavemark.exceptions import CheckpointError

from conftest import randomize_parameters, synthetic_images, tiny_config


@pytest.fixture
def images():
    return synthetic_images(2, 16, seed=11)


@pytest.fixture
def messages():
    generator = torch.Generator().manual_seed(12)
    return (torch.rand(2, 4, generator=generator) < 0.5).float()


class TestEncodeDecode:
    def test_encode_shapes(self, tiny_model, images, messages):
        encoded, leftover = tiny_model.encode(images, messages)
        assert encoded.shape == images.shape
        assert leftover.shape == (2, 4, 8, 8)

    def test_fresh_model_encodes_to_near_cover(self, tiny_model, images, messages):
        # zero-initialized coupling subnets leave the sub-bands untouched; the
        # only pixel error is sub-band rounding (a couple of float32 ulps)
        encoded, _ = tiny_model.encode(images, messages)
        assert (encoded - images).abs().max() < 1e-6

    def test_fresh_model_feature_neutrality_is_exact(self, tiny_model, images, messages):
        cover_features = haar_dwt(images)
        message_features = tiny_model.processor(messages)
        encoded_features, _ = tiny_model.coupling.encode(cover_features, message_features)
        assert torch.equal(encoded_features, cover_features)

    def test_decode_output_length(self, tiny_model, images):
        soft = tiny_model.decode(images)
        assert soft.shape == (2, 4)

    def test_decode_deterministic_given_seed(self, tiny_model, images):
        a = tiny_model.decode(images, aux_seed=5)
        b = tiny_model.decode(images, aux_seed=5)
        c = tiny_model.decode(images, aux_seed=6)
        assert torch.equal(a, b)
        assert not torch.equal(a, c)

    def test_decode_zero_aux_flag(self, tiny_model, images):
        a = tiny_model.decode(images, zero_aux=True)
        b = tiny_model.decode(images, zero_aux=True, aux_seed=99)
        assert torch.equal(a, b)

    def test_decode_explicit_aux(self, tiny_model, images):
        aux = torch.zeros(2, *tiny_model.aux_shape())
        assert torch.equal(tiny_model.decode(images, aux=aux), tiny_model.decode(images, zero_aux=True))

    def test_decode_returns_features_when_asked(self, tiny_model, images):
        soft, recovered = tiny_model.decode(images, return_features=True)
        assert soft.shape == (2, 4)
        assert recovered.shape == (2, 12, 8, 8)

    def test_single_image_round(self, tiny_model, images, messages):
        encoded, _ = tiny_model.encode(images[0], messages[0])
        assert encoded.shape == (3, 16, 16)
        assert tiny_model.decode(encoded).shape == (4,)

    def test_encode_deterministic(self, tiny_model, images, messages):
        a, _ = tiny_model.encode(images, messages)
        b, _ = tiny_model.encode(images, messages)
        assert torch.equal(a, b)

    def test_wrong_image_shape_rejected(self, tiny_model, messages):
        with pytest.raises(ValueError):
            tiny_model.encode(torch.rand(2, 3, 32, 32), messages)

    def test_mismatched_batching_rejected(self, tiny_model, images, messages):
        with pytest.raises(ValueError):
            tiny_model.encode(images, messages[0])
        with pytest.raises(ValueError):
            tiny_model.encode(images, messages[:1])


class TestCheckpoint:
    def test_round_trip_reproduces_outputs_bit_exactly(self, tmp_path, images, messages):
        torch.manual_seed(3)
        config = tiny_config()
        model = randomize_parameters(WatermarkModel.from_config(config), std=0.05, seed=3)
        path = tmp_path / "model.pt"
        save_checkpoint(path, model, config, step=17)
        loaded, loaded_config, step, _ = load_checkpoint(path)
        assert step == 17
        assert loaded_config.to_dict() == config.to_dict()
        for i in range(images.shape[0]):
            enc_a, left_a = model.encode(images, messages)
            enc_b, left_b = loaded.encode(images, messages)
            assert torch.equal(enc_a, enc_b)
            assert torch.equal(left_a, left_b)
            assert torch.equal(model.decode(images, aux_seed=i), loaded.decode(images, aux_seed=i))

    def test_optimizer_state_round_trip(self, tmp_path, tiny_model):
        config = tiny_config()
        optimizer = torch.optim.Adam(tiny_model.parameters(), lr=1e-4)
        path = tmp_path / "model.pt"
        save_checkpoint(path, tiny_model, config, step=3, optimizer=optimizer)
        _, _, step, optimizer_state = load_checkpoint(path)
        assert step == 3
        assert optimizer_state is not None

    def test_tampered_header_rejected(self, tmp_path, tiny_model):
        path = tmp_path / "model.pt"
        save_checkpoint(path, tiny_model, tiny_config(), step=0)
        payload = torch.load(path)
        payload["version"] = 999
        torch.save(payload, path)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)
        payload["version"] = 1
        payload["format"] = "something-else"
        torch.save(payload, path)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "garbage.pt"
        path.write_bytes(b"not a checkpoint at all")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_config_mismatch_rejected(self, tmp_path, tiny_model):
        path = tmp_path / "model.pt"
        save_checkpoint(path, tiny_model, tiny_config(), step=0)
        other = tiny_config(message_length=8)
        with pytest.raises(CheckpointError, match="message_length"):
            load_checkpoint(path, expected_config=other)

    def test_matching_expected_config_accepted(self, tmp_path, tiny_model):
        path = tmp_path / "model.pt"
        save_checkpoint(path, tiny_model, tiny_config(), step=0)
        loaded, _, _, _ = load_checkpoint(path, expected_config=tiny_config(steps=999))
        assert loaded.message_length == 4  # training fields may differ, architecture must match
