"""Shared fixtures and small numerical helpers."""

import pytest
import torch
import torch.nn.functional as F

from wavemark import TrainConfig, WatermarkModel


def synthetic_images(count, size, channels=3, seed=123):
    """Natural-ish fixtures: smooth base plus mid-frequency texture, in [0, 1]."""
    generator = torch.Generator().manual_seed(seed)
    base = F.interpolate(
        torch.rand(count, channels, 4, 4, generator=generator),
        size=(size, size), mode="bicubic", align_corners=False,
    )
    texture = F.interpolate(
        torch.rand(count, channels, max(size // 4, 1), max(size // 4, 1), generator=generator),
        size=(size, size), mode="bilinear",
    )
    return (0.7 * base + 0.3 * texture).clamp(0.0, 1.0)


def randomize_parameters(module, std=0.02, seed=0):
    """Overwrite every parameter with N(0, std^2) draws (covers zero-init layers too)."""
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for parameter in module.parameters():
            parameter.copy_(torch.randn(parameter.shape, generator=generator) * std)
    return module


def central_difference(fn, tensor, index, eps):
    """Central finite difference of scalar ``fn()`` wrt one flat element of ``tensor``."""
    flat = tensor.data.view(-1)
    original = flat[index].item()
    flat[index] = original + eps
    hi = fn()
    flat[index] = original - eps
    lo = fn()
    flat[index] = original
    return (hi - lo) / (2.0 * eps)


def assert_grad_close(analytic, numeric, rel=1e-3, floor=1e-7):
    """1e-3 relative agreement, with a floor covering finite-difference noise."""
    assert abs(analytic - numeric) <= rel * max(abs(analytic), abs(numeric)) + floor, (
        f"analytic {analytic} vs numeric {numeric}"
    )


def tiny_config(**overrides):
    """Smallest config that still exercises every stage (16x16 images, 4 bits)."""
    defaults = dict(
        image_size=16,
        image_channels=3,
        message_length=4,
        num_blocks=2,
        se_blocks=1,
        dense_growth=4,
        dense_depth=2,
        batch_size=2,
        learning_rate=1e-4,
        steps=5,
        distortions="identity",
        seed=0,
    )
    defaults.update(overrides)
    return TrainConfig(**defaults)


@pytest.fixture
def tiny_model():
    torch.manual_seed(0)
    return WatermarkModel.from_config(tiny_config())


@pytest.fixture
def image_dir(tmp_path):
    """Directory of 8 small PNG images."""
    from wavemark.data import save_image

    images = synthetic_images(8, 16, seed=7)
    root = tmp_path / "images"
    root.mkdir()
    for i in range(images.shape[0]):
        save_image(images[i], root / f"img_{i:02d}.png")
    return root
