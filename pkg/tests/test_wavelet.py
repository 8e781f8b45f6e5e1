"""Haar analysis/synthesis against an explicit matrix oracle."""

import numpy as np
import pytest
import torch

from wavemark import extract_ll, haar_dwt, haar_iwt

# orthonormal analysis matrix acting on a flattened 2x2 block (a, b, c, d):
# rows produce (LL, HL, LH, HH)
HAAR_MATRIX = 0.5 * np.array(
    [
        [1, 1, 1, 1],
        [1, -1, 1, -1],
        [1, 1, -1, -1],
        [1, -1, -1, 1],
    ],
    dtype=np.float64,
)


def matrix_dwt(image):
    """Oracle: apply HAAR_MATRIX to every non-overlapping 2x2 block."""
    image = np.asarray(image, dtype=np.float64)
    c, h, w = image.shape
    out = np.zeros((4 * c, h // 2, w // 2))
    for ch in range(c):
        for i in range(h // 2):
            for j in range(w // 2):
                block = image[ch, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2].reshape(4)
                out[4 * ch : 4 * ch + 4, i, j] = HAAR_MATRIX @ block
    return out


def matrix_iwt(features):
    """Oracle: invert via the matrix inverse (== transpose, orthonormal)."""
    features = np.asarray(features, dtype=np.float64)
    c4, h2, w2 = features.shape
    inverse = np.linalg.inv(HAAR_MATRIX)
    out = np.zeros((c4 // 4, 2 * h2, 2 * w2))
    for ch in range(c4 // 4):
        for i in range(h2):
            for j in range(w2):
                block = inverse @ features[4 * ch : 4 * ch + 4, i, j]
                out[ch, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = block.reshape(2, 2)
    return out


def test_single_block_example():
    image = torch.tensor([[[1.0, 2.0], [3.0, 4.0]]])
    bands = haar_dwt(image)
    assert bands.shape == (4, 1, 1)
    assert bands.flatten().tolist() == [5.0, -1.0, -2.0, 0.0]


def test_single_block_inverse_example():
    features = torch.tensor([5.0, -1.0, -2.0, 0.0]).view(4, 1, 1)
    image = haar_iwt(features)
    assert image.flatten().tolist() == [1.0, 2.0, 3.0, 4.0]


@pytest.mark.parametrize("value", [0.0, 0.25, 1.0])
def test_constant_image(value):
    image = torch.full((3, 8, 8), value)
    bands = haar_dwt(image)
    bands = bands.reshape(3, 4, 4, 4)
    assert torch.allclose(bands[:, 0], torch.full((3, 4, 4), 2 * value), atol=1e-7)
    assert torch.allclose(bands[:, 1:], torch.zeros(3, 3, 4, 4), atol=1e-7)


def test_matches_matrix_oracle():
    generator = torch.Generator().manual_seed(0)
    image = torch.rand(3, 8, 6, generator=generator)
    expected = matrix_dwt(image.numpy())
    actual = haar_dwt(image).numpy()
    np.testing.assert_allclose(actual, expected, atol=1e-6)


def test_inverse_matches_matrix_oracle():
    generator = torch.Generator().manual_seed(1)
    features = torch.rand(8, 4, 5, generator=generator)
    expected = matrix_iwt(features.numpy())
    actual = haar_iwt(features).numpy()
    np.testing.assert_allclose(actual, expected, atol=1e-6)


@pytest.mark.parametrize("shape", [(1, 2, 2), (3, 64, 64), (3, 128, 128), (1, 4, 10)])
def test_round_trip(shape):
    generator = torch.Generator().manual_seed(2)
    image = torch.rand(*shape, generator=generator)
    back = haar_iwt(haar_dwt(image))
    assert (back - image).abs().max() < 1e-6


def test_round_trip_other_direction():
    generator = torch.Generator().manual_seed(3)
    features = torch.rand(12, 8, 8, generator=generator)
    back = haar_dwt(haar_iwt(features))
    assert (back - features).abs().max() < 1e-6


def test_energy_preservation():
    generator = torch.Generator().manual_seed(4)
    image = torch.rand(3, 32, 32, generator=generator, dtype=torch.float64)
    bands = haar_dwt(image)
    energy_in = (image**2).sum()
    energy_out = (bands**2).sum()
    assert abs(energy_in - energy_out) / energy_in < 1e-5


def test_linearity():
    generator = torch.Generator().manual_seed(5)
    x = torch.rand(3, 16, 16, generator=generator, dtype=torch.float64)
    y = torch.rand(3, 16, 16, generator=generator, dtype=torch.float64)
    combined = haar_dwt(0.7 * x - 1.3 * y)
    separate = 0.7 * haar_dwt(x) - 1.3 * haar_dwt(y)
    assert torch.allclose(combined, separate, atol=1e-12)


def test_batched_matches_single():
    generator = torch.Generator().manual_seed(6)
    batch = torch.rand(4, 3, 8, 8, generator=generator)
    stacked = torch.stack([haar_dwt(batch[i]) for i in range(4)])
    assert torch.equal(haar_dwt(batch), stacked)


def test_zero_features_give_zero_image():
    assert torch.equal(haar_iwt(torch.zeros(4, 3, 3)), torch.zeros(1, 6, 6))


def test_extract_ll_matches_dwt_channels():
    generator = torch.Generator().manual_seed(7)
    image = torch.rand(3, 10, 12, generator=generator)
    full = haar_dwt(image)
    assert torch.equal(extract_ll(image), full[0::4])


def test_extract_ll_examples():
    image = torch.tensor([[[1.0, 2.0], [3.0, 4.0]]])
    assert extract_ll(image).flatten().tolist() == [5.0]
    constant = torch.full((3, 6, 6), 0.5)
    assert torch.allclose(extract_ll(constant), torch.full((3, 3, 3), 1.0), atol=1e-7)


def test_jacobian_matches_finite_differences():
    # the map is linear, so the Jacobian is constant; compare entry-wise
    image = torch.rand(1, 4, 4, dtype=torch.float64)
    jac = torch.autograd.functional.jacobian(haar_dwt, image)
    jac = jac.reshape(16, 16)
    eps = 1e-5
    fd = torch.zeros(16, 16, dtype=torch.float64)
    flat = image.view(-1)
    for k in range(16):
        original = flat[k].item()
        flat[k] = original + eps
        hi = haar_dwt(image).reshape(-1)
        flat[k] = original - eps
        lo = haar_dwt(image).reshape(-1)
        flat[k] = original
        fd[:, k] = (hi - lo) / (2 * eps)
    scale = jac.abs().max()
    assert ((jac - fd).abs().max() / scale) < 1e-4


@pytest.mark.parametrize("shape", [(3, 5, 8), (3, 8, 5), (1, 1, 2)])
def test_odd_dimensions_rejected(shape):
    with pytest.raises(ValueError):
        haar_dwt(torch.zeros(*shape))
    with pytest.raises(ValueError):
        extract_ll(torch.zeros(*shape))


def test_bad_channel_count_rejected():
    with pytest.raises(ValueError):
        haar_iwt(torch.zeros(6, 4, 4))


def test_non_float_rejected():
    with pytest.raises(TypeError):
        haar_dwt(torch.zeros(1, 2, 2, dtype=torch.int64))
