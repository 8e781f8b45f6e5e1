"""Training objectives and the inference-time strength adjustment.

Three mean-squared-error terms drive training: pixel fidelity of the encoded
image, fidelity of the recovered bits, and fidelity of the LL sub-band (which
pushes the watermark energy into high-frequency content where it is less
visible). The total is their weighted sum.
"""

from dataclasses import dataclass

import torch

from .wavelet import extract_ll


@dataclass(frozen=True)
class LossWeights:
    """Weights of the three loss terms."""

    encoding: float = 0.1
    decoding: float = 100.0
    low_band: float = 0.1


def _check_same_shape(a, b, what):
    if a.shape != b.shape:
        raise ValueError(f"{what} shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}")


def encoding_loss(cover, encoded):
    """Mean squared pixel error between cover and encoded images."""
    _check_same_shape(cover, encoded, "image")
    return torch.mean((cover - encoded) ** 2)


def decoding_loss(message, recovered):
    """Mean squared error between the bit vector and the soft recovery."""
    _check_same_shape(message, recovered, "message")
    return torch.mean((message - recovered) ** 2)


def low_band_loss(cover, encoded):
    """Mean squared error between the LL sub-bands of the two images."""
    _check_same_shape(cover, encoded, "image")
    return torch.mean((extract_ll(cover) - extract_ll(encoded)) ** 2)


def total_loss(encoding, decoding, low_band, weights: LossWeights = LossWeights()):
    """Weighted sum of the three loss terms."""
    return weights.encoding * encoding + weights.decoding * decoding + weights.low_band * low_band


def apply_strength(cover, encoded, factor):
    """Rescale the watermark residual: ``cover + factor * (encoded - cover)``.

    ``factor=1`` returns the encoded image, ``factor=0`` the cover; values in
    between (or above 1) trade invisibility against robustness at inference.
    """
    if factor < 0:
        raise ValueError(f"strength factor must be >= 0, got {factor}")
    _check_same_shape(cover, encoded, "image")
    return cover + factor * (encoded - cover)
