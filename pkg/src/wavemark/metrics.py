"""Evaluation metrics: bit error rate, PSNR and SSIM, plus the report container.

PSNR and SSIM default to measuring what a viewer of the stored file would see:
both images are quantized to 8 bits first and treated on the 0..255 scale,
with all color channels pooled for PSNR. Pass ``quantize=False`` to measure
raw float images instead (peak 1.0).
"""

import json
import math
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F

from .message import harden


def quantize_image(image):
    """8-bit form of a [0, 1] float image: ``round(clamp(x, 0, 1) * 255)``."""
    return torch.round(torch.clamp(image, 0.0, 1.0) * 255.0).to(torch.uint8)


def ber(message, recovered):
    """Fraction of bits that differ after thresholding both arguments."""
    bits = harden(message)
    guess = harden(recovered)
    if bits.shape != guess.shape:
        raise ValueError(f"message shapes differ: {tuple(bits.shape)} vs {tuple(guess.shape)}")
    return float((bits != guess).double().mean())


def psnr(reference, test, quantize=True):
    """Peak signal-to-noise ratio in dB over all channels jointly.

    Identical inputs give ``math.inf`` (serialized as the string ``"inf"`` in
    reports).
    """
    if reference.shape != test.shape:
        raise ValueError(f"image shapes differ: {tuple(reference.shape)} vs {tuple(test.shape)}")
    if quantize:
        a = quantize_image(reference).double()
        b = quantize_image(test).double()
        peak = 255.0
    else:
        a = reference.double()
        b = test.double()
        peak = 1.0
    mse = torch.mean((a - b) ** 2).item()
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_window(size, sigma, dtype):
    coords = torch.arange(size, dtype=dtype) - (size - 1) / 2.0
    line = torch.exp(-(coords**2) / (2.0 * sigma * sigma))
    line = line / line.sum()
    return torch.outer(line, line)


def ssim(reference, test, quantize=True, window_size=11, sigma=1.5, k1=0.01, k2=0.03):
    """Mean structural similarity over an [C, H, W] image pair.

    Gaussian window (11 taps, sigma 1.5 by default), stabilizers
    ``C1=(k1*255)^2`` and ``C2=(k2*255)^2``, local statistics taken on valid
    windows only, averaged over channels.
    """
    if reference.shape != test.shape:
        raise ValueError(f"image shapes differ: {tuple(reference.shape)} vs {tuple(test.shape)}")
    if reference.dim() != 3:
        raise ValueError(f"expected [C, H, W], got shape {tuple(reference.shape)}")
    if min(reference.shape[-2:]) < window_size:
        raise ValueError(f"image smaller than the {window_size}x{window_size} SSIM window")
    if quantize:
        a = quantize_image(reference).double()
        b = quantize_image(test).double()
    else:
        a = reference.double() * 255.0
        b = test.double() * 255.0
    c1 = (k1 * 255.0) ** 2
    c2 = (k2 * 255.0) ** 2
    window = _gaussian_window(window_size, sigma, torch.float64).view(1, 1, window_size, window_size)
    window = window.to(a.device)

    x = a.unsqueeze(1)  # channels become the batch: [C, 1, H, W]
    y = b.unsqueeze(1)
    mu_x = F.conv2d(x, window)
    mu_y = F.conv2d(y, window)
    var_x = F.conv2d(x * x, window) - mu_x**2
    var_y = F.conv2d(y * y, window) - mu_y**2
    cov = F.conv2d(x * y, window) - mu_x * mu_y
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / ((mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2))
    return float(ssim_map.mean())


def _encode_float(value):
    if value is None or math.isfinite(value):
        return value
    return "inf" if value > 0 else "-inf"


def _decode_float(value):
    if value == "inf":
        return math.inf
    if value == "-inf":
        return -math.inf
    return value


@dataclass
class MetricsReport:
    """One evaluation result: image quality plus per-distortion bit error rates."""

    psnr_db: float
    ssim: float
    ber: dict = field(default_factory=dict)
    strength: float = 1.0
    images: int = 0
    message_length: int = 0

    def to_dict(self):
        return {
            "psnr_db": _encode_float(self.psnr_db),
            "ssim": self.ssim,
            "ber": dict(self.ber),
            "strength": self.strength,
            "images": self.images,
            "message_length": self.message_length,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        return cls(
            psnr_db=_decode_float(data["psnr_db"]),
            ssim=data["ssim"],
            ber=dict(data.get("ber", {})),
            strength=data.get("strength", 1.0),
            images=data.get("images", 0),
            message_length=data.get("message_length", 0),
        )
