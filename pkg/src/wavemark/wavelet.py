"""Single-level Haar transforms between pixel space and sub-band space.

Orthonormal convention: each non-overlapping 2x2 pixel block
``[[a, b], [c, d]]`` maps to

    LL = (a + b + c + d) / 2
    HL = (a - b + c - d) / 2
    LH = (a + b - c - d) / 2
    HH = (a - b - c + d) / 2

so round trips reconstruct the input and total energy is preserved.
Sub-bands are interleaved per source channel: output channels
``4c .. 4c+3`` hold ``(LL, HL, LH, HH)`` of input channel ``c``.

Arithmetic runs at float64 internally, where both directions are exact; the
only round-trip error left in ``haar_iwt(haar_dwt(x))`` is the rounding of
the sub-bands to the input dtype, a couple of ulps at most.
"""

import torch
import torch.nn.functional as F


def _as_work_dtype(x: torch.Tensor) -> torch.Tensor:
    if not x.is_floating_point():
        raise TypeError(f"expected a floating-point tensor, got {x.dtype}")
    return x.double() if x.dtype != torch.float64 else x


def haar_dwt(image: torch.Tensor) -> torch.Tensor:
    """Analyze an image ``[..., C, H, W]`` into sub-bands ``[..., 4C, H/2, W/2]``."""
    if image.dim() < 3:
        raise ValueError(f"expected at least [C, H, W], got shape {tuple(image.shape)}")
    height, width = image.shape[-2:]
    if height % 2 or width % 2:
        raise ValueError(f"spatial dims must be even for 2x2 Haar analysis, got {height}x{width}")
    x = _as_work_dtype(image)
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    ll = (a + b + c + d) / 2
    hl = (a - b + c - d) / 2
    lh = (a + b - c - d) / 2
    hh = (a - b - c + d) / 2
    bands = torch.stack((ll, hl, lh, hh), dim=-3)  # [..., C, 4, H/2, W/2]
    out = bands.reshape(*image.shape[:-3], image.shape[-3] * 4, height // 2, width // 2)
    return out.to(image.dtype)


def haar_iwt(features: torch.Tensor) -> torch.Tensor:
    """Synthesize sub-bands ``[..., 4C, H/2, W/2]`` back to pixels ``[..., C, H, W]``.

    Exact linear inverse of :func:`haar_dwt` (the analysis map is orthonormal,
    so the inverse is its transpose, which has the same coefficients).
    """
    if features.dim() < 3:
        raise ValueError(f"expected at least [4C, H/2, W/2], got shape {tuple(features.shape)}")
    channels = features.shape[-3]
    if channels % 4:
        raise ValueError(f"channel count must be divisible by 4, got {channels}")
    h2, w2 = features.shape[-2:]
    x = _as_work_dtype(features)
    bands = x.reshape(*features.shape[:-3], channels // 4, 4, h2, w2)
    ll, hl, lh, hh = bands.unbind(dim=-3)
    a = (ll + hl + lh + hh) / 2
    b = (ll - hl + lh - hh) / 2
    c = (ll + hl - lh - hh) / 2
    d = (ll - hl - lh + hh) / 2
    # pixel_shuffle scatters channel index i*2+j to pixel offset (i, j)
    quads = torch.stack((a, b, c, d), dim=-3).reshape(*features.shape[:-3], channels, h2, w2)
    return F.pixel_shuffle(quads, 2).to(features.dtype)


def extract_ll(image: torch.Tensor) -> torch.Tensor:
    """Return only the LL sub-band of :func:`haar_dwt`, shape ``[..., C, H/2, W/2]``."""
    if image.dim() < 3:
        raise ValueError(f"expected at least [C, H, W], got shape {tuple(image.shape)}")
    height, width = image.shape[-2:]
    if height % 2 or width % 2:
        raise ValueError(f"spatial dims must be even for 2x2 Haar analysis, got {height}x{width}")
    x = _as_work_dtype(image)
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    return ((a + b + c + d) / 2).to(image.dtype)
