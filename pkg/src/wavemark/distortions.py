"""Parameterized attacks applied between embedding and extraction.

Every attack maps an encoded image to a same-shaped distorted image.
Some attacks (dropout, cropout) substitute pixels from the cover image, so
they take a :class:`NoiseContext` carrying both images plus a seed; given
``(spec, context)`` every attack is a pure function.

JPEG goes through a real baseline codec and is therefore not differentiable;
:func:`forward_asl` wraps any attack so its output keeps the attacked pixel
values while gradients flow as if the attack were the identity, which is what
lets end-to-end training see real compression.
"""

import io
import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .exceptions import ConfigError

KINDS = ("identity", "dropout", "cropout", "crop", "gf", "jpeg")
_PARAMLESS = ("identity",)

#: gray level used to pad outside the kept region of a crop
CROP_PAD_VALUE = 127.0 / 255.0


@dataclass(frozen=True)
class DistortionSpec:
    """One attack: a kind from :data:`KINDS` plus its single parameter.

    dropout/cropout/crop take a ratio in [0, 1], gf takes the blur sigma > 0,
    jpeg takes an integer quality in [1, 100]. Only jpeg is non-differentiable.
    """

    kind: str
    value: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown distortion {self.kind!r}; valid kinds: {', '.join(KINDS)}")
        if self.kind in _PARAMLESS:
            if self.value is not None:
                raise ConfigError(f"{self.kind} takes no parameter")
            return
        if self.value is None:
            raise ConfigError(f"{self.kind} requires a parameter")
        value = float(self.value)
        if self.kind in ("dropout", "cropout", "crop") and not 0.0 <= value <= 1.0:
            raise ConfigError(f"{self.kind} ratio must be in [0, 1], got {value}")
        if self.kind == "gf" and not value > 0.0:
            raise ConfigError(f"gf sigma must be positive, got {value}")
        if self.kind == "jpeg":
            if value != int(value) or not 1 <= value <= 100:
                raise ConfigError(f"jpeg quality must be an integer in [1, 100], got {self.value}")
        object.__setattr__(self, "value", value)

    @property
    def differentiable(self) -> bool:
        return self.kind != "jpeg"

    def __str__(self):
        if self.value is None:
            return self.kind
        return f"{self.kind}:{self.value:g}"


@dataclass
class NoiseContext:
    """Everything an attack may consume: both images and a seed for its draws."""

    cover: torch.Tensor
    encoded: torch.Tensor
    seed: int = 0

    def __post_init__(self):
        if self.cover.shape != self.encoded.shape:
            raise ValueError(
                f"cover and encoded shapes differ: {tuple(self.cover.shape)} vs {tuple(self.encoded.shape)}"
            )


def parse_distortion(text: str) -> DistortionSpec:
    """Parse one spec like ``"jpeg:50"`` or ``"identity"``."""
    name, _, arg = text.strip().partition(":")
    kind = name.strip().lower()
    if not arg:
        return DistortionSpec(kind)
    try:
        value = float(arg)
    except ValueError:
        raise ConfigError(f"cannot parse parameter {arg!r} in distortion {text!r}") from None
    return DistortionSpec(kind, value)


def parse_pool(text: str) -> list[DistortionSpec]:
    """Parse a comma list like ``"identity,dropout:0.3,crop:0.035,jpeg:50"``."""
    parts = [part for part in text.split(",") if part.strip()]
    if not parts:
        raise ConfigError("empty distortion pool")
    return [parse_distortion(part) for part in parts]


def sample_combined(pool, generator):
    """Draw one spec uniformly from the pool."""
    if not pool:
        raise ConfigError("empty distortion pool")
    index = int(torch.randint(len(pool), (1,), generator=generator))
    return pool[index]


def cropout_rect(ratio, height, width, generator):
    """Rectangle of area approximately ``ratio * H * W`` with aspect in [0.5, 2].

    Returns ``(top, left, rect_h, rect_w)``; the retained pixel count is exactly
    ``rect_h * rect_w``. A ratio too small for a single pixel yields an empty rect.
    """
    area = ratio * height * width
    if area < 1.0:
        return 0, 0, 0, 0
    aspect = 0.5 + 1.5 * float(torch.rand((), generator=generator))
    rect_h = max(1, min(height, round(math.sqrt(area * aspect))))
    rect_w = max(1, min(width, round(area / rect_h)))
    top = int(torch.randint(height - rect_h + 1, (1,), generator=generator))
    left = int(torch.randint(width - rect_w + 1, (1,), generator=generator))
    return top, left, rect_h, rect_w


def crop_rect(ratio, height, width, generator):
    """Square of side ``floor(sqrt(ratio * H * W))``, uniformly placed.

    Returns ``(top, left, side)``.
    """
    side = int(math.floor(math.sqrt(ratio * height * width)))
    side = min(side, height, width)
    if side == 0:
        return 0, 0, 0
    top = int(torch.randint(height - side + 1, (1,), generator=generator))
    left = int(torch.randint(width - side + 1, (1,), generator=generator))
    return top, left, side


def gaussian_kernel(sigma, dtype=torch.float64):
    """Normalized 2-D Gaussian of size ``2*ceil(2*sigma)+1``; sums to 1."""
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(2 * sigma)
    coords = torch.arange(-radius, radius + 1, dtype=dtype)
    line = torch.exp(-(coords**2) / (2.0 * sigma * sigma))
    line = line / line.sum()
    return torch.outer(line, line)


def _gaussian_filter(image, sigma):
    kernel = gaussian_kernel(sigma, dtype=torch.float64).to(image.dtype)
    channels = image.shape[-3]
    weight = kernel.view(1, 1, *kernel.shape).repeat(channels, 1, 1, 1)
    pad = kernel.shape[0] // 2
    padded = F.pad(image, (pad, pad, pad, pad), mode="reflect")
    return F.conv2d(padded, weight.to(image.device), groups=channels)


def _jpeg_roundtrip(image, quality):
    """Push one [C, H, W] image through a baseline JPEG codec at the given quality."""
    array = torch.round(torch.clamp(image.detach(), 0.0, 1.0) * 255.0).to(torch.uint8).cpu().numpy()
    if array.shape[0] == 1:
        pil = Image.fromarray(array[0], mode="L")
    elif array.shape[0] == 3:
        pil = Image.fromarray(np.transpose(array, (1, 2, 0)), mode="RGB")
    else:
        raise ValueError(f"jpeg supports 1 or 3 channels, got {array.shape[0]}")
    buffer = io.BytesIO()
    pil.save(buffer, format="JPEG", quality=int(quality))
    buffer.seek(0)
    decoded = np.asarray(Image.open(buffer).convert(pil.mode), dtype=np.float32) / 255.0
    if decoded.ndim == 2:
        decoded = decoded[None]
    else:
        decoded = np.transpose(decoded, (2, 0, 1))
    return torch.from_numpy(decoded).to(dtype=image.dtype, device=image.device)


def apply(spec: DistortionSpec, context: NoiseContext) -> torch.Tensor:
    """Apply one attack; the output always has the encoded image's shape.

    identity  : encoded, unchanged.
    dropout   : each pixel (all channels together) independently replaced by the
                cover pixel with probability p.
    cropout   : encoded pixels kept inside one random rectangle of area ratio p,
                cover pixels everywhere else.
    crop      : encoded pixels kept inside one random square of side
                floor(sqrt(p*H*W)); everything outside becomes the constant
                127/255 so the output keeps its size.
    gf        : depthwise convolution with a normalized Gaussian, reflect padding.
    jpeg      : 8-bit quantize, encode/decode through a baseline codec, back to [0, 1].
    """
    cover, encoded = context.cover, context.encoded
    if cover.shape != encoded.shape:
        raise ValueError("cover and encoded shapes differ")
    if spec.kind == "identity":
        return encoded

    batched = encoded.dim() == 4
    x = encoded if batched else encoded.unsqueeze(0)
    c = cover if batched else cover.unsqueeze(0)
    n, _, height, width = x.shape
    generator = torch.Generator().manual_seed(int(context.seed))

    if spec.kind == "dropout":
        mask = torch.rand((n, 1, height, width), generator=generator) < spec.value
        out = torch.where(mask.to(x.device), c, x)
    elif spec.kind == "cropout":
        keep = torch.zeros((n, 1, height, width), dtype=torch.bool)
        for i in range(n):
            top, left, rect_h, rect_w = cropout_rect(spec.value, height, width, generator)
            keep[i, :, top : top + rect_h, left : left + rect_w] = True
        out = torch.where(keep.to(x.device), x, c)
    elif spec.kind == "crop":
        keep = torch.zeros((n, 1, height, width), dtype=torch.bool)
        for i in range(n):
            top, left, side = crop_rect(spec.value, height, width, generator)
            keep[i, :, top : top + side, left : left + side] = True
        pad = torch.full_like(x, CROP_PAD_VALUE)
        out = torch.where(keep.to(x.device), x, pad)
    elif spec.kind == "gf":
        out = _gaussian_filter(x, spec.value)
    elif spec.kind == "jpeg":
        out = torch.stack([_jpeg_roundtrip(x[i], spec.value) for i in range(n)])
    else:  # pragma: no cover - rejected at construction
        raise ConfigError(f"unknown distortion {spec.kind!r}")

    return out if batched else out.squeeze(0)


class _PseudoNoise(torch.autograd.Function):
    """Value of the attacked image, gradient of the identity on the encoded image."""

    @staticmethod
    def forward(ctx, encoded, attacked):
        return attacked

    @staticmethod
    def backward(ctx, grad_output):
        return grad_output, None


def forward_asl(spec: DistortionSpec, context: NoiseContext) -> torch.Tensor:
    """Attack-simulation wrapper: treat the attack as additive pseudo-noise.

    The returned pixels equal :func:`apply` exactly (the attack difference is
    carried as a constant), while the gradient with respect to the encoded
    image is the identity, so non-differentiable attacks still let gradients
    reach the embedder.
    """
    attacked = apply(spec, context)
    return _PseudoNoise.apply(context.encoded, attacked.detach())


def apply_training(spec: DistortionSpec, context: NoiseContext) -> torch.Tensor:
    """Route an attack the way the training loop needs its gradients.

    Differentiable attacks pass through directly; non-differentiable ones go
    through :func:`forward_asl`.
    """
    if spec.differentiable:
        return apply(spec, context)
    return forward_asl(spec, context)
