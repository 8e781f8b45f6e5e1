"""Learned expansion of a bit vector to spatial watermark features and back.

The expander lifts an L-bit message to a redundant feature map matching the
half-resolution sub-band grid: dense layer to L' values, reshape to a small
map, a channel-lifting convolution, nearest-neighbour 2x upsampling stages,
then squeeze-and-excitation blocks. The extractor mirrors the same stages in
reverse and ends in a linear layer, so recovered values are unbounded and are
thresholded at 0.5 by :func:`harden`.
"""

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .exceptions import ConfigError


@dataclass(frozen=True)
class MessageGeometry:
    """Shape plan tying the message length to the half-resolution feature grid.

    ``rows * 2**upsamples == height/2`` (and likewise for columns), and
    ``expanded == rows * cols``, so ``upsamples`` nearest-neighbour doublings
    take the reshaped message map to the sub-band grid.
    """

    length: int
    expanded: int
    rows: int
    cols: int
    upsamples: int
    channels: int


def plan_geometry(length, height, width, channels=None, expanded=None, min_redundancy=4):
    """Choose (expanded length, reshape dims, upsampling count) for a message.

    When ``expanded`` is not given, picks the smallest realizable expanded
    length at least ``min_redundancy * length`` (falling back to ``>= length``
    for very long messages) so the feature map always carries more values than
    the raw payload.
    """
    if length < 1:
        raise ConfigError(f"message length must be >= 1, got {length}")
    if height % 2 or width % 2 or height < 2 or width < 2:
        raise ConfigError(f"image dims must be even and >= 2, got {height}x{width}")
    options = []
    u, h, w = 0, height // 2, width // 2
    while True:
        options.append((u, h, w))
        if h % 2 or w % 2:
            break
        u, h, w = u + 1, h // 2, w // 2

    if expanded is not None:
        if expanded < length:
            raise ConfigError(f"expanded length {expanded} is smaller than the message length {length}")
        match = [opt for opt in options if opt[1] * opt[2] == expanded]
        if not match:
            realizable = [h * w for _, h, w in options]
            raise ConfigError(
                f"expanded length {expanded} is not reachable by 2x upsampling from "
                f"{height}x{width}; realizable values: {realizable}"
            )
        chosen = match[0]
    else:
        chosen = None
        for opt in options:  # later options have smaller h*w
            if opt[1] * opt[2] >= min_redundancy * length:
                chosen = opt
        if chosen is None:
            for opt in options:
                if opt[1] * opt[2] >= length:
                    chosen = opt
        if chosen is None:
            raise ConfigError(
                f"message of length {length} does not fit a {height}x{width} image "
                f"(largest realizable expanded length is {options[0][1] * options[0][2]})"
            )

    channels = length if channels is None else channels
    if channels < 1:
        raise ConfigError(f"feature channel count must be >= 1, got {channels}")
    u, h, w = chosen
    return MessageGeometry(length=length, expanded=h * w, rows=h, cols=w, upsamples=u, channels=channels)


class SqueezeExcite(nn.Module):
    """Channel attention: globally pool, squeeze through a bottleneck, rescale."""

    def __init__(self, channels, reduction=8):
        super().__init__()
        hidden = max(channels // reduction, 1)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.excite = nn.Sequential(
            nn.Conv2d(channels, hidden, 1),
            nn.ReLU(inplace=True),
            nn.Conv2d(hidden, channels, 1),
            nn.Sigmoid(),
        )

    def forward(self, x):
        return x * self.excite(self.pool(x))


class MessageProcessor(nn.Module):
    """Expand an L-bit message to watermark features ``[channels, H/2, W/2]``."""

    def __init__(self, geometry: MessageGeometry, se_blocks=3, se_reduction=8, slope=0.2):
        super().__init__()
        self.geometry = geometry
        self.slope = slope
        self.fc = nn.Linear(geometry.length, geometry.expanded)
        self.lift = nn.Conv2d(1, geometry.channels, 3, padding=1)
        self.upsample = nn.ModuleList(
            nn.Conv2d(geometry.channels, geometry.channels, 3, padding=1)
            for _ in range(geometry.upsamples)
        )
        self.attention = nn.ModuleList(
            SqueezeExcite(geometry.channels, se_reduction) for _ in range(se_blocks)
        )

    def forward(self, bits):
        if bits.dim() not in (1, 2):
            raise ConfigError(f"message must be [L] or [B, L], got shape {tuple(bits.shape)}")
        if bits.shape[-1] != self.geometry.length:
            raise ConfigError(
                f"message has length {bits.shape[-1]}, processor is configured for {self.geometry.length}"
            )
        squeeze = bits.dim() == 1
        x = bits.unsqueeze(0) if squeeze else bits
        x = F.leaky_relu(self.fc(x), self.slope)
        x = x.reshape(-1, 1, self.geometry.rows, self.geometry.cols)
        x = F.leaky_relu(self.lift(x), self.slope)
        for conv in self.upsample:
            x = F.interpolate(x, scale_factor=2, mode="nearest")
            x = F.leaky_relu(conv(x), self.slope)
        for block in self.attention:
            x = block(x)
        return x.squeeze(0) if squeeze else x


class InverseMessageProcessor(nn.Module):
    """Contract watermark features back to soft per-bit values of length L."""

    def __init__(self, geometry: MessageGeometry, se_blocks=3, se_reduction=8, slope=0.2):
        super().__init__()
        self.geometry = geometry
        self.slope = slope
        self.attention = nn.ModuleList(
            SqueezeExcite(geometry.channels, se_reduction) for _ in range(se_blocks)
        )
        self.downsample = nn.ModuleList(
            nn.Conv2d(geometry.channels, geometry.channels, 3, stride=2, padding=1)
            for _ in range(geometry.upsamples)
        )
        self.drop = nn.Conv2d(geometry.channels, 1, 3, padding=1)
        self.fc = nn.Linear(geometry.expanded, geometry.length)

    def forward(self, features):
        if features.dim() not in (3, 4):
            raise ConfigError(
                f"features must be [C, H/2, W/2] or [B, C, H/2, W/2], got shape {tuple(features.shape)}"
            )
        geo = self.geometry
        expected = (geo.channels, geo.rows * 2**geo.upsamples, geo.cols * 2**geo.upsamples)
        if tuple(features.shape[-3:]) != expected:
            raise ConfigError(
                f"features have shape {tuple(features.shape[-3:])}, extractor expects {expected}"
            )
        squeeze = features.dim() == 3
        x = features.unsqueeze(0) if squeeze else features
        for block in self.attention:
            x = block(x)
        for conv in self.downsample:
            x = F.leaky_relu(conv(x), self.slope)
        x = F.leaky_relu(self.drop(x), self.slope)
        x = self.fc(x.reshape(x.shape[0], geo.expanded))
        return x.squeeze(0) if squeeze else x


def harden(soft):
    """Threshold soft recoveries at 0.5 into exact bits; ties round up to 1."""
    values = torch.as_tensor(soft)
    dtype = values.dtype if values.is_floating_point() else torch.float32
    return (values >= 0.5).to(dtype)
