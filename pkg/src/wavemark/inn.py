"""Invertible coupling blocks operating on a pair of feature branches.

One block transforms the image branch ``b1`` and the message branch ``b2`` as

    b1' = b1 + phi(b2)
    b2' = b2 * exp(k * sigmoid(rho(b1'))) + eta(b1')

and its inverse solves the same two lines backwards with the identical
parameters, so embedding and extraction share one set of weights.
``phi``, ``rho`` and ``eta`` are dense convolution blocks whose final layer is
zero-initialized: a freshly constructed stack is the identity on ``b1``.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .exceptions import ConfigError

# sigmoid output is clamped away from {0, 1} so exp stays finite even when
# rho saturates on pathological activations
_SIGMOID_EPS = 1e-6


class DenseBlock(nn.Module):
    """Densely connected conv stack: every layer sees all previous features.

    ``depth`` counts convolutions in total: ``depth - 1`` growth layers with
    leaky-ReLU activations plus a final 3x3 projection to ``out_channels``.
    """

    def __init__(self, in_channels, out_channels, growth=32, depth=5, slope=0.2, zero_init=True):
        super().__init__()
        if depth < 2:
            raise ConfigError(f"dense block needs at least 2 conv layers, got depth={depth}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.slope = slope
        self.grow = nn.ModuleList()
        channels = in_channels
        for _ in range(depth - 1):
            self.grow.append(nn.Conv2d(channels, growth, 3, padding=1))
            channels += growth
        self.proj = nn.Conv2d(channels, out_channels, 3, padding=1)
        if zero_init:
            nn.init.zeros_(self.proj.weight)
            nn.init.zeros_(self.proj.bias)

    def forward(self, x):
        if x.shape[-3] != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {x.shape[-3]}")
        feats = [x]
        for conv in self.grow:
            feats.append(F.leaky_relu(conv(torch.cat(feats, dim=-3)), self.slope))
        return self.proj(torch.cat(feats, dim=-3))


class CouplingBlock(nn.Module):
    """One invertible block; ``forward`` and ``inverse`` share all parameters."""

    def __init__(self, image_channels, message_channels, gain_scale=2.0, growth=32, depth=5):
        super().__init__()
        if gain_scale <= 0:
            raise ConfigError(f"gain scale must be positive, got {gain_scale}")
        self.gain_scale = float(gain_scale)
        self.phi = DenseBlock(message_channels, image_channels, growth=growth, depth=depth)
        self.rho = DenseBlock(image_channels, message_channels, growth=growth, depth=depth)
        self.eta = DenseBlock(image_channels, message_channels, growth=growth, depth=depth)

    def _gain(self, b1_new):
        s = torch.sigmoid(self.rho(b1_new)).clamp(_SIGMOID_EPS, 1.0 - _SIGMOID_EPS)
        return torch.exp(self.gain_scale * s)

    def forward(self, b1, b2):
        b1_new = b1 + self.phi(b2)
        b2_new = b2 * self._gain(b1_new) + self.eta(b1_new)
        return b1_new, b2_new

    def inverse(self, b1_new, b2_new):
        # dividing by the forward gain (rather than multiplying by the
        # separately-rounded reciprocal) keeps round trips tight
        b2 = (b2_new - self.eta(b1_new)) / self._gain(b1_new)
        b1 = b1_new - self.phi(b2)
        return b1, b2


class CouplingStack(nn.Module):
    """A chain of coupling blocks run first-to-last to embed, last-to-first to extract."""

    def __init__(self, num_blocks, image_channels, message_channels, gain_scale=2.0, growth=32, depth=5):
        super().__init__()
        if num_blocks < 1:
            raise ConfigError(f"need at least one coupling block, got {num_blocks}")
        self.image_channels = image_channels
        self.message_channels = message_channels
        self.blocks = nn.ModuleList(
            CouplingBlock(image_channels, message_channels, gain_scale=gain_scale, growth=growth, depth=depth)
            for _ in range(num_blocks)
        )

    def _check(self, image_branch, message_branch):
        if image_branch.shape[-3] != self.image_channels:
            raise ValueError(
                f"image branch has {image_branch.shape[-3]} channels, expected {self.image_channels}"
            )
        if message_branch.shape[-3] != self.message_channels:
            raise ValueError(
                f"message branch has {message_branch.shape[-3]} channels, expected {self.message_channels}"
            )
        if image_branch.shape[-2:] != message_branch.shape[-2:]:
            raise ValueError(
                f"branch spatial dims differ: {tuple(image_branch.shape[-2:])} vs "
                f"{tuple(message_branch.shape[-2:])}"
            )

    def encode(self, cover_features, message_features):
        """Run all blocks forward.

        Returns ``(encoded_features, leftover)``: the transformed image branch
        plus whatever remains on the message branch. The leftover is not needed
        for extraction; a Gaussian sample stands in for it at decode time.
        """
        self._check(cover_features, message_features)
        b1, b2 = cover_features, message_features
        for block in self.blocks:
            b1, b2 = block(b1, b2)
        return b1, b2

    def decode(self, features, aux):
        """Run all blocks inverse, last to first.

        Returns ``(recovered_features, message_features)``; only the second
        output feeds the message extractor.
        """
        self._check(features, aux)
        b1, b2 = features, aux
        for block in reversed(self.blocks):
            b1, b2 = block.inverse(b1, b2)
        return b1, b2


def sample_aux(shape, seed=0, zero=False, dtype=torch.float32, device=None):
    """Standard-normal stand-in for the leftover branch, reproducible from the seed."""
    if zero:
        return torch.zeros(shape, dtype=dtype, device=device)
    generator = torch.Generator().manual_seed(int(seed))
    aux = torch.randn(shape, generator=generator, dtype=dtype)
    return aux.to(device) if device is not None else aux
