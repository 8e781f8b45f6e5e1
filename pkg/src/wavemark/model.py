"""The end-to-end embedder/extractor assembled from its pieces.

Embedding: image -> Haar sub-bands -> coupling stack (joined with the expanded
message features) -> inverse Haar -> watermarked image.
Extraction runs the same coupling blocks in reverse from the sub-bands of the
received image, with a seeded Gaussian standing in for the leftover branch,
then contracts the message features back to soft bits.
"""

import torch
import torch.nn as nn

from .inn import CouplingStack, sample_aux
from .message import InverseMessageProcessor, MessageProcessor, plan_geometry
from .wavelet import haar_dwt, haar_iwt


class WatermarkModel(nn.Module):
    """Trainable blind watermarker; encode and decode share all coupling parameters."""

    def __init__(
        self,
        image_size=128,
        image_channels=3,
        message_length=64,
        num_blocks=16,
        message_channels=None,
        expanded_length=None,
        se_blocks=3,
        se_reduction=8,
        coupling_scale=2.0,
        dense_growth=32,
        dense_depth=5,
    ):
        super().__init__()
        self.image_size = image_size
        self.image_channels = image_channels
        self.geometry = plan_geometry(
            message_length, image_size, image_size, channels=message_channels, expanded=expanded_length
        )
        self.processor = MessageProcessor(self.geometry, se_blocks=se_blocks, se_reduction=se_reduction)
        self.extractor = InverseMessageProcessor(self.geometry, se_blocks=se_blocks, se_reduction=se_reduction)
        self.coupling = CouplingStack(
            num_blocks,
            image_channels * 4,
            self.geometry.channels,
            gain_scale=coupling_scale,
            growth=dense_growth,
            depth=dense_depth,
        )

    @classmethod
    def from_config(cls, config):
        return cls(
            image_size=config.image_size,
            image_channels=config.image_channels,
            message_length=config.message_length,
            num_blocks=config.num_blocks,
            message_channels=config.message_channels,
            expanded_length=config.expanded_length,
            se_blocks=config.se_blocks,
            se_reduction=config.se_reduction,
            coupling_scale=config.coupling_scale,
            dense_growth=config.dense_growth,
            dense_depth=config.dense_depth,
        )

    @property
    def message_length(self):
        return self.geometry.length

    def _check_image(self, image):
        if image.dim() not in (3, 4):
            raise ValueError(f"image must be [C, H, W] or [B, C, H, W], got shape {tuple(image.shape)}")
        expected = (self.image_channels, self.image_size, self.image_size)
        if tuple(image.shape[-3:]) != expected:
            raise ValueError(f"image has shape {tuple(image.shape[-3:])}, model expects {expected}")

    def aux_shape(self, batch_size=None):
        """Shape of the Gaussian stand-in for the leftover branch."""
        geo = self.geometry
        spatial = (self.image_size // 2, self.image_size // 2)
        if batch_size is None:
            return (geo.channels, *spatial)
        return (batch_size, geo.channels, *spatial)

    def encode(self, image, message):
        """Embed ``message`` into ``image``; returns ``(encoded_image, leftover)``."""
        self._check_image(image)
        if (image.dim() == 4) != (message.dim() == 2):
            raise ValueError("image and message must both be batched or both be single")
        if image.dim() == 4 and message.shape[0] != image.shape[0]:
            raise ValueError(f"batch sizes differ: {image.shape[0]} images vs {message.shape[0]} messages")
        cover_features = haar_dwt(image)
        message_features = self.processor(message)
        encoded_features, leftover = self.coupling.encode(cover_features, message_features)
        return haar_iwt(encoded_features), leftover

    def decode(self, image, aux=None, aux_seed=0, zero_aux=False, return_features=False):
        """Recover soft bit values from a (possibly distorted) image.

        ``aux`` defaults to a Gaussian sample reproducible from ``aux_seed``
        (all zeros with ``zero_aux=True``). With ``return_features=True`` the
        reconstructed image-branch features are returned as well.
        """
        self._check_image(image)
        features = haar_dwt(image)
        if aux is None:
            batch = image.shape[0] if image.dim() == 4 else None
            aux = sample_aux(
                self.aux_shape(batch), seed=aux_seed, zero=zero_aux,
                dtype=features.dtype, device=features.device,
            )
        recovered_features, message_features = self.coupling.decode(features, aux)
        soft = self.extractor(message_features)
        if return_features:
            return soft, recovered_features
        return soft
