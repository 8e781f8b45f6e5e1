"""Trainable blind image watermarking in the Haar sub-band domain.

An L-bit message is expanded to redundant spatial features, embedded into the
wavelet sub-bands of a cover image by a stack of invertible coupling blocks,
and recovered by running the same blocks in reverse — so the embedder and the
extractor share every parameter. A configurable noise layer (including real
JPEG behind a gradient-transparent wrapper) makes the recovery robust to
distortions.
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig, config_from_dict, load_config, save_config
from .distortions import (
    DistortionSpec,
    NoiseContext,
    apply,
    apply_training,
    forward_asl,
    parse_distortion,
    parse_pool,
    sample_combined,
)
from .estimator import Watermarker
from .exceptions import (
    CheckpointError,
    ConfigError,
    DataError,
    TrainingDiverged,
    WavemarkError,
)
from .inn import CouplingBlock, CouplingStack, DenseBlock, sample_aux
from .message import (
    InverseMessageProcessor,
    MessageGeometry,
    MessageProcessor,
    SqueezeExcite,
    harden,
    plan_geometry,
)
from .metrics import MetricsReport, ber, psnr, quantize_image, ssim
from .model import WatermarkModel
from .objectives import (
    LossWeights,
    apply_strength,
    decoding_loss,
    encoding_loss,
    low_band_loss,
    total_loss,
)
from .train import Trainer, evaluate
from .wavelet import extract_ll, haar_dwt, haar_iwt

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "ConfigError",
    "CouplingBlock",
    "CouplingStack",
    "DataError",
    "DenseBlock",
    "DistortionSpec",
    "InverseMessageProcessor",
    "LossWeights",
    "MessageGeometry",
    "MessageProcessor",
    "MetricsReport",
    "NoiseContext",
    "SqueezeExcite",
    "TrainConfig",
    "Trainer",
    "TrainingDiverged",
    "Watermarker",
    "WatermarkModel",
    "WavemarkError",
    "apply",
    "apply_strength",
    "apply_training",
    "ber",
    "config_from_dict",
    "decoding_loss",
    "encoding_loss",
    "evaluate",
    "extract_ll",
    "forward_asl",
    "haar_dwt",
    "haar_iwt",
    "harden",
    "load_checkpoint",
    "load_config",
    "low_band_loss",
    "parse_distortion",
    "parse_pool",
    "plan_geometry",
    "psnr",
    "quantize_image",
    "sample_aux",
    "sample_combined",
    "save_checkpoint",
    "save_config",
    "ssim",
    "total_loss",
]
