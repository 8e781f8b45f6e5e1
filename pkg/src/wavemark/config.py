"""Training/architecture configuration and its JSON file form.

The config file is a flat JSON object whose keys mirror :class:`TrainConfig`
fields; unknown keys are rejected with the list of valid ones so typos fail
fast. The subset in :data:`ARCHITECTURE_FIELDS` determines network shape and
must match when loading a checkpoint.
"""

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import torch

from .distortions import parse_pool
from .exceptions import ConfigError
from .objectives import LossWeights

#: fields that fix the network architecture; checkpoints refuse to load into a
#: config that differs on any of these
ARCHITECTURE_FIELDS = (
    "image_size",
    "image_channels",
    "message_length",
    "num_blocks",
    "message_channels",
    "expanded_length",
    "se_blocks",
    "se_reduction",
    "coupling_scale",
    "dense_growth",
    "dense_depth",
)


@dataclass
class TrainConfig:
    """Everything a training run needs, with defaults for 128x128 RGB images."""

    image_size: int = 128
    image_channels: int = 3
    message_length: int = 64
    num_blocks: int = 16
    message_channels: int | None = None  # defaults to message_length
    expanded_length: int | None = None  # defaults to the smallest realizable value >= 4*L
    se_blocks: int = 3
    se_reduction: int = 8
    coupling_scale: float = 2.0
    dense_growth: int = 32
    dense_depth: int = 5
    batch_size: int = 16
    learning_rate: float = 1e-5
    steps: int = 1000
    distortions: str = "identity"
    weight_encoding: float = 0.1
    weight_decoding: float = 100.0
    weight_low_band: float = 0.1
    seed: int = 0
    precision: str = "float32"
    log_every: int = 50

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.image_size < 2 or self.image_size % 2:
            raise ConfigError(f"image_size must be even and >= 2, got {self.image_size}")
        if self.image_channels not in (1, 3):
            raise ConfigError(f"image_channels must be 1 or 3, got {self.image_channels}")
        for name in ("message_length", "num_blocks", "batch_size", "steps", "dense_growth", "log_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.dense_depth < 2:
            raise ConfigError(f"dense_depth must be >= 2, got {self.dense_depth}")
        if self.se_blocks < 0:
            raise ConfigError(f"se_blocks must be >= 0, got {self.se_blocks}")
        if self.se_reduction < 1:
            raise ConfigError(f"se_reduction must be >= 1, got {self.se_reduction}")
        if self.coupling_scale <= 0:
            raise ConfigError(f"coupling_scale must be positive, got {self.coupling_scale}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        for name in ("weight_encoding", "weight_decoding", "weight_low_band"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.precision not in ("float32", "float64"):
            raise ConfigError(f"precision must be 'float32' or 'float64', got {self.precision!r}")
        parse_pool(self.distortions)

    @property
    def loss_weights(self) -> LossWeights:
        return LossWeights(self.weight_encoding, self.weight_decoding, self.weight_low_band)

    @property
    def torch_dtype(self):
        return torch.float64 if self.precision == "float64" else torch.float32

    def to_dict(self):
        return dataclasses.asdict(self)

    def architecture(self):
        return {name: getattr(self, name) for name in ARCHITECTURE_FIELDS}


def config_from_dict(data: dict) -> TrainConfig:
    """Build a config from a plain dict, rejecting unknown keys."""
    valid = {f.name for f in dataclasses.fields(TrainConfig)}
    unknown = sorted(set(data) - valid)
    if unknown:
        raise ConfigError(
            f"unknown config keys: {', '.join(unknown)}; valid keys: {', '.join(sorted(valid))}"
        )
    return TrainConfig(**data)


def load_config(path) -> TrainConfig:
    """Load a JSON config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return config_from_dict(data)


def save_config(config: TrainConfig, path):
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")
