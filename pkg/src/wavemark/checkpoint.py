"""Versioned checkpoint container for model, config and training progress.

A checkpoint refuses to load when its format marker or version is wrong, or
when the caller supplies an expected config whose architecture fields differ
from the stored ones (for example a different message length).
"""

import torch

from .config import TrainConfig, config_from_dict
from .exceptions import CheckpointError
from .model import WatermarkModel

FORMAT_MARKER = "wavemark-checkpoint"
FORMAT_VERSION = 1


def save_checkpoint(path, model, config, step=0, optimizer=None):
    payload = {
        "format": FORMAT_MARKER,
        "version": FORMAT_VERSION,
        "config": config.to_dict(),
        "step": int(step),
        "model_state": model.state_dict(),
        "optimizer_state": optimizer.state_dict() if optimizer is not None else None,
    }
    torch.save(payload, path)


def load_checkpoint(path, expected_config: TrainConfig | None = None, map_location="cpu"):
    """Load ``(model, config, step, optimizer_state)`` from a checkpoint file."""
    try:
        payload = torch.load(path, map_location=map_location)
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != FORMAT_MARKER:
        raise CheckpointError(f"{path} is not a recognized checkpoint file")
    if payload.get("version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path} has checkpoint version {payload.get('version')!r}, expected {FORMAT_VERSION}"
        )
    try:
        config = config_from_dict(payload["config"])
    except Exception as exc:
        raise CheckpointError(f"{path} carries an invalid config: {exc}") from exc

    if expected_config is not None:
        stored = config.architecture()
        wanted = expected_config.architecture()
        mismatched = [name for name in stored if stored[name] != wanted[name]]
        if mismatched:
            details = ", ".join(f"{name}: checkpoint={stored[name]} vs expected={wanted[name]}" for name in mismatched)
            raise CheckpointError(f"checkpoint does not match the expected configuration ({details})")

    model = WatermarkModel.from_config(config)
    model = model.to(config.torch_dtype)
    try:
        model.load_state_dict(payload["model_state"])
    except Exception as exc:
        raise CheckpointError(f"{path} state does not fit its own config: {exc}") from exc
    return model, config, payload.get("step", 0), payload.get("optimizer_state")
