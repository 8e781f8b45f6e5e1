"""Input validation helpers for the array-facing estimator API."""

import numpy as np
import torch


def check_images(X, image_size=None, channels=None):
    """Coerce an image stack to a float32 tensor [N, C, H, W] in [0, 1].

    Accepts numpy arrays or tensors laid out as ``[N, C, H, W]``,
    ``[N, H, W, C]`` (detected by a trailing dim of 1 or 3) or ``[N, H, W]``
    (treated as single-channel). uint8 input is rescaled from 0..255.
    """
    if isinstance(X, np.ndarray):
        tensor = torch.from_numpy(np.ascontiguousarray(X))
    elif isinstance(X, torch.Tensor):
        tensor = X
    else:
        tensor = torch.as_tensor(np.asarray(X))

    if tensor.dtype == torch.uint8:
        tensor = tensor.to(torch.float32) / 255.0
    elif not tensor.is_floating_point():
        tensor = tensor.to(torch.float32)
    else:
        tensor = tensor.to(torch.float32)

    if tensor.dim() == 3:
        tensor = tensor.unsqueeze(1)
    elif tensor.dim() == 4:
        if tensor.shape[1] not in (1, 3) and tensor.shape[-1] in (1, 3):
            tensor = tensor.permute(0, 3, 1, 2).contiguous()
    else:
        raise ValueError(
            f"expected images shaped [N, C, H, W], [N, H, W, C] or [N, H, W], got {tuple(tensor.shape)}"
        )

    if tensor.shape[1] not in (1, 3):
        raise ValueError(f"images must have 1 or 3 channels, got {tensor.shape[1]}")
    if channels is not None and tensor.shape[1] != channels:
        raise ValueError(f"expected {channels}-channel images, got {tensor.shape[1]}")
    if image_size is not None and tuple(tensor.shape[-2:]) != (image_size, image_size):
        raise ValueError(
            f"expected {image_size}x{image_size} images, got {tensor.shape[-2]}x{tensor.shape[-1]}"
        )
    if tensor.shape[-2] % 2 or tensor.shape[-1] % 2:
        raise ValueError(f"image dims must be even, got {tensor.shape[-2]}x{tensor.shape[-1]}")
    if not torch.isfinite(tensor).all():
        raise ValueError("images contain non-finite values")
    return tensor


def check_messages(M, length=None, count=None):
    """Coerce messages to a float32 tensor [N, L] with entries exactly 0 or 1."""
    if isinstance(M, torch.Tensor):
        tensor = M
    else:
        tensor = torch.as_tensor(np.asarray(M))
    tensor = tensor.to(torch.float32)
    if tensor.dim() == 1:
        tensor = tensor.unsqueeze(0)
    if tensor.dim() != 2:
        raise ValueError(f"messages must be [L] or [N, L], got shape {tuple(tensor.shape)}")
    if not bool(((tensor == 0) | (tensor == 1)).all()):
        raise ValueError("message entries must be exactly 0 or 1")
    if length is not None and tensor.shape[1] != length:
        raise ValueError(f"messages have length {tensor.shape[1]}, expected {length}")
    if count is not None and tensor.shape[0] not in (1, count):
        raise ValueError(f"got {tensor.shape[0]} messages for {count} images")
    if count is not None and tensor.shape[0] == 1 and count > 1:
        tensor = tensor.expand(count, -1).clone()
    return tensor
