"""Image and message ingestion for training and evaluation."""

import logging
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from .exceptions import DataError

logger = logging.getLogger(__name__)


def load_image(path, size=None, channels=3):
    """Read one image file to a float tensor [C, H, W] in [0, 1].

    ``size`` is an ``(H, W)`` pair; images are resized bilinearly when they
    do not already match.
    """
    mode = "RGB" if channels == 3 else "L"
    with Image.open(path) as pil:
        pil = pil.convert(mode)
        if size is not None and pil.size != (size[1], size[0]):
            pil = pil.resize((size[1], size[0]), Image.BILINEAR)
        array = np.asarray(pil, dtype=np.float32) / 255.0
    if array.ndim == 2:
        array = array[None]
    else:
        array = np.transpose(array, (2, 0, 1))
    return torch.from_numpy(array)


def save_image(image, path):
    """Write a [C, H, W] float image in [0, 1] as an 8-bit file (format by extension)."""
    array = torch.round(torch.clamp(image.detach().cpu(), 0.0, 1.0) * 255.0).to(torch.uint8).numpy()
    if array.shape[0] == 1:
        pil = Image.fromarray(array[0], mode="L")
    elif array.shape[0] == 3:
        pil = Image.fromarray(np.transpose(array, (1, 2, 0)), mode="RGB")
    else:
        raise ValueError(f"can only save 1- or 3-channel images, got {array.shape[0]}")
    pil.save(path)


def ingest_dataset(path, image_size, seed=0, channels=3):
    """Yield [C, H, W] tensors for every readable image under a directory.

    File order is deterministic given the seed (sorted, then shuffled).
    Unreadable files are skipped with a warning; a directory that produces no
    images at all raises :class:`DataError`.
    """
    root = Path(path)
    if not root.is_dir():
        raise DataError(f"dataset path is not a directory: {path}")
    files = sorted(entry for entry in root.iterdir() if entry.is_file())
    if not files:
        raise DataError(f"dataset directory is empty: {path}")
    order = torch.randperm(len(files), generator=torch.Generator().manual_seed(int(seed))).tolist()
    produced = 0
    for index in order:
        entry = files[index]
        try:
            yield load_image(entry, size=(image_size, image_size), channels=channels)
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            logger.warning("skipping unreadable file %s: %s", entry, exc)
            continue
        produced += 1
    if produced == 0:
        raise DataError(f"no readable images in {path}")


def load_dataset(path, image_size, seed=0, channels=3, limit=None):
    """Materialize a dataset directory as one [N, C, H, W] tensor."""
    images = []
    for image in ingest_dataset(path, image_size, seed=seed, channels=channels):
        images.append(image)
        if limit is not None and len(images) >= limit:
            break
    return torch.stack(images)


def sample_messages(count, length, generator=None, dtype=torch.float32):
    """Draw ``count`` messages of i.i.d. fair bits, shape [count, length]."""
    return (torch.rand((count, length), generator=generator) < 0.5).to(dtype)
