"""Scikit-learn style front end around the training pipeline.

Wraps the torch model so it composes with the wider ecosystem: ``fit`` trains
on an image stack, ``transform`` embeds messages, ``predict`` recovers bits,
and hyperparameters round-trip through ``get_params``/``set_params``.
"""

import numpy as np
import torch
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig
from .data import sample_messages
from .message import harden
from .metrics import ber
from .model import WatermarkModel
from .objectives import apply_strength
from .train import Trainer
from .validation import check_images, check_messages


class Watermarker(BaseEstimator, TransformerMixin):
    """Trainable blind image watermarker with a transformer-shaped API.

    ``fit(X)`` trains the embedder/extractor pair on a stack of images (bit
    payloads are drawn at random during training, so no ``y`` is needed),
    ``transform(X, messages=...)`` embeds messages into images, and
    ``predict(X)`` recovers hard bits from possibly distorted images.

    Parameters
    ----------
    message_length : int
        Number of payload bits per image.
    image_size : int
        Side length of the (square) images the model is built for.
    image_channels : int
        1 for grayscale, 3 for RGB.
    num_blocks : int
        Coupling blocks in the invertible stack.
    steps : int
        Training steps run by ``fit``.
    batch_size, learning_rate : usual optimizer knobs (Adam, constant rate).
    distortions : str
        Comma list of attacks trained against, e.g.
        ``"identity,dropout:0.3,cropout:0.3,crop:0.035,gf:2.0,jpeg:50"``.
    weight_encoding, weight_decoding, weight_low_band : float
        Loss weights for pixel fidelity, bit fidelity and LL sub-band fidelity.
    se_blocks, dense_growth, dense_depth, coupling_scale : architecture knobs.
    strength : float
        Residual scale used by ``transform``.
    aux_seed : int
        Seed of the Gaussian stand-in used by ``predict``.
    random_state : int
        Training seed.
    device : str
        torch device string.

    Attributes
    ----------
    model_ : WatermarkModel
        The trained network.
    config_ : TrainConfig
        The resolved training configuration.
    history_ : list of dict
        Per-step loss records from ``fit``.
    """

    def __init__(
        self,
        message_length=16,
        image_size=64,
        image_channels=3,
        num_blocks=8,
        steps=1000,
        batch_size=8,
        learning_rate=1e-4,
        distortions="identity",
        weight_encoding=0.1,
        weight_decoding=100.0,
        weight_low_band=0.1,
        se_blocks=3,
        dense_growth=32,
        dense_depth=5,
        coupling_scale=2.0,
        strength=1.0,
        aux_seed=0,
        random_state=0,
        device="cpu",
    ):
        self.message_length = message_length
        self.image_size = image_size
        self.image_channels = image_channels
        self.num_blocks = num_blocks
        self.steps = steps
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.distortions = distortions
        self.weight_encoding = weight_encoding
        self.weight_decoding = weight_decoding
        self.weight_low_band = weight_low_band
        self.se_blocks = se_blocks
        self.dense_growth = dense_growth
        self.dense_depth = dense_depth
        self.coupling_scale = coupling_scale
        self.strength = strength
        self.aux_seed = aux_seed
        self.random_state = random_state
        self.device = device

    def _config(self):
        return TrainConfig(
            image_size=self.image_size,
            image_channels=self.image_channels,
            message_length=self.message_length,
            num_blocks=self.num_blocks,
            se_blocks=self.se_blocks,
            coupling_scale=self.coupling_scale,
            dense_growth=self.dense_growth,
            dense_depth=self.dense_depth,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            steps=self.steps,
            distortions=self.distortions,
            weight_encoding=self.weight_encoding,
            weight_decoding=self.weight_decoding,
            weight_low_band=self.weight_low_band,
            seed=self.random_state,
        )

    def _require_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("this Watermarker is not fitted yet; call fit first")

    def _validated(self, X):
        return check_images(X, image_size=self.image_size, channels=self.image_channels)

    def fit(self, X, y=None):
        """Train on an image stack; ``y`` is ignored (payloads are sampled)."""
        images = self._validated(X)
        config = self._config()
        model = WatermarkModel.from_config(config)
        trainer = Trainer(model, config, device=self.device)
        self.history_ = trainer.fit(images)
        self.model_ = trainer.model
        self.config_ = config
        return self

    def transform(self, X, messages=None):
        """Embed messages; returns the watermarked stack as float32 [N, C, H, W].

        Without explicit messages, fresh random bits are drawn (reproducible
        from ``random_state``) and kept in ``last_messages_``.
        """
        self._require_fitted()
        images = self._validated(X).to(self.device)
        if messages is None:
            generator = torch.Generator().manual_seed(self.random_state)
            bits = sample_messages(images.shape[0], self.message_length, generator)
        else:
            bits = check_messages(messages, length=self.message_length, count=images.shape[0])
        self.last_messages_ = bits.cpu().numpy().astype(np.int64)
        with torch.no_grad():
            encoded, _ = self.model_.encode(images, bits.to(images))
            out = apply_strength(images, encoded, self.strength)
        return out.cpu().numpy()

    def predict_soft(self, X):
        """Soft per-bit recoveries as float [N, L] (threshold at 0.5 yourself)."""
        self._require_fitted()
        images = self._validated(X).to(self.device)
        with torch.no_grad():
            soft = self.model_.decode(images, aux_seed=self.aux_seed)
        return soft.cpu().numpy()

    def predict(self, X):
        """Recovered hard bits as int [N, L]."""
        return harden(torch.from_numpy(self.predict_soft(X))).numpy().astype(np.int64)

    def score(self, X, y=None):
        """Mean bit accuracy of an embed/extract round trip on X.

        ``y`` may carry the messages to embed; fresh random ones are drawn
        otherwise.
        """
        encoded = self.transform(X, messages=y)
        recovered = self.predict(encoded)
        return 1.0 - ber(
            torch.from_numpy(self.last_messages_).float(), torch.from_numpy(recovered).float()
        )

    def save(self, path):
        """Persist the fitted model as a checkpoint file."""
        self._require_fitted()
        save_checkpoint(path, self.model_, self.config_)

    @classmethod
    def from_checkpoint(cls, path, **overrides):
        """Rebuild a fitted Watermarker from a checkpoint file."""
        model, config, _, _ = load_checkpoint(path)
        estimator = cls(
            message_length=config.message_length,
            image_size=config.image_size,
            image_channels=config.image_channels,
            num_blocks=config.num_blocks,
            steps=config.steps,
            batch_size=config.batch_size,
            learning_rate=config.learning_rate,
            distortions=config.distortions,
            weight_encoding=config.weight_encoding,
            weight_decoding=config.weight_decoding,
            weight_low_band=config.weight_low_band,
            se_blocks=config.se_blocks,
            dense_growth=config.dense_growth,
            dense_depth=config.dense_depth,
            coupling_scale=config.coupling_scale,
            random_state=config.seed,
            **overrides,
        )
        estimator.model_ = model
        estimator.config_ = config
        estimator.history_ = []
        return estimator
