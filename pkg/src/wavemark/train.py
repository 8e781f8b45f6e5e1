"""Optimization loop and evaluation sweeps.

One step: sample a batch and fresh random messages, embed, push the result
through one distortion drawn from the pool (non-differentiable ones via the
attack-simulation wrapper), extract, and descend the weighted loss with Adam
at a constant learning rate. Steps are logged as JSON lines.
"""

import json
import math
from pathlib import Path

import torch

from .checkpoint import save_checkpoint
from .data import sample_messages
from .distortions import NoiseContext, apply, apply_training, parse_pool, sample_combined
from .exceptions import TrainingDiverged
from .metrics import MetricsReport, ber, psnr, ssim
from .objectives import apply_strength, decoding_loss, encoding_loss, low_band_loss, total_loss


def _fresh_seed(generator):
    return int(torch.randint(2**31 - 1, (1,), generator=generator))


class Trainer:
    """Drives a :class:`WatermarkModel` through the training loop."""

    def __init__(self, model, config, log_path=None, device="cpu", step=0, optimizer_state=None):
        self.model = model.to(device=device, dtype=config.torch_dtype)
        self.config = config
        self.device = device
        self.pool = parse_pool(config.distortions)
        self.optimizer = torch.optim.Adam(self.model.parameters(), lr=config.learning_rate)
        if optimizer_state is not None:
            self.optimizer.load_state_dict(optimizer_state)
        self.generator = torch.Generator().manual_seed(config.seed)
        self.step = int(step)
        self.log_path = Path(log_path) if log_path is not None else None
        if self.log_path is not None:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            self._log_file = open(self.log_path, "a")
        else:
            self._log_file = None

    def close(self):
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None

    def _log(self, record):
        if self._log_file is not None:
            self._log_file.write(json.dumps(record) + "\n")
            self._log_file.flush()

    def _dump_diagnostics(self, stats):
        if self.log_path is None:
            return None
        dump_path = self.log_path.with_suffix(".diverged.pt")
        torch.save({"step": self.step, "stats": stats, "model_state": self.model.state_dict()}, dump_path)
        return dump_path

    def train_step(self, images, messages=None):
        """Run one optimization step on a batch; returns the loss scalars."""
        self.model.train()
        config = self.config
        images = images.to(device=self.device, dtype=config.torch_dtype)
        if messages is None:
            messages = sample_messages(
                images.shape[0], config.message_length, self.generator, dtype=config.torch_dtype
            ).to(self.device)

        encoded, _ = self.model.encode(images, messages)
        spec = sample_combined(self.pool, self.generator)
        context = NoiseContext(cover=images, encoded=encoded, seed=_fresh_seed(self.generator))
        noised = apply_training(spec, context)
        soft = self.model.decode(noised, aux_seed=_fresh_seed(self.generator))

        loss_en = encoding_loss(images, encoded)
        loss_de = decoding_loss(messages, soft)
        loss_lb = low_band_loss(images, encoded)
        loss = total_loss(loss_en, loss_de, loss_lb, config.loss_weights)

        stats = {
            "step": self.step,
            "loss_encoding": loss_en.detach().item(),
            "loss_decoding": loss_de.detach().item(),
            "loss_low_band": loss_lb.detach().item(),
            "loss_total": loss.detach().item(),
            "lr": config.learning_rate,
            "distortion": str(spec),
        }
        if not math.isfinite(stats["loss_total"]):
            dump = self._dump_diagnostics(stats)
            self._log({"event": "non_finite_loss", **stats})
            where = f"; state dumped to {dump}" if dump else ""
            raise TrainingDiverged(f"non-finite loss at step {self.step}: {stats}{where}")

        self.optimizer.zero_grad()
        loss.backward()
        self.optimizer.step()
        self.step += 1
        if self.step % config.log_every == 0 or self.step == 1:
            self._log(stats)
        return stats

    def fit(self, dataset, steps=None):
        """Train for ``steps`` steps (default: the configured count) on a [N, C, H, W] tensor.

        Batches are drawn with replacement from the dataset; returns the list
        of per-step loss records.
        """
        steps = self.config.steps if steps is None else steps
        history = []
        for _ in range(steps):
            index = torch.randint(dataset.shape[0], (self.config.batch_size,), generator=self.generator)
            history.append(self.train_step(dataset[index]))
        return history

    def save(self, path):
        save_checkpoint(path, self.model, self.config, step=self.step, optimizer=self.optimizer)


def evaluate(
    model,
    images,
    distortion_specs,
    strength=1.0,
    aux_seed=0,
    message_seed=0,
    batch_size=16,
    repeats=1,
):
    """Measure quality and robustness of a model on an image stack.

    Fresh random messages are embedded per image (reproducible from
    ``message_seed``), the residual is scaled by ``strength``, then every
    distortion in the list is applied and the bit error rate of the recovery
    is averaged; PSNR/SSIM compare the strengthened encoded images against the
    covers. ``repeats`` re-runs each distortion with fresh draws.
    """
    if isinstance(distortion_specs, str):
        distortion_specs = parse_pool(distortion_specs)
    model.eval()
    dtype = next(model.parameters()).dtype
    device = next(model.parameters()).device
    images = images.to(device=device, dtype=dtype)
    count = images.shape[0]
    generator = torch.Generator().manual_seed(int(message_seed))
    messages = sample_messages(count, model.message_length, generator, dtype=dtype).to(device)

    psnr_values = []
    ssim_values = []
    ber_sums = {str(spec): 0.0 for spec in distortion_specs}
    with torch.no_grad():
        chunks = []
        for start in range(0, count, batch_size):
            stop = min(start + batch_size, count)
            encoded, _ = model.encode(images[start:stop], messages[start:stop])
            chunks.append(apply_strength(images[start:stop], encoded, strength))
        strengthened = torch.cat(chunks)
        for i in range(count):
            psnr_values.append(psnr(images[i], strengthened[i]))
            ssim_values.append(ssim(images[i], strengthened[i]))
        for spec in distortion_specs:
            total = 0.0
            for repeat in range(repeats):
                noise_seed = _fresh_seed(generator)
                for start in range(0, count, batch_size):
                    stop = min(start + batch_size, count)
                    context = NoiseContext(
                        cover=images[start:stop], encoded=strengthened[start:stop], seed=noise_seed + start
                    )
                    noised = apply(spec, context)
                    soft = model.decode(noised, aux_seed=aux_seed + repeat)
                    total += ber(messages[start:stop], soft) * (stop - start)
            ber_sums[str(spec)] = total / (count * repeats)

    mean_psnr = math.inf if any(math.isinf(v) for v in psnr_values) else sum(psnr_values) / count
    return MetricsReport(
        psnr_db=mean_psnr,
        ssim=sum(ssim_values) / count,
        ber=ber_sums,
        strength=strength,
        images=count,
        message_length=model.message_length,
    )
