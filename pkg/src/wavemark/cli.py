"""Command-line surface: train models, embed/extract watermarks, attack images, report metrics.

Exit codes: 0 success, 1 usage or configuration problems, 2 runtime or data problems.
"""

import argparse
import json
import sys
from pathlib import Path

import torch

from .checkpoint import load_checkpoint
from .config import TrainConfig, load_config
from .data import load_dataset, load_image, save_image
from .distortions import NoiseContext, apply, parse_pool
from .exceptions import CheckpointError, ConfigError, DataError, TrainingDiverged, WavemarkError
from .message import harden
from .metrics import psnr, ssim
from .model import WatermarkModel
from .objectives import apply_strength
from .train import Trainer, evaluate

#: attacks that substitute cover pixels and therefore need the cover image
COVER_ATTACKS = ("dropout", "cropout")


def _parse_message(text, length):
    """Accept a binary string or 0x-prefixed hex; the bit count must equal ``length``."""
    text = text.strip()
    if text.lower().startswith("0x"):
        digits = text[2:]
        if not digits or any(ch not in "0123456789abcdefABCDEF" for ch in digits):
            raise ConfigError(f"invalid hex message {text!r}")
        bits = "".join(f"{int(ch, 16):04b}" for ch in digits)
    elif set(text) <= {"0", "1"} and text:
        bits = text
    else:
        raise ConfigError(f"message must be a binary string or 0x-prefixed hex, got {text!r}")
    if len(bits) != length:
        raise ConfigError(f"message carries {len(bits)} bits but the checkpoint expects {length}")
    return torch.tensor([float(b) for b in bits])


def _bits_to_string(bits):
    return "".join(str(int(b)) for b in bits.flatten().tolist())


def _load_model_image(path, config, resize=True):
    image = load_image(path, channels=config.image_channels)
    size = (config.image_size, config.image_size)
    if tuple(image.shape[-2:]) != size:
        if not resize:
            raise DataError(
                f"{path} is {image.shape[-2]}x{image.shape[-1]} but the checkpoint expects "
                f"{size[0]}x{size[1]} (drop --no-resize to resize)"
            )
        print(
            f"warning: resizing {path} from {image.shape[-2]}x{image.shape[-1]} to {size[0]}x{size[1]}",
            file=sys.stderr,
        )
        image = load_image(path, size=size, channels=config.image_channels)
    return image


def cmd_train(args):
    config = load_config(args.config) if args.config else TrainConfig()
    if args.steps is not None:
        config.steps = args.steps
        config.validate()
    if args.seed is not None:
        config.seed = args.seed

    step, optimizer_state = 0, None
    if args.resume:
        model, config, step, optimizer_state = load_checkpoint(args.resume, expected_config=config if args.config else None)
    else:
        model = WatermarkModel.from_config(config)

    dataset = load_dataset(args.data, config.image_size, seed=config.seed, channels=config.image_channels)
    trainer = Trainer(model, config, log_path=args.log, step=step, optimizer_state=optimizer_state)
    try:
        trainer.fit(dataset)
        trainer.save(args.out)
    finally:
        trainer.close()
    print(f"trained to step {trainer.step}; checkpoint written to {args.out}")
    return 0


def cmd_embed(args):
    model, config, _, _ = load_checkpoint(args.checkpoint)
    message = _parse_message(args.message, config.message_length).to(config.torch_dtype)
    cover = _load_model_image(args.image, config, resize=not args.no_resize).to(config.torch_dtype)
    out_path = Path(args.out)
    if out_path.suffix.lower() in (".jpg", ".jpeg"):
        print(
            "warning: writing the watermarked image as JPEG recompresses it, which is itself an attack;"
            " PNG keeps it intact",
            file=sys.stderr,
        )
    model.eval()
    with torch.no_grad():
        encoded, _ = model.encode(cover, message)
        encoded = apply_strength(cover, encoded, args.strength)
    save_image(encoded, out_path)
    print(f"psnr_db: {psnr(cover, encoded):.4f}")
    print(f"ssim: {ssim(cover, encoded):.6f}")
    print(f"written: {out_path}")
    return 0


def cmd_extract(args):
    model, config, _, _ = load_checkpoint(args.checkpoint)
    image = _load_model_image(args.image, config, resize=not args.no_resize).to(config.torch_dtype)
    model.eval()
    with torch.no_grad():
        soft = model.decode(image, aux_seed=args.seed, zero_aux=args.zero_aux)
    bits = harden(soft)
    confidence = (soft - 0.5).abs().clamp(max=0.5) * 2.0
    print(f"bits: {_bits_to_string(bits)}")
    print("soft: " + " ".join(f"{v:.4f}" for v in soft.flatten().tolist()))
    print(f"confidence: {float(confidence.mean()):.4f}")
    return 0


def cmd_attack(args):
    specs = parse_pool(args.distortions)
    if len(specs) != 1:
        raise ConfigError("attack applies exactly one distortion; pass a single spec like 'jpeg:50'")
    spec = specs[0]
    image = load_image(args.image)
    if spec.kind in COVER_ATTACKS:
        if not args.cover:
            raise ConfigError(
                f"{spec.kind} replaces pixels with the cover image; pass the original via --cover"
            )
        cover = load_image(args.cover)
        if cover.shape != image.shape:
            raise DataError(
                f"cover {tuple(cover.shape)} and image {tuple(image.shape)} shapes differ"
            )
    else:
        cover = image
    attacked = apply(spec, NoiseContext(cover=cover, encoded=image, seed=args.seed))
    save_image(attacked, args.out)
    print(f"applied {spec}; written: {args.out}")
    return 0


def cmd_evaluate(args):
    model, config, _, _ = load_checkpoint(args.checkpoint)
    pool = parse_pool(args.distortions) if args.distortions else parse_pool(config.distortions)
    strengths = [float(s) for s in args.strengths.split(",") if s.strip()] if args.strengths else [1.0]
    if not strengths:
        raise ConfigError("empty strength sweep")
    images = load_dataset(args.data, config.image_size, seed=args.seed, channels=config.image_channels, limit=args.limit)

    rows = []
    for strength in strengths:
        report = evaluate(
            model, images, pool, strength=strength, aux_seed=args.seed, message_seed=args.seed
        )
        for spec in pool:
            rows.append(
                {
                    "distortion": str(spec),
                    "strength": strength,
                    "ber": report.ber[str(spec)],
                    "psnr_db": report.psnr_db if report.psnr_db != float("inf") else "inf",
                    "ssim": report.ssim,
                }
            )

    payload = {"images": int(images.shape[0]), "message_length": config.message_length, "rows": rows}
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
        print(f"report written: {args.out}")
    for row in rows:
        psnr_text = "inf" if row["psnr_db"] == "inf" else f"{row['psnr_db']:.2f} dB"
        print(
            f"{row['distortion']:>14}  S={row['strength']:<5g} ber={row['ber']:.4f} "
            f"psnr={psnr_text} ssim={row['ssim']:.4f}"
        )
    if args.plot:
        _plot_rows(rows, args.plot)
        print(f"plot written: {args.plot}")
    return 0


def _plot_rows(rows, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_ber, ax_psnr) = plt.subplots(1, 2, figsize=(10, 4))
    by_distortion = {}
    for row in rows:
        by_distortion.setdefault(row["distortion"], []).append(row)
    for name, entries in by_distortion.items():
        entries = sorted(entries, key=lambda r: r["strength"])
        ax_ber.plot([e["strength"] for e in entries], [e["ber"] for e in entries], marker="o", label=name)
    first = next(iter(by_distortion.values()))
    first = sorted(first, key=lambda r: r["strength"])
    finite = [(e["strength"], e["psnr_db"]) for e in first if e["psnr_db"] != "inf"]
    if finite:
        ax_psnr.plot([s for s, _ in finite], [p for _, p in finite], marker="o", color="tab:red")
    ax_ber.set_xlabel("strength factor")
    ax_ber.set_ylabel("bit error rate")
    ax_ber.legend(fontsize=7)
    ax_psnr.set_xlabel("strength factor")
    ax_psnr.set_ylabel("PSNR (dB)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def build_parser():
    parser = argparse.ArgumentParser(prog="wavemark", description="Blind image watermarking tool")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on an image directory")
    p.add_argument("--config", help="JSON config file (defaults apply when omitted)")
    p.add_argument("--data", required=True, help="directory of training images")
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--log", help="JSONL training log file")
    p.add_argument("--steps", type=int, help="override the configured step count")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("embed", help="embed a message into an image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True, help="cover image file")
    p.add_argument("--message", required=True, help="binary string or 0x-prefixed hex")
    p.add_argument("--strength", type=float, default=1.0, help="watermark residual scale (default 1.0)")
    p.add_argument("--out", required=True, help="output image (PNG recommended)")
    p.add_argument("--no-resize", action="store_true", help="fail instead of resizing wrong-size images")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="recover the message from an image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--seed", type=int, default=0, help="seed of the Gaussian auxiliary draw")
    p.add_argument("--zero-aux", action="store_true", help="use a zero auxiliary instead of a Gaussian")
    p.add_argument("--no-resize", action="store_true", help="fail instead of resizing wrong-size images")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("attack", help="apply one distortion to an image")
    p.add_argument("--image", required=True)
    p.add_argument("--distortions", required=True, help="single spec, e.g. 'jpeg:50'")
    p.add_argument("--cover", help="original image (required for dropout/cropout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("evaluate", help="measure BER/PSNR/SSIM over a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--distortions", help="comma list; defaults to the checkpoint's training pool")
    p.add_argument("--strengths", help="comma list of strength factors, e.g. '0.5,1.0,2.0'")
    p.add_argument("--limit", type=int, help="cap the number of images")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON report file")
    p.add_argument("--plot", help="write a BER/PSNR-vs-strength plot (needs matplotlib)")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, TrainingDiverged, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WavemarkError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
