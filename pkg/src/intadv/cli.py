"""Command-line front end.

Four subcommands: ``attack`` (one image), ``batch`` (a set of images with
aggregate metrics), ``gap`` (measure how externally produced continuous
adversarials survive denormalization) and ``sweep`` (re-run a batch over a
grid of one parameter, one aggregate row per setting).

Reports are line-delimited JSON: one record per image with fields ``image``,
``success``, ``queries``, ``iterations``, ``degree``, ``mse`` and
``elapsed_ms``, followed by one aggregate record with ``n``, ``sr``, ``tsr``,
``gap``, ``avg_queries``, ``atc_s`` and ``avg_mse``.  With ``--clock none``
the wall-time fields are zeroed so identical configurations produce
byte-identical output files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .attack import AttackConfig, run_attack
from .dataio import (
    load_idx_images,
    read_image,
    read_real_tensor,
    report_lines,
    write_image,
)
from .domain import ImageShape
from .errors import ConfigurationError, FormatError
from .evaluation import assemble_report, gap_study, run_batch
from .network import NetworkOracle, load_network
from .normalization import ROUNDINGS, VARIANTS, NormalizationScheme
from .oracle import synthetic_sum_oracle, top_j

__all__ = ["main"]


def _parse_synthetic(spec: str, shape: ImageShape):
    kind, _, rest = spec.partition(":")
    if kind != "sum":
        raise ConfigurationError(f"unknown synthetic oracle {kind!r}; expected 'sum'")
    params = {}
    if rest:
        for part in rest.split(","):
            key, _, value = part.partition("=")
            if not value:
                raise ConfigurationError(f"synthetic parameter {part!r} must be key=value")
            params[key] = value
    unknown = set(params) - {"threshold", "sharpness"}
    if unknown:
        raise ConfigurationError(f"unknown synthetic parameters: {sorted(unknown)}")
    if "threshold" not in params:
        raise ConfigurationError("synthetic sum oracle needs threshold=<int>")
    threshold = int(params["threshold"])
    sharpness = float(params.get("sharpness", 8.0))
    return synthetic_sum_oracle(shape, threshold, sharpness)


def _build_oracle(args, shape: ImageShape):
    if args.model is not None:
        net = load_network(args.model)
        if net.input_shape != shape:
            raise ConfigurationError(
                f"model expects {net.input_shape}, images are {shape}"
            )
        return NetworkOracle(net)
    if args.synthetic is not None:
        return _parse_synthetic(args.synthetic, shape)
    raise ConfigurationError("choose an oracle with --model or --synthetic")


def _parse_resize(text: str, channels: int) -> ImageShape:
    try:
        w, h = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise ConfigurationError(f"--resize must be WxH, got {text!r}") from None
    return ImageShape(w, h, channels)


def _comma_ints(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p != ""]
    except ValueError:
        raise ConfigurationError(f"expected comma-separated integers, got {text!r}") from None


def _comma_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(",") if p != "")
    except ValueError:
        raise ConfigurationError(f"expected comma-separated numbers, got {text!r}") from None


def _single(values: list[int], flag: str) -> int:
    if len(values) != 1:
        raise ConfigurationError(f"{flag} takes one value here (lists are for sweep)")
    return values[0]


def _load_images(args) -> list:
    if args.idx is not None:
        images = load_idx_images(args.idx)
        if not images:
            raise ConfigurationError(f"{args.idx} holds no images")
        if getattr(args, "limit", None):
            images = images[: args.limit]
        return images
    if args.images:
        return [read_image(p) for p in args.images]
    raise ConfigurationError("supply images with --idx or --images")


def _attack_config(args, channels: int, eps: int | None = None,
                   samples: int | None = None, coords: int | None = None) -> AttackConfig:
    # Channel-dependent defaults: small grayscale targets tolerate a wide
    # budget but need fine coordinate updates; color images the reverse.
    if eps is None:
        eps = _single(_comma_ints(args.eps), "--eps") if args.eps is not None \
            else (64 if channels == 1 else 10)
    if samples is None:
        samples = _single(_comma_ints(args.samples), "--samples") if args.samples is not None else 3
    if coords is None:
        coords = _single(_comma_ints(args.coords), "--coords") if args.coords is not None \
            else (2 if channels == 1 else 10)
    resize = _parse_resize(args.resize, channels) if args.resize is not None else None
    return AttackConfig(
        epsilon=eps,
        mode=args.mode,
        target_class=args.target,
        target_rank=args.target_rank,
        sample_size=samples,
        ranking_threshold=args.ranking,
        coordinate_threshold=coords,
        iteration_threshold=args.iterations,
        timeout=args.timeout,
        query_budget=args.query_budget,
        resize=resize,
        seed=args.seed,
        cache_queries=args.cache,
    )


def _write_report_lines(lines: list[str], path: str | None) -> None:
    if path is None:
        for line in lines:
            print(line)
    else:
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def _cmd_attack(args) -> int:
    if args.image is not None:
        image = read_image(args.image)
        if args.index is not None:
            raise ConfigurationError("--index applies to --idx, not --image")
    else:
        if args.idx is None:
            raise ConfigurationError("supply an image with --image or --idx")
        images = load_idx_images(args.idx)
        index = args.index or 0
        if not 0 <= index < len(images):
            raise ConfigurationError(f"--index {index} out of range (file holds {len(images)})")
        image = images[index]

    oracle = _build_oracle(args, image.shape)
    config = _attack_config(args, image.shape.channels)

    label = args.label
    if config.mode == "targeted" and config.target_rank is not None:
        clean = oracle.predict(image)
        if label is None:
            label = top_j(clean, 1)[0]
        target = top_j(clean, config.target_rank)[0]
        config = replace(config, target_class=target, target_rank=None)

    outcome = run_attack(oracle, image, config, original_label=label)
    if outcome.success and args.out is not None:
        write_image(outcome.adversarial, args.out)
    report = assemble_report([outcome], [image])
    _write_report_lines(report_lines(report, args.clock), args.report)
    return 0


def _cmd_batch(args) -> int:
    images = _load_images(args)
    oracle = _build_oracle(args, images[0].shape)
    config = _attack_config(args, images[0].shape.channels)
    report = run_batch(oracle, images, config, workers=args.workers)
    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ext = "pgm" if images[0].shape.channels == 1 else "ppm"
        for i, outcome in enumerate(report.outcomes):
            if outcome.success:
                write_image(outcome.adversarial, out_dir / f"adv_{i:04d}.{ext}")
    _write_report_lines(report_lines(report, args.clock), args.report)
    return 0


def _cmd_gap(args) -> int:
    originals = _load_images(args)
    real_advs = [read_real_tensor(p) for p in args.real_advs]
    mean = _comma_floats(args.mean) if args.mean is not None else None
    std = _comma_floats(args.std) if args.std is not None else None
    scheme = NormalizationScheme(args.scheme, mean, std, args.rounding)
    oracle = _build_oracle(args, originals[0].shape)
    labels = _comma_ints(args.labels) if args.labels is not None else None
    report = gap_study(oracle, originals, real_advs, scheme,
                       mode=args.mode, labels=labels, target_class=args.target)
    _write_report_lines(report_lines(report, args.clock), args.report)
    return 0


def _cmd_sweep(args) -> int:
    images = _load_images(args)
    channels = images[0].shape.channels
    grids = {
        "eps": _comma_ints(args.eps) if args.eps is not None else [64 if channels == 1 else 10],
        "samples": _comma_ints(args.samples) if args.samples is not None else [3],
        "coords": _comma_ints(args.coords) if args.coords is not None else [2 if channels == 1 else 10],
    }
    varying = [name for name, values in grids.items() if len(values) > 1]
    if len(varying) != 1:
        raise ConfigurationError(
            "sweep varies exactly one of --eps/--samples/--coords (comma-separated values)"
        )
    param = varying[0]
    oracle = _build_oracle(args, images[0].shape)
    timed = args.clock == "real"

    lines = []
    for value in grids[param]:
        settings = {name: values[0] for name, values in grids.items()}
        settings[param] = value
        config = _attack_config(args, channels, eps=settings["eps"],
                                samples=settings["samples"], coords=settings["coords"])
        report = run_batch(oracle, images, config, workers=args.workers)
        lines.append(json.dumps({
            "param": param,
            "value": value,
            "n": report.n,
            "sr": report.sr,
            "tsr": report.tsr,
            "gap": report.gap,
            "avg_queries": report.avg_queries,
            "atc_s": (report.atc if timed else 0.0) if report.atc is not None else None,
            "avg_mse": report.avg_mse,
        }, sort_keys=True))
    _write_report_lines(lines, args.report)
    return 0


def _add_oracle_flags(sp) -> None:
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--model", help="weight file of a built-in network oracle")
    group.add_argument("--synthetic",
                       help="synthetic oracle spec, e.g. sum:threshold=4000,sharpness=8")


def _add_attack_flags(sp, sweepable: bool) -> None:
    lists = " (comma-separated list sweeps this parameter)" if sweepable else ""
    sp.add_argument("--eps", default=None,
                    help=f"max per-pixel offset; default 64 (grayscale) or 10 (color){lists}")
    sp.add_argument("--samples", default=None,
                    help=f"new candidates per iteration; default 3{lists}")
    sp.add_argument("--coords", default=None,
                    help=f"coordinates refined per candidate; default 2 (grayscale) or 10 (color){lists}")
    sp.add_argument("--mode", choices=("untargeted", "targeted", "top1"), default="untargeted")
    sp.add_argument("--target", type=int, default=None, help="target class for targeted mode")
    sp.add_argument("--target-rank", type=int, default=None,
                    help="pick the class with this clean-probability rank as the target")
    sp.add_argument("--ranking", type=int, default=2, help="retained best candidates; default 2")
    sp.add_argument("--iterations", type=int, default=30000, help="iteration cap; default 30000")
    sp.add_argument("--timeout", type=float, default=None, help="wall-clock cap in seconds")
    sp.add_argument("--query-budget", type=int, default=None, help="oracle-call cap")
    sp.add_argument("--resize", default=None, help="search on a reduced WxH grid")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--cache", action="store_true",
                    help="reuse degrees of repeated perturbations instead of re-querying")


def _add_output_flags(sp) -> None:
    sp.add_argument("--report", default=None, help="report path (default: stdout)")
    sp.add_argument("--clock", choices=("real", "none"), default="real",
                    help="'none' zeroes wall-time fields for byte-identical reports")


def _add_image_source_flags(sp) -> None:
    sp.add_argument("--idx", default=None, help="IDX image file")
    sp.add_argument("--limit", type=int, default=None, help="use only the first N IDX images")
    sp.add_argument("--images", nargs="+", default=None, help="PGM/PPM image files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intadv",
        description="Black-box adversarial attacks crafted directly on integer pixels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = []

    sp = sub.add_parser("attack", help="attack one image")
    sp.add_argument("--image", default=None, help="PGM/PPM image to attack")
    sp.add_argument("--idx", default=None, help="IDX file to take the image from")
    sp.add_argument("--index", type=int, default=None, help="image index within --idx")
    sp.add_argument("--label", type=int, default=None,
                    help="known clean top-1 label (skips the probe query)")
    sp.add_argument("--out", default=None, help="where to write the adversarial image")
    _add_oracle_flags(sp)
    _add_attack_flags(sp, sweepable=False)
    _add_output_flags(sp)
    sp.set_defaults(func=_cmd_attack)
    subparsers.append(sp)

    sp = sub.add_parser("batch", help="attack a set of images and aggregate metrics")
    _add_image_source_flags(sp)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out-dir", default=None, help="write successful adversarials here")
    _add_oracle_flags(sp)
    _add_attack_flags(sp, sweepable=False)
    _add_output_flags(sp)
    sp.set_defaults(func=_cmd_batch)
    subparsers.append(sp)

    sp = sub.add_parser("gap", help="measure survival of continuous adversarials")
    _add_image_source_flags(sp)
    sp.add_argument("--real-advs", nargs="+", required=True,
                    help="raw float tensors of the continuous adversarials")
    sp.add_argument("--scheme", choices=VARIANTS, default="unit")
    sp.add_argument("--mean", default=None, help="per-channel means, comma-separated")
    sp.add_argument("--std", default=None, help="per-channel stds, comma-separated")
    sp.add_argument("--rounding", choices=ROUNDINGS, default="nearest")
    sp.add_argument("--mode", choices=("untargeted", "targeted", "top1"), default="untargeted")
    sp.add_argument("--target", type=int, default=None)
    sp.add_argument("--labels", default=None, help="clean labels, comma-separated")
    _add_oracle_flags(sp)
    _add_output_flags(sp)
    sp.set_defaults(func=_cmd_gap)
    subparsers.append(sp)

    sp = sub.add_parser("sweep", help="batch over a grid of one parameter")
    _add_image_source_flags(sp)
    sp.add_argument("--workers", type=int, default=1)
    _add_oracle_flags(sp)
    _add_attack_flags(sp, sweepable=True)
    _add_output_flags(sp)
    sp.set_defaults(func=_cmd_sweep)
    subparsers.append(sp)

    parser.set_defaults(_subparsers=subparsers)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Merge a JSON config file into the defaults; explicit flags still win."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        raise ConfigurationError("--config needs a file path")
    path = argv[at + 1]
    argv = argv[:at] + argv[at + 2:]
    with open(path, "r", encoding="utf-8") as f:
        loaded = json.load(f)
    if not isinstance(loaded, dict):
        raise ConfigurationError(f"{path}: config file must hold a JSON object")
    known = set()
    for sp in parser.get_default("_subparsers"):
        known.update(a.dest for a in sp._actions)
    unknown = set(loaded) - known
    if unknown:
        raise ConfigurationError(f"{path}: unknown config keys: {sorted(unknown)}")
    for sp in parser.get_default("_subparsers"):
        sp.set_defaults(**{k: v for k, v in loaded.items()
                           if k in {a.dest for a in sp._actions}})
    return argv


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, list(argv))
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigurationError, FormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
