"""``hdrfuse`` command-line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .image_io import HdrFormatError, read_hdr_file, write_ldr_file
from .pipeline import METHODS, PipelineConfig, run, weight_images


def _levels(text: str):
    if text == "auto":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("levels must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hdrfuse",
        description="Tone-map an HDR image (.hdr/.pfm) to an 8-bit PNG or PPM.")
    p.add_argument("input", type=Path, help="Radiance .hdr or colour .pfm file")
    p.add_argument("output", type=Path, help=".png or .ppm destination")
    p.add_argument("--method", choices=METHODS, default="proposed")
    p.add_argument("--segments", type=int, default=4, metavar="M",
                   help="number of luminance regions (default: 4)")
    p.add_argument("--vmin", type=float, default=-3.0, help="darkest-region target EV")
    p.add_argument("--vmax", type=float, default=1.5, help="brightest-region target EV")
    p.add_argument("--vwhite", type=float, default=2.5, help="tone-curve white point EV")
    p.add_argument("--key", type=float, default=0.18, help="key value for the global method")
    p.add_argument("--levels", type=_levels, default=None, metavar="N|auto",
                   help="pyramid depth (default: auto)")
    p.add_argument("--seed", type=int, default=None, help="seed for random EM restarts")
    p.add_argument("--restarts", type=int, default=0, help="extra randomly seeded EM runs")
    p.add_argument("--dump-stack", type=Path, default=None, metavar="DIR",
                   help="write exposure images and weight maps here")
    p.add_argument("--report", type=Path, default=None, metavar="PATH",
                   help="write a JSON region report")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="hdrfuse: %(message)s")

    if args.output.suffix.lower() not in (".png", ".ppm"):
        parser.error(f"output must end in .png or .ppm: {args.output}")
    try:
        cfg = PipelineConfig(method=args.method, segments=args.segments, v_min=args.vmin,
                             v_max=args.vmax, v_white=args.vwhite, key=args.key,
                             levels=args.levels, seed=args.seed, restarts=args.restarts)
    except ValueError as exc:
        parser.error(str(exc))

    try:
        image = read_hdr_file(args.input)
    except (OSError, HdrFormatError) as exc:
        print(f"hdrfuse: cannot read {args.input}: {exc}", file=sys.stderr)
        return 1
    if image.clamped:
        logging.warning("clamped %d negative samples to zero", image.clamped)

    try:
        result = run(image, cfg)
    except (ValueError, FloatingPointError) as exc:
        print(f"hdrfuse: processing failed: {exc}", file=sys.stderr)
        return 1

    try:
        write_ldr_file(result.image, args.output)
        if args.dump_stack is not None and result.stack is not None:
            args.dump_stack.mkdir(parents=True, exist_ok=True)
            for m, x in enumerate(result.stack.images, 1):
                write_ldr_file(x, args.dump_stack / f"x_{m}.png")
            for m, w in enumerate(weight_images(result.stack.weights), 1):
                write_ldr_file(w, args.dump_stack / f"w_{m}.png")
        if args.report is not None:
            payload = result.report_dict(cfg)
            if image.clamped:
                payload["warnings"].append(f"clamped {image.clamped} negative input samples")
            args.report.write_text(json.dumps(payload, indent=2) + "\n")
    except OSError as exc:
        print(f"hdrfuse: cannot write output: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
