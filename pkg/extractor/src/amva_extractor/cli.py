"""Command line for the model bridge.

    amva-extract activations --manifest m.json --model toy:0 --out maps/
    amva-extract scores      --manifest m.json --model toy:0 --out data/
    amva-extract evaluate    --model toy:0 --image img.png

``evaluate`` is meant to be launched by the analytics CLI as
``--evaluator-cmd "amva-extract evaluate --model toy:0 --image {image}"``.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .evaluate import evaluator_loop
from .export import SCORERS, export_activations, export_scores, read_image_list
from .model import DEFAULT_SIZE, load_model


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amva-extract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("activations", help="export channel activations and saliency maps")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", default="toy:0", help="toy:<seed>[:channels] or TorchScript path")
    p.add_argument("--out", required=True, help="output directory (the activation_dir)")
    p.add_argument("--size", type=int, default=DEFAULT_SIZE, help="model input size")
    p.add_argument("--what", choices=("channels", "maps", "both"), default="both")

    p = sub.add_parser("scores", help="export quality CSVs and a pairs CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", default="toy:0")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=DEFAULT_SIZE)
    p.add_argument("--methods", default="embed-norm,sharpness",
                   help=f"comma-separated scorers from {sorted(SCORERS)}")
    p.add_argument("--seed", type=int, default=0, help="impostor sampling seed")

    p = sub.add_parser("evaluate", help="run the stdin/stdout evaluator loop")
    p.add_argument("--model", default="toy:0")
    p.add_argument("--image", required=True, help="original image the scores refer to")
    p.add_argument("--size", type=int, default=DEFAULT_SIZE)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)

    if args.command == "evaluate":
        return evaluator_loop(args.model, args.image, size=args.size)

    model = load_model(args.model)
    images = read_image_list(args.manifest)
    if args.command == "activations":
        written = export_activations(model, images, args.out, size=args.size, what=args.what)
        logging.getLogger("amva_extractor").info("wrote %d files", len(written))
        return 0
    if args.command == "scores":
        methods = [m for m in args.methods.split(",") if m]
        written, skip_fraction = export_scores(model, images, args.out, methods=methods,
                                               size=args.size, seed=args.seed)
        logging.getLogger("amva_extractor").info(
            "wrote %d files (%.0f%% images skipped)", len(written), 100 * skip_fraction)
        return 0 if skip_fraction <= 0.10 else 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
