"""Command-line pipeline over a dataset manifest.

Subcommands cover each stage (partition, stats, diff, erc, overlap, admam,
scorecam, render) plus ``report``, which chains the full analysis. Artifacts
are written under the output directory with deterministic names
``<method>_<set>_<kind>.<ext>``; re-running with identical inputs reproduces
byte-identical files.

Score conventions throughout: quality scores are "higher = better quality",
comparison scores are "higher = more similar".

Exit codes: 0 success, 1 configuration error, 2 data error, 3 I/O error.
Independent stages of ``report`` continue past failures; the exit code
reflects the worst stage. ``AMVA_THREADS`` caps per-method parallelism
(default 1).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import erc as erc_mod
from . import partition, render, scorecam, stat_maps, tensor_io
from .errors import ConfigError, DataError
from .stat_maps import MapKind

log = logging.getLogger("amva")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_IO = 3

DEFAULT_FRACTION = 0.10
DEFAULT_FMR = 0.001
DEFAULT_RATIOS = "0:0.32:0.02"

KIND_TOKEN = {
    MapKind.MAM: "mam",
    MapKind.MDAM: "mdam",
    MapKind.AM_V: "amv",
    MapKind.AM_MV: "ammv",
    MapKind.D_AM_V: "damv",
    MapKind.D_AM_MV: "dammv",
    MapKind.X_D_AM_V: "xdamv",
    MapKind.AD_MAM: "admam",
}


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class RunConfig:
    manifest_path: Path
    methods: str = "all"
    fraction: float = DEFAULT_FRACTION
    target_fmr: float = DEFAULT_FMR
    ratios: list[float] = field(default_factory=list)
    output_dir: Path = Path("amva_out")
    alpha: float = 0.5
    colormap: str = "jet"
    signed: bool = True
    bins: int = 50
    panel_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 < self.fraction <= 0.5:
            raise ConfigError(f"--fraction must be in (0, 0.5], got {self.fraction}")
        if not 0.0 < self.target_fmr < 1.0:
            raise ConfigError(f"--fmr must be in (0, 1), got {self.target_fmr}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"--alpha must be in [0, 1], got {self.alpha}")
        if self.colormap not in render.COLORMAPS:
            raise ConfigError(
                f"unknown colormap {self.colormap!r}; available: {sorted(render.COLORMAPS)}"
            )
        if self.bins < 1:
            raise ConfigError(f"--bins must be >= 1, got {self.bins}")
        if not self.ratios:
            self.ratios = parse_ratios(DEFAULT_RATIOS)


def parse_ratios(text: str) -> list[float]:
    """Parse ``start:stop:step`` into an inclusive list of reject ratios."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--ratios must look like start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--ratios values must be numbers, got {text!r}") from None
    if step <= 0:
        raise ConfigError(f"--ratios step must be positive, got {step}")
    if start != 0.0:
        raise ConfigError("--ratios must start at 0")
    ratios = []
    k = 0
    while True:
        value = start + k * step
        if value > stop + 1e-9:
            break
        # keep CSV output free of binary-fraction drift like 0.060000000000000005
        ratios.append(round(value, 10))
        k += 1
    if not ratios or ratios[-1] >= 1.0:
        raise ConfigError(f"--ratios must lie within [0, 1), got {text!r}")
    return ratios


def thread_cap() -> int:
    raw = os.environ.get("AMVA_THREADS", "")
    if not raw:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"AMVA_THREADS must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ConfigError(f"AMVA_THREADS must be >= 1, got {cap}")
    return cap


def _run_parallel(fn, items):
    items = list(items)
    cap = min(thread_cap(), max(len(items), 1))
    if cap == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Shared pipeline pieces


def _resolve_methods(manifest: tensor_io.Manifest, flag: str) -> list[str]:
    available = manifest.methods()
    if not available:
        raise DataError("manifest declares no quality files")
    if flag == "all":
        return available
    if flag not in manifest.quality_files:
        raise ConfigError(f"method {flag!r} not in manifest (available: {available})")
    return [flag]


def _quality_table(manifest, method) -> tensor_io.QualityTable:
    return tensor_io.read_quality_csv(manifest.quality_files[method], method)


class SetMapCache:
    """Memoizes per-(method, set-kind) quantile stacks and their four maps."""

    def __init__(self, manifest, fraction):
        self.manifest = manifest
        self.fraction = fraction
        self.tables: dict[str, tensor_io.QualityTable] = {}
        self._maps: dict[tuple[str, str], dict[str, stat_maps.StatMap]] = {}

    def table(self, method: str) -> tensor_io.QualityTable:
        if method not in self.tables:
            self.tables[method] = _quality_table(self.manifest, method)
        return self.tables[method]

    def quantile(self, method: str, kind: str) -> partition.QuantileSet:
        return partition.select_quantile(self.table(method), self.fraction, kind)

    def maps(self, method: str, kind: str) -> dict[str, stat_maps.StatMap]:
        key = (method, kind)
        if key not in self._maps:
            qset = self.quantile(method, kind)
            stack = tensor_io.read_activation_stack(self.manifest.activation_dir, qset.image_ids)
            args = dict(method=method, set_kind=kind, fraction=self.fraction)
            self._maps[key] = {
                "mam": stat_maps.mam(stack, **args),
                "mdam": stat_maps.mdam(stack, **args),
                "amv": stat_maps.am_v(stack, **args),
                "ammv": stat_maps.am_mv(stack, **args),
            }
        return self._maps[key]


def _spec_for(config: RunConfig, kind: MapKind, signed: bool = False) -> render.RenderSpec:
    if kind is MapKind.X_D_AM_V and signed:
        return render.RenderSpec(normalization=render.SYMMETRIC, alpha=config.alpha,
                                 colormap=render.DIVERGING)
    return render.RenderSpec(normalization=render.MINMAX, alpha=config.alpha,
                             colormap=render.COLORMAPS[config.colormap])


def _save_map_artifacts(stat_map: stat_maps.StatMap, stem: Path, config: RunConfig,
                        signed: bool = False) -> None:
    """Write tensor + meta sidecar, rendered PNG + render sidecar, histogram CSV."""
    stem.parent.mkdir(parents=True, exist_ok=True)
    stat_maps.save_stat_map(stat_map, stem.with_suffix(".amvt"))
    spec = _spec_for(config, stat_map.kind, signed)
    png = stem.with_suffix(".png")
    render.save_png(render.apply_colormap(stat_map, spec), png)
    render.write_render_sidecar(png, spec, render.resolve_bounds(stat_map.values, spec))
    edges, counts = render.histogram(stat_map, config.bins)
    render.write_histogram_csv(edges, counts, Path(str(stem) + "_hist.csv"))


# ---------------------------------------------------------------------------
# Stages


def stage_partition(config: RunConfig, manifest, methods, cache: SetMapCache) -> None:
    out = config.output_dir / "partition"
    out.mkdir(parents=True, exist_ok=True)
    for method in methods:
        for kind in (partition.KIND_HIGH, partition.KIND_LOW):
            qset = cache.quantile(method, kind)
            path = out / f"{method}_{kind}_ids.csv"
            path.write_text("image_id\n" + "\n".join(qset.image_ids) + "\n", encoding="utf-8")
            log.info("partition: %s %s -> %d ids", method, kind, len(qset))


def stage_stats(config: RunConfig, manifest, methods, cache: SetMapCache) -> None:
    out = config.output_dir / "stats"

    def one_method(method: str) -> None:
        for kind in (partition.KIND_HIGH, partition.KIND_LOW):
            maps = cache.maps(method, kind)
            for token, sm in maps.items():
                _save_map_artifacts(sm, out / f"{method}_{kind}_{token}", config)
        log.info("stats: %s done (8 tensors)", method)

    _run_parallel(one_method, methods)


def stage_diff(config: RunConfig, manifest, methods, cache: SetMapCache) -> None:
    out = config.output_dir / "diff"

    for method in methods:
        high = cache.maps(method, partition.KIND_HIGH)
        low = cache.maps(method, partition.KIND_LOW)
        damv = stat_maps.d_am_v(high["amv"], low["amv"])
        dammv = stat_maps.d_am_mv(high["ammv"], low["ammv"])
        _save_map_artifacts(damv, out / f"{method}_HL_damv", config)
        _save_map_artifacts(dammv, out / f"{method}_HL_dammv", config)
        log.info("diff: %s H/L differentials done", method)

    if len(methods) < 2:
        log.info("diff: single method, cross-method stage skipped")
        return
    for i, m1 in enumerate(methods):
        for m2 in methods[i + 1:]:
            for kind in (partition.KIND_HIGH, partition.KIND_LOW):
                xmap = stat_maps.cross_method_d_am_v(
                    cache.maps(m1, kind)["amv"], cache.maps(m2, kind)["amv"],
                    signed=config.signed,
                )
                stem = out / f"{m1}-{m2}_{kind}_xdamv"
                _save_map_artifacts(xmap, stem, config, signed=config.signed)
            log.info("diff: %s vs %s cross-method done", m1, m2)


def stage_erc(config: RunConfig, manifest, methods, cache: SetMapCache) -> None:
    if manifest.pairs_file is None:
        raise DataError("manifest has no pairs_file")
    out = config.output_dir / "erc"
    out.mkdir(parents=True, exist_ok=True)
    pairs = tensor_io.read_pairs_csv(manifest.pairs_file)
    curves = []
    for method in methods:
        curve = erc_mod.erc_curve(pairs, cache.table(method), config.target_fmr, config.ratios)
        erc_mod.write_erc_csv(curve, out / f"{method}_erc.csv")
        curves.append(curve)
        log.info("erc: %s threshold=%g, %d points", method, curve.threshold, len(curve.points))
    render.plot_erc_curves(curves, out / "erc_combined.png")


def stage_overlap(config: RunConfig, manifest, methods, cache: SetMapCache) -> None:
    if len(methods) < 2:
        raise DataError("overlap matrices need at least two methods")
    out = config.output_dir / "overlap"
    out.mkdir(parents=True, exist_ok=True)
    for kind in (partition.KIND_HIGH, partition.KIND_LOW):
        sets = [cache.quantile(method, kind) for method in methods]
        matrix = partition.overlap_matrix(sets)
        partition.write_overlap_csv(matrix, out / f"overlap_{kind}.csv")
        # cell-expanded heatmap on the natural [0, 1] scale
        spec = render.RenderSpec(normalization=render.FIXED, bounds=(0.0, 1.0),
                                 colormap=render.COLORMAPS[config.colormap])
        cells = np.kron(matrix.values, np.ones((48, 48)))
        png = out / f"overlap_{kind}.png"
        render.save_png(render.apply_colormap(cells, spec), png)
        render.write_render_sidecar(png, spec, (0.0, 1.0))
        log.info("overlap: %s matrix over %d methods", kind, len(methods))


def stage_panels(config: RunConfig, manifest, methods, cache: SetMapCache,
                 image_ids: list[str]) -> None:
    out = config.output_dir / "admam"
    out.mkdir(parents=True, exist_ok=True)
    spec = render.RenderSpec(normalization=render.MINMAX, alpha=config.alpha,
                             colormap=render.COLORMAPS[config.colormap])
    for image_id in image_ids:
        entry = manifest.image_by_id(image_id)
        activation = tensor_io.read_tensor(
            tensor_io.activation_path(manifest.activation_dir, image_id))
        maps = []
        scores = {}
        bounds: dict[str, list[float]] = {}
        for method in methods:
            reference = cache.maps(method, partition.KIND_HIGH)["mam"]
            deviation = stat_maps.ad_mam(activation, reference)
            stem = out / image_id / f"{method}_H_admam"
            stem.parent.mkdir(parents=True, exist_ok=True)
            stat_maps.save_stat_map(deviation, stem.with_suffix(".amvt"))
            maps.append(deviation)
            scores[method] = cache.table(method).scores.get(image_id, float("nan"))
            bounds[method] = list(render.resolve_bounds(deviation.values, spec))
        rgb = render.panel(entry.path, scores, maps, spec, activation=activation)
        png = out / f"{image_id}_panel.png"
        png.parent.mkdir(parents=True, exist_ok=True)
        render.save_png(rgb, png)
        sidecar = {
            "image": png.name,
            "normalization": spec.normalization,
            "colormap": spec.colormap.name,
            "alpha": spec.alpha,
            "tile_bounds": bounds,
        }
        png.with_suffix(".render.json").write_text(
            json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        log.info("panel: %s (%d maps)", image_id, len(maps))


def stage_scorecam(config: RunConfig, manifest, image_ids: list[str],
                   evaluator_cmd: str, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    tokens = scorecam.SubprocessEvaluator(evaluator_cmd).command
    for image_id in image_ids:
        entry = manifest.image_by_id(image_id)
        image = render.load_image_rgb(entry.path).astype(np.float64) / 255.0
        channels = tensor_io.read_tensor(
            tensor_io.channels_path(manifest.activation_dir, image_id))
        if channels.ndim != 3:
            raise DataError(
                f"channel tensor for {image_id!r} must be rank 3, got rank {channels.ndim}")
        command = [t.replace("{image}", str(entry.path)) for t in tokens]
        with scorecam.SubprocessEvaluator(command) as evaluator:
            result = scorecam.scorecam_map(
                scorecam.ChannelActivations(channels, image), evaluator)
        target = out_dir / f"{image_id}.amvt"
        target.parent.mkdir(parents=True, exist_ok=True)
        tensor_io.write_tensor(target, result.astype(np.float32))
        meta = {
            "tensor": target.name,
            "kind": "scorecam",
            "channels": int(channels.shape[0]),
            "channel_normalization": "minmax",
            "upsampling": "bilinear-corner-aligned",
            "baseline_subtracted": False,
            "evaluator": evaluator_cmd,
        }
        target.with_suffix(".meta.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        log.info("scorecam: %s (%d channels)", image_id, channels.shape[0])


# ---------------------------------------------------------------------------
# Subcommand handlers


def _config_from(args) -> RunConfig:
    return RunConfig(
        manifest_path=Path(args.manifest),
        methods=args.method,
        fraction=getattr(args, "fraction", DEFAULT_FRACTION),
        target_fmr=getattr(args, "fmr", DEFAULT_FMR),
        ratios=parse_ratios(getattr(args, "ratios", DEFAULT_RATIOS)),
        output_dir=Path(args.out),
        alpha=getattr(args, "alpha", 0.5),
        colormap=getattr(args, "colormap", "jet"),
        signed=getattr(args, "signed", True),
        bins=getattr(args, "bins", 50),
        panel_ids=_split_ids(getattr(args, "panel_ids", None)),
    )


def _split_ids(raw: str | None) -> list[str]:
    if not raw:
        return []
    return [part for part in raw.split(",") if part]


def _prepare(args):
    config = _config_from(args)
    manifest = tensor_io.read_manifest(config.manifest_path)
    methods = _resolve_methods(manifest, config.methods)
    cache = SetMapCache(manifest, config.fraction)
    return config, manifest, methods, cache


def cmd_partition(args) -> int:
    config, manifest, methods, cache = _prepare(args)
    stage_partition(config, manifest, methods, cache)
    return EXIT_OK


def cmd_stats(args) -> int:
    config, manifest, methods, cache = _prepare(args)
    stage_stats(config, manifest, methods, cache)
    return EXIT_OK


def cmd_diff(args) -> int:
    config, manifest, methods, cache = _prepare(args)
    stage_diff(config, manifest, methods, cache)
    return EXIT_OK


def cmd_erc(args) -> int:
    config, manifest, methods, cache = _prepare(args)
    stage_erc(config, manifest, methods, cache)
    return EXIT_OK


def cmd_overlap(args) -> int:
    config, manifest, methods, cache = _prepare(args)
    stage_overlap(config, manifest, methods, cache)
    return EXIT_OK


def cmd_admam(args) -> int:
    config, manifest, methods, cache = _prepare(args)
    ids = _split_ids(args.ids)
    if not ids:
        raise ConfigError("--ids is required for admam")
    stage_panels(config, manifest, methods, cache, ids)
    return EXIT_OK


def cmd_scorecam(args) -> int:
    # needs no quality tables, only images and channel tensors
    config = _config_from(args)
    manifest = tensor_io.read_manifest(config.manifest_path)
    if not args.evaluator_cmd:
        raise ConfigError("--evaluator-cmd is required for scorecam")
    ids = _split_ids(args.ids) or [img.id for img in manifest.images]
    out_dir = Path(args.out) if args.out else manifest.activation_dir
    stage_scorecam(config, manifest, ids, args.evaluator_cmd, out_dir)
    return EXIT_OK


def cmd_render(args) -> int:
    if args.colormap not in render.COLORMAPS:
        raise ConfigError(f"unknown colormap {args.colormap!r}")
    bounds = None
    if args.bounds:
        parts = args.bounds.split(":")
        if len(parts) != 2:
            raise ConfigError(f"--bounds must look like lo:hi, got {args.bounds!r}")
        try:
            bounds = (float(parts[0]), float(parts[1]))
        except ValueError:
            raise ConfigError(f"--bounds values must be numbers, got {args.bounds!r}") from None
    try:
        spec = render.RenderSpec(normalization=args.normalization, bounds=bounds,
                                 alpha=args.alpha, colormap=render.COLORMAPS[args.colormap])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    values = tensor_io.read_tensor(Path(args.input))
    if values.ndim != 2:
        raise DataError(f"can only render rank-2 tensors, got rank {values.ndim}")
    rgb = render.apply_colormap(values, spec)
    if args.base:
        rgb = render.overlay(render.load_image_rgb(args.base), rgb, args.alpha)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    render.save_png(rgb, out)
    render.write_render_sidecar(out, spec, render.resolve_bounds(values, spec))
    return EXIT_OK


def full_report(config: RunConfig) -> int:
    """Run the whole pipeline; independent stages continue past failures."""
    manifest = tensor_io.read_manifest(config.manifest_path)
    methods = _resolve_methods(manifest, config.methods)
    cache = SetMapCache(manifest, config.fraction)
    worst = EXIT_OK

    def attempt(name, fn) -> None:
        nonlocal worst
        try:
            fn()
        except (DataError, ValueError) as e:
            log.error("%s stage failed: %s", name, e)
            worst = max(worst, EXIT_DATA)
        except OSError as e:
            log.error("%s stage failed: %s", name, e)
            worst = max(worst, EXIT_IO)

    attempt("partition", lambda: stage_partition(config, manifest, methods, cache))
    attempt("stats", lambda: stage_stats(config, manifest, methods, cache))
    attempt("diff", lambda: stage_diff(config, manifest, methods, cache))

    if manifest.pairs_file is None:
        log.info("erc: no pairs_file in manifest, stage skipped")
    else:
        attempt("erc", lambda: stage_erc(config, manifest, methods, cache))

    if len(methods) < 2:
        log.info("overlap: single method, stage skipped")
    else:
        attempt("overlap", lambda: stage_overlap(config, manifest, methods, cache))

    if config.panel_ids:
        attempt("panels", lambda: stage_panels(config, manifest, methods, cache,
                                               config.panel_ids))
    else:
        log.info("panels: no --panel-ids requested, stage skipped")
    return worst


def cmd_report(args) -> int:
    return full_report(_config_from(args))


# ---------------------------------------------------------------------------
# Parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}\n{self.format_usage()}")


def _add_common(p, fraction=True, fmr=False, ratios=False, renderish=True):
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--method", default="all", help="FIQA method name or 'all'")
    p.add_argument("--out", default="amva_out", help="output directory")
    if fraction:
        p.add_argument("--fraction", type=float, default=DEFAULT_FRACTION,
                       help="quantile fraction for H/L sets (default 0.10)")
    if fmr:
        p.add_argument("--fmr", type=float, default=DEFAULT_FMR,
                       help="target false-match rate (default 0.001)")
        p.add_argument("--ratios", default=DEFAULT_RATIOS,
                       help="reject ratios as start:stop:step (default 0:0.32:0.02)")
    if renderish:
        p.add_argument("--alpha", type=float, default=0.5, help="overlay opacity")
        p.add_argument("--colormap", default="jet", choices=sorted(render.COLORMAPS),
                       help="colormap for rendered maps")
        p.add_argument("--bins", type=int, default=50, help="histogram bin count")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="amva",
        description="Batch variation analytics over face-recognition activation maps. "
                    "Quality scores are 'higher = better'; comparison scores are "
                    "'higher = more similar'.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("partition", help="select H/L quality quantile sets")
    _add_common(p, renderish=False)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("stats", help="per-set MAM/MDAM/AM-V/AM-MV maps")
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("diff", help="H/L and cross-method variation differentials")
    _add_common(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--signed", dest="signed", action="store_true", default=True,
                       help="signed cross-method differences (default)")
    group.add_argument("--absolute", dest="signed", action="store_false",
                       help="absolute cross-method differences")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("erc", help="error-versus-reject curves")
    _add_common(p, fraction=False, fmr=True, renderish=False)
    p.set_defaults(func=cmd_erc)

    p = sub.add_parser("overlap", help="quantile overlap matrices between methods")
    _add_common(p)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("admam", help="per-image deviation maps and panels")
    _add_common(p)
    p.add_argument("--ids", required=True, help="comma-separated image ids")
    p.set_defaults(func=cmd_admam)

    p = sub.add_parser("scorecam", help="build activation maps from channel tensors")
    _add_common(p, fraction=False, renderish=False)
    p.add_argument("--ids", default="", help="comma-separated image ids (default: all)")
    p.add_argument("--evaluator-cmd", default="",
                   help="evaluator command; '{image}' expands to the image path")
    p.set_defaults(func=cmd_scorecam)

    p = sub.add_parser("render", help="render one AMVT tensor to PNG")
    p.add_argument("--input", required=True, help="rank-2 AMVT tensor")
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--normalization", default=render.MINMAX,
                   choices=(render.MINMAX, render.FIXED, render.SYMMETRIC))
    p.add_argument("--bounds", default="", help="lo:hi for fixed normalization")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--colormap", default="jet", choices=sorted(render.COLORMAPS))
    p.add_argument("--base", default="", help="optional base image to overlay onto")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("report", help="full pipeline: partition through panels")
    _add_common(p, fmr=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--signed", dest="signed", action="store_true", default=True)
    group.add_argument("--absolute", dest="signed", action="store_false")
    p.add_argument("--panel-ids", default="",
                   help="comma-separated image ids for deviation panels")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ValueError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
