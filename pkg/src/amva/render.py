"""Rendering of stat maps, overlays, histograms, panels and curve plots.

This module owns all PNG encoding/decoding. Output PNGs are 8-bit RGB, no
alpha channel, no interlacing, and byte-for-byte deterministic. Whenever a
map is normalized for display, the bounds used are written to a
``<stem>.render.json`` sidecar so the scaling stays recoverable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont, UnidentifiedImageError

from .errors import DataError

MINMAX = "minmax"
FIXED = "fixed"
SYMMETRIC = "symmetric"

_TILE_MARGIN = 8
_TEXT_LINE_HEIGHT = 12
_TEXT_PAD = 4


@dataclass(frozen=True)
class Colormap:
    """Piecewise-linear RGB colormap over [0, 1]."""

    name: str
    stops: tuple[tuple[float, tuple[int, int, int]], ...]

    def __post_init__(self):
        positions = [p for p, _ in self.stops]
        if len(positions) < 2:
            raise ValueError("colormap needs at least two stops")
        if positions[0] != 0.0 or positions[-1] != 1.0:
            raise ValueError("colormap stops must start at 0.0 and end at 1.0")
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise ValueError("colormap stop positions must be strictly increasing")

    def __call__(self, t: np.ndarray) -> np.ndarray:
        """Map values in [0, 1] to (..., 3) uint8 colors."""
        t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
        positions = np.array([p for p, _ in self.stops])
        out = np.empty(t.shape + (3,), dtype=np.uint8)
        for c in range(3):
            channel = np.array([rgb[c] for _, rgb in self.stops], dtype=np.float64)
            out[..., c] = np.floor(np.interp(t, positions, channel) + 0.5).astype(np.uint8)
        return out


JET = Colormap("jet", (
    (0.0, (0, 0, 131)),
    (0.125, (0, 60, 170)),
    (0.375, (5, 255, 255)),
    (0.625, (255, 255, 0)),
    (0.875, (250, 0, 0)),
    (1.0, (128, 0, 0)),
))

GRAY = Colormap("gray", ((0.0, (0, 0, 0)), (1.0, (255, 255, 255))))

# For signed maps rendered with symmetric bounds: zero sits on the midpoint.
DIVERGING = Colormap("diverging", (
    (0.0, (59, 76, 192)),
    (0.5, (221, 221, 221)),
    (1.0, (180, 4, 38)),
))

COLORMAPS = {cm.name: cm for cm in (JET, GRAY, DIVERGING)}


@dataclass(frozen=True)
class RenderSpec:
    """How to turn scalar maps into colors.

    ``normalization`` is one of ``minmax`` (per-map bounds), ``fixed``
    (explicit ``bounds``) or ``symmetric`` (+-max absolute value, for signed
    maps). ``alpha`` blends heatmaps over base images.
    """

    normalization: str = MINMAX
    bounds: tuple[float, float] | None = None
    alpha: float = 0.5
    colormap: Colormap = field(default=JET)

    def __post_init__(self):
        if self.normalization not in (MINMAX, FIXED, SYMMETRIC):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.normalization == FIXED:
            if self.bounds is None:
                raise ValueError("fixed normalization requires bounds")
            lo, hi = self.bounds
            if not lo < hi:
                raise ValueError(f"fixed bounds need lo < hi, got ({lo}, {hi})")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")


def resolve_bounds(values: np.ndarray, spec: RenderSpec) -> tuple[float, float]:
    """Normalization bounds actually used for ``values`` under ``spec``."""
    values = np.asarray(values)
    if spec.normalization == FIXED:
        lo, hi = spec.bounds
        return float(lo), float(hi)
    if spec.normalization == SYMMETRIC:
        peak = float(np.abs(values).max())
        return -peak, peak
    return float(values.min()), float(values.max())


def apply_colormap(stat_map, spec: RenderSpec) -> np.ndarray:
    """Normalize a map per ``spec`` and color it; returns (H, W, 3) uint8.

    Degenerate bounds (constant map) land on the 0.0 stop under minmax and
    on the 0.5 midpoint under symmetric bounds.
    """
    values = np.asarray(getattr(stat_map, "values", stat_map), dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("cannot render non-finite values")
    lo, hi = resolve_bounds(values, spec)
    if hi > lo:
        t = (values - lo) / (hi - lo)
    elif spec.normalization == SYMMETRIC:
        t = np.full(values.shape, 0.5)
    else:
        t = np.zeros(values.shape)
    return spec.colormap(t)


def overlay(base_image: np.ndarray, heat: np.ndarray, alpha: float) -> np.ndarray:
    """Per-channel blend round((1-alpha)*base + alpha*heat)."""
    base_image = np.asarray(base_image)
    heat = np.asarray(heat)
    if base_image.shape != heat.shape:
        raise ValueError(f"size mismatch: base {base_image.shape} vs heat {heat.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    mixed = (1.0 - alpha) * base_image.astype(np.float64) + alpha * heat.astype(np.float64)
    return np.floor(mixed + 0.5).astype(np.uint8)


def histogram(stat_map, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Equal-width histogram over [min, max]; the last bin is right-inclusive.

    A constant map puts all mass in the last bin (its edges collapse).
    Counts always sum to the pixel count.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    values = np.asarray(getattr(stat_map, "values", stat_map), dtype=np.float64).ravel()
    lo = values.min()
    hi = values.max()
    if hi == lo:
        edges = np.linspace(lo, hi, bins + 1)
        counts = np.zeros(bins, dtype=np.int64)
        counts[-1] = values.size
        return edges, counts
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return edges, counts.astype(np.int64)


def write_histogram_csv(edges: np.ndarray, counts: np.ndarray, path: str | Path) -> None:
    """Write ``bin_lo,bin_hi,count`` rows."""
    lines = ["bin_lo,bin_hi,count"]
    for i, count in enumerate(counts):
        lines.append(f"{float(edges[i])!r},{float(edges[i + 1])!r},{int(count)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# PNG I/O


def save_png(rgb: np.ndarray, path: str | Path) -> None:
    """Write an (H, W, 3) uint8 array as a non-interlaced RGB PNG."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError(f"expected (H, W, 3) uint8, got {rgb.shape} {rgb.dtype}")
    Image.fromarray(rgb, mode="RGB").save(Path(path), format="PNG")


def load_image_rgb(path: str | Path) -> np.ndarray:
    """Decode an image file to (H, W, 3) uint8."""
    try:
        with Image.open(Path(path)) as im:
            return np.asarray(im.convert("RGB"))
    except UnidentifiedImageError as e:
        raise DataError(f"unreadable image file {path}: {e}") from None


def write_render_sidecar(png_path: str | Path, spec: RenderSpec,
                         bounds: tuple[float, float]) -> Path:
    """Record normalization bounds, colormap and alpha next to a PNG."""
    png_path = Path(png_path)
    sidecar = png_path.with_suffix(".render.json")
    meta = {
        "image": png_path.name,
        "normalization": spec.normalization,
        "bounds": [bounds[0], bounds[1]],
        "colormap": spec.colormap.name,
        "alpha": spec.alpha,
    }
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return sidecar


# ---------------------------------------------------------------------------
# Panels


def _bitmap_font():
    if hasattr(ImageFont, "load_default_imagefont"):
        return ImageFont.load_default_imagefont()
    return ImageFont.load_default()


def panel_dimensions(image_shape: tuple[int, int], n_tiles: int,
                     n_score_lines: int) -> tuple[int, int]:
    """Pixel size (height, width) of a panel before it is drawn."""
    h, w = image_shape
    width = n_tiles * w + (n_tiles + 1) * _TILE_MARGIN
    height = h + 2 * _TILE_MARGIN
    if n_score_lines:
        height += n_score_lines * _TEXT_LINE_HEIGHT + _TEXT_PAD
    return height, width


def panel(image_path: str | Path, quality_scores: dict[str, float], maps,
          spec: RenderSpec, activation: np.ndarray | None = None) -> np.ndarray:
    """Compose one row of tiles: original, optional activation overlay, then
    one overlay per stat map, with quality scores printed below.

    Tile order is fixed; scores are printed one ``method: value`` line per
    method, sorted by method name. Returns the (H', W', 3) uint8 panel.
    """
    base = load_image_rgb(image_path)
    h, w = base.shape[:2]

    tiles = [base]
    if activation is not None:
        activation = np.asarray(activation)
        if activation.shape != (h, w):
            raise ValueError(f"activation shape {activation.shape} != image {h}x{w}")
        tiles.append(overlay(base, apply_colormap(activation, spec), spec.alpha))
    for m in maps:
        values = np.asarray(getattr(m, "values", m))
        if values.shape != (h, w):
            raise ValueError(f"map shape {values.shape} != image {h}x{w}")
        tiles.append(overlay(base, apply_colormap(values, spec), spec.alpha))

    score_lines = [f"{name}: {quality_scores[name]:.4f}" for name in sorted(quality_scores)]
    height, width = panel_dimensions((h, w), len(tiles), len(score_lines))

    canvas = np.full((height, width, 3), 255, dtype=np.uint8)
    for i, tile in enumerate(tiles):
        x = _TILE_MARGIN + i * (w + _TILE_MARGIN)
        canvas[_TILE_MARGIN:_TILE_MARGIN + h, x:x + w] = tile

    if score_lines:
        im = Image.fromarray(canvas, mode="RGB")
        draw = ImageDraw.Draw(im)
        font = _bitmap_font()
        y = _TILE_MARGIN + h + _TEXT_PAD
        for line in score_lines:
            draw.text((_TILE_MARGIN, y), line, font=font, fill=(0, 0, 0))
            y += _TEXT_LINE_HEIGHT
        canvas = np.asarray(im)
    return canvas


# ---------------------------------------------------------------------------
# Curve plots


def plot_erc_curves(curves, path: str | Path) -> None:
    """Plot one or more reject-ratio/FNMR curves into a single PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5), dpi=100)
    for curve in curves:
        xs = [p.reject_ratio for p in curve.points]
        ys = [p.fnmr for p in curve.points]
        ax.plot(xs, ys, marker="o", markersize=3, label=curve.method)
    ax.set_xlabel("ratio of lowest-quality images rejected")
    ax.set_ylabel("FNMR at fixed threshold")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(path), format="png")
    plt.close(fig)
