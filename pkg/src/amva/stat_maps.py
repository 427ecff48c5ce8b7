"""Per-pixel statistics over activation-map stacks.

For a stack of N same-shaped maps the toolkit computes, pixelwise:

    MAM     arithmetic mean
    AM-V    population root-mean-square deviation about the mean
    MDAM    median (even N: mean of the two middle order statistics)
    AM-MV   population root-mean-square deviation about the median

and from those, difference maps:

    D-AM-V / D-AM-MV   |H-set map - L-set map| for one method
    X-D-AM-V           (signed or absolute) AM-V difference between two
                       methods' same-kind sets
    AD-MAM             |single image map - reference MAM|

Spread maps divide by N (population, no Bessel correction). All reductions
accumulate in float64 with a fixed order, then store float32, so repeated
runs are bit-identical and N ~ 1500 sums stay accurate.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .tensor_io import ActivationStack, write_tensor


class MapKind(enum.Enum):
    MAM = "MAM"
    MDAM = "MDAM"
    AM_V = "AM-V"
    AM_MV = "AM-MV"
    D_AM_V = "D-AM-V"
    D_AM_MV = "D-AM-MV"
    X_D_AM_V = "X-D-AM-V"
    AD_MAM = "AD-MAM"


# Signed cross-method maps may go negative; everything else is nonnegative
# except the location maps, whose sign follows the input activations.
NONNEGATIVE_KINDS = frozenset(
    {MapKind.AM_V, MapKind.AM_MV, MapKind.D_AM_V, MapKind.D_AM_MV, MapKind.AD_MAM}
)

SET_KINDS = ("H", "L", "cross", "")


@dataclass(frozen=True)
class MapMeta:
    """Provenance carried with a map and written to its JSON sidecar.

    For maps combining two stacks (D-* kinds), ``n`` is the total number of
    source images on both sides.
    """

    methods: tuple[str, ...] = ()
    set_kind: str = ""
    n: int = 0
    fraction: float | None = None

    def __post_init__(self):
        if self.set_kind not in SET_KINDS:
            raise ValueError(f"set_kind must be one of {SET_KINDS}, got {self.set_kind!r}")


@dataclass
class StatMap:
    kind: MapKind
    values: np.ndarray  # (H, W) float32
    meta: MapMeta

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ValueError(f"stat maps are 2-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("stat map contains non-finite values")
        if self.kind in NONNEGATIVE_KINDS and np.any(self.values < 0):
            raise ValueError(f"{self.kind.value} map must be nonnegative")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _meta_for(stack: ActivationStack, method: str, set_kind: str, fraction) -> MapMeta:
    methods = (method,) if method else ()
    return MapMeta(methods=methods, set_kind=set_kind, n=stack.n, fraction=fraction)


def mam(stack: ActivationStack, method: str = "", set_kind: str = "",
        fraction: float | None = None) -> StatMap:
    """Pixelwise mean over the stack."""
    values = stack.maps.astype(np.float64).mean(axis=0)
    return StatMap(MapKind.MAM, values.astype(np.float32),
                   _meta_for(stack, method, set_kind, fraction))


def mdam(stack: ActivationStack, method: str = "", set_kind: str = "",
         fraction: float | None = None) -> StatMap:
    """Pixelwise median; for even N the mean of the two middle values."""
    values = np.median(stack.maps.astype(np.float64), axis=0)
    return StatMap(MapKind.MDAM, values.astype(np.float32),
                   _meta_for(stack, method, set_kind, fraction))


def _rms_about(maps64: np.ndarray, center: np.ndarray) -> np.ndarray:
    return np.sqrt(np.mean((maps64 - center) ** 2, axis=0))


def am_v(stack: ActivationStack, method: str = "", set_kind: str = "",
         fraction: float | None = None) -> StatMap:
    """Pixelwise population standard deviation (divide by N)."""
    maps64 = stack.maps.astype(np.float64)
    values = _rms_about(maps64, maps64.mean(axis=0))
    return StatMap(MapKind.AM_V, values.astype(np.float32),
                   _meta_for(stack, method, set_kind, fraction))


def am_mv(stack: ActivationStack, method: str = "", set_kind: str = "",
          fraction: float | None = None) -> StatMap:
    """Pixelwise RMS deviation about the median (divide by N)."""
    maps64 = stack.maps.astype(np.float64)
    values = _rms_about(maps64, np.median(maps64, axis=0))
    return StatMap(MapKind.AM_MV, values.astype(np.float32),
                   _meta_for(stack, method, set_kind, fraction))


def _check_pair(a: StatMap, b: StatMap, kind: MapKind) -> None:
    if a.kind != kind or b.kind != kind:
        raise ValueError(f"expected two {kind.value} maps, got {a.kind.value} and {b.kind.value}")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def _merged_methods(a: StatMap, b: StatMap) -> tuple[str, ...]:
    merged = list(a.meta.methods)
    for m in b.meta.methods:
        if m not in merged:
            merged.append(m)
    return tuple(merged)


def d_am_v(h: StatMap, l: StatMap) -> StatMap:
    """|AM-V(h) - AM-V(l)| elementwise; symmetric in argument order."""
    _check_pair(h, l, MapKind.AM_V)
    values = np.abs(h.values - l.values)
    fraction = h.meta.fraction if h.meta.fraction == l.meta.fraction else None
    meta = MapMeta(_merged_methods(h, l), "cross", h.meta.n + l.meta.n, fraction)
    return StatMap(MapKind.D_AM_V, values, meta)


def d_am_mv(h: StatMap, l: StatMap) -> StatMap:
    """|AM-MV(h) - AM-MV(l)| elementwise; symmetric in argument order."""
    _check_pair(h, l, MapKind.AM_MV)
    values = np.abs(h.values - l.values)
    fraction = h.meta.fraction if h.meta.fraction == l.meta.fraction else None
    meta = MapMeta(_merged_methods(h, l), "cross", h.meta.n + l.meta.n, fraction)
    return StatMap(MapKind.D_AM_MV, values, meta)


def cross_method_d_am_v(m1: StatMap, m2: StatMap, signed: bool = True) -> StatMap:
    """AM-V difference between two methods over the same set kind.

    ``signed=True`` keeps the sign of m1 - m2 (render with a diverging
    colormap); ``signed=False`` takes the absolute value. Inputs must both
    derive from H sets or both from L sets.
    """
    _check_pair(m1, m2, MapKind.AM_V)
    if m1.meta.set_kind not in ("H", "L") or m2.meta.set_kind not in ("H", "L"):
        raise ValueError("cross-method inputs must carry an H or L set kind")
    if m1.meta.set_kind != m2.meta.set_kind:
        raise ValueError(
            f"cannot mix {m1.meta.set_kind}-derived with {m2.meta.set_kind}-derived maps"
        )
    values = m1.values - m2.values
    if not signed:
        values = np.abs(values)
    fraction = m1.meta.fraction if m1.meta.fraction == m2.meta.fraction else None
    meta = MapMeta(_merged_methods(m1, m2), m1.meta.set_kind, m1.meta.n + m2.meta.n, fraction)
    return StatMap(MapKind.X_D_AM_V, values, meta)


def ad_mam(image_map: np.ndarray, reference: StatMap) -> StatMap:
    """|single image activation - reference MAM| elementwise."""
    if reference.kind != MapKind.MAM:
        raise ValueError(f"reference must be a MAM map, got {reference.kind.value}")
    image_map = np.asarray(image_map, dtype=np.float32)
    if image_map.shape != reference.shape:
        raise ValueError(f"shape mismatch: {image_map.shape} vs {reference.shape}")
    values = np.abs(image_map - reference.values)
    return StatMap(MapKind.AD_MAM, values, replace(reference.meta))


# ---------------------------------------------------------------------------
# Persistence: AMVT tensor + <stem>.meta.json sidecar


def save_stat_map(stat_map: StatMap, path: str | Path) -> Path:
    """Write the map as AMVT plus a ``<stem>.meta.json`` sidecar.

    Returns the sidecar path. The sidecar names the tensor file it
    describes, so the pair stays self-describing when listed.
    """
    path = Path(path)
    write_tensor(path, stat_map.values)
    sidecar = path.with_suffix(".meta.json")
    meta = {
        "tensor": path.name,
        "kind": stat_map.kind.value,
        "methods": list(stat_map.meta.methods),
        "set_kind": stat_map.meta.set_kind,
        "n": stat_map.meta.n,
        "fraction": stat_map.meta.fraction,
    }
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return sidecar
