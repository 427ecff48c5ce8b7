"""Quality-quantile selection and overlap statistics between methods.

The H ("highest quality") and L ("lowest quality") sets of a method are the
floor(fraction * N) images with the largest / smallest scores. Score ties are
broken by ascending image id so that runs are reproducible regardless of
platform or input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor_io import QualityTable

KIND_HIGH = "H"
KIND_LOW = "L"


def _floor_count(fraction: float, total: int) -> int:
    # The tiny nudge keeps decimal fractions honest: 0.3 * 10 in binary is
    # 2.9999999999999996, which must still select 3 images.
    return int(math.floor(fraction * total + 1e-9))


def rank_ascending(table: QualityTable) -> list[str]:
    """Image ids from worst to best quality, ties broken by ascending id."""
    return sorted(table.scores, key=lambda i: (table.scores[i], i))


@dataclass(frozen=True)
class QuantileSet:
    method: str
    kind: str  # KIND_HIGH or KIND_LOW
    fraction: float
    image_ids: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in (KIND_HIGH, KIND_LOW):
            raise ValueError(f"kind must be H or L, got {self.kind!r}")
        if len(set(self.image_ids)) != len(self.image_ids):
            raise ValueError("duplicate ids in quantile set")

    def __len__(self) -> int:
        return len(self.image_ids)


def select_quantile(table: QualityTable, fraction: float, kind: str) -> QuantileSet:
    """Select the floor(fraction * N) lowest (L) or highest (H) scored ids.

    ``fraction`` is capped at 0.5 so H and L cannot be forced to overlap by
    construction. Selection depends only on score ranks, never on score
    values, so any strictly monotone rescoring selects the same ids.
    """
    if kind not in (KIND_HIGH, KIND_LOW):
        raise ValueError(f"kind must be H or L, got {kind!r}")
    if not 0.0 < fraction <= 0.5:
        raise ValueError(f"fraction must be in (0, 0.5], got {fraction}")
    count = _floor_count(fraction, len(table))
    if count < 1:
        raise ValueError(
            f"fraction {fraction} of {len(table)} images selects an empty set"
        )
    if kind == KIND_LOW:
        chosen = rank_ascending(table)[:count]
    else:
        # Highest scores first; ids ascending within a tied score.
        chosen = sorted(table.scores, key=lambda i: (-table.scores[i], i))[:count]
    return QuantileSet(table.method, kind, fraction, tuple(chosen))


def overlap_ratio(s1: QuantileSet, s2: QuantileSet) -> float:
    """|ids(s1) & ids(s2)| / |ids(s1)|."""
    if s1.kind != s2.kind:
        raise ValueError(f"mismatched set kinds: {s1.kind} vs {s2.kind}")
    if len(s1) == 0:
        raise ValueError("first set is empty")
    return len(set(s1.image_ids) & set(s2.image_ids)) / len(s1)


@dataclass
class OverlapMatrix:
    methods: tuple[str, ...]
    kind: str
    values: np.ndarray  # (M, M) float64 in [0, 1], unit diagonal


def overlap_matrix(sets: list[QuantileSet]) -> OverlapMatrix:
    """Pairwise overlap ratios between same-kind, same-size quantile sets."""
    if len(sets) < 2:
        raise ValueError("need at least two quantile sets")
    kind = sets[0].kind
    size = len(sets[0])
    for s in sets[1:]:
        if s.kind != kind:
            raise ValueError(f"mixed set kinds: {s.kind} vs {kind}")
        if len(s) != size:
            raise ValueError(f"set sizes differ: {len(s)} vs {size}")
    m = len(sets)
    values = np.ones((m, m), dtype=np.float64)
    for i in range(m):
        for j in range(m):
            if i != j:
                values[i, j] = overlap_ratio(sets[i], sets[j])
    return OverlapMatrix(tuple(s.method for s in sets), kind, values)


def write_overlap_csv(matrix: OverlapMatrix, path: str | Path) -> None:
    """Serialize: header row of method names, then one row per method."""
    lines = [",".join(matrix.methods)]
    for row in matrix.values:
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
