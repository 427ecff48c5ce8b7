"""Error-versus-reject characteristic.

FNMR is tracked at a fixed similarity threshold while a growing fraction of
the lowest-quality images is discarded. The threshold is calibrated once on
the full impostor set (the zero-rejection point) and never recomputed; that
policy is recorded in the curve's metadata sidecar. A comparison pair
survives rejection only if both of its images survive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .partition import _floor_count, rank_ascending
from .tensor_io import GENUINE, ComparisonSet, QualityTable

THRESHOLD_POLICY = "fixed-at-zero-rejection"


@dataclass(frozen=True)
class ErcPoint:
    reject_ratio: float
    fnmr: float
    surviving_genuine: int


@dataclass
class ErcCurve:
    method: str
    target_fmr: float
    threshold: float
    points: list[ErcPoint]


def threshold_at_fmr(impostor_scores, target_fmr: float) -> float:
    """Smallest admissible threshold with FMR <= target_fmr.

    FMR(t) is the fraction of impostor scores >= t (higher score = match).
    Candidates are the sorted unique scores; if even the largest score keeps
    too many impostors at or above it, the threshold lands just past the
    maximum (nextafter), where FMR is exactly 0.
    """
    scores = np.sort(np.asarray(impostor_scores, dtype=np.float64))
    if scores.size == 0:
        raise ValueError("impostor score list is empty")
    if not np.all(np.isfinite(scores)):
        raise ValueError("impostor scores must be finite")
    if not 0.0 < target_fmr < 1.0:
        raise ValueError(f"target_fmr must be in (0, 1), got {target_fmr}")
    unique = np.unique(scores)
    counts_at_or_above = scores.size - np.searchsorted(scores, unique, side="left")
    fmr = counts_at_or_above / scores.size
    admissible = np.nonzero(fmr <= target_fmr)[0]
    if admissible.size == 0:
        return float(np.nextafter(unique[-1], np.inf))
    return float(unique[admissible[0]])


def fnmr_at(pairs: ComparisonSet, threshold: float, rejected_ids: set[str]) -> tuple[float, int]:
    """FNMR over genuine pairs whose images both survived rejection.

    Returns (fnmr, surviving_genuine_count). Raises if no genuine pair
    survives, since the curve is undefined there.
    """
    surviving = [
        p for p in pairs.pairs
        if p.label == GENUINE and p.id_a not in rejected_ids and p.id_b not in rejected_ids
    ]
    if not surviving:
        raise ValueError("curve undefined at ratio: no surviving genuine pairs")
    below = sum(1 for p in surviving if p.score < threshold)
    return below / len(surviving), len(surviving)


def erc_curve(pairs: ComparisonSet, quality: QualityTable, target_fmr: float,
              ratios) -> ErcCurve:
    """Compute the curve over the given reject ratios.

    Ratios must be sorted ascending, start at 0.0 and stay below 1.0. At
    ratio r the floor(r * N) worst-quality images are rejected (same
    score-then-id ordering the quantile selection uses), N being the number
    of images in the quality table.
    """
    ratios = [float(r) for r in ratios]
    if not ratios or ratios[0] != 0.0:
        raise ValueError("ratios must start at 0.0")
    if any(b <= a for a, b in zip(ratios, ratios[1:])):
        raise ValueError("ratios must be strictly ascending")
    if ratios[-1] >= 1.0 or ratios[0] < 0.0:
        raise ValueError("ratios must lie in [0, 1)")

    missing = sorted(pairs.image_ids() - set(quality.scores))
    if missing:
        raise ValueError(
            f"no quality score for paired image(s): {', '.join(missing[:5])}"
            + (" ..." if len(missing) > 5 else "")
        )

    impostors = pairs.impostor_scores()
    if impostors.size == 0:
        raise ValueError("comparison set has no impostor pairs")
    if pairs.genuine_scores().size == 0:
        raise ValueError("comparison set has no genuine pairs")

    threshold = threshold_at_fmr(impostors, target_fmr)
    worst_to_best = rank_ascending(quality)
    total = len(quality)

    points = []
    for ratio in ratios:
        rejected = set(worst_to_best[: _floor_count(ratio, total)])
        fnmr, surviving = fnmr_at(pairs, threshold, rejected)
        points.append(ErcPoint(ratio, fnmr, surviving))
    return ErcCurve(quality.method, target_fmr, threshold, points)


def write_erc_csv(curve: ErcCurve, path: str | Path) -> Path:
    """Write ``reject_ratio,fnmr,surviving_genuine`` rows plus a JSON sidecar."""
    path = Path(path)
    lines = ["reject_ratio,fnmr,surviving_genuine"]
    for p in curve.points:
        lines.append(f"{p.reject_ratio!r},{p.fnmr!r},{p.surviving_genuine}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    sidecar = path.with_suffix(".json")
    meta = {
        "method": curve.method,
        "target_fmr": curve.target_fmr,
        "threshold": curve.threshold,
        "threshold_policy": THRESHOLD_POLICY,
        "score_convention": "similarity, higher = more likely genuine",
    }
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return sidecar
