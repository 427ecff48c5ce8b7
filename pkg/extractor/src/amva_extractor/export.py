"""Batch export: channel activations, saliency maps, quality and pair CSVs.

Outputs use the same file formats the analytics package reads (AMVT tensors,
``image_id,score`` and ``id_a,id_b,score,label`` CSVs), produced from a
manifest listing images and their subjects.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from . import amvt
from .model import DEFAULT_SIZE, cosine, embed_and_activations, load_image, saliency_map

log = logging.getLogger("amva_extractor")


@dataclass(frozen=True)
class ManifestImage:
    id: str
    path: Path
    subject: str


def read_image_list(manifest_path: str | Path) -> list[ManifestImage]:
    """Images from a manifest JSON; relative paths resolve against its dir."""
    manifest_path = Path(manifest_path)
    raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    if "images" not in raw or not raw["images"]:
        raise ValueError(f"{manifest_path}: manifest lists no images")
    images = []
    seen = set()
    for entry in raw["images"]:
        image_id = entry["id"]
        if image_id in seen:
            raise ValueError(f"{manifest_path}: duplicate image id {image_id!r}")
        seen.add(image_id)
        path = Path(entry["path"])
        if not path.is_absolute():
            path = manifest_path.parent / path
        images.append(ManifestImage(image_id, path, str(entry.get("subject", ""))))
    return images


def export_activations(model, images: list[ManifestImage], out_dir: str | Path,
                       size: int = DEFAULT_SIZE, what: str = "both") -> list[Path]:
    """Write per-image channel tensors (K x h x w) and/or final maps (H x W).

    Channel tensors land at ``<out>/<id>.channels.amvt``, final maps at
    ``<out>/<id>.amvt``, matching where the analytics pipeline looks.
    """
    if what not in ("channels", "maps", "both"):
        raise ValueError(f"what must be channels|maps|both, got {what!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for entry in images:
        image = load_image(entry.path, size=size)
        if what in ("channels", "both"):
            _, activations = embed_and_activations(model, image)
            target = out_dir / f"{entry.id}.channels.amvt"
            target.parent.mkdir(parents=True, exist_ok=True)
            amvt.write(target, activations)
            written.append(target)
        if what in ("maps", "both"):
            target = out_dir / f"{entry.id}.amvt"
            target.parent.mkdir(parents=True, exist_ok=True)
            amvt.write(target, saliency_map(model, image).astype(np.float32))
            written.append(target)
        log.info("exported %s", entry.id)
    return written


# ---------------------------------------------------------------------------
# Quality scorers


def _embed_norm_score(model, image: np.ndarray) -> float:
    emb, _ = embed_and_activations(model, image)
    return float(np.linalg.norm(emb.astype(np.float64)))


def _sharpness_score(model, image: np.ndarray) -> float:
    gray = image.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
    lap = (-4.0 * gray[1:-1, 1:-1] + gray[:-2, 1:-1] + gray[2:, 1:-1]
           + gray[1:-1, :-2] + gray[1:-1, 2:])
    return float(lap.var())


SCORERS = {
    "embed-norm": _embed_norm_score,
    "sharpness": _sharpness_score,
}


def export_scores(model, images: list[ManifestImage], out_dir: str | Path,
                  methods=("embed-norm", "sharpness"), size: int = DEFAULT_SIZE,
                  impostor_factor: float = 1.0, seed: int = 0):
    """Write one quality CSV per method plus a genuine/impostor pairs CSV.

    Genuine pairs are all same-subject combinations; impostors are a seeded
    cross-subject sample of about ``impostor_factor`` times as many pairs.
    Images any scorer fails on are logged and skipped; returns the written
    paths and the skip fraction (callers should treat > 10% as failure).
    """
    for method in methods:
        if method not in SCORERS:
            raise ValueError(f"unknown scorer {method!r}; available: {sorted(SCORERS)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    loaded: dict[str, np.ndarray] = {}
    skipped = 0
    for entry in images:
        try:
            loaded[entry.id] = load_image(entry.path, size=size)
        except Exception as e:
            log.error("skipping %s: %s", entry.id, e)
            skipped += 1
    kept = [entry for entry in images if entry.id in loaded]

    written = []
    for method in methods:
        scorer = SCORERS[method]
        lines = ["image_id,score"]
        for entry in kept:
            lines.append(f"{entry.id},{scorer(model, loaded[entry.id])!r}")
        path = out_dir / f"{method}.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)

    embeddings = {
        entry.id: embed_and_activations(model, loaded[entry.id])[0] for entry in kept
    }
    genuine = []
    by_subject: dict[str, list[str]] = {}
    for entry in kept:
        by_subject.setdefault(entry.subject, []).append(entry.id)
    for members in by_subject.values():
        genuine.extend(combinations(members, 2))

    rng = np.random.default_rng(seed)
    ids = [entry.id for entry in kept]
    subject_of = {entry.id: entry.subject for entry in kept}
    impostor = []
    target = int(len(genuine) * impostor_factor) or len(genuine)
    attempts = 0
    while len(impostor) < target and attempts < 50 * (target + 1):
        a, b = rng.choice(ids, size=2, replace=False)
        if subject_of[a] != subject_of[b]:
            impostor.append((a, b))
        attempts += 1

    lines = ["id_a,id_b,score,label"]
    for a, b in genuine:
        lines.append(f"{a},{b},{cosine(embeddings[a], embeddings[b])!r},genuine")
    for a, b in impostor:
        lines.append(f"{a},{b},{cosine(embeddings[a], embeddings[b])!r},impostor")
    pairs_path = out_dir / "pairs.csv"
    pairs_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(pairs_path)

    return written, skipped / len(images) if images else 0.0
