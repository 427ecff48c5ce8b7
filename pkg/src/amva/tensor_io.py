"""Readers and writers for the on-disk formats: AMVT tensors, quality and
pairs CSVs, and the dataset manifest.

AMVT layout (all little-endian, no padding, no footer):

    bytes 0..3   magic ``41 4D 56 54`` ("AMVT")
    byte  4      version, currently 1
    byte  5      dtype, 1 = float32
    byte  6      rank
    next         rank x u64 dims
    rest         product(dims) float32 values, row-major

Everything here is a pure function over paths; writers are byte-for-byte
deterministic for identical input. NaN/Inf values are rejected at load and
store time so downstream statistics can assume finite data.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    BadMagicError,
    CsvFormatError,
    ManifestError,
    NonFiniteValuesError,
    TensorFormatError,
    TruncatedFileError,
    UnsupportedDtypeError,
    VersionMismatchError,
)

AMVT_MAGIC = b"AMVT"
AMVT_VERSION = 1
AMVT_DTYPE_FLOAT32 = 1

GENUINE = "genuine"
IMPOSTOR = "impostor"

# No CSV quoting support; ids are restricted to this charset instead.
_ID_RE = re.compile(r"^[A-Za-z0-9_./-]+$")


def _check_id(value: str, where: str) -> str:
    if not _ID_RE.match(value):
        raise CsvFormatError(f"{where}: invalid id {value!r} (allowed: [A-Za-z0-9_./-])")
    return value


# ---------------------------------------------------------------------------
# AMVT tensors


def tensor_to_bytes(values: np.ndarray) -> bytes:
    """Serialize an array to AMVT bytes (float32 payload)."""
    arr = np.asarray(values)
    if arr.ndim < 1:
        raise ValueError("AMVT tensors must have rank >= 1")
    if arr.ndim > 255:
        raise ValueError("AMVT rank does not fit in one byte")
    if arr.size == 0:
        raise ValueError("AMVT dims must all be positive")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValuesError("refusing to write non-finite values")
    with np.errstate(over="ignore"):
        payload = np.ascontiguousarray(arr, dtype="<f4")
    if not np.all(np.isfinite(payload)):
        # e.g. a float64 value overflowing float32
        raise NonFiniteValuesError("values do not fit in float32")
    header = struct.pack(
        "<4sBBB" + "Q" * arr.ndim,
        AMVT_MAGIC,
        AMVT_VERSION,
        AMVT_DTYPE_FLOAT32,
        arr.ndim,
        *arr.shape,
    )
    return header + payload.tobytes()


def tensor_from_bytes(data: bytes) -> np.ndarray:
    """Parse AMVT bytes into a float32 array, rejecting malformed input."""
    if len(data) < 4:
        raise TruncatedFileError("file shorter than the magic")
    if data[:4] != AMVT_MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}, expected {AMVT_MAGIC!r}")
    if len(data) < 7:
        raise TruncatedFileError("header truncated")
    version, dtype, rank = data[4], data[5], data[6]
    if version != AMVT_VERSION:
        raise VersionMismatchError(f"unsupported AMVT version {version}")
    if dtype != AMVT_DTYPE_FLOAT32:
        raise UnsupportedDtypeError(f"unsupported dtype code {dtype}")
    if rank == 0:
        raise TensorFormatError("rank 0 is not allowed")
    dims_end = 7 + 8 * rank
    if len(data) < dims_end:
        raise TruncatedFileError("dims truncated")
    dims = struct.unpack_from("<" + "Q" * rank, data, 7)
    if any(d == 0 for d in dims):
        raise TensorFormatError(f"dims must all be positive, got {dims}")
    count = 1
    for d in dims:
        count *= d
    expected = dims_end + 4 * count
    if len(data) < expected:
        raise TruncatedFileError(
            f"payload truncated: expected {expected} bytes, got {len(data)}"
        )
    if len(data) > expected:
        raise TensorFormatError(
            f"trailing bytes after payload: expected {expected} bytes, got {len(data)}"
        )
    arr = np.frombuffer(data, dtype="<f4", count=count, offset=dims_end)
    arr = arr.reshape(dims)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValuesError("payload contains NaN or Inf")
    return arr.copy()


def write_tensor(path: str | Path, values: np.ndarray) -> None:
    """Write ``values`` to ``path`` in AMVT format (deterministic bytes)."""
    data = tensor_to_bytes(values)
    Path(path).write_bytes(data)


def read_tensor(path: str | Path) -> np.ndarray:
    """Read an AMVT file into a float32 array."""
    return tensor_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# Activation stacks


@dataclass
class ActivationStack:
    """N same-shaped 2-D activation maps keyed by image id.

    ``maps`` has shape (N, H, W); ``ids[i]`` labels ``maps[i]``.
    """

    ids: list[str]
    maps: np.ndarray

    def __post_init__(self):
        self.maps = np.asarray(self.maps, dtype=np.float32)
        if self.maps.ndim != 3:
            raise ValueError(f"expected (N, H, W) maps, got shape {self.maps.shape}")
        if len(self.ids) != self.maps.shape[0]:
            raise ValueError("ids and maps disagree on N")
        if len(self.ids) == 0:
            raise ValueError("activation stack must contain at least one map")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate image ids in activation stack")

    @property
    def n(self) -> int:
        return self.maps.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.maps.shape[1], self.maps.shape[2]

    @classmethod
    def from_pairs(cls, pairs) -> "ActivationStack":
        """Build a stack from (image_id, 2-D map) pairs, checking shapes."""
        pairs = list(pairs)
        if not pairs:
            raise ValueError("activation stack must contain at least one map")
        ids = [p[0] for p in pairs]
        first = np.asarray(pairs[0][1])
        if first.ndim != 2:
            raise ValueError(f"activation maps must be 2-D, got shape {first.shape}")
        maps = np.empty((len(pairs),) + first.shape, dtype=np.float32)
        for i, (_, m) in enumerate(pairs):
            m = np.asarray(m)
            if m.shape != first.shape:
                raise ValueError(
                    f"map for {ids[i]!r} has shape {m.shape}, expected {first.shape}"
                )
            maps[i] = m
        return cls(ids, maps)


def activation_path(activation_dir: str | Path, image_id: str) -> Path:
    """Location of the rank-2 activation map for one image."""
    return Path(activation_dir) / f"{image_id}.amvt"


def channels_path(activation_dir: str | Path, image_id: str) -> Path:
    """Location of the rank-3 per-channel activations for one image."""
    return Path(activation_dir) / f"{image_id}.channels.amvt"


def read_activation_stack(activation_dir: str | Path, ids) -> ActivationStack:
    """Load ``<activation_dir>/<id>.amvt`` for each id into one stack."""
    pairs = []
    for image_id in ids:
        arr = read_tensor(activation_path(activation_dir, image_id))
        if arr.ndim != 2:
            raise TensorFormatError(
                f"activation map for {image_id!r} must be rank 2, got rank {arr.ndim}"
            )
        pairs.append((image_id, arr))
    return ActivationStack.from_pairs(pairs)


# ---------------------------------------------------------------------------
# Quality tables


@dataclass
class QualityTable:
    """Per-image scalar quality scores for one method (higher = better)."""

    method: str
    scores: dict[str, float] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.scores)


def _read_lines(path: str | Path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    if text == "":
        raise CsvFormatError(f"{path}: empty file")
    return text.splitlines()


def read_quality_csv(path: str | Path, method: str) -> QualityTable:
    """Parse a ``image_id,score`` CSV (header required) into a QualityTable."""
    lines = _read_lines(path)
    if lines[0] != "image_id,score":
        raise CsvFormatError(f"{path}:1: expected header 'image_id,score', got {lines[0]!r}")
    scores: dict[str, float] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise CsvFormatError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
        image_id = _check_id(parts[0], f"{path}:{lineno}")
        try:
            score = float(parts[1])
        except ValueError:
            raise CsvFormatError(f"{path}:{lineno}: unparsable score {parts[1]!r}") from None
        if not np.isfinite(score):
            raise CsvFormatError(f"{path}:{lineno}: non-finite score {parts[1]!r}")
        if image_id in scores:
            raise CsvFormatError(f"{path}:{lineno}: duplicate image id {image_id!r}")
        scores[image_id] = score
    if not scores:
        raise CsvFormatError(f"{path}: no data rows")
    return QualityTable(method=method, scores=scores)


# ---------------------------------------------------------------------------
# Comparison pairs


class Pair(NamedTuple):
    id_a: str
    id_b: str
    score: float
    label: str  # GENUINE or IMPOSTOR


@dataclass
class ComparisonSet:
    """Labeled similarity scores (higher = more similar), order-preserving."""

    pairs: list[Pair]

    def genuine_scores(self) -> np.ndarray:
        return np.array([p.score for p in self.pairs if p.label == GENUINE], dtype=np.float64)

    def impostor_scores(self) -> np.ndarray:
        return np.array([p.score for p in self.pairs if p.label == IMPOSTOR], dtype=np.float64)

    def image_ids(self) -> set[str]:
        ids: set[str] = set()
        for p in self.pairs:
            ids.add(p.id_a)
            ids.add(p.id_b)
        return ids


def read_pairs_csv(path: str | Path) -> ComparisonSet:
    """Parse a ``id_a,id_b,score,label`` CSV into a ComparisonSet."""
    lines = _read_lines(path)
    if lines[0] != "id_a,id_b,score,label":
        raise CsvFormatError(
            f"{path}:1: expected header 'id_a,id_b,score,label', got {lines[0]!r}"
        )
    pairs: list[Pair] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise CsvFormatError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
        id_a = _check_id(parts[0], f"{path}:{lineno}")
        id_b = _check_id(parts[1], f"{path}:{lineno}")
        try:
            score = float(parts[2])
        except ValueError:
            raise CsvFormatError(f"{path}:{lineno}: unparsable score {parts[2]!r}") from None
        if not np.isfinite(score):
            raise CsvFormatError(f"{path}:{lineno}: non-finite score {parts[2]!r}")
        label = parts[3]
        if label not in (GENUINE, IMPOSTOR):
            raise CsvFormatError(f"{path}:{lineno}: unknown label {label!r}")
        pairs.append(Pair(id_a, id_b, score, label))
    if not pairs:
        raise CsvFormatError(f"{path}: no pairs")
    return ComparisonSet(pairs)


# ---------------------------------------------------------------------------
# Manifest


@dataclass(frozen=True)
class ManifestImage:
    id: str
    path: Path
    subject: str


@dataclass
class Manifest:
    """Dataset descriptor binding image ids to tensors, scores and pairs.

    Relative paths in the JSON are resolved against the manifest's directory,
    so a manifest plus its data tree can be moved as a unit. Referenced files
    are not opened here; readers above do that lazily.
    """

    images: list[ManifestImage]
    activation_dir: Path
    quality_files: dict[str, Path]
    pairs_file: Path | None = None

    def image_by_id(self, image_id: str) -> ManifestImage:
        for img in self.images:
            if img.id == image_id:
                return img
        raise ManifestError(f"image id {image_id!r} not in manifest")

    def methods(self) -> list[str]:
        return sorted(self.quality_files)


def read_manifest(path: str | Path) -> Manifest:
    """Load and validate a manifest JSON file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise ManifestError(f"{path}: top level must be a JSON object")
    for key in ("images", "activation_dir", "quality_files"):
        if key not in raw:
            raise ManifestError(f"{path}: missing required key {key!r}")

    root = path.parent

    def resolve(p: str, what: str) -> Path:
        if not isinstance(p, str) or p == "":
            raise ManifestError(f"{path}: {what} must be a non-empty path string")
        candidate = Path(p)
        return candidate if candidate.is_absolute() else root / candidate

    images: list[ManifestImage] = []
    seen: set[str] = set()
    for i, entry in enumerate(raw["images"]):
        if not isinstance(entry, dict):
            raise ManifestError(f"{path}: images[{i}] must be an object")
        for key in ("id", "path", "subject"):
            if key not in entry:
                raise ManifestError(f"{path}: images[{i}] missing key {key!r}")
        image_id = entry["id"]
        try:
            _check_id(image_id, f"{path}: images[{i}]")
        except CsvFormatError as e:
            raise ManifestError(str(e)) from None
        if image_id in seen:
            raise ManifestError(f"{path}: duplicate image id {image_id!r}")
        seen.add(image_id)
        images.append(
            ManifestImage(
                id=image_id,
                path=resolve(entry["path"], f"images[{i}].path"),
                subject=str(entry["subject"]),
            )
        )
    if not images:
        raise ManifestError(f"{path}: manifest lists no images")

    if not isinstance(raw["quality_files"], dict):
        raise ManifestError(f"{path}: quality_files must be an object")
    quality_files = {
        str(name): resolve(p, f"quality_files[{name!r}]")
        for name, p in raw["quality_files"].items()
    }

    pairs_file = None
    if raw.get("pairs_file") is not None:
        pairs_file = resolve(raw["pairs_file"], "pairs_file")

    return Manifest(
        images=images,
        activation_dir=resolve(raw["activation_dir"], "activation_dir"),
        quality_files=quality_files,
        pairs_file=pairs_file,
    )
