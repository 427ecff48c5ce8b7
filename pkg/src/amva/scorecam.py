"""Score-weighted activation mapping over a pluggable model evaluator.

Per channel k of the deepest-layer activations: min-max normalize, upsample
bilinearly (corner-aligned) to the input size, mask the source image with the
upsampled channel, and ask the evaluator how well the masked image still
matches the original. Softmax over the channel scores weights the upsampled
channels; ReLU of the weighted sum is the final map.

Fixed choices (recorded in output metadata by callers): min-max channel
normalization, corner-aligned bilinear upsampling, no baseline-image score
subtraction before the softmax, evaluator score = embedding agreement with
the unmasked image.

The evaluator is any callable mapping an (H, W, C) float image in [0, 1] to
a finite float. Two toy evaluators ship for tests; SubprocessEvaluator speaks
the wire protocol (one AMVT tensor on the child's stdin per request, one
ASCII float line on its stdout) so the numeric core never links a neural
network runtime.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .tensor_io import tensor_to_bytes

Evaluator = Callable[[np.ndarray], float]


@dataclass
class ChannelActivations:
    """Deepest-conv-layer outputs for one image plus the image itself.

    ``channels`` has shape (K, h, w); ``source_image`` has shape (H, W, C)
    with values in [0, 1] and h <= H, w <= W.
    """

    channels: np.ndarray
    source_image: np.ndarray

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=np.float64)
        self.source_image = np.asarray(self.source_image, dtype=np.float64)
        if self.channels.ndim != 3 or self.channels.shape[0] < 1:
            raise ValueError(f"channels must be (K, h, w) with K >= 1, got {self.channels.shape}")
        if self.source_image.ndim != 3:
            raise ValueError(f"source image must be (H, W, C), got {self.source_image.shape}")
        if not np.all(np.isfinite(self.channels)):
            raise ValueError("channel activations contain non-finite values")
        if self.source_image.min() < 0.0 or self.source_image.max() > 1.0:
            raise ValueError("source image values must lie in [0, 1]")
        k, h, w = self.channels.shape
        height, width = self.source_image.shape[:2]
        if h > height or w > width:
            raise ValueError(
                f"channel grid {h}x{w} larger than image {height}x{width}"
            )


def normalize_channel(channel: np.ndarray) -> np.ndarray:
    """Min-max rescale into [0, 1]; a constant channel maps to all zeros."""
    channel = np.asarray(channel, dtype=np.float64)
    if not np.all(np.isfinite(channel)):
        raise ValueError("channel contains non-finite values")
    lo = channel.min()
    hi = channel.max()
    if hi == lo:
        return np.zeros_like(channel)
    return (channel - lo) / (hi - lo)


def upsample_bilinear(t: np.ndarray, height: int, width: int) -> np.ndarray:
    """Corner-aligned bilinear resampling of a 2-D map to height x width."""
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 2:
        raise ValueError(f"expected a 2-D map, got shape {t.shape}")
    if height < 1 or width < 1:
        raise ValueError(f"target size must be at least 1x1, got {height}x{width}")
    h, w = t.shape

    def axis_coords(n_src: int, n_dst: int) -> np.ndarray:
        if n_dst == 1 or n_src == 1:
            return np.zeros(n_dst)
        return np.arange(n_dst) * ((n_src - 1) / (n_dst - 1))

    ys = axis_coords(h, height)
    xs = axis_coords(w, width)
    y0 = np.minimum(np.floor(ys).astype(int), h - 1)
    x0 = np.minimum(np.floor(xs).astype(int), w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]

    top = t[np.ix_(y0, x0)] * (1 - fx) + t[np.ix_(y0, x1)] * fx
    bottom = t[np.ix_(y1, x0)] * (1 - fx) + t[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bottom * fy


def softmax(scores) -> np.ndarray:
    """Stable softmax; invariant under adding a constant to all scores."""
    scores = np.asarray(scores, dtype=np.float64)
    shifted = scores - scores.max()
    e = np.exp(shifted)
    return e / e.sum()


def scorecam_map(ca: ChannelActivations, evaluator: Evaluator) -> np.ndarray:
    """Score-weighted, ReLU-clipped combination of the upsampled channels.

    Returns a nonnegative (H, W) float64 map bounded above by the pixelwise
    maximum of the upsampled normalized channels. Deterministic for identical
    inputs and a deterministic evaluator.
    """
    k, _, _ = ca.channels.shape
    height, width = ca.source_image.shape[:2]
    upsampled = np.empty((k, height, width), dtype=np.float64)
    scores = np.empty(k, dtype=np.float64)
    for i in range(k):
        upsampled[i] = upsample_bilinear(normalize_channel(ca.channels[i]), height, width)
        masked = ca.source_image * upsampled[i][:, :, None]
        try:
            score = float(evaluator(masked))
        except Exception as e:
            raise RuntimeError(f"evaluator failed on channel {i}: {e}") from e
        if not np.isfinite(score):
            raise ValueError(f"evaluator returned non-finite score on channel {i}: {score}")
        scores[i] = score
    weights = softmax(scores)
    combined = np.einsum("k,khw->hw", weights, upsampled)
    return np.maximum(combined, 0.0)


# ---------------------------------------------------------------------------
# Evaluators


class MeanPixelEvaluator:
    """Toy evaluator: score = mean pixel value of the masked image."""

    def __call__(self, image: np.ndarray) -> float:
        return float(np.asarray(image, dtype=np.float64).mean())


class LinearProjectionEvaluator:
    """Toy evaluator: score = dot(flattened image, fixed seeded vector)."""

    def __init__(self, shape: tuple[int, int, int], seed: int = 0):
        rng = np.random.default_rng(seed)
        self.weights = rng.standard_normal(int(np.prod(shape)))
        self.shape = tuple(shape)

    def __call__(self, image: np.ndarray) -> float:
        image = np.asarray(image, dtype=np.float64)
        if image.shape != self.shape:
            raise ValueError(f"expected image shape {self.shape}, got {image.shape}")
        return float(image.ravel() @ self.weights)


class SubprocessEvaluator:
    """Evaluator running a child process speaking the AMVT-on-stdin protocol.

    Per request the masked image is sent as one float32 AMVT tensor on the
    child's stdin and one ASCII float line is read back from its stdout.
    Requests are strictly serialized; closing (or exiting the ``with`` block)
    closes stdin, which tells the child to exit.
    """

    def __init__(self, command: str | list[str]):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc: subprocess.Popen | None = None

    def _start(self) -> subprocess.Popen:
        if self._proc is None:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        return self._proc

    def __call__(self, image: np.ndarray) -> float:
        proc = self._start()
        payload = tensor_to_bytes(np.asarray(image, dtype=np.float32))
        try:
            proc.stdin.write(payload)
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise RuntimeError(f"evaluator process ended early: {e}") from e
        line = proc.stdout.readline()
        if line == b"":
            code = proc.poll()
            raise RuntimeError(f"evaluator process ended early (exit code {code})")
        try:
            return float(line.strip())
        except ValueError:
            raise RuntimeError(f"non-numeric evaluator reply: {line!r}") from None

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait()
            if self._proc.stdout:
                self._proc.stdout.close()
            self._proc = None

    def __enter__(self) -> "SubprocessEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
