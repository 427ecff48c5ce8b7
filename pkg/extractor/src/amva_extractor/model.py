"""Embedding models and the activation-mapping pipeline.

A model is any torch module whose forward maps a float NCHW batch in [0, 1]
to the tuple ``(embedding (N, D), activations (N, K, h, w))`` where the
activations come from its deepest convolutional layer. The builtin toy
models follow this contract and a TorchScript file exporting the same tuple
can be dropped in via ``load_model("/path/model.pt")``; which layer a real
model emits is decided when scripting it.

Everything runs single-threaded and seeded so replies and exports are
deterministic for identical input bytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image
from torch import nn

DEFAULT_SIZE = 112


class ToyFaceNet(nn.Module):
    """Small bias-free CNN standing in for a face-embedding backbone.

    Bias-free on purpose: an all-zero input yields an all-zero embedding,
    which exercises the declared zero-vector cosine rule end to end.
    """

    def __init__(self, channels: int = 4, embed_dim: int = 16, seed: int = 0):
        super().__init__()
        torch.manual_seed(seed)
        self.conv1 = nn.Conv2d(3, 8, 3, stride=2, padding=1, bias=False)
        self.conv2 = nn.Conv2d(8, channels, 3, stride=2, padding=1, bias=False)
        self.head = nn.Linear(channels * 4, embed_dim, bias=False)

    def forward(self, x):
        a = F.relu(self.conv1(x))
        activations = F.relu(self.conv2(a))
        pooled = F.adaptive_avg_pool2d(activations, (2, 2)).flatten(1)
        return self.head(pooled), activations


def load_model(source: str) -> nn.Module:
    """Load ``toy:<seed>[:channels]`` or a TorchScript file path."""
    torch.set_num_threads(1)
    if source.startswith("toy:"):
        parts = source.split(":")
        seed = int(parts[1]) if len(parts) > 1 and parts[1] else 0
        channels = int(parts[2]) if len(parts) > 2 else 4
        model = ToyFaceNet(channels=channels, seed=seed)
    else:
        path = Path(source)
        if not path.exists():
            raise FileNotFoundError(f"model source {source!r} not found")
        model = torch.jit.load(str(path), map_location="cpu")
    model.eval()
    return model


def load_image(path: str | Path, size: int = DEFAULT_SIZE) -> np.ndarray:
    """Decode and resize to the model input: (size, size, 3) float32 in [0, 1]."""
    with Image.open(Path(path)) as im:
        im = im.convert("RGB")
        if im.size != (size, size):
            im = im.resize((size, size), Image.Resampling.BILINEAR)
        return np.asarray(im, dtype=np.float32) / 255.0


def _to_batch(image_hwc: np.ndarray) -> torch.Tensor:
    arr = np.asarray(image_hwc, dtype=np.float32)
    if arr.ndim != 3:
        raise ValueError(f"expected an (H, W, C) image, got shape {arr.shape}")
    return torch.from_numpy(arr).permute(2, 0, 1).unsqueeze(0)


@torch.no_grad()
def embed_and_activations(model: nn.Module, image_hwc: np.ndarray):
    """Run the model on one image: (embedding (D,), activations (K, h, w))."""
    embedding, activations = model(_to_batch(image_hwc))
    return embedding[0].numpy(), activations[0].numpy()


@torch.no_grad()
def embed(model: nn.Module, image_hwc: np.ndarray) -> np.ndarray:
    return embed_and_activations(model, image_hwc)[0]


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0.0 if either vector has zero norm (declared rule)."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


@torch.no_grad()
def saliency_map(model: nn.Module, image_hwc: np.ndarray) -> np.ndarray:
    """End-to-end score-weighted activation map, computed entirely in torch.

    Per channel: min-max normalize, upsample bilinearly (corner-aligned) to
    the image size, mask the image, and score the mask by cosine agreement
    between the masked image's embedding and the original image's embedding.
    Softmax over the scores weights the channels; ReLU clips the sum.
    """
    reference, activations = embed_and_activations(model, image_hwc)
    k, _, _ = activations.shape
    height, width = image_hwc.shape[:2]

    act = torch.from_numpy(activations).unsqueeze(1)  # (K, 1, h, w)
    flat = act.flatten(1)
    lo = flat.min(dim=1).values.view(-1, 1, 1, 1)
    hi = flat.max(dim=1).values.view(-1, 1, 1, 1)
    span = hi - lo
    norm = torch.where(span > 0, (act - lo) / torch.where(span > 0, span, torch.ones_like(span)),
                       torch.zeros_like(act))
    upsampled = F.interpolate(norm, size=(height, width), mode="bilinear",
                              align_corners=True)[:, 0]  # (K, H, W)

    scores = torch.empty(k, dtype=torch.float64)
    for i in range(k):
        masked = image_hwc * upsampled[i].numpy()[:, :, None]
        scores[i] = cosine(embed(model, masked), reference)
    weights = torch.softmax(scores - scores.max(), dim=0)

    combined = (weights.view(-1, 1, 1) * upsampled.double()).sum(dim=0)
    return torch.clamp(combined, min=0.0).numpy()
