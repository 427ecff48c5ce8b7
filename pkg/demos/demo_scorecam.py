#!/usr/bin/env python3
"""Score-weighted activation mapping on a toy image, step by step.

Three synthetic channels each highlight a different region of a toy "face".
The evaluator prefers masks that keep the bright center visible, so the
center-sensitive channel earns the largest softmax weight in the final
saliency map.
"""

from pathlib import Path

import numpy as np

from amva import render, scorecam

OUT = Path(__file__).parent / "output" / "scorecam"
HW = 96


def blob(cy, cx, sigma):
    y, x = np.mgrid[0:HW, 0:HW]
    return np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2 * sigma**2))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(1)

    # toy image: bright center on a dim noisy background
    image = np.clip(blob(HW / 2, HW / 2, 18)[..., None] * 0.8
                    + rng.random((HW, HW, 1)) * 0.15, 0, 1)
    image = np.repeat(image, 3, axis=2)

    # 12x12 channel grids: center-, corner- and edge-sensitive
    y, x = np.mgrid[0:12, 0:12]
    channels = np.stack([
        np.exp(-((y - 5.5) ** 2 + (x - 5.5) ** 2) / 8.0),
        np.exp(-((y - 1.0) ** 2 + (x - 1.0) ** 2) / 6.0),
        np.exp(-((x - 10.5) ** 2) / 4.0) * np.ones_like(y, dtype=float),
    ])

    evaluator = scorecam.MeanPixelEvaluator()
    ca = scorecam.ChannelActivations(channels, image)

    # peek at the per-channel scores the pipeline will softmax
    scores = []
    for k in range(channels.shape[0]):
        up = scorecam.upsample_bilinear(scorecam.normalize_channel(channels[k]), HW, HW)
        scores.append(evaluator(image * up[:, :, None]))
    weights = scorecam.softmax(scores)
    for k, (s, w) in enumerate(zip(scores, weights)):
        print(f"channel {k}: evaluator score {s:.4f} -> softmax weight {w:.3f}")

    saliency = scorecam.scorecam_map(ca, evaluator)
    print(f"saliency map: shape {saliency.shape}, min {saliency.min():.3f}, "
          f"max {saliency.max():.3f} (nonnegative by construction)")

    spec = render.RenderSpec(colormap=render.JET, alpha=0.55)
    heat = render.apply_colormap(saliency, spec)
    base = np.floor(image * 255 + 0.5).astype(np.uint8)
    render.save_png(heat, OUT / "saliency.png")
    render.save_png(render.overlay(base, heat, spec.alpha), OUT / "saliency_overlay.png")
    print(f"heatmap and overlay written to {OUT}")


if __name__ == "__main__":
    main()
