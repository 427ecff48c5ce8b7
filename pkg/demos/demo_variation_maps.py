#!/usr/bin/env python3
"""Walk through the per-pixel variation statistics on two synthetic cohorts.

We fabricate a "steady" cohort (activation concentrated in the center, little
image-to-image variation) and an "erratic" cohort (same average level, but
the hot spot wanders around the borders). The variation maps tell them apart
even though their mean maps look almost identical.
"""

from pathlib import Path

import numpy as np

from amva import render, stat_maps
from amva.tensor_io import ActivationStack

OUT = Path(__file__).parent / "output" / "variation_maps"
HW = 64
N = 120


def gaussian_blob(cy, cx, sigma):
    y, x = np.mgrid[0:HW, 0:HW]
    return np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2 * sigma**2))


def steady_cohort(rng):
    maps = []
    for _ in range(N):
        jitter = rng.normal(0, 1.0, size=2)
        maps.append(gaussian_blob(HW / 2 + jitter[0], HW / 2 + jitter[1], 9.0))
    return ActivationStack([f"steady{k}" for k in range(N)],
                           np.stack(maps).astype(np.float32))


def erratic_cohort(rng):
    maps = []
    for _ in range(N):
        # hot spot drawn from the image border region
        edge = rng.integers(0, 4)
        along = rng.uniform(8, HW - 8)
        pos = {0: (6, along), 1: (HW - 6, along), 2: (along, 6), 3: (along, HW - 6)}[edge]
        maps.append(gaussian_blob(*pos, 9.0) * rng.uniform(0.7, 1.3)
                    + gaussian_blob(HW / 2, HW / 2, 9.0) * 0.5)
    return ActivationStack([f"erratic{k}" for k in range(N)],
                           np.stack(maps).astype(np.float32))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    high = steady_cohort(rng)     # stands in for the high-quality set
    low = erratic_cohort(rng)     # stands in for the low-quality set

    args_h = dict(method="demo", set_kind="H", fraction=0.1)
    args_l = dict(method="demo", set_kind="L", fraction=0.1)
    maps = {
        "H_mam": stat_maps.mam(high, **args_h),
        "H_amv": stat_maps.am_v(high, **args_h),
        "H_mdam": stat_maps.mdam(high, **args_h),
        "H_ammv": stat_maps.am_mv(high, **args_h),
        "L_mam": stat_maps.mam(low, **args_l),
        "L_amv": stat_maps.am_v(low, **args_l),
        "L_mdam": stat_maps.mdam(low, **args_l),
        "L_ammv": stat_maps.am_mv(low, **args_l),
    }
    maps["damv"] = stat_maps.d_am_v(maps["H_amv"], maps["L_amv"])
    maps["dammv"] = stat_maps.d_am_mv(maps["H_ammv"], maps["L_ammv"])

    spec = render.RenderSpec(colormap=render.JET)
    for name, sm in maps.items():
        stat_maps.save_stat_map(sm, OUT / f"{name}.amvt")
        render.save_png(render.apply_colormap(sm, spec), OUT / f"{name}.png")
        edges, counts = render.histogram(sm, 40)
        render.write_histogram_csv(edges, counts, OUT / f"{name}_hist.csv")

    mean_gap = np.abs(maps["H_mam"].values - maps["L_mam"].values).mean()
    spread_gap = np.abs(maps["H_amv"].values - maps["L_amv"].values).mean()
    print(f"mean-map average |H-L| gap:      {mean_gap:.4f}")
    print(f"variation-map average |H-L| gap: {spread_gap:.4f}")
    print("-> the cohorts separate more strongly in variation space; the wandering"
          " border activity shows up as a bright AM-V ring in L_amv.png")

    v = maps["L_amv"].values.astype(np.float64)
    mv = maps["L_ammv"].values.astype(np.float64)
    mean = maps["L_mam"].values.astype(np.float64)
    med = maps["L_mdam"].values.astype(np.float64)
    residual = np.max(np.abs((mv**2 - v**2) - (mean - med) ** 2))
    print(f"identity AM-MV^2 - AM-V^2 = (MAM - MDAM)^2, max residual {residual:.2e}")
    print(f"wrote maps, heatmaps and histograms to {OUT}")


if __name__ == "__main__":
    main()
