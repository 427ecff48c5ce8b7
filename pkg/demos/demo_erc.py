#!/usr/bin/env python3
"""Error-versus-reject walkthrough on a synthetic verification experiment.

We simulate 300 images whose quality scores genuinely predict comparison
failures: genuine pairs containing a bottom-quality image tend to score below
the decision threshold. Discarding the worst-quality images then drives FNMR
down, which is exactly what the curve shows.
"""

from pathlib import Path

import numpy as np

from amva import erc, render
from amva.tensor_io import GENUINE, IMPOSTOR, ComparisonSet, Pair, QualityTable

OUT = Path(__file__).parent / "output" / "erc"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(7)

    ids = [f"img{k:04d}" for k in range(300)]
    quality = QualityTable("demo", {i: float(k + rng.random()) for k, i in enumerate(ids)})
    weak = set(ids[:30])  # bottom decile

    pair_list = []
    for _ in range(900):
        a, b = rng.choice(ids, size=2, replace=False)
        if a in weak or b in weak:
            score = float(rng.uniform(0.05, 0.45))
        else:
            score = float(rng.uniform(0.6, 0.98))
        pair_list.append(Pair(a, b, score, GENUINE))
    for _ in range(1200):
        a, b = rng.choice(ids, size=2, replace=False)
        pair_list.append(Pair(a, b, float(rng.uniform(0.0, 0.55)), IMPOSTOR))
    pairs = ComparisonSet(pair_list)

    target_fmr = 0.001
    tau = erc.threshold_at_fmr(pairs.impostor_scores(), target_fmr)
    achieved = float(np.mean(pairs.impostor_scores() >= tau))
    print(f"threshold for FMR <= {target_fmr}: tau = {tau:.4f} (achieved FMR {achieved:.4f})")

    ratios = [round(0.02 * k, 10) for k in range(17)]
    curve = erc.erc_curve(pairs, quality, target_fmr, ratios)
    for point in curve.points[::4]:
        print(f"  reject {point.reject_ratio:4.0%}  ->  FNMR {point.fnmr:.4f}"
              f"  ({point.surviving_genuine} genuine pairs left)")

    erc.write_erc_csv(curve, OUT / "demo_erc.csv")
    render.plot_erc_curves([curve], OUT / "demo_erc.png")
    print(f"curve CSV, sidecar and plot written to {OUT}")


if __name__ == "__main__":
    main()
