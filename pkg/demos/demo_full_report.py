#!/usr/bin/env python3
"""Build a small synthetic dataset tree and run the full CLI pipeline on it.

Shows the manifest format end to end: images, activation tensors, per-method
quality CSVs and a pairs CSV, then one `amva report` invocation producing the
partition/stats/diff/erc/overlap/admam artifact tree.
"""

import json
from pathlib import Path

import numpy as np

from amva import cli, render, tensor_io

ROOT = Path(__file__).parent / "output" / "full_report"
N_IMAGES = 24
HW = 32


def build_tree(root: Path) -> Path:
    rng = np.random.default_rng(5)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "maps").mkdir(parents=True, exist_ok=True)

    ids = [f"img{k:03d}" for k in range(N_IMAGES)]
    subjects = [f"s{k % 4}" for k in range(N_IMAGES)]
    for i, image_id in enumerate(ids):
        render.save_png(rng.integers(0, 256, (HW, HW, 3), dtype=np.uint8),
                        root / "images" / f"{image_id}.png")
        spread = 1.0 - i / N_IMAGES  # worse-quality images vary more
        tensor_io.write_tensor(root / "maps" / f"{image_id}.amvt",
                               (rng.random((HW, HW)) * spread + 0.2).astype(np.float32))

    for method in ("alpha", "beta"):
        lines = ["image_id,score"]
        for i, image_id in enumerate(ids):
            lines.append(f"{image_id},{float(i + rng.normal(0, 0.4))!r}")
        (root / f"{method}.csv").write_text("\n".join(lines) + "\n")

    weak = set(ids[:3])
    lines = ["id_a,id_b,score,label"]
    by_subject = {}
    for image_id, subject in zip(ids, subjects):
        by_subject.setdefault(subject, []).append(image_id)
    for members in by_subject.values():
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                a, b = members[i], members[j]
                bad = a in weak or b in weak
                score = rng.uniform(0.0, 0.4) if bad else rng.uniform(0.6, 1.0)
                lines.append(f"{a},{b},{float(score)!r},genuine")
    for _ in range(120):
        a, b = rng.choice(ids, size=2, replace=False)
        if subjects[ids.index(a)] != subjects[ids.index(b)]:
            lines.append(f"{a},{b},{float(rng.uniform(0, 0.5))!r},impostor")
    (root / "pairs.csv").write_text("\n".join(lines) + "\n")

    manifest = {
        "images": [{"id": i, "path": f"images/{i}.png", "subject": s}
                   for i, s in zip(ids, subjects)],
        "activation_dir": "maps",
        "quality_files": {"alpha": "alpha.csv", "beta": "beta.csv"},
        "pairs_file": "pairs.csv",
    }
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


def main():
    manifest = build_tree(ROOT)
    out = ROOT / "report"
    code = cli.main([
        "report",
        "--manifest", str(manifest),
        "--fraction", "0.125",
        "--fmr", "0.001",
        "--ratios", "0:0.32:0.04",
        "--panel-ids", "img000,img023",
        "--out", str(out),
    ])
    print(f"exit code: {code}")
    artifacts = sorted(p.relative_to(out) for p in out.rglob("*") if p.is_file())
    print(f"{len(artifacts)} artifacts under {out}:")
    for p in artifacts[:12]:
        print(f"  {p}")
    if len(artifacts) > 12:
        print(f"  ... and {len(artifacts) - 12} more")


if __name__ == "__main__":
    main()
