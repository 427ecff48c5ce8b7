import io
import json

import numpy as np
import pytest
from PIL import Image

from amva_extractor import amvt
from amva_extractor.evaluate import evaluator_loop
from amva_extractor.export import export_activations, export_scores, read_image_list
from amva_extractor.model import (
    cosine,
    embed,
    embed_and_activations,
    load_image,
    load_model,
    saliency_map,
)


def _write_png(path, hw=32, seed=0):
    rng = np.random.default_rng(seed)
    Image.fromarray(rng.integers(0, 256, (hw, hw, 3), dtype=np.uint8), "RGB").save(path)


def _manifest(tmp_path, n=4, hw=32, n_subjects=2):
    (tmp_path / "images").mkdir(exist_ok=True)
    images = []
    for k in range(n):
        name = f"img{k:03d}"
        _write_png(tmp_path / "images" / f"{name}.png", hw=hw, seed=k)
        images.append({"id": name, "path": f"images/{name}.png", "subject": f"s{k % n_subjects}"})
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"images": images, "activation_dir": "maps",
                                "quality_files": {}}))
    return path


# ---------------------------------------------------------------------------
# AMVT mirror implementation


def test_amvt_round_trip():
    t = np.random.default_rng(0).standard_normal((3, 4, 5)).astype(np.float32)
    back = amvt.load(amvt.dump(t))
    assert back.shape == t.shape
    assert back.tobytes() == t.tobytes()


def test_amvt_rejects_garbage():
    with pytest.raises(amvt.AmvtError):
        amvt.load(b"not a tensor")
    good = amvt.dump(np.ones((2, 2), dtype=np.float32))
    with pytest.raises(amvt.AmvtError):
        amvt.load(good[:-2])
    nan = bytearray(good)
    nan[-4:] = np.array([np.nan], "<f4").tobytes()
    with pytest.raises(amvt.AmvtError):
        amvt.load(bytes(nan))


def test_amvt_stream_reads_back_to_back():
    a = np.ones((2, 2), dtype=np.float32)
    b = np.full((3,), 2.0, dtype=np.float32)
    stream = io.BytesIO(amvt.dump(a) + amvt.dump(b))
    assert np.array_equal(amvt.read_stream(stream), a)
    assert np.array_equal(amvt.read_stream(stream), b)
    assert amvt.read_stream(stream) is None


# ---------------------------------------------------------------------------
# Models


def test_toy_model_deterministic_construction():
    a, b = load_model("toy:7"), load_model("toy:7")
    img = np.random.default_rng(1).random((32, 32, 3)).astype(np.float32)
    ea, _ = embed_and_activations(a, img)
    eb, _ = embed_and_activations(b, img)
    assert np.array_equal(ea, eb)


def test_toy_model_channel_count():
    model = load_model("toy:0:2")
    _, act = embed_and_activations(model, np.zeros((32, 32, 3), dtype=np.float32))
    assert act.shape[0] == 2


def test_torchscript_model_loadable(tmp_path):
    import torch

    model = load_model("toy:3")
    scripted = torch.jit.script(model)
    path = tmp_path / "model.pt"
    scripted.save(str(path))
    loaded = load_model(str(path))
    img = np.random.default_rng(2).random((32, 32, 3)).astype(np.float32)
    e1, a1 = embed_and_activations(model, img)
    e2, a2 = embed_and_activations(loaded, img)
    assert np.allclose(e1, e2, atol=1e-6)
    assert np.allclose(a1, a2, atol=1e-6)


def test_cosine_zero_vector_rule():
    assert cosine(np.zeros(4), np.ones(4)) == 0.0
    assert cosine(np.ones(4), np.zeros(4)) == 0.0
    assert cosine(np.ones(4), np.ones(4)) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# Activation export


def test_two_channel_export_readable(tmp_path):
    manifest = _manifest(tmp_path, n=1)
    model = load_model("toy:0:2")
    written = export_activations(model, read_image_list(manifest), tmp_path / "maps",
                                 size=32, what="channels")
    assert written == [tmp_path / "maps" / "img000.channels.amvt"]
    channels = amvt.read(written[0])
    assert channels.ndim == 3
    assert channels.shape[0] == 2


def test_final_map_default_size_is_112(tmp_path):
    manifest = _manifest(tmp_path, n=1, hw=64)
    model = load_model("toy:0")
    written = export_activations(model, read_image_list(manifest), tmp_path / "maps",
                                 what="maps")
    final = amvt.read(written[0])
    assert final.shape == (112, 112)
    assert np.all(final >= 0)


# ---------------------------------------------------------------------------
# Evaluator loop


def _run_loop(model_source, image_path, payloads, size=32):
    stdin = io.BytesIO(b"".join(amvt.dump(p) for p in payloads))
    stdout = io.StringIO()
    code = evaluator_loop(model_source, str(image_path), size=size,
                          stdin=stdin, stdout=stdout)
    lines = [line for line in stdout.getvalue().splitlines() if line]
    return code, [float(line) for line in lines]


def test_evaluator_identity_mask_scores_one(tmp_path):
    image_path = tmp_path / "a.png"
    _write_png(image_path, seed=3)
    original = load_image(image_path, size=32)
    code, scores = _run_loop("toy:0", image_path, [original])
    assert code == 0
    assert scores[0] == pytest.approx(1.0, abs=1e-6)


def test_evaluator_zero_image_scores_zero(tmp_path):
    image_path = tmp_path / "a.png"
    _write_png(image_path, seed=4)
    code, scores = _run_loop("toy:0", image_path, [np.zeros((32, 32, 3), dtype=np.float32)])
    assert code == 0
    assert scores[0] == 0.0


def test_evaluator_matches_offline_cosine(tmp_path):
    image_path = tmp_path / "a.png"
    _write_png(image_path, seed=5)
    rng = np.random.default_rng(6)
    original = load_image(image_path, size=32)
    masked = (original * rng.random((32, 32, 1))).astype(np.float32)
    code, scores = _run_loop("toy:0", image_path, [masked])
    assert code == 0
    model = load_model("toy:0")
    offline = cosine(embed(model, masked), embed(model, original))
    assert scores[0] == pytest.approx(offline, abs=1e-5)


def test_evaluator_deterministic_replies(tmp_path):
    image_path = tmp_path / "a.png"
    _write_png(image_path, seed=7)
    rng = np.random.default_rng(8)
    masked = rng.random((32, 32, 3)).astype(np.float32)
    _, first = _run_loop("toy:0", image_path, [masked, masked])
    assert first[0] == first[1]


def test_evaluator_malformed_tensor_nonzero_exit(tmp_path):
    image_path = tmp_path / "a.png"
    _write_png(image_path, seed=9)
    stdin = io.BytesIO(b"JUNKJUNKJUNK")
    code = evaluator_loop("toy:0", str(image_path), size=32,
                          stdin=stdin, stdout=io.StringIO())
    assert code == 2


# ---------------------------------------------------------------------------
# Score export


def test_scores_four_images_one_method(tmp_path):
    manifest = _manifest(tmp_path, n=4)
    model = load_model("toy:0")
    written, skip = export_scores(model, read_image_list(manifest), tmp_path / "scores",
                                  methods=("embed-norm",), size=32)
    assert skip == 0.0
    quality = tmp_path / "scores" / "embed-norm.csv"
    assert quality in written
    lines = quality.read_text().splitlines()
    assert lines[0] == "image_id,score"
    assert len(lines) == 5


def test_pairs_genuine_same_subject_impostor_cross(tmp_path):
    manifest = _manifest(tmp_path, n=6, n_subjects=2)
    model = load_model("toy:0")
    export_scores(model, read_image_list(manifest), tmp_path / "scores", size=32)
    subject = {f"img{k:03d}": f"s{k % 2}" for k in range(6)}
    lines = (tmp_path / "scores" / "pairs.csv").read_text().splitlines()[1:]
    genuine = [l for l in lines if l.endswith(",genuine")]
    impostor = [l for l in lines if l.endswith(",impostor")]
    assert len(genuine) == 6  # two subjects x C(3,2)
    assert impostor
    for line in genuine:
        a, b = line.split(",")[:2]
        assert subject[a] == subject[b]
    for line in impostor:
        a, b = line.split(",")[:2]
        assert subject[a] != subject[b]


def test_scores_skip_fraction_reported(tmp_path):
    manifest = _manifest(tmp_path, n=4)
    # corrupt one image file
    (tmp_path / "images" / "img002.png").write_bytes(b"broken")
    model = load_model("toy:0")
    written, skip = export_scores(model, read_image_list(manifest), tmp_path / "scores",
                                  methods=("embed-norm",), size=32)
    assert skip == 0.25
    lines = (tmp_path / "scores" / "embed-norm.csv").read_text().splitlines()
    assert len(lines) == 4  # header + 3 surviving images


# ---------------------------------------------------------------------------
# Saliency map sanity


def test_saliency_nonnegative_and_shaped(tmp_path):
    image_path = tmp_path / "a.png"
    _write_png(image_path, seed=10)
    out = saliency_map(load_model("toy:0"), load_image(image_path, size=32))
    assert out.shape == (32, 32)
    assert np.all(out >= 0)
