import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amva.errors import (
    BadMagicError,
    CsvFormatError,
    ManifestError,
    NonFiniteValuesError,
    TensorFormatError,
    TruncatedFileError,
    UnsupportedDtypeError,
    VersionMismatchError,
)
from amva.tensor_io import (
    ActivationStack,
    read_manifest,
    read_pairs_csv,
    read_quality_csv,
    read_tensor,
    tensor_from_bytes,
    tensor_to_bytes,
    write_tensor,
)


# ---------------------------------------------------------------------------
# AMVT round trips


def test_round_trip_2x2(tmp_path):
    t = np.array([[1, 2], [3, 4]], dtype=np.float32)
    path = tmp_path / "t.amvt"
    write_tensor(path, t)
    # 4 magic + 3 header bytes + 2 dims + 16 payload
    assert path.stat().st_size == 4 + 3 + 2 * 8 + 16
    assert np.array_equal(read_tensor(path), t)


def test_zero_tensor_size(tmp_path):
    t = np.zeros((112, 112), dtype=np.float32)
    path = tmp_path / "z.amvt"
    write_tensor(path, t)
    assert path.stat().st_size == 7 + 2 * 8 + 112 * 112 * 4


def test_round_trip_bit_identical(tmp_path):
    t = np.array([0.1, 0.2, 0.3], dtype=np.float32)
    path = tmp_path / "v.amvt"
    write_tensor(path, t)
    back = read_tensor(path)
    assert back.tobytes() == t.tobytes()


def test_write_deterministic(tmp_path):
    t = np.random.default_rng(7).random((5, 3)).astype(np.float32)
    a, b = tmp_path / "a.amvt", tmp_path / "b.amvt"
    write_tensor(a, t)
    write_tensor(b, t)
    assert a.read_bytes() == b.read_bytes()


@settings(max_examples=60, deadline=None)
@given(
    dims=st.lists(st.integers(min_value=1, max_value=6), min_size=1, max_size=4),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_round_trip_property(dims, seed):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(dims).astype(np.float32)
    back = tensor_from_bytes(tensor_to_bytes(t))
    assert back.shape == t.shape
    assert back.tobytes() == t.tobytes()


# ---------------------------------------------------------------------------
# Malformed AMVT files


def _valid_bytes():
    return tensor_to_bytes(np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32))


def test_bad_magic():
    data = b"XXXX" + _valid_bytes()[4:]
    with pytest.raises(BadMagicError):
        tensor_from_bytes(data)


def test_version_mismatch():
    data = bytearray(_valid_bytes())
    data[4] = 9
    with pytest.raises(VersionMismatchError):
        tensor_from_bytes(bytes(data))


def test_unsupported_dtype():
    data = bytearray(_valid_bytes())
    data[5] = 7
    with pytest.raises(UnsupportedDtypeError):
        tensor_from_bytes(bytes(data))


def test_truncated_payload():
    data = _valid_bytes()
    with pytest.raises(TruncatedFileError):
        tensor_from_bytes(data[:-3])


def test_truncated_header():
    with pytest.raises(TruncatedFileError):
        tensor_from_bytes(b"AMVT\x01")


def test_trailing_bytes_rejected():
    with pytest.raises(TensorFormatError):
        tensor_from_bytes(_valid_bytes() + b"\x00")


def test_zero_dim_rejected():
    header = struct.pack("<4sBBBQ", b"AMVT", 1, 1, 1, 0)
    with pytest.raises(TensorFormatError):
        tensor_from_bytes(header)


def test_nan_payload_rejected():
    payload = np.array([1.0, np.nan], dtype="<f4").tobytes()
    header = struct.pack("<4sBBBQ", b"AMVT", 1, 1, 1, 2)
    with pytest.raises(NonFiniteValuesError):
        tensor_from_bytes(header + payload)


def test_write_rejects_nan(tmp_path):
    with pytest.raises(NonFiniteValuesError):
        write_tensor(tmp_path / "bad.amvt", np.array([np.inf], dtype=np.float32))


def test_write_rejects_float32_overflow(tmp_path):
    with pytest.raises(NonFiniteValuesError):
        write_tensor(tmp_path / "bad.amvt", np.array([1e300], dtype=np.float64))


# ---------------------------------------------------------------------------
# Activation stacks


def test_stack_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        ActivationStack.from_pairs([("a", np.zeros((2, 2))), ("b", np.zeros((3, 2)))])


def test_stack_duplicate_ids():
    with pytest.raises(ValueError, match="duplicate"):
        ActivationStack.from_pairs([("a", np.zeros((2, 2))), ("a", np.zeros((2, 2)))])


def test_stack_empty():
    with pytest.raises(ValueError):
        ActivationStack.from_pairs([])


# ---------------------------------------------------------------------------
# Quality CSV


def test_quality_csv_basic(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text("image_id,score\na,0.5\nb,0.9\n")
    table = read_quality_csv(p, "toy")
    assert table.method == "toy"
    assert table.scores == {"a": 0.5, "b": 0.9}


def test_quality_csv_duplicate_id(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text("image_id,score\na,0.5\na,0.9\n")
    with pytest.raises(CsvFormatError, match="duplicate"):
        read_quality_csv(p, "toy")


def test_quality_csv_bad_float_names_line(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text("image_id,score\na,0.5\nb,abc\n")
    with pytest.raises(CsvFormatError, match=":3"):
        read_quality_csv(p, "toy")


def test_quality_csv_empty_file(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text("")
    with pytest.raises(CsvFormatError, match="empty"):
        read_quality_csv(p, "toy")


def test_quality_csv_missing_header(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text("a,0.5\n")
    with pytest.raises(CsvFormatError, match="header"):
        read_quality_csv(p, "toy")


def test_quality_csv_bad_id_charset(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text("image_id,score\na b,0.5\n")
    with pytest.raises(CsvFormatError, match="invalid id"):
        read_quality_csv(p, "toy")


# ---------------------------------------------------------------------------
# Pairs CSV


def test_pairs_csv_basic(tmp_path):
    p = tmp_path / "pairs.csv"
    p.write_text("id_a,id_b,score,label\na,b,0.8,genuine\n")
    cs = read_pairs_csv(p)
    assert len(cs.pairs) == 1
    assert cs.pairs[0].label == "genuine"
    assert cs.pairs[0].score == 0.8


def test_pairs_csv_unknown_label(tmp_path):
    p = tmp_path / "pairs.csv"
    p.write_text("id_a,id_b,score,label\na,b,0.8,mated\n")
    with pytest.raises(CsvFormatError, match="unknown label"):
        read_pairs_csv(p)


def test_pairs_csv_empty_body(tmp_path):
    p = tmp_path / "pairs.csv"
    p.write_text("id_a,id_b,score,label\n")
    with pytest.raises(CsvFormatError, match="no pairs"):
        read_pairs_csv(p)


def test_pairs_csv_order_preserved(tmp_path):
    p = tmp_path / "pairs.csv"
    p.write_text("id_a,id_b,score,label\nz,y,0.1,impostor\na,b,0.9,genuine\n")
    cs = read_pairs_csv(p)
    assert [pair.id_a for pair in cs.pairs] == ["z", "a"]


# ---------------------------------------------------------------------------
# Manifest


def _manifest_json(tmp_path, body: str):
    p = tmp_path / "manifest.json"
    p.write_text(body)
    return p


def test_manifest_minimal(tmp_path):
    p = _manifest_json(tmp_path, """
    {"images": [{"id": "a", "path": "imgs/a.png", "subject": "s1"}],
     "activation_dir": "maps",
     "quality_files": {"toy": "toy.csv"}}
    """)
    m = read_manifest(p)
    assert len(m.images) == 1
    assert m.images[0].path == tmp_path / "imgs/a.png"
    assert m.activation_dir == tmp_path / "maps"
    assert m.pairs_file is None
    assert m.methods() == ["toy"]


def test_manifest_duplicate_ids(tmp_path):
    p = _manifest_json(tmp_path, """
    {"images": [{"id": "a", "path": "x.png", "subject": "s"},
                {"id": "a", "path": "y.png", "subject": "s"}],
     "activation_dir": "maps", "quality_files": {}}
    """)
    with pytest.raises(ManifestError, match="duplicate"):
        read_manifest(p)


def test_manifest_missing_activation_dir(tmp_path):
    p = _manifest_json(tmp_path, """
    {"images": [{"id": "a", "path": "x.png", "subject": "s"}],
     "quality_files": {}}
    """)
    with pytest.raises(ManifestError, match="activation_dir"):
        read_manifest(p)


def test_manifest_empty_path_string(tmp_path):
    p = _manifest_json(tmp_path, """
    {"images": [{"id": "a", "path": "", "subject": "s"}],
     "activation_dir": "maps", "quality_files": {}}
    """)
    with pytest.raises(ManifestError, match="non-empty"):
        read_manifest(p)


def test_manifest_absolute_paths_kept(tmp_path):
    p = _manifest_json(tmp_path, """
    {"images": [{"id": "a", "path": "/abs/a.png", "subject": "s"}],
     "activation_dir": "/abs/maps", "quality_files": {}, "pairs_file": "pairs.csv"}
    """)
    m = read_manifest(p)
    assert str(m.images[0].path) == "/abs/a.png"
    assert m.pairs_file == tmp_path / "pairs.csv"
