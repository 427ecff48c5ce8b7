import math

import numpy as np
import pytest

from amva.stat_maps import (
    MapKind,
    MapMeta,
    StatMap,
    ad_mam,
    am_mv,
    am_v,
    cross_method_d_am_v,
    d_am_mv,
    d_am_v,
    mam,
    mdam,
    save_stat_map,
)
from amva.tensor_io import ActivationStack, read_tensor


def _stack(arrays, ids=None):
    arrays = np.asarray(arrays, dtype=np.float32)
    ids = ids or [f"i{k}" for k in range(arrays.shape[0])]
    return ActivationStack(list(ids), arrays)


def _random_stack(n, h=8, w=8, seed=0):
    rng = np.random.default_rng(seed)
    return _stack(rng.random((n, h, w)))


# ---------------------------------------------------------------------------
# Independent brute-force oracles: per-pixel Python loops over sorted/fsum.


def oracle_mean(maps):
    n, h, w = maps.shape
    out = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            out[i, j] = math.fsum(float(maps[k, i, j]) for k in range(n)) / n
    return out


def oracle_median(maps):
    n, h, w = maps.shape
    out = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            vals = sorted(float(maps[k, i, j]) for k in range(n))
            mid = n // 2
            out[i, j] = vals[mid] if n % 2 else (vals[mid - 1] + vals[mid]) / 2.0
    return out


def oracle_rms_about(maps, center):
    n, h, w = maps.shape
    out = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            ss = math.fsum((float(maps[k, i, j]) - center[i, j]) ** 2 for k in range(n))
            out[i, j] = math.sqrt(ss / n)
    return out


# ---------------------------------------------------------------------------
# MAM


def test_mam_single_map_identity():
    m = np.random.default_rng(1).random((4, 4)).astype(np.float32)
    out = mam(_stack(m[None]))
    assert np.array_equal(out.values, m)
    assert out.kind is MapKind.MAM


def test_mam_zeros_and_ones():
    out = mam(_stack([np.zeros((3, 3)), np.ones((3, 3))]))
    assert np.all(out.values == 0.5)


def test_mam_matches_oracle():
    stack = _random_stack(100, seed=11)
    expected = oracle_mean(stack.maps)
    assert np.max(np.abs(mam(stack).values - expected)) < 1e-6


# ---------------------------------------------------------------------------
# AM-V


def test_am_v_constant_stack_zero():
    out = am_v(_stack([np.full((3, 3), 0.7)] * 5))
    assert np.all(out.values == 0.0)


def test_am_v_binary_pixel():
    out = am_v(_stack([np.zeros((2, 2)), np.ones((2, 2))]))
    assert np.all(out.values == 0.5)


def test_am_v_matches_two_pass_oracle():
    stack = _random_stack(100, seed=12)
    expected = oracle_rms_about(stack.maps, oracle_mean(stack.maps))
    assert np.max(np.abs(am_v(stack).values - expected)) < 1e-6


def test_am_v_divides_by_n_not_n_minus_1():
    # {0, 1}: population std 0.5, sample std ~0.707
    out = am_v(_stack([np.zeros((1, 1)), np.ones((1, 1))]))
    assert out.values[0, 0] == pytest.approx(0.5, abs=1e-7)


# ---------------------------------------------------------------------------
# MDAM


def test_mdam_single_map_identity():
    m = np.random.default_rng(2).random((4, 4)).astype(np.float32)
    assert np.array_equal(mdam(_stack(m[None])).values, m)


def test_mdam_odd_middle_element():
    out = mdam(_stack([np.full((2, 2), 1.0), np.full((2, 2), 100.0), np.full((2, 2), 2.0)]))
    assert np.all(out.values == 2.0)


def test_mdam_even_matches_sort_oracle():
    stack = _random_stack(10, seed=13)
    expected = oracle_median(stack.maps)
    assert np.array_equal(mdam(stack).values, expected.astype(np.float32))


# ---------------------------------------------------------------------------
# AM-MV


def test_am_mv_constant_stack_zero():
    out = am_mv(_stack([np.full((3, 3), 0.4)] * 4))
    assert np.all(out.values == 0.0)


def test_am_mv_binary_pixel():
    # median of {0, 1} = 0.5; RMS deviation = 0.5
    out = am_mv(_stack([np.zeros((2, 2)), np.ones((2, 2))]))
    assert np.all(out.values == 0.5)


def test_am_mv_identity_with_am_v_and_centers():
    stack = _random_stack(50, seed=14)
    v = am_v(stack).values.astype(np.float64)
    mv = am_mv(stack).values.astype(np.float64)
    mean = mam(stack).values.astype(np.float64)
    med = mdam(stack).values.astype(np.float64)
    assert np.max(np.abs((mv**2 - v**2) - (mean - med) ** 2)) < 1e-5


def test_am_mv_dominates_am_v():
    for seed in range(5):
        stack = _random_stack(20, seed=seed)
        assert np.all(am_mv(stack).values >= am_v(stack).values)


def test_am_mv_equals_am_v_where_median_equals_mean():
    # N=2: the median is the mean, so the spreads coincide bit for bit
    stack = _random_stack(2, seed=21)
    assert np.array_equal(mdam(stack).values, mam(stack).values)
    assert np.array_equal(am_mv(stack).values, am_v(stack).values)


# ---------------------------------------------------------------------------
# Invariance properties


def test_shift_invariance_of_spread():
    # values on a 2^-10 grid so the +1.0 shift itself is exact in float32
    rng = np.random.default_rng(15)
    maps = (np.rint(rng.random((30, 8, 8)) * 1024) / 1024).astype(np.float32)
    stack = _stack(maps)
    shifted = ActivationStack(list(stack.ids), stack.maps + np.float32(1.0))
    assert np.max(np.abs(am_v(shifted).values - am_v(stack).values)) <= 1e-6
    assert np.max(np.abs(am_mv(shifted).values - am_mv(stack).values)) <= 1e-6
    assert np.max(np.abs(mam(shifted).values - (mam(stack).values + 1.0))) <= 1e-6
    assert np.array_equal(mdam(shifted).values, mdam(stack).values + np.float32(1.0))


def test_scale_equivariance():
    stack = _random_stack(30, seed=16)
    scaled = ActivationStack(list(stack.ids), stack.maps * np.float32(2.0))
    # power-of-two scaling is exact in IEEE arithmetic
    assert np.array_equal(mam(scaled).values, mam(stack).values * 2)
    assert np.array_equal(mdam(scaled).values, mdam(stack).values * 2)
    assert np.array_equal(am_v(scaled).values, am_v(stack).values * 2)
    assert np.array_equal(am_mv(scaled).values, am_mv(stack).values * 2)


def test_permutation_invariance():
    stack = _random_stack(9, seed=17)
    perm = np.random.default_rng(0).permutation(9)
    shuffled = ActivationStack([stack.ids[p] for p in perm], stack.maps[perm])
    for op in (mam, mdam, am_v, am_mv):
        assert np.array_equal(op(stack).values, op(shuffled).values)


# ---------------------------------------------------------------------------
# Differentials


def _amv_map(values, set_kind="H", method="m", n=10):
    return StatMap(MapKind.AM_V, np.asarray(values, dtype=np.float32),
                   MapMeta(methods=(method,), set_kind=set_kind, n=n, fraction=0.1))


def test_d_am_v_equal_inputs_zero():
    h = _amv_map(np.random.default_rng(4).random((3, 3)))
    out = d_am_v(h, _amv_map(h.values, set_kind="L"))
    assert np.all(out.values == 0.0)
    assert out.kind is MapKind.D_AM_V


def test_d_am_v_constant_offset_symmetric():
    h = _amv_map(np.full((2, 2), 0.3))
    l = _amv_map(np.full((2, 2), 0.1), set_kind="L")
    assert np.allclose(d_am_v(h, l).values, 0.2)
    assert np.array_equal(d_am_v(h, l).values, d_am_v(l, h).values)


def test_d_am_v_matches_elementwise_oracle():
    rng = np.random.default_rng(5)
    a, b = rng.random((6, 6)).astype(np.float32), rng.random((6, 6)).astype(np.float32)
    out = d_am_v(_amv_map(a), _amv_map(b, set_kind="L"))
    assert np.array_equal(out.values, np.abs(a - b))


def test_d_am_v_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        d_am_v(_amv_map(np.zeros((2, 2))), _amv_map(np.zeros((3, 3))))


def test_d_am_v_kind_check():
    wrong = StatMap(MapKind.MAM, np.zeros((2, 2)), MapMeta())
    with pytest.raises(ValueError, match="AM-V"):
        d_am_v(wrong, wrong)


def test_d_am_mv_contract():
    def mv_map(values, set_kind="H"):
        return StatMap(MapKind.AM_MV, np.asarray(values, dtype=np.float32),
                       MapMeta(methods=("m",), set_kind=set_kind, n=4, fraction=0.1))
    rng = np.random.default_rng(6)
    a, b = rng.random((4, 4)).astype(np.float32), rng.random((4, 4)).astype(np.float32)
    same = d_am_mv(mv_map(a), mv_map(a, "L"))
    assert np.all(same.values == 0.0)
    offset = d_am_mv(mv_map(np.full((4, 4), 0.5)), mv_map(np.full((4, 4), 0.2), "L"))
    assert np.allclose(offset.values, 0.3)
    out = d_am_mv(mv_map(a), mv_map(b, "L"))
    assert np.array_equal(out.values, np.abs(a - b))
    assert out.kind is MapKind.D_AM_MV


# ---------------------------------------------------------------------------
# Cross-method differentials


def test_cross_method_equal_inputs():
    m = _amv_map(np.random.default_rng(7).random((3, 3)), method="m1")
    out = cross_method_d_am_v(m, _amv_map(m.values, method="m2"), signed=True)
    assert np.all(out.values == 0.0)
    assert out.kind is MapKind.X_D_AM_V


def test_cross_method_signed_and_absolute():
    m1 = _amv_map(np.full((2, 2), 0.1), method="m1")
    m2 = _amv_map(np.full((2, 2), 0.4), method="m2")
    assert np.allclose(cross_method_d_am_v(m1, m2, signed=True).values, -0.3)
    assert np.allclose(cross_method_d_am_v(m1, m2, signed=False).values, 0.3)


def test_cross_method_random_oracle():
    rng = np.random.default_rng(8)
    a, b = rng.random((5, 5)).astype(np.float32), rng.random((5, 5)).astype(np.float32)
    out = cross_method_d_am_v(_amv_map(a, method="m1"), _amv_map(b, method="m2"), signed=True)
    assert np.array_equal(out.values, a - b)


def test_cross_method_rejects_mixed_sets():
    m1 = _amv_map(np.zeros((2, 2)), set_kind="H", method="m1")
    m2 = _amv_map(np.zeros((2, 2)), set_kind="L", method="m2")
    with pytest.raises(ValueError, match="mix"):
        cross_method_d_am_v(m1, m2)


# ---------------------------------------------------------------------------
# AD-MAM


def _mam_map(values, set_kind="H"):
    return StatMap(MapKind.MAM, np.asarray(values, dtype=np.float32),
                   MapMeta(methods=("m",), set_kind=set_kind, n=5, fraction=0.1))


def test_ad_mam_zero_when_equal():
    values = np.random.default_rng(9).random((4, 4)).astype(np.float32)
    out = ad_mam(values, _mam_map(values))
    assert np.all(out.values == 0.0)
    assert out.kind is MapKind.AD_MAM


def test_ad_mam_constant_offset():
    out = ad_mam(np.full((3, 3), 1.0, dtype=np.float32), _mam_map(np.full((3, 3), 0.25)))
    assert np.all(out.values == 0.75)


def test_ad_mam_matches_oracle_exactly():
    rng = np.random.default_rng(10)
    image = rng.random((7, 7)).astype(np.float32)
    ref = rng.random((7, 7)).astype(np.float32)
    assert np.array_equal(ad_mam(image, _mam_map(ref)).values, np.abs(image - ref))


def test_ad_mam_requires_mam_reference():
    amv = _amv_map(np.zeros((2, 2)))
    with pytest.raises(ValueError, match="MAM"):
        ad_mam(np.zeros((2, 2), dtype=np.float32), amv)


def test_ad_mam_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        ad_mam(np.zeros((2, 3), dtype=np.float32), _mam_map(np.zeros((3, 3))))


# ---------------------------------------------------------------------------
# Validation and persistence


def test_negative_values_rejected_for_spread_kinds():
    with pytest.raises(ValueError, match="nonnegative"):
        StatMap(MapKind.AM_V, np.full((2, 2), -0.1, dtype=np.float32), MapMeta())


def test_signed_cross_kind_allows_negative():
    sm = StatMap(MapKind.X_D_AM_V, np.full((2, 2), -0.1, dtype=np.float32),
                 MapMeta(set_kind="H"))
    assert sm.values[0, 0] == np.float32(-0.1)


def test_empty_stack_rejected():
    with pytest.raises(ValueError):
        ActivationStack([], np.zeros((0, 2, 2)))


def test_save_stat_map_sidecar(tmp_path):
    sm = _amv_map(np.random.default_rng(11).random((4, 4)))
    path = tmp_path / "m_H_amv.amvt"
    sidecar = save_stat_map(sm, path)
    assert np.array_equal(read_tensor(path), sm.values)
    import json
    meta = json.loads(sidecar.read_text())
    assert meta["tensor"] == "m_H_amv.amvt"
    assert meta["kind"] == "AM-V"
    assert meta["set_kind"] == "H"
    assert meta["n"] == 10
