"""End-to-end smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import approxgrad as ag


def test_exact_multiplier():
    m = ag.build_exact(4, False)
    assert m.name == "mul4u_acc"
    assert m.eval(15, 15) == 225
    assert m.eval(0, 7) == 0
    r = ag.error_metrics(m)
    assert (r.er, r.nmed, r.maxed) == (0.0, 0.0, 0)


def test_truncated_error_metrics():
    r = ag.error_metrics(ag.build_truncated(4, 2))
    assert r.er == 0.5
    assert r.maxed == 5
    assert abs(r.nmed - 5 / (4 * 255)) < 1e-15

    r = ag.error_metrics(ag.build_truncated(7, 6))
    assert r.maxed == 321
    assert round(r.er * 100, 1) == 93.8


def test_amlut_round_trip(tmp_path):
    m = ag.build_truncated(6, 4)
    path = str(tmp_path / "m.amlut")
    ag.save_multiplier(m, path)
    back = ag.load_multiplier(path)
    assert back.table == m.table
    assert back.name == m.name


def test_gradient_luts():
    m = ag.build_truncated(7, 6)
    g1 = ag.build_grad1d(m, "x")
    assert g1.values[10] == 1152 / 127
    g2 = ag.build_grad2d(m, "x", 4)
    assert g2.at(10, 0) == 1152 / 127
    assert g2.at(10, 63) > g2.at(10, 0)
    assert ag.ste_grad("x", 10, 5) == 10.0

    # maximal hws reduction to the 1d table
    g_max = ag.build_grad2d(m, "x", ag.max_hws(7))
    for w in (0, 10, 127):
        for x in (0, 63, 127):
            assert g_max.at(w, x) == g1.at(w, x)


def test_app_gemm_matches_eval_sum():
    m = ag.build_truncated(4, 2)
    rng = np.random.default_rng(3)
    w = rng.integers(0, 16, size=(3, 4)).astype(np.int64)
    x = rng.integers(0, 16, size=(4, 2)).astype(np.int64)
    y = ag.app_gemm(w, x, m)
    for i in range(3):
        for j in range(2):
            assert y[i, j] == sum(m.eval(int(w[i, k]), int(x[k, j])) for k in range(4))


def test_quantization_chain():
    values = np.array([[0.0, 0.5, 1.0]])
    p = ag.observe(values, 8, "asymmetric")
    assert p.scale == 1 / 255 and p.zero_point == 0
    q = ag.quantize(values, p)
    assert list(q[0]) == [0, 128, 255]
    assert ag.dequantize_output(12, 3, 4, p, p) == p.scale * p.scale * 12


def test_synthetic_determinism():
    a = ag.make_synthetic(7, 32, 16, 2, 8)
    b = ag.make_synthetic(7, 32, 16, 2, 8)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]
    assert np.array_equal(a[2], b[2]) and a[3] == b[3]


def test_training_smoke():
    m = ag.build_exact(7, False)
    rep = ag.train_synthetic(m, estimator="ste", epochs=3, n_train=96, n_eval=48, dim=8,
                             hidden=[16], seed=9, data_seed=11)
    assert len(rep["train_loss"]) == 3
    assert rep["train_loss"][0] > rep["train_loss"][-1]
    assert 0.0 <= rep["final_acc"] <= 1.0
    assert math.isfinite(rep["initial_acc"])


def test_out_of_range_raises():
    m = ag.build_exact(4, False)
    with pytest.raises(Exception):
        m.eval(16, 0)
