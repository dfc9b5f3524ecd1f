"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.
"""
import json
import math
import time

import numpy as np
import pytest

from conftest import (in_memory_dataset, random_probs, separable_dataset,
                      write_probs_manifest)
from oracles import brute_force_search, straight_line_swig_forward
from vlme import protocols, t_ensemble as te, tf_ensemble, zs_ensemble
from vlme.cli import main
from vlme.data_model import MAGIC, read_tensor, write_tensor
from vlme.errors import TensorFormatError
from vlme.scoring import accuracy, stable_softmax
from vlme.zs_ensemble import confidence_weights, mean_ensemble_predict, zs_ensemble_predict


def test_p1_grid_search_oracle_equivalence():
    start = time.time()
    for seed in range(25):
        rng = np.random.Generator(np.random.Philox(seed))
        weak = [random_probs(rng, 200, 10) for _ in range(3)]
        anchor = random_probs(rng, 200, 10)
        labels = rng.integers(0, 10, size=200)
        result = tf_ensemble.exhaustive_search(weak, anchor, labels)
        ow, oacc = brute_force_search(weak, anchor, labels, tf_ensemble.DEFAULT_GRID)
        assert result.weights == ow, f"seed {seed}: {result.weights} vs oracle {ow}"
        assert result.best_accuracy == pytest.approx(oacc)
        assert result.evaluated_count == 1000
    elapsed = time.time() - start
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    print(f"\nP1 PASS: exhaustive search equals brute-force oracle on 25 instances ({elapsed:.1f}s)")


def test_p2_swig_gradient_check():
    rng = np.random.Generator(np.random.Philox(100))
    configs = []
    for input_type in ("features", "logits"):
        for anchor_fixed in (False, True):
            configs.append((input_type, anchor_fixed))
    configs = (configs * 3)[:10]  # 10 configurations spanning all four modes
    worst = 0.0
    for case, (input_type, anchor_fixed) in enumerate(configs):
        n, k, nm = 12, 4, 3 + case % 2
        probs = [random_probs(rng, n, k) for _ in range(nm)]
        if input_type == "logits":
            X = np.concatenate(probs, axis=1)
            input_dim = nm * k
        else:
            input_dim = int(rng.integers(8, 65))
            X = rng.normal(size=(n, input_dim))
        labels = rng.integers(0, k, size=n)
        cfg = te.SwigConfig(input_dim=input_dim, downscale=4, input_type=input_type,
                            anchor_fixed=anchor_fixed,
                            num_weight=te.expected_num_weight(nm, anchor_fixed))
        params = te.swig_init(cfg, seed=case)
        grads = te.swig_backward(params, cfg, X, probs, labels, anchor_index=nm - 1)
        flat_names = [(n_, i) for n_ in ("W1", "b1", "W2", "b2")
                      for i in range(getattr(params, n_).size)]
        picks = rng.choice(len(flat_names), size=20, replace=False)
        for p_ in picks:
            name, idx = flat_names[p_]
            arr = getattr(params, name).reshape(-1)
            eps = 1e-4
            orig = arr[idx]
            arr[idx] = orig + eps
            up = te.batch_loss(params, cfg, X, probs, labels, nm - 1)
            arr[idx] = orig - eps
            down = te.batch_loss(params, cfg, X, probs, labels, nm - 1)
            arr[idx] = orig
            num = (up - down) / (2 * eps)
            ana = grads[name].reshape(-1)[idx]
            rel = abs(ana - num) / max(abs(num), abs(ana), 1e-8)
            worst = max(worst, rel)
            assert rel < 1e-4, (case, name, idx, ana, num)
    print(f"\nP2 PASS: analytic gradients match finite differences (max rel err {worst:.2e})")


def test_p3_separable_gating_task():
    start = time.time()
    ds = separable_dataset(seed=11, n=1024, k=8, n_models=4)
    cfg = te.SwigConfig(input_dim=4 * 128, num_weight=4, input_type="features")
    for seed in (1, 2, 3):
        params, trace = te.swig_train(ds, cfg, te.TrainConfig(seed=seed))
        X = te.build_inputs(ds, cfg)
        fused = te.t_predict(params, cfg, X, ds.prob_list(), ds.anchor_index)
        acc = accuracy(fused, ds.labels)
        assert acc >= 0.99, f"seed {seed}: accuracy {acc}"
        assert trace[-1] < trace[0], f"seed {seed}: loss {trace[0]} -> {trace[-1]}"
    elapsed = time.time() - start
    assert elapsed < 30.0
    print(f"\nP3 PASS: separable gating task trained to >= 0.99 for seeds 1,2,3 ({elapsed:.1f}s)")


def test_p4_zs_hand_oracle():
    p1 = np.array([[0.2, 0.16, 0.16, 0.16, 0.16, 0.16]])
    p2 = np.array([[0.5, 0.1, 0.1, 0.1, 0.1, 0.1]])
    p3 = np.array([[0.9, 0.02, 0.02, 0.02, 0.02, 0.02]])
    w = confidence_weights([p1, p2, p3])
    np.testing.assert_allclose(w[0], (0.2292, 0.3094, 0.4615), atol=1e-4)

    rng = np.random.Generator(np.random.Philox(200))
    weak, anchor = random_probs(rng, 25, 6), random_probs(rng, 25, 6)
    fused = zs_ensemble_predict([weak, anchor], anchor_index=1)
    np.testing.assert_array_equal(fused, weak + anchor)
    print("\nP4 PASS: confidence weights match hand oracle; n=2 reduces to weak + anchor")


def test_p5_harmonic_mean_vs_paper():
    assert protocols.harmonic_mean(84.26, 76.10) == pytest.approx(79.97, abs=0.01)
    assert protocols.harmonic_mean(82.69, 63.22) == pytest.approx(71.66, abs=0.01)
    print("\nP5 PASS: harmonic means match published average rows within 0.01")


def test_p6_determinism(tmp_path):
    rng = np.random.Generator(np.random.Philox(300))
    probs = [random_probs(rng, 100, 6) for _ in range(4)]
    labels = rng.integers(0, 6, size=100)
    m = write_probs_manifest(tmp_path / "d", probs, labels)
    for cmd in (["zs"], ["mean"], ["caw-all"], ["tf-search"], ["inspect"],
                ["tf-eval", "--weights", "0.3,0.5,0.7"]):
        out1, out8 = tmp_path / "r1.json", tmp_path / "r8.json"
        assert main(cmd + ["--manifest", str(m), "--threads", "1", "--out", str(out1)]) == 0
        assert main(cmd + ["--manifest", str(m), "--threads", "8", "--out", str(out8)]) == 0
        assert out1.read_bytes() == out8.read_bytes(), cmd

    ds = separable_dataset(n=256)
    cfg = te.SwigConfig(input_dim=4 * 128, num_weight=4, input_type="features")
    tc = te.TrainConfig(epochs=3, seed=5)
    pa, _ = te.swig_train(ds, cfg, tc)
    pb, _ = te.swig_train(ds, cfg, tc)
    for a, b in zip(pa.arrays(), pb.arrays()):
        assert a.tobytes() == b.tobytes()
    print("\nP6 PASS: reports byte-identical across thread counts; training bit-reproducible")


def test_p7_invariant_suite():
    rng = np.random.Generator(np.random.Philox(400))
    cases = 200

    for _ in range(cases):  # softmax shift invariance
        s = rng.normal(size=int(rng.integers(2, 10)))
        c = float(rng.normal() * 50)
        np.testing.assert_allclose(stable_softmax(s), stable_softmax(s + c), atol=1e-12)

    for _ in range(cases):  # confidence-weight normalization
        m = int(rng.integers(1, 5))
        probs = [random_probs(rng, 6, 4) for _ in range(m)]
        w = confidence_weights(probs)
        assert np.all(w > 0)
        np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-6)

    for _ in range(cases):  # row-stochasticity and fused row sum = 2
        n_models = int(rng.integers(2, 5))
        probs = [random_probs(rng, 5, 4) for _ in range(n_models)]
        for p in probs:
            np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-5)
        fused = zs_ensemble_predict(probs, anchor_index=n_models - 1)
        np.testing.assert_allclose(fused.sum(axis=1), 2.0, atol=1e-5)

    for i in range(cases):  # greedy never beats exhaustive
        if i % 10 == 0:
            weak = [random_probs(rng, 30, 4) for _ in range(2)]
            anchor = random_probs(rng, 30, 4)
            labels = rng.integers(0, 4, size=30)
            g = tf_ensemble.coordinate_greedy(weak, anchor, labels)
            e = tf_ensemble.exhaustive_search(weak, anchor, labels)
            assert g.best_accuracy <= e.best_accuracy + 1e-12

    for _ in range(cases):  # zero-head generator equals mean ensemble
        nm = int(rng.integers(2, 5))
        probs = [random_probs(rng, 8, 5) for _ in range(nm)]
        X = rng.normal(size=(8, 10))
        cfg = te.SwigConfig(input_dim=10, num_weight=nm, downscale=2)
        params = te.swig_init(cfg, seed=int(rng.integers(0, 1000)))
        params.W2 = np.zeros_like(params.W2)
        params.b2 = np.zeros_like(params.b2)
        fused = te.t_predict(params, cfg, X, probs, anchor_index=0)
        np.testing.assert_allclose(fused, mean_ensemble_predict(probs), atol=1e-12)
    print("\nP7 PASS: invariant suite holds on randomized cases (200 each)")


def test_p8_file_format(tmp_path):
    rng = np.random.Generator(np.random.Philox(500))
    for i in range(200):
        ndim = int(rng.integers(1, 5))
        shape = [int(rng.integers(1, 5)) for _ in range(ndim)]
        data = rng.normal(size=int(np.prod(shape))).astype(np.float32)
        path = tmp_path / f"t{i}.vet"
        write_tensor(path, shape, data)
        got_shape, got = read_tensor(path)
        assert got_shape == shape
        assert got.tobytes() == data.reshape(shape).tobytes()

    good = tmp_path / "good.vet"
    write_tensor(good, [3, 2], np.arange(6, dtype=np.float32))
    raw = bytearray(good.read_bytes())

    corrupt = dict(raw=raw)
    bad_magic = bytes(b"XXXX") + bytes(raw[4:])
    bad_dtype = bytes(raw[:4]) + bytes([0x55]) + bytes(raw[5:])
    truncated = bytes(raw[:-3])
    for blob, match in ((bad_magic, "bad magic"), (bad_dtype, "dtype"), (truncated, "truncated")):
        p = tmp_path / "bad.vet"
        p.write_bytes(blob)
        with pytest.raises(TensorFormatError, match=match):
            read_tensor(p)
    print("\nP8 PASS: VET1 round-trips bit-exact; corrupt headers give distinct diagnostics")
