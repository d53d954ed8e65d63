"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line with its runtime; the lines are printed in
the pytest terminal summary (see conftest.py) and on stdout with ``-s``.
"""

import csv
import json
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glumarker.baselines import fit_linear_svc, fit_mlp, fit_naive_bayes
from glumarker.binning import BiomarkerDescriptor, default_binning_config, digitize
from glumarker.cli import main
from glumarker.core_types import ControlLabel, LabelThresholds, label_control
from glumarker.evaluation import pairwise_auc, roc_curve
from glumarker.features import build_examples, split_by_patient
from glumarker.importance import compute_importance, top_k
from glumarker.layers import softmax
from glumarker.network import Architecture, TrainConfig, backward, forward, init_params, train
from glumarker.synth import GeneratorConfig, PlantedRule, generate

from helpers import max_rel_error, numeric_grad, random_instance

RESULTS = []


@contextmanager
def criterion(number, title, limit=None):
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        dt = time.perf_counter() - t0
        if ok and limit is not None and dt >= limit:
            ok = False
            title += f" (over {limit:g} s)"
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({dt:.2f} s)"
        RESULTS.append(line)
        print(line)
    assert limit is None or dt < limit, f"criterion {number} took {dt:.2f} s, limit {limit} s"


def test_c1_labeling_oracle():
    th = LabelThresholds()

    def oracle(t):
        if t >= 0.70:
            return ControlLabel.GOOD
        if t >= 0.55:
            return ControlLabel.MODERATE
        return ControlLabel.POOR

    with criterion(1, "labeling matches a direct three-branch rule on 1001 TIR values", 1.0):
        grid = [i / 1000 for i in range(1001)]
        mismatches = [t for t in grid if label_control(t, th) != oracle(t)]
        assert mismatches == []


def test_c2_binning_partition():
    with criterion(2, "every default scheme partitions fuzzed values monotonically", 1.0):
        cfg = default_binning_config()
        rng = np.random.default_rng(0)
        for name, s in cfg.schemes.items():
            hi = s.upper if s.upper is not None else 2 * (s.edges[-1] if s.edges else 1.0)
            vals = np.concatenate([rng.uniform(0, hi, 10_000 - len(s.edges) - 2),
                                   [0.0, hi], s.edges])
            vals.sort()
            idx = []
            for v in vals:
                oh = digitize(float(v), s)
                assert oh.sum() == 1 and np.count_nonzero(oh) == 1, (name, v)
                idx.append(int(np.argmax(oh)))
            assert np.all(np.diff(idx) >= 0), name
            if s.has_no_entry_bin:
                assert digitize(None, s)[0] == 1
        meal, bolus = cfg.schemes["total_meal_size"], cfg.schemes["total_bolus"]
        assert meal.n_bins == 5 and meal.has_no_entry_bin and meal.edges == (120.0, 200.0, 300.0)
        assert bolus.n_bins == 4 and bolus.has_no_entry_bin and bolus.edges == (30.0, 50.0)
        assert meal.bin_labels == ("no-entry", "[0, 120)", "[120, 200)", "[200, 300)", "[300, inf)")
        assert bolus.bin_labels == ("no-entry", "[0, 30)", "[30, 50)", "[50, inf)")


def test_c3_gradient_check():
    with criterion(3, "backward matches central differences on 100 instances", 30.0):
        rng = np.random.default_rng(3)
        worst, touched = 0.0, set()
        for seed in range(100):
            params, f_c, f_d, label = random_instance(rng, seed)
            probs, cache = forward(params, f_c, f_d)
            grads = backward(params, cache, np.array([label])).arrays()
            num = numeric_grad(params, f_c, f_d, label)
            worst = max(worst, max_rel_error(grads, num))
            names = (["branch_c"] * 2 * len(params.branch_c) + ["branch_d"] * 2 * len(params.branch_d)
                     + ["gate", "gate", "output", "output"])
            touched |= {n for n, g in zip(names, grads) if np.any(g != 0)}
        assert worst < 1e-4, worst
        assert touched == {"branch_c", "branch_d", "gate", "output"}


def test_c4_auc_oracle():
    with criterion(4, "ROC AUC equals pairwise counting on 200 sets with ties", 10.0):
        rng = np.random.default_rng(4)
        for i in range(200):
            n = int(rng.integers(2, 201))
            if i % 3 == 0:
                s = rng.integers(0, 3, n).astype(float)  # heavy ties
            elif i % 3 == 1:
                s = np.round(rng.random(n), 1)
            else:
                s = rng.normal(size=n)
            pos = rng.random(n) < rng.uniform(0.1, 0.9)
            if pos.all() or not pos.any():
                pos[0] = not pos[0]
            assert abs(roc_curve(s, pos).auc - pairwise_auc(s, pos)) <= 1e-9


def _run_all(out: Path, *extra) -> dict:
    assert main(["run-all", "--out", str(out), *extra]) == 0
    with open(out / "evaluation" / "comparison.csv") as fh:
        return {r["model"]: float(r["macro_auc"]) for r in csv.DictReader(fh)}


def test_c5_learnability(tmp_path):
    with criterion(5, "GluMarker and MLP macro AUC >= 0.90, all models > 0.55", 120.0):
        aucs = _run_all(tmp_path)
        print(aucs)
        assert aucs["glumarker"] >= 0.90 and aucs["mlp"] >= 0.90
        assert all(v > 0.55 for v in aucs.values()) and len(aucs) == 4


def test_c6_null_effect(tmp_path):
    with criterion(6, "with no planted effect every macro AUC lies in [0.40, 0.60]", 120.0):
        aucs = _run_all(tmp_path, "--set", "data.synthetic.effect_strength=0")
        print(aucs)
        assert len(aucs) == 4 and all(0.40 <= v <= 0.60 for v in aucs.values())


PLANTED = [
    (PlantedRule("total_correction_bolus", "prior", "no-entry", 0.30), ControlLabel.GOOD),
    (PlantedRule("total_meal_size", "present", "[300, inf)", -0.30), ControlLabel.POOR),
]


def test_c7_importance_oracle():
    with criterion(7, "a planted 0.3 rule ranks top-3 for its class over 5 seeds", 180.0):
        binning = default_binning_config()
        for rule, favored in PLANTED:
            target = BiomarkerDescriptor(rule.feature_name, rule.day_offset, rule.bin_label)
            for seed in range(5):
                data = generate(GeneratorConfig(seed=seed, planted_rules=(rule,)))
                split = split_by_patient(build_examples(data, binning), seed=seed)
                model, _ = train(split, config=TrainConfig(seed=seed))
                rep = compute_importance(model, split.test)
                ranked = [e.biomarker for e in top_k(rep, 3)[favored]]
                assert target in ranked, (rule, seed, ranked)


def test_c8_determinism(tmp_path):
    with criterion(8, "two run-all executions give byte-identical artifacts"):
        a, b = tmp_path / "a", tmp_path / "b"
        _run_all(a)
        _run_all(b)
        files = sorted(p.relative_to(a) for p in a.rglob("*")
                       if p.is_file() and p.name != "run_metadata.json")
        assert any(f.parts[0] == "models" for f in files)
        assert any(f.parts[0] == "evaluation" and f.suffix == ".csv" for f in files)
        assert any(f.parts[0] == "importance" and f.suffix == ".csv" for f in files)
        differing = [str(f) for f in files if (a / f).read_bytes() != (b / f).read_bytes()]
        assert differing == []
        assert json.loads((a / "manifest.json").read_text()) == json.loads((b / "manifest.json").read_text())


# -- criterion 9: invariant suite ------------------------------------------

finite = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(finite, min_size=3, max_size=3), min_size=1, max_size=20))
def _softmax_normalized(z):
    p = softmax(np.array(z))
    assert np.all(p >= 0) and np.allclose(p.sum(axis=1), 1, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def _gate_in_range_and_simplex(seed):
    rng = np.random.default_rng(seed)
    params = init_params(3, 5, Architecture((4,), (6, 4)), seed)
    for layer in params.layers():
        layer.weights *= rng.uniform(0.5, 20)
    probs, cache = forward(params, rng.normal(0, 10, (8, 3)), (rng.random((8, 5)) < 0.5) * 1.0)
    assert np.all((cache["g"] >= 0) & (cache["g"] <= 1))
    assert np.all(probs >= 0) and np.allclose(probs.sum(axis=1), 1, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def _fusion_identity(seed):
    rng = np.random.default_rng(seed)
    params = init_params(4, 4, Architecture((3,), (3,)), seed)
    params.branch_d[0].weights[:] = params.branch_c[0].weights
    params.branch_d[0].biases[:] = params.branch_c[0].biases
    x = rng.normal(size=(5, 4))
    _, cache = forward(params, x, x)
    assert np.array_equal(cache["R_c"], cache["R_d"])
    assert np.allclose(cache["fused"], cache["R_c"], rtol=1e-12, atol=1e-15)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def _all_models_on_simplex(seed):
    rng = np.random.default_rng(seed)
    n = 60
    Fc, Fd, y = rng.normal(size=(n, 3)), (rng.random((n, 6)) < 0.4) * 1.0, np.arange(n) % 3
    data = (Fc, Fd, y)
    models = [
        train((data, None), Architecture((4,), (4,)), TrainConfig(epochs=2, seed=seed))[0],
        fit_mlp(data, (5,), TrainConfig(epochs=2, seed=seed))[0],
        fit_naive_bayes(data),
        fit_linear_svc(data, epochs=2, seed=seed),
    ]
    Xc, Xd = rng.normal(0, 5, size=(20, 3)), (rng.random((20, 6)) < 0.5) * 1.0
    for m in models:
        p = m.predict_proba(Xc, Xd)
        assert p.shape == (20, 3) and np.all(p >= 0) and np.allclose(p.sum(axis=1), 1, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([0.0, 0.5, 1.0]) | finite, st.booleans()),
                min_size=2, max_size=80).filter(lambda r: 0 < sum(b for _, b in r) < len(r)))
def _auc_monotone_invariant(rows):
    s = np.array([v for v, _ in rows])
    pos = [b for _, b in rows]
    _, rank = np.unique(s, return_inverse=True)
    assert roc_curve(s, pos).auc == roc_curve(np.tanh(rank / 100.0) + rank, pos).auc


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 25), st.integers(0, 2**31 - 1))
def _patient_disjoint(n_patients, seed):
    data = generate(GeneratorConfig(n_patients=n_patients, days_per_patient=4, seed=seed))
    split = split_by_patient(build_examples(data, default_binning_config()), seed=seed)
    ids = [{e.patient_id for e in getattr(split, k)} for k in ("train", "validation", "test")]
    assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])
    assert set.union(*ids) == set(data)


def test_c9_invariants():
    with criterion(9, "softmax, gate range, fusion identity, simplex outputs, AUC invariance, "
                      "disjoint splits"):
        for prop in (_softmax_normalized, _gate_in_range_and_simplex, _fusion_identity,
                     _all_models_on_simplex, _auc_monotone_invariant, _patient_disjoint):
            prop()
