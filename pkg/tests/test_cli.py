import csv
import json
import time

import numpy as np
import pytest

from glumarker.cli import cmd_evaluate, main
from glumarker.config import PipelineConfig
from glumarker.features import stack


def run(*argv):
    return main([str(a) for a in argv])


def test_generate_default(tmp_path, capsys):
    assert run("generate", "--out", tmp_path) == 0
    rows = list(csv.DictReader(open(tmp_path / "data.csv")))
    assert len({r["patient_id"] for r in rows}) == 30 and len(rows) == 30 * 90
    first = (tmp_path / "data.csv").read_bytes()
    assert run("generate", "--out", tmp_path) == 0
    assert (tmp_path / "data.csv").read_bytes() == first
    assert "30 patients" in capsys.readouterr().out


def test_seed_flag_changes_data(tmp_path):
    run("generate", "--output", tmp_path / "a.csv")
    run("generate", "--seed", 5, "--output", tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()


@pytest.mark.parametrize("text", [
    "labels: {m_l: 0.8, m_u: 0.7}\n",
    "bogus_key: 1\n",
    "models: {glumarker: {train: {learning_rate: -1}}}\n",
    "data: {source: csv, csv_path: nowhere.csv}\n",
    "binning: {tar: {edges: [0.5, 0.2]}}\n",
    "- not\n- a mapping\n",
])
def test_invalid_config_exit_2(tmp_path, capsys, text):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(text)
    assert run("generate", "--config", cfg, "--out", tmp_path) == 2
    assert "error" in capsys.readouterr().err


def test_bad_override(tmp_path):
    assert run("generate", "--set", "nope=1", "--out", tmp_path) == 2
    assert run("generate", "--set", "seed", "--out", tmp_path) == 2


def test_ingest_round_trip(tmp_path):
    run("generate", "--output", tmp_path / "src.csv")
    assert run("ingest", "--input", tmp_path / "src.csv", "--out", tmp_path / "o") == 0
    assert (tmp_path / "o" / "data.csv").read_bytes() == (tmp_path / "src.csv").read_bytes()


def test_ingest_bad_data_exit_3(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("patient_id,day_index,tir,tar,tbr,total_bolus,total_meal_bolus,"
                 "total_correction_bolus,total_meal_size\nA,1,0.5,0.6,0.2,,,,\n")
    assert run("ingest", "--input", p, "--out", tmp_path) == 3
    assert "line 2" in capsys.readouterr().err


def test_csv_source_with_readings(tmp_path):
    rng = np.random.default_rng(0)
    lines = ["patient_id,day_index,glucose_mgdl"]
    for pid in ("A", "B", "C", "D", "E"):
        for day in range(1, 8):
            lines += [f"{pid},{day},{g:.1f}" for g in np.clip(rng.normal(140, 50, 24), 40, 400)]
    (tmp_path / "r.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "c.yaml").write_text("data: {source: csv, csv_path: r.csv}\n")
    assert run("featurize", "--config", tmp_path / "c.yaml", "--out", tmp_path / "o") == 0
    man = json.loads((tmp_path / "o" / "split_manifest.json").read_text())
    assert sum(len(v) for v in man["patients"].values()) == 5


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    t0 = time.perf_counter()
    assert run("train", "--out", out) == 0
    return out, time.perf_counter() - t0


def test_train_outputs(trained):
    out, seconds = trained
    assert seconds < 60
    assert sorted(p.name for p in (out / "models").iterdir()) == \
        ["glumarker.glm", "linear_svc.glm", "mlp.glm", "naive_bayes.glm"]
    assert (out / "history" / "glumarker.csv").exists()
    man = json.loads((out / "split_manifest.json").read_text())
    parts = [set(man["patients"][k]) for k in ("train", "validation", "test")]
    assert not (parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2])
    assert len(set.union(*parts)) == 30


def test_train_deterministic(trained, tmp_path):
    out, _ = trained
    assert run("train", "--out", tmp_path) == 0
    for p in (out / "models").iterdir():
        assert (tmp_path / "models" / p.name).read_bytes() == p.read_bytes()


def test_training_error_exit_4(tmp_path, capsys):
    code = run("train", "--out", tmp_path, "--set", "models.glumarker.train.learning_rate=1e300")
    assert code == 4
    assert "train" in capsys.readouterr().err


def test_evaluate_all(trained):
    out, _ = trained
    assert run("evaluate", "--out", out) == 0
    ev = out / "evaluation"
    for name in ("glumarker", "mlp", "naive_bayes", "linear_svc"):
        rep = json.loads((ev / name / "report.json").read_text())
        assert 0.5 < rep["macro_auc"] <= 1
        assert len(list(ev.glob(f"roc_{name}_*.csv"))) == 3
    assert len(list(ev.glob("roc_*.svg"))) == 3
    rows = list(csv.DictReader(open(ev / "comparison.csv")))
    assert len(rows) == 4
    aucs = [float(r["macro_auc"]) for r in rows]
    assert aucs == sorted(aucs, reverse=True)


class Oracle:
    def __init__(self, y):
        self.y = y

    def predict_proba(self, f_c, f_d):
        return np.eye(3)[self.y]


def test_injected_oracle_scores_one(trained, tmp_path):
    out, _ = trained
    cfg = PipelineConfig.load(overrides=[f"out_dir={tmp_path}"])
    from glumarker.cli import resolve_split

    split = resolve_split(cfg)
    y = stack(split.test)[2]
    reps = cmd_evaluate(cfg, {"glumarker": out / "models" / "glumarker.glm"}, split,
                        extra_models={"oracle": Oracle(y)})
    assert reps["oracle"].macro_auc == 1.0
    first = next(csv.DictReader(open(tmp_path / "evaluation" / "comparison.csv")))
    assert first["model"] == "oracle"


def test_evaluate_missing_model_exit_3(tmp_path):
    assert run("evaluate", "--out", tmp_path, "--model", f"x={tmp_path / 'nope.glm'}") == 3


def test_evaluate_mismatched_model_exit_3(trained, tmp_path):
    out, _ = trained
    code = run("evaluate", "--out", tmp_path, "--set", "binning={total_meal_size: {edges: [100]}}",
               "--model", f"g={out / 'models' / 'glumarker.glm'}")
    assert code == 3


def test_importance_default_and_k(trained):
    out, _ = trained
    assert run("importance", "--out", out) == 0
    imp = out / "importance"
    for c in ("good", "moderate", "poor"):
        assert len(list(csv.reader(open(imp / f"top10_{c}.csv")))) == 11
    assert len(list(csv.reader(open(imp / "importance.csv")))) == 71
    assert json.loads((imp / "metadata.json").read_text())["exclusive"] is False
    assert run("importance", "--out", out, "--k", 3, "--exclusive") == 0
    for c in ("good", "moderate", "poor"):
        assert len(list(csv.reader(open(imp / f"top3_{c}.csv")))) == 4
    meta = json.loads((imp / "metadata.json").read_text())
    assert meta["exclusive"] is True and meta["k"] == 3


def test_importance_bad_k_exit_2(trained):
    out, _ = trained
    assert run("importance", "--out", out, "--k", 0) == 2


def test_run_all_manifest(tmp_path):
    assert run("run-all", "--out", tmp_path) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())["files"]
    for key in ("data.csv", "config.yaml", "models/glumarker.glm", "evaluation/comparison.csv",
                "importance/importance.csv", "split_manifest.json"):
        assert len(man[key]) == 64
    assert "run_metadata.json" not in man
    assert (tmp_path / "run_metadata.json").exists()


def test_io_error_exit_5(tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("x")
    assert run("generate", "--out", blocker / "sub") == 5
