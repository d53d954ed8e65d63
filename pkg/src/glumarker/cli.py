"""Command-line pipeline: generate/ingest -> featurize -> train -> evaluate -> importance.

Every stage reads the same YAML config; flags override config keys. Exit
codes: 0 ok, 2 config/validation, 3 data, 4 training, 5 I/O.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

from . import __version__
from .baselines import fit_linear_svc, fit_mlp, fit_naive_bayes
from .config import MODEL_NAMES, PipelineConfig
from .errors import ConfigError, DataError, TrainingError, ValidationError
from .evaluation import EvalReport, emit_roc_artifacts, evaluate, fmt_float
from .features import CONTINUOUS_NAMES, DatasetSplit, build_examples, split_by_patient, stack
from .importance import compute_importance, emit_importance_artifacts
from .network import train as train_glumarker
from .persistence import load_model, save_model
from .synth import Dataset, generate, load_csv, load_readings_csv, sniff_csv_kind, write_csv

log = logging.getLogger("glumarker")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_TRAIN, EXIT_IO = 0, 2, 3, 4, 5
LOG_ENV = "GLUMARKER_LOG_LEVEL"
METADATA_FILE = "run_metadata.json"


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage, self.exc = stage, exc


def _mkdir(p: Path) -> Path:
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {p}: {exc}") from exc
    return p


def _write_json(path: Path, obj) -> Path:
    try:
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


# -- data ------------------------------------------------------------------


def read_any_csv(path: Path, cfg: PipelineConfig) -> Dataset:
    if sniff_csv_kind(path) == "readings":
        d = cfg.raw["data"]
        return load_readings_csv(path, float(d["glucose_low"]), float(d["glucose_high"]))
    return load_csv(path)


def resolve_dataset(cfg: PipelineConfig) -> Dataset:
    if cfg.raw["data"]["source"] == "csv":
        return read_any_csv(cfg.csv_path, cfg)
    return generate(cfg.generator)


def resolve_split(cfg: PipelineConfig) -> DatasetSplit:
    examples = build_examples(resolve_dataset(cfg), cfg.binning, cfg.thresholds)
    if not examples:
        raise DataError("no patient has three consecutive days; nothing to learn from")
    return split_by_patient(examples, cfg.raw["split"]["ratios"], cfg.seed)


# -- stages ----------------------------------------------------------------


def cmd_generate(cfg: PipelineConfig, out_path: Optional[Path] = None) -> Path:
    data = generate(cfg.generator)
    out_path = Path(out_path) if out_path is not None else _mkdir(cfg.out_dir) / "data.csv"
    write_csv(data, out_path)
    n_rows = sum(len(v) for v in data.values())
    print(f"wrote {n_rows} rows for {len(data)} patients to {out_path}")
    return out_path


def cmd_ingest(cfg: PipelineConfig, in_path: Optional[Path] = None) -> Path:
    src = Path(in_path) if in_path is not None else cfg.csv_path
    if src is None:
        raise ConfigError("ingest needs data.csv_path or --input")
    data = read_any_csv(src, cfg)
    out_path = _mkdir(cfg.out_dir) / "data.csv"
    write_csv(data, out_path)
    print(f"ingested {sum(len(v) for v in data.values())} days for {len(data)} patients -> {out_path}")
    return out_path


def _write_examples(path: Path, examples) -> None:
    layout = examples[0].f_d.layout if examples else ()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["patient_id", "target_day_index", "label", *CONTINUOUS_NAMES, *map(str, layout)])
        for ex in examples:
            w.writerow([ex.patient_id, ex.target_day_index, ex.label.display,
                        *(fmt_float(v) for v in ex.f_c), *(int(v) for v in ex.f_d.values)])


def cmd_featurize(cfg: PipelineConfig) -> DatasetSplit:
    split = resolve_split(cfg)
    fdir = _mkdir(cfg.out_dir / "features")
    for name in ("train", "validation", "test"):
        _write_examples(fdir / f"{name}.csv", getattr(split, name))
    _write_json(cfg.out_dir / "split_manifest.json", split.manifest())
    print(f"examples: train {len(split.train)}, validation {len(split.validation)}, "
          f"test {len(split.test)}")
    return split


def _write_history(path: Path, history) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss"])
        for e, t, v in history.rows():
            w.writerow([e, fmt_float(t), fmt_float(v)])


def _fit(cfg: PipelineConfig, name: str, split: DatasetSplit):
    m = cfg.raw["models"][name]
    if name == "glumarker":
        return train_glumarker(split, cfg.architecture, cfg.train_config(name))
    if name == "mlp":
        return fit_mlp(split.train, m["hidden"], cfg.train_config(name), split.validation)
    if name == "naive_bayes":
        return fit_naive_bayes(split.train, float(m["variance_floor"])), None
    if name == "linear_svc":
        return fit_linear_svc(split.train, C=float(m["C"]), epochs=int(m["epochs"]), seed=cfg.seed,
                              learning_rate=float(m["learning_rate"]),
                              batch_size=int(m["batch_size"])), None
    raise ConfigError(f"unknown model {name!r}")


def cmd_train(cfg: PipelineConfig, split: Optional[DatasetSplit] = None) -> Dict[str, Path]:
    split = split or resolve_split(cfg)
    mdir = _mkdir(cfg.out_dir / "models")
    hdir = _mkdir(cfg.out_dir / "history")
    _write_json(cfg.out_dir / "split_manifest.json", split.manifest())
    paths = {}
    for name in cfg.enabled_models():
        model, history = _fit(cfg, name, split)
        paths[name] = save_model(model, mdir / f"{name}.glm", {"seed": cfg.seed})
        if history is not None:
            _write_history(hdir / f"{name}.csv", history)
        log.info("trained %s", name)
    print("trained " + ", ".join(paths))
    return paths


def default_model_paths(cfg: PipelineConfig) -> Dict[str, Path]:
    return {n: cfg.out_dir / "models" / f"{n}.glm" for n in cfg.enabled_models()}


def cmd_evaluate(cfg: PipelineConfig, model_paths: Optional[Mapping[str, Path]] = None,
                 split: Optional[DatasetSplit] = None,
                 extra_models: Optional[Mapping[str, object]] = None) -> Dict[str, EvalReport]:
    """Evaluate each model on the test split. ``extra_models`` are in-memory
    models evaluated alongside the persisted ones."""
    split = split or resolve_split(cfg)
    Fc, Fd, y = stack(split.test)
    models = {}
    for name, path in (model_paths or default_model_paths(cfg)).items():
        if not Path(path).exists():
            raise DataError(f"model file not found: {path}")
        models[name] = load_model(path, expect_inputs=(Fc.shape[1], Fd.shape[1]))
    models.update(extra_models or {})
    edir = _mkdir(cfg.out_dir / "evaluation")
    reports = {}
    for name, model in models.items():
        reports[name] = evaluate(model, (Fc, Fd, y))
        _write_json(_mkdir(edir / name) / "report.json", reports[name].to_dict())
    emit_roc_artifacts(reports, edir)
    ranked = sorted(reports.items(), key=lambda kv: (-kv[1].macro_auc, kv[0]))
    with open(edir / "comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "macro_auc", "auc_good", "auc_moderate", "auc_poor", "accuracy"])
        for name, rep in ranked:
            a = [rep.aucs[k] for k in sorted(rep.aucs)]
            w.writerow([name, fmt_float(rep.macro_auc), *("" if math.isnan(v) else fmt_float(v) for v in a),
                        fmt_float(rep.accuracy)])
    for name, rep in ranked:
        print(f"{name:12s} macro AUC {rep.macro_auc:.3f}  accuracy {rep.accuracy:.3f}")
    return reports


def cmd_importance(cfg: PipelineConfig, model_path: Optional[Path] = None,
                   split: Optional[DatasetSplit] = None):
    imp = cfg.raw["importance"]
    split = split or resolve_split(cfg)
    examples = getattr(split, imp["split"])
    if not examples:
        raise DataError(f"{imp['split']} split is empty")
    Fc, Fd, y = stack(examples)
    name = imp["model"]
    path = Path(model_path) if model_path else cfg.out_dir / "models" / f"{name}.glm"
    if not path.exists():
        raise DataError(f"model file not found: {path}")
    model = load_model(path, expect_inputs=(Fc.shape[1], Fd.shape[1]))
    report = compute_importance(model, (Fc, Fd, y), cfg.binning.layout(),
                                exclusive=bool(imp["exclusive"]), model_id=name)
    k = int(imp["k"])
    idir = _mkdir(cfg.out_dir / "importance")
    emit_importance_artifacts(report, k, idir)
    _write_json(idir / "metadata.json", {
        "model": report.model_id,
        "dataset_fingerprint": report.dataset_fingerprint,
        "exclusive": report.exclusive,
        "perturbation": "exclusive" if report.exclusive else "literal",
        "split": imp["split"],
        "k": k,
        "n_examples": int(Fd.shape[0]),
    })
    print(f"importance for {len(report.entries)} biomarkers -> {idir}")
    return report


def write_manifest(out_dir: Path) -> Path:
    entries = {}
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p.name not in ("manifest.json", METADATA_FILE):
            entries[p.relative_to(out_dir).as_posix()] = hashlib.sha256(p.read_bytes()).hexdigest()
    return _write_json(out_dir / "manifest.json", {"files": entries})


def cmd_run_all(cfg: PipelineConfig) -> Path:
    out = _mkdir(cfg.out_dir)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    (out / "config.yaml").write_text(cfg.dump())
    if cfg.raw["data"]["source"] == "csv":
        _run_stage("ingest", lambda: cmd_ingest(cfg))
    else:
        _run_stage("generate", lambda: cmd_generate(cfg))
    split = _run_stage("featurize", lambda: cmd_featurize(cfg))
    _run_stage("train", lambda: cmd_train(cfg, split))
    _run_stage("evaluate", lambda: cmd_evaluate(cfg, split=split))
    _run_stage("importance", lambda: cmd_importance(cfg, split=split))
    _write_json(out / METADATA_FILE, {
        "started": started,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "version": __version__,
    })
    return write_manifest(out)


def _run_stage(stage: str, fn):
    try:
        return fn()
    except (ValidationError, DataError, TrainingError, OSError) as exc:
        raise StageError(stage, exc) from exc


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML pipeline config")
    common.add_argument("--seed", type=int, help="global seed (overrides config 'seed')")
    common.add_argument("--out", help="output directory (overrides config 'out_dir')")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key, e.g. models.mlp.hidden=[32]")

    p = argparse.ArgumentParser(prog="glumarker", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    g = sub.add_parser("generate", parents=[common], help="write a synthetic day-level CSV")
    g.add_argument("--output", help="CSV path (default <out>/data.csv)")
    i = sub.add_parser("ingest", parents=[common], help="validate and normalise a CSV")
    i.add_argument("--input", help="day-level or raw-readings CSV (default data.csv_path)")
    sub.add_parser("featurize", parents=[common], help="write example matrices and split manifest")
    sub.add_parser("train", parents=[common], help="train GluMarker and enabled baselines")
    e = sub.add_parser("evaluate", parents=[common], help="ROC/AUC reports on the test split")
    e.add_argument("--model", action="append", default=[], metavar="NAME=PATH",
                   help="model file to evaluate (repeatable; default all trained models)")
    m = sub.add_parser("importance", parents=[common], help="perturbation importance")
    m.add_argument("--model", help="model file (default <out>/models/glumarker.glm)")
    m.add_argument("--k", type=int, help="top-k per class (default 10)")
    m.add_argument("--exclusive", action="store_true", default=None,
                   help="clear sibling bins when forcing a biomarker on")
    sub.add_parser("run-all", parents=[common], help="run every stage")
    return p


def _overrides(args) -> List[str]:
    out = list(args.set)
    if args.seed is not None:
        out.append(f"seed={args.seed}")
    if args.out is not None:
        out.append(f"out_dir={json.dumps(args.out)}")
    if getattr(args, "k", None) is not None:
        out.append(f"importance.k={args.k}")
    if getattr(args, "exclusive", None):
        out.append("importance.exclusive=true")
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    stage = args.command
    try:
        cfg = PipelineConfig.load(args.config, _overrides(args))
        if stage == "generate":
            cmd_generate(cfg, args.output)
        elif stage == "ingest":
            cmd_ingest(cfg, args.input)
        elif stage == "featurize":
            cmd_featurize(cfg)
        elif stage == "train":
            cmd_train(cfg)
        elif stage == "evaluate":
            paths = None
            if args.model:
                paths = {}
                for item in args.model:
                    name, _, path = item.partition("=")
                    if not path:
                        raise ConfigError(f"--model expects NAME=PATH, got {item!r}")
                    paths[name] = Path(path)
            cmd_evaluate(cfg, paths)
        elif stage == "importance":
            cmd_importance(cfg, args.model)
        elif stage == "run-all":
            cmd_run_all(cfg)
    except StageError as err:
        stage, exc = err.stage, err.exc
        return _report(stage, exc)
    except (ValidationError, DataError, TrainingError, OSError) as exc:
        return _report(stage, exc)
    return EXIT_OK


def _report(stage: str, exc: Exception) -> int:
    print(f"glumarker {stage}: error: {exc}", file=sys.stderr)
    if isinstance(exc, TrainingError):
        return EXIT_TRAIN
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, ValidationError):
        return EXIT_CONFIG
    return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
