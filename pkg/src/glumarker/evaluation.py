"""One-vs-rest ROC curves, AUC and accuracy summaries."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core_types import ControlLabel
from .errors import ValidationError
from .svg import roc_overlay

CLASSES = tuple(ControlLabel)


@dataclass(frozen=True)
class RocCurve:
    class_id: ControlLabel
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def trapezoid(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))


def roc_curve(scores, positives, class_id: ControlLabel = ControlLabel.GOOD) -> RocCurve:
    """ROC for a binary problem, sweeping thresholds over distinct scores.

    Tied scores move the curve in one diagonal step, so the trapezoid area
    equals the Mann-Whitney statistic with ties counted as one half.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    pos = np.asarray(positives).astype(bool).ravel()
    if s.shape != pos.shape:
        raise ValidationError("scores and labels differ in length")
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC undefined for single-class labels")
    if not np.all(np.isfinite(s)):
        raise ValidationError("scores must be finite")
    order = np.argsort(-s, kind="mergesort")
    s, pos = s[order], pos[order]
    # last index of each run of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(pos)[ends]
    fp = (ends + 1) - tp
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    return RocCurve(ControlLabel(class_id), fpr, tpr, trapezoid(fpr, tpr))


def pairwise_auc(scores, positives) -> float:
    """Brute-force O(n^2) Mann-Whitney AUC, ties counted 0.5."""
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(positives).astype(bool)
    p, n = s[pos], s[~pos]
    if p.size == 0 or n.size == 0:
        raise ValidationError("AUC undefined for single-class labels")
    total = 0.0
    for a in p:
        for b in n:
            total += 1.0 if a > b else (0.5 if a == b else 0.0)
    return total / (p.size * n.size)


@dataclass
class EvalReport:
    curves: Dict[ControlLabel, Optional[RocCurve]]
    accuracy: float
    confusion: np.ndarray  # rows = true class, columns = predicted class

    @property
    def aucs(self) -> Dict[ControlLabel, float]:
        return {k: (c.auc if c is not None else math.nan) for k, c in self.curves.items()}

    @property
    def macro_auc(self) -> float:
        defined = [c.auc for c in self.curves.values() if c is not None]
        return float(np.mean(defined)) if defined else math.nan

    def to_dict(self) -> dict:
        return {
            "auc": {k.display: (None if math.isnan(v) else v) for k, v in self.aucs.items()},
            "macro_auc": self.macro_auc,
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "classes": [k.display for k in CLASSES],
        }


def evaluate(model, examples) -> EvalReport:
    """Score ``model`` (anything with ``predict_proba(F_c, F_d)``) on ``examples``.

    ``examples`` is a list of :class:`~glumarker.features.Example` or an
    ``(F_c, F_d, y)`` tuple. Classes absent from the test labels get no curve.
    """
    from .features import stack

    Fc, Fd, y = examples if isinstance(examples, tuple) else stack(examples)
    y = np.asarray(y, dtype=np.int64)
    present = np.unique(y)
    if present.size < 2:
        raise ValidationError(
            f"evaluation needs at least two classes; test labels are all "
            f"{ControlLabel(int(present[0])).display if present.size else 'empty'}"
        )
    probs = np.atleast_2d(model.predict_proba(Fc, Fd))
    curves: Dict[ControlLabel, Optional[RocCurve]] = {}
    for k in CLASSES:
        pos = y == int(k)
        if pos.all() or not pos.any():
            curves[k] = None
            continue
        curves[k] = roc_curve(probs[:, int(k)], pos, k)
    pred = probs.argmax(axis=1)
    confusion = np.zeros((len(CLASSES), len(CLASSES)), dtype=np.int64)
    np.add.at(confusion, (y, pred), 1)
    return EvalReport(curves, float(np.mean(pred == y)), confusion)


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def write_curve_csv(path: Path, curve: RocCurve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr"])
        for f, t in curve.points:
            w.writerow([fmt_float(f), fmt_float(t)])


def read_curve_csv(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return (np.array([float(r["fpr"]) for r in rows]), np.array([float(r["tpr"]) for r in rows]))


def _checked_write(path: Path, writer) -> Path:
    try:
        writer(path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def emit_roc_artifacts(reports: Mapping[str, EvalReport], out_dir) -> List[Path]:
    """Per (model, class) ``fpr,tpr`` CSVs, a ``model,class,auc,accuracy``
    summary and one SVG overlay per class. Returns the written paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc}") from exc
    written: List[Path] = []
    for name, rep in reports.items():
        for k, curve in rep.curves.items():
            if curve is None:
                continue
            p = out / f"roc_{name}_{k.display.lower()}.csv"
            written.append(_checked_write(p, lambda p, c=curve: write_curve_csv(p, c)))

    def summary(p):
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["model", "class", "auc", "accuracy"])
            for name, rep in reports.items():
                for k in CLASSES:
                    auc = rep.aucs[k]
                    w.writerow([name, k.display, "" if math.isnan(auc) else fmt_float(auc),
                                fmt_float(rep.accuracy)])

    written.append(_checked_write(out / "auc_summary.csv", summary))
    for k in CLASSES:
        curves = [(name, rep.curves[k].points, rep.curves[k].auc)
                  for name, rep in reports.items() if rep.curves.get(k) is not None]
        svg = roc_overlay(f"ROC - {k.display} control (one-vs-rest)", curves)
        p = out / f"roc_{k.display.lower()}.svg"
        written.append(_checked_write(p, lambda p, s=svg: p.write_text(s)))
    return written
