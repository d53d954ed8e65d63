"""Perturbation importance of binary biomarkers.

For biomarker ``j`` the whole dataset is copied with position ``j`` forced to
1 and every other input left as is; the importance for class ``k`` is the
change in mean predicted probability of ``k``. Forcing a bin on leaves its
sibling bins untouched, so perturbed rows may have two active bins in one
group. ``exclusive=True`` clears the siblings instead.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .binning import BiomarkerDescriptor, BinningConfig
from .core_types import ControlLabel
from .errors import ValidationError
from .evaluation import fmt_float
from .svg import heatmap

CLASSES = tuple(ControlLabel)


@dataclass(frozen=True)
class ImportanceEntry:
    biomarker: BiomarkerDescriptor
    delta_good: float
    delta_moderate: float
    delta_poor: float

    def delta(self, k: ControlLabel) -> float:
        return (self.delta_good, self.delta_moderate, self.delta_poor)[int(k)]


@dataclass
class ImportanceReport:
    entries: List[ImportanceEntry]
    model_id: str
    dataset_fingerprint: str
    exclusive: bool = False

    def deltas(self) -> np.ndarray:
        return np.array([[e.delta_good, e.delta_moderate, e.delta_poor] for e in self.entries])


def fingerprint(Fc: np.ndarray, Fd: np.ndarray) -> str:
    h = hashlib.sha256()
    for a in (Fc, Fd):
        a = np.ascontiguousarray(a, dtype="<f8")
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()[:16]


def _sibling_slices(layout: Sequence[BiomarkerDescriptor]) -> List[slice]:
    out, start = [None] * len(layout), 0
    while start < len(layout):
        key = layout[start][:2]
        end = start
        while end < len(layout) and layout[end][:2] == key:
            end += 1
        for j in range(start, end):
            out[j] = slice(start, end)
        start = end
    return out


def compute_importance(
    model,
    examples,
    layout: Optional[Sequence[BiomarkerDescriptor]] = None,
    exclusive: bool = False,
    model_id: Optional[str] = None,
) -> ImportanceReport:
    """Importance of every biomarker position for each control class.

    ``examples`` is a list of Examples (layout taken from them) or an
    ``(F_c, F_d, y)`` tuple together with ``layout``.
    """
    if isinstance(examples, tuple):
        Fc, Fd = (np.asarray(a, dtype=np.float64) for a in examples[:2])
    else:
        if not examples:
            raise ValidationError("importance needs a nonempty example set")
        from .features import stack

        Fc, Fd, _ = stack(examples)
        layout = layout or examples[0].f_d.layout
    if layout is None:
        raise ValidationError("biomarker layout is required for matrix input")
    if Fd.ndim != 2 or Fd.shape[0] == 0:
        raise ValidationError("importance needs a nonempty example set")
    if Fd.shape[1] != len(layout):
        raise ValidationError(f"f_d width {Fd.shape[1]} does not match layout of {len(layout)}")

    base = np.atleast_2d(model.predict_proba(Fc, Fd)).mean(axis=0)
    siblings = _sibling_slices(layout) if exclusive else None
    entries = []
    for j, desc in enumerate(layout):
        pert = Fd.copy()
        if exclusive:
            pert[:, siblings[j]] = 0.0
        pert[:, j] = 1.0
        d = np.atleast_2d(model.predict_proba(Fc, pert)).mean(axis=0) - base
        entries.append(ImportanceEntry(BiomarkerDescriptor(*desc), float(d[0]), float(d[1]), float(d[2])))
    return ImportanceReport(
        entries=entries,
        model_id=model_id or getattr(model, "kind", type(model).__name__),
        dataset_fingerprint=fingerprint(Fc, Fd),
        exclusive=exclusive,
    )


def top_k(report: ImportanceReport, k: int = 10) -> Dict[ControlLabel, List[ImportanceEntry]]:
    """Per class, the ``k`` biomarkers with the largest delta, descending.

    Equal deltas keep layout order. ``k`` beyond the biomarker count returns
    everything.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    D = report.deltas()
    out = {}
    for c in CLASSES:
        order = np.argsort(-D[:, int(c)], kind="stable")[:k]
        out[c] = [report.entries[i] for i in order]
    return out


HEADER = ["feature", "day", "bin", "delta_good", "delta_moderate", "delta_poor"]


def _row(e: ImportanceEntry) -> List[str]:
    b = e.biomarker
    return [b.feature_name, b.day_offset, b.bin_label,
            fmt_float(e.delta_good), fmt_float(e.delta_moderate), fmt_float(e.delta_poor)]


def _write_rows(path: Path, rows) -> Path:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HEADER)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def emit_importance_artifacts(report: ImportanceReport, k: int, out_dir) -> List[Path]:
    """Full CSV, one top-k CSV per class and a top-k heatmap SVG."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc}") from exc
    written = [_write_rows(out / "importance.csv", (_row(e) for e in report.entries))]
    ranked = top_k(report, k)
    for c, entries in ranked.items():
        written.append(_write_rows(out / f"top{k}_{c.display.lower()}.csv", (_row(e) for e in entries)))

    # heatmap rows: each class's top-k in rank order, grouped by class
    rows, labels = [], []
    for c, entries in ranked.items():
        for e in entries:
            labels.append(f"{c.display}: {e.biomarker}")
            rows.append([e.delta_good, e.delta_moderate, e.delta_poor])
    mode = "exclusive" if report.exclusive else "literal"
    svg = heatmap(f"Top-{k} biomarkers per class ({report.model_id}, {mode} perturbation)",
                  labels, [c.display for c in CLASSES], rows)
    p = out / f"top{k}_heatmap.svg"
    try:
        p.write_text(svg)
    except OSError as exc:
        raise OSError(f"cannot write {p}: {exc}") from exc
    written.append(p)
    return written
