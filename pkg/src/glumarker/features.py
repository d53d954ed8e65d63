"""Supervised example assembly and patient-level train/validation/test splits."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Hashable, List, Mapping, Sequence, Tuple

import numpy as np

from .binning import DAY_OFFSETS, FEATURE_ORDER, BinningConfig, BiomarkerVector, encode_window
from .core_types import ControlLabel, DayRecord, LabelThresholds, label_control
from .errors import ValidationError

log = logging.getLogger(__name__)

CONTINUOUS_NAMES: Tuple[str, ...] = tuple(
    f"{day}_{name}" for day in DAY_OFFSETS for name in FEATURE_ORDER
)


@dataclass(frozen=True)
class Example:
    f_c: np.ndarray
    f_d: BiomarkerVector
    label: ControlLabel
    patient_id: Hashable
    target_day_index: int


def continuous_view(day: DayRecord) -> List[float]:
    # absent -> 0 here; absence itself is carried by the no-entry biomarker
    return [0.0 if v is None else float(v) for v in (day.feature_values()[n] for n in FEATURE_ORDER)]


def build_examples(
    days: Mapping[Hashable, Sequence[DayRecord]],
    config: BinningConfig,
    thresholds: LabelThresholds = LabelThresholds(),
) -> List[Example]:
    """One example per run of three consecutive days (t-1, t, t+1) of a patient.

    Features come from days t-1 and t; the label is the control class of day t+1.
    Patients are visited in the mapping's iteration order.
    """
    out: List[Example] = []
    for pid, seq in days.items():
        seq = list(seq)
        idx = [d.day_index for d in seq]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError(f"patient {pid}: days must be sorted by day_index without duplicates")
        if len(seq) < 3:
            log.warning("patient %s has %d days; no examples produced", pid, len(seq))
            continue
        for prev, cur, nxt in zip(seq, seq[1:], seq[2:]):
            if cur.day_index != prev.day_index + 1 or nxt.day_index != cur.day_index + 1:
                continue
            out.append(
                Example(
                    f_c=np.array(continuous_view(prev) + continuous_view(cur)),
                    f_d=encode_window(prev, cur, config),
                    label=label_control(nxt.glucose.tir, thresholds),
                    patient_id=pid,
                    target_day_index=nxt.day_index,
                )
            )
    return out


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        return cls(X.mean(axis=0), X.std(axis=0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        safe = np.where(self.std > 0, self.std, 1.0)
        Z = (X - self.mean) / safe
        # constant training features map to 0 everywhere
        Z[..., self.std == 0] = 0.0
        return Z


@dataclass
class DatasetSplit:
    train: List[Example]
    validation: List[Example]
    test: List[Example]
    standardizer: Standardizer
    patients: Dict[str, List[Hashable]] = field(default_factory=dict)

    def manifest(self) -> dict:
        return {
            "patients": {k: [str(p) for p in v] for k, v in self.patients.items()},
            "n_examples": {
                "train": len(self.train),
                "validation": len(self.validation),
                "test": len(self.test),
            },
            "standardization": {
                "features": list(CONTINUOUS_NAMES),
                "mean": [float(x) for x in self.standardizer.mean],
                "std": [float(x) for x in self.standardizer.std],
            },
        }


def partition_sizes(n: int, ratios: Sequence[float]) -> Tuple[int, int, int]:
    n_train = int(round(ratios[0] * n))
    n_val = int(round(ratios[1] * n))
    n_train = min(max(n_train, 1), n - 2)
    n_val = min(max(n_val, 1), n - n_train - 1)
    return n_train, n_val, n - n_train - n_val


def split_by_patient(
    examples: Sequence[Example],
    ratios: Sequence[float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> DatasetSplit:
    """Shuffle patients with ``seed`` and partition them by ``ratios``.

    Standardization of ``f_c`` is fitted on the training examples only.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"split ratios must be three positive numbers summing to 1, got {ratios}")
    patients = list(dict.fromkeys(ex.patient_id for ex in examples))
    if len(patients) < 3:
        raise ValidationError(f"need at least 3 patients to split, got {len(patients)}")
    order = np.random.default_rng(seed).permutation(len(patients))
    shuffled = [patients[i] for i in order]
    n_tr, n_va, _ = partition_sizes(len(shuffled), ratios)
    groups = {
        "train": shuffled[:n_tr],
        "validation": shuffled[n_tr:n_tr + n_va],
        "test": shuffled[n_tr + n_va:],
    }
    member = {p: name for name, ps in groups.items() for p in ps}
    parts: Dict[str, List[Example]] = {k: [] for k in groups}
    for ex in examples:
        parts[member[ex.patient_id]].append(ex)
    if not parts["train"]:
        raise ValidationError("training split is empty")
    scaler = Standardizer.fit(np.stack([ex.f_c for ex in parts["train"]]))

    def scaled(exs):
        return [replace(ex, f_c=scaler.transform(ex.f_c)) for ex in exs]

    return DatasetSplit(
        train=scaled(parts["train"]),
        validation=scaled(parts["validation"]),
        test=scaled(parts["test"]),
        standardizer=scaler,
        patients=groups,
    )


def stack(examples: Sequence[Example]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Examples -> (F_c, F_d, labels) matrices."""
    if not examples:
        raise ValidationError("cannot stack an empty example set")
    Fc = np.stack([ex.f_c for ex in examples]).astype(np.float64)
    Fd = np.stack([ex.f_d.values for ex in examples]).astype(np.float64)
    y = np.array([int(ex.label) for ex in examples], dtype=np.int64)
    return Fc, Fd, y
