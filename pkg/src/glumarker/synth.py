"""Seeded synthetic patient-day data with planted biomarker effects, and CSV I/O
for day-level and raw-reading files.

Next-day TIR follows::

    TIR[t+1] = clip(base_tir + effect_strength * sum(shift of rules firing on days t-1, t)
                    + noise_level * N(0, 1), 0, 1)

and the remainder ``1 - TIR`` is split between TAR and TBR at random. Doses
and meal sizes are independent lognormal draws with a point mass at "absent".
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Hashable, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .binning import DAY_OFFSETS, FEATURE_ORDER, BinningConfig, default_binning_config
from .core_types import (
    DEFAULT_HIGH_MGDL,
    DEFAULT_LOW_MGDL,
    DayRecord,
    GlucoseRangeStats,
    compute_range_stats,
)
from .errors import ConfigError, DataError, ValidationError

CSV_COLUMNS = (
    "patient_id",
    "day_index",
    "tir",
    "tar",
    "tbr",
    "total_bolus",
    "total_meal_bolus",
    "total_correction_bolus",
    "total_meal_size",
)
READINGS_COLUMNS = ("patient_id", "day_index", "glucose_mgdl")

RANGE_SUM_TOLERANCE = 1e-6

Dataset = Dict[str, List[DayRecord]]


class PlantedRule(NamedTuple):
    feature_name: str
    day_offset: str  # "prior" (day t-1) or "present" (day t)
    bin_label: str
    shift: float


DEFAULT_RULES = (
    PlantedRule("total_correction_bolus", "prior", "no-entry", 0.25),
    PlantedRule("tar", "prior", "[0.8, 1]", -0.40),
    PlantedRule("total_bolus", "present", "no-entry", -0.55),
)


@dataclass(frozen=True)
class DoseModel:
    """Absent with probability ``p_absent``, otherwise lognormal(log(median), sigma)."""

    p_absent: float
    median: float
    sigma: float


@dataclass(frozen=True)
class GeneratorConfig:
    n_patients: int = 30
    days_per_patient: int = 90
    seed: int = 0
    effect_strength: float = 1.0
    noise_level: float = 0.05
    planted_rules: Tuple[PlantedRule, ...] = DEFAULT_RULES
    base_tir: float = 0.625
    meal_size: DoseModel = DoseModel(0.15, 150.0, 0.6)
    meal_bolus: DoseModel = DoseModel(0.12, 11.0, 0.6)
    correction_bolus: DoseModel = DoseModel(0.35, 6.0, 0.8)
    # total bolus = present meal + correction boluses + this extra amount
    extra_bolus: DoseModel = DoseModel(0.12, 12.0, 0.5)
    p_tar_zero: float = 0.10
    p_tbr_zero: float = 0.20
    binning: BinningConfig = field(default_factory=default_binning_config)

    def __post_init__(self):
        if self.n_patients < 1:
            raise ConfigError("n_patients must be >= 1")
        if self.days_per_patient < 3:
            raise ConfigError("days_per_patient must be >= 3")
        if not (self.effect_strength >= 0 and self.noise_level >= 0):
            raise ConfigError("effect_strength and noise_level must be >= 0")
        if not 0 <= self.base_tir <= 1:
            raise ConfigError("base_tir must lie in [0, 1]")
        rules = tuple(PlantedRule(*r) for r in self.planted_rules)
        object.__setattr__(self, "planted_rules", rules)
        for r in rules:
            if r.feature_name not in FEATURE_ORDER or r.day_offset not in DAY_OFFSETS:
                raise ConfigError(f"planted rule {r} names an unknown feature or day offset")
            if r.bin_label not in self.binning.schemes[r.feature_name].bin_labels:
                raise ConfigError(
                    f"planted rule {r}: bin {r.bin_label!r} not in "
                    f"{self.binning.schemes[r.feature_name].bin_labels}"
                )


def active_bin(day: DayRecord, feature: str, binning: BinningConfig) -> str:
    scheme = binning.schemes[feature]
    return scheme.bin_labels[scheme.bin_index(day.feature_values()[feature])]


def rule_shift(prior: DayRecord, present: DayRecord, rules: Sequence[PlantedRule],
               binning: BinningConfig) -> float:
    """Summed TIR shift of the rules that fire on the (prior, present) window."""
    days = {"prior": prior, "present": present}
    return float(sum(r.shift for r in rules
                     if active_bin(days[r.day_offset], r.feature_name, binning) == r.bin_label))


def _draw(rng: np.random.Generator, m: DoseModel) -> Optional[float]:
    if rng.random() < m.p_absent:
        return None
    return float(m.median * math.exp(m.sigma * rng.standard_normal()))


def _range_stats(rng: np.random.Generator, tir: float, cfg: GeneratorConfig) -> GlucoseRangeStats:
    rest = 1.0 - tir
    r = rng.random()
    if r < cfg.p_tar_zero:
        u = 0.0
    elif r < cfg.p_tar_zero + cfg.p_tbr_zero:
        u = 1.0
    else:
        u = float(rng.beta(4.0, 2.0))
    tar = rest * u
    return GlucoseRangeStats(tir=tir, tar=tar, tbr=max(rest - tar, 0.0))


def generate(config: GeneratorConfig = GeneratorConfig()) -> Dataset:
    """Per-patient day sequences, fully determined by ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    data: Dataset = {}
    width = max(3, len(str(config.n_patients)))
    for p in range(config.n_patients):
        pid = f"P{p + 1:0{width}d}"
        days: List[DayRecord] = []
        for d in range(config.days_per_patient):
            if d < 2:
                shift = 0.0
            else:
                shift = rule_shift(days[d - 2], days[d - 1], config.planted_rules, config.binning)
            tir = config.base_tir + config.effect_strength * shift
            tir += config.noise_level * rng.standard_normal()
            tir = min(max(tir, 0.0), 1.0)
            glucose = _range_stats(rng, tir, config)
            meal_size = _draw(rng, config.meal_size)
            meal_bolus = _draw(rng, config.meal_bolus)
            corr = _draw(rng, config.correction_bolus)
            extra = _draw(rng, config.extra_bolus)
            total = None if extra is None else extra + (meal_bolus or 0.0) + (corr or 0.0)
            days.append(DayRecord(pid, d + 1, glucose, total, meal_bolus, corr, meal_size))
        data[pid] = days
    return data


# -- CSV -------------------------------------------------------------------


def _fmt(v: Optional[float]) -> str:
    return "" if v is None else format(float(v), ".17g")


def write_csv(data: Mapping[Hashable, Sequence[DayRecord]], path) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for pid, days in data.items():
                for d in days:
                    w.writerow([pid, d.day_index, _fmt(d.glucose.tir), _fmt(d.glucose.tar),
                                _fmt(d.glucose.tbr), _fmt(d.total_bolus), _fmt(d.total_meal_bolus),
                                _fmt(d.total_correction_bolus), _fmt(d.total_meal_size)])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _optional(raw: str, name: str, line: int) -> Optional[float]:
    raw = raw.strip()
    if raw == "":
        return None
    try:
        return float(raw)
    except ValueError:
        raise DataError(f"line {line}: {name}={raw!r} is not a number") from None


def _read_rows(path, columns: Sequence[str]):
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(columns):
            raise DataError(f"{path}: expected header {','.join(columns)}, got {header}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(columns):
                raise DataError(f"line {reader.line_num}: expected {len(columns)} fields, got {len(row)}")
            yield reader.line_num, dict(zip(columns, row))


def _day_index(raw: str, line: int) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise DataError(f"line {line}: day_index={raw!r} is not an integer") from None


def _sorted(records: Dict[str, Dict[int, DayRecord]]) -> Dataset:
    return {pid: [days[k] for k in sorted(days)] for pid, days in sorted(records.items())}


def load_csv(path) -> Dataset:
    """Read a day-level CSV; patients and days come back sorted."""
    records: Dict[str, Dict[int, DayRecord]] = defaultdict(dict)
    for line, row in _read_rows(path, CSV_COLUMNS):
        pid = row["patient_id"].strip()
        if not pid:
            raise DataError(f"line {line}: empty patient_id")
        day = _day_index(row["day_index"], line)
        vals = {c: _optional(row[c], c, line) for c in CSV_COLUMNS[2:]}
        if any(vals[c] is None for c in ("tir", "tar", "tbr")):
            raise DataError(f"line {line}: tir, tar and tbr are required")
        total = vals["tir"] + vals["tar"] + vals["tbr"]
        if abs(total - 1.0) > RANGE_SUM_TOLERANCE:
            raise DataError(f"line {line}: tir + tar + tbr = {total:g}, expected 1")
        if day in records[pid]:
            raise DataError(f"line {line}: duplicate record for patient {pid}, day {day}")
        try:
            records[pid][day] = DayRecord(
                pid, day, GlucoseRangeStats(vals["tir"], vals["tar"], vals["tbr"]),
                vals["total_bolus"], vals["total_meal_bolus"],
                vals["total_correction_bolus"], vals["total_meal_size"],
            )
        except ValidationError as exc:
            raise DataError(f"line {line}: {exc}") from exc
    return _sorted(records)


def load_readings_csv(path, low: float = DEFAULT_LOW_MGDL, high: float = DEFAULT_HIGH_MGDL) -> Dataset:
    """Aggregate a raw ``patient_id,day_index,glucose_mgdl`` file into day records.

    Dose and meal fields are absent in the result.
    """
    readings: Dict[Tuple[str, int], List[float]] = defaultdict(list)
    for line, row in _read_rows(path, READINGS_COLUMNS):
        pid = row["patient_id"].strip()
        day = _day_index(row["day_index"], line)
        g = _optional(row["glucose_mgdl"], "glucose_mgdl", line)
        if g is None:
            continue
        if not math.isfinite(g) or g < 0:
            raise DataError(f"line {line}: glucose_mgdl={g} is invalid")
        readings[(pid, day)].append(g)
    records: Dict[str, Dict[int, DayRecord]] = defaultdict(dict)
    for (pid, day), values in readings.items():
        records[pid][day] = DayRecord(pid, day, compute_range_stats(values, low, high))
    return _sorted(records)


def sniff_csv_kind(path) -> str:
    """``"days"`` or ``"readings"`` based on the header row."""
    with open(path, newline="") as fh:
        header = [h.strip() for h in next(csv.reader(fh), [])]
    if header == list(CSV_COLUMNS):
        return "days"
    if header == list(READINGS_COLUMNS):
        return "readings"
    raise DataError(f"{path}: unrecognised header {header}")
