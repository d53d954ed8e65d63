"""Patient-day data model and glycemic control labeling."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

import numpy as np

from .errors import DataError, ValidationError

# Standard consensus target range, mg/dL.
DEFAULT_LOW_MGDL = 70.0
DEFAULT_HIGH_MGDL = 180.0

RANGE_SUM_TOL = 1e-9


class ControlLabel(enum.IntEnum):
    """Next-day glycemic control class. Integer values index probability vectors."""

    GOOD = 0
    MODERATE = 1
    POOR = 2

    @property
    def display(self) -> str:
        return self.name.capitalize()

    @classmethod
    def parse(cls, value) -> "ControlLabel":
        if isinstance(value, ControlLabel):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValidationError(f"unknown control label {value!r}") from None
        return cls(int(value))


# Better class first: GOOD > MODERATE > POOR in clinical quality.
QUALITY_RANK = {ControlLabel.POOR: 0, ControlLabel.MODERATE: 1, ControlLabel.GOOD: 2}


@dataclass(frozen=True)
class GlucoseRangeStats:
    """Fractions of a day's readings inside, above and below the target range."""

    tir: float
    tar: float
    tbr: float

    def __post_init__(self):
        for name in ("tir", "tar", "tbr"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValidationError(f"{name}={v!r} is not a fraction in [0, 1]")


@dataclass(frozen=True)
class LabelThresholds:
    """TIR cut points separating Poor / Moderate / Good control."""

    m_l: float = 0.55
    m_u: float = 0.70

    def __post_init__(self):
        if not (0.0 < self.m_l < self.m_u < 1.0):
            raise ValidationError(
                f"label thresholds must satisfy 0 < m_l < m_u < 1, got ({self.m_l}, {self.m_u})"
            )


DOSE_FIELDS = (
    "total_bolus",
    "total_meal_bolus",
    "total_correction_bolus",
    "total_meal_size",
)


@dataclass(frozen=True)
class DayRecord:
    """One patient-day of aggregated features. ``None`` marks an absent value."""

    patient_id: Hashable
    day_index: int
    glucose: GlucoseRangeStats
    total_bolus: Optional[float] = None
    total_meal_bolus: Optional[float] = None
    total_correction_bolus: Optional[float] = None
    total_meal_size: Optional[float] = None

    def __post_init__(self):
        for name in DOSE_FIELDS:
            v = getattr(self, name)
            if v is None:
                continue
            if not math.isfinite(v) or v < 0:
                raise ValidationError(
                    f"{name}={v!r} must be a nonnegative finite value "
                    f"(patient {self.patient_id}, day {self.day_index})"
                )

    def feature_values(self) -> dict:
        """Feature name -> value (or None) for every binned feature."""
        return {
            "tir": self.glucose.tir,
            "tar": self.glucose.tar,
            "tbr": self.glucose.tbr,
            "total_bolus": self.total_bolus,
            "total_meal_bolus": self.total_meal_bolus,
            "total_correction_bolus": self.total_correction_bolus,
            "total_meal_size": self.total_meal_size,
        }


def compute_range_stats(
    readings: Sequence[float],
    low: float = DEFAULT_LOW_MGDL,
    high: float = DEFAULT_HIGH_MGDL,
) -> GlucoseRangeStats:
    """Aggregate one day of glucose readings (mg/dL) into TIR/TAR/TBR.

    The target range is inclusive on both ends: ``low <= g <= high``.
    """
    if not (0 < low < high):
        raise ValidationError(f"need 0 < low < high, got low={low}, high={high}")
    g = np.asarray(readings, dtype=float).ravel()
    if g.size == 0:
        raise DataError("no glucose data for day")
    if not np.all(np.isfinite(g)):
        raise DataError("glucose readings contain non-finite values")
    n = g.size
    n_below = int(np.count_nonzero(g < low))
    n_above = int(np.count_nonzero(g > high))
    n_in = n - n_below - n_above
    return GlucoseRangeStats(tir=n_in / n, tar=n_above / n, tbr=n_below / n)


def label_control(tir: float, thresholds: LabelThresholds = LabelThresholds()) -> ControlLabel:
    """Map a day's TIR to its control class; ``tir == m_u`` counts as Good."""
    if not (math.isfinite(tir) and 0.0 <= tir <= 1.0):
        raise ValidationError(f"tir={tir!r} is not a fraction in [0, 1]")
    if tir >= thresholds.m_u:
        return ControlLabel.GOOD
    if tir >= thresholds.m_l:
        return ControlLabel.MODERATE
    return ControlLabel.POOR
