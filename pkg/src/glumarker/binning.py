"""Interval coding of continuous features into one-hot digital biomarkers.

Each feature is cut into contiguous half-open intervals ``[a, b)`` covering
``[0, inf)``. A scheme may add two special bins in front of the numeric ones:

* a *no-entry* bin, active when the value is absent (never for a recorded 0);
* a *zero* bin, active for a value of exactly 0, in which case the first
  numeric bin becomes ``(0, e1)``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .core_types import DayRecord
from .errors import ConfigError, ValidationError

NO_ENTRY = "no-entry"
ZERO = "0"

DAY_OFFSETS = ("prior", "present")

FEATURE_ORDER = (
    "tir",
    "tar",
    "tbr",
    "total_bolus",
    "total_meal_bolus",
    "total_correction_bolus",
    "total_meal_size",
)


def _fmt(x: float) -> str:
    return f"{x:g}"


@dataclass(frozen=True)
class IntervalScheme:
    feature_name: str
    has_no_entry_bin: bool
    edges: Tuple[float, ...]
    has_zero_bin: bool = False
    upper: Optional[float] = None  # closed cap on the last bin, e.g. 1 for fractions

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        if not all(math.isfinite(e) for e in edges):
            raise ValidationError(f"{self.feature_name}: edges must be finite")
        if edges and edges[0] <= 0:
            raise ValidationError(f"{self.feature_name}: edges must be > 0 (bins start at 0)")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValidationError(f"{self.feature_name}: edges must be strictly ascending")
        if self.upper is not None and not (self.upper > (edges[-1] if edges else 0.0)):
            raise ValidationError(f"{self.feature_name}: upper must exceed the last edge")

    @property
    def n_bins(self) -> int:
        return int(self.has_no_entry_bin) + int(self.has_zero_bin) + len(self.edges) + 1

    @property
    def bin_labels(self) -> Tuple[str, ...]:
        labels = []
        if self.has_no_entry_bin:
            labels.append(NO_ENTRY)
        if self.has_zero_bin:
            labels.append(ZERO)
        lows = (0.0,) + self.edges
        highs = self.edges + (math.inf,)
        for i, (a, b) in enumerate(zip(lows, highs)):
            left = "(" if (i == 0 and self.has_zero_bin) else "["
            if math.isfinite(b):
                labels.append(f"{left}{_fmt(a)}, {_fmt(b)})")
            elif self.upper is not None:
                labels.append(f"{left}{_fmt(a)}, {_fmt(self.upper)}]")
            else:
                labels.append(f"{left}{_fmt(a)}, inf)")
        return tuple(labels)

    def bin_index(self, value: Optional[float]) -> int:
        """Index of the single active bin for ``value`` (``None`` = absent)."""
        if value is None or (isinstance(value, float) and math.isnan(value)):
            if not self.has_no_entry_bin:
                raise ValidationError(
                    f"missing value for feature without no-entry bin ({self.feature_name})"
                )
            return 0
        if not (value >= 0) or math.isinf(value):
            raise ValidationError(f"{self.feature_name}: value {value!r} must be finite and >= 0")
        if self.upper is not None and value > self.upper:
            raise ValidationError(f"{self.feature_name}: value {value!r} exceeds {self.upper:g}")
        offset = int(self.has_no_entry_bin)
        if self.has_zero_bin:
            if value == 0:
                return offset
            offset += 1
        # side="right": a value equal to an edge falls into the bin that starts there
        return offset + bisect.bisect_right(self.edges, value)

    def to_dict(self) -> dict:
        d = {"no_entry": self.has_no_entry_bin, "edges": list(self.edges)}
        if self.has_zero_bin:
            d["zero_bin"] = True
        if self.upper is not None:
            d["upper"] = self.upper
        return d

    @classmethod
    def from_dict(cls, name: str, d: Mapping) -> "IntervalScheme":
        unknown = set(d) - {"no_entry", "edges", "zero_bin", "upper"}
        if unknown:
            raise ConfigError(f"binning.{name}: unknown keys {sorted(unknown)}")
        try:
            return cls(
                feature_name=name,
                has_no_entry_bin=bool(d.get("no_entry", False)),
                edges=tuple(d["edges"]),
                has_zero_bin=bool(d.get("zero_bin", False)),
                upper=None if d.get("upper") is None else float(d["upper"]),
            )
        except KeyError:
            raise ConfigError(f"binning.{name}: missing 'edges'") from None
        except (TypeError, ValidationError) as exc:
            raise ConfigError(f"binning.{name}: {exc}") from exc


def digitize(value: Optional[float], scheme: IntervalScheme) -> np.ndarray:
    """One-hot bin vector for a single value."""
    out = np.zeros(scheme.n_bins, dtype=np.float64)
    out[scheme.bin_index(value)] = 1.0
    return out


class BiomarkerDescriptor(NamedTuple):
    feature_name: str
    day_offset: str
    bin_label: str

    def __str__(self) -> str:
        return f"{self.day_offset}:{self.feature_name}:{self.bin_label}"


@dataclass(frozen=True)
class BinningConfig:
    schemes: Dict[str, IntervalScheme]

    def __post_init__(self):
        missing = [f for f in FEATURE_ORDER if f not in self.schemes]
        if missing:
            raise ConfigError(f"binning config lacks schemes for {missing}")
        extra = [f for f in self.schemes if f not in FEATURE_ORDER]
        if extra:
            raise ConfigError(f"binning config has schemes for unknown features {extra}")

    def layout(self) -> Tuple[BiomarkerDescriptor, ...]:
        return tuple(
            BiomarkerDescriptor(name, day, label)
            for day in DAY_OFFSETS
            for name in FEATURE_ORDER
            for label in self.schemes[name].bin_labels
        )

    def groups(self) -> List[Tuple[str, str, slice]]:
        """(feature, day_offset, slice into the flat vector) for every one-hot group."""
        out, start = [], 0
        for day in DAY_OFFSETS:
            for name in FEATURE_ORDER:
                n = self.schemes[name].n_bins
                out.append((name, day, slice(start, start + n)))
                start += n
        return out

    @property
    def width(self) -> int:
        return 2 * sum(self.schemes[f].n_bins for f in FEATURE_ORDER)

    def to_dict(self) -> dict:
        return {name: self.schemes[name].to_dict() for name in FEATURE_ORDER}

    @classmethod
    def from_dict(cls, d: Mapping, base: Optional["BinningConfig"] = None) -> "BinningConfig":
        """Build from ``{feature: {no_entry, edges, zero_bin, upper}}``. Each entry
        updates the matching ``base`` scheme key by key (defaults when omitted)."""
        schemes = dict((base or default_binning_config()).schemes)
        for name, spec in (d or {}).items():
            if name not in FEATURE_ORDER:
                raise ConfigError(f"binning: unknown feature {name!r}")
            if not isinstance(spec, Mapping):
                raise ConfigError(f"binning.{name} must be a mapping")
            schemes[name] = IntervalScheme.from_dict(name, {**schemes[name].to_dict(), **spec})
        return cls(schemes)


@dataclass(frozen=True)
class BiomarkerVector:
    values: np.ndarray
    layout: Tuple[BiomarkerDescriptor, ...] = field(repr=False)

    def active(self) -> Dict[Tuple[str, str], str]:
        """Recover the active bin label of every (feature, day_offset) group."""
        out = {}
        for i in np.flatnonzero(self.values):
            d = self.layout[i]
            key = (d.feature_name, d.day_offset)
            if key in out:
                raise ValidationError(f"group {key} has more than one active bin")
            out[key] = d.bin_label
        return out


Features = Union[DayRecord, Mapping[str, Optional[float]]]


def _values(day: Features) -> Mapping[str, Optional[float]]:
    return day.feature_values() if isinstance(day, DayRecord) else day


def encode_window(prior: Features, present: Features, config: BinningConfig) -> BiomarkerVector:
    """Concatenate one-hot codes of every feature for the prior and present day."""
    parts = []
    for day, rec in zip(DAY_OFFSETS, (prior, present)):
        vals = _values(rec)
        for name in FEATURE_ORDER:
            try:
                parts.append(digitize(vals.get(name), config.schemes[name]))
            except ValidationError as exc:
                raise ValidationError(f"{day} day, feature {name}: {exc}") from exc
    return BiomarkerVector(np.concatenate(parts), config.layout())


_FRACTION_EDGES = (0.2, 0.4, 0.6, 0.8)


def default_binning_config() -> BinningConfig:
    """Default interval schemes for the seven day-level features.

    Meal size and total bolus follow the published cut points. The remaining
    edges are assumptions chosen so the biomarkers discussed in the original
    analysis (e.g. meal bolus 10-20 units, TAR of 0% or 80-100%) exist as bins.
    """
    frac = dict(has_no_entry_bin=False, edges=_FRACTION_EDGES, has_zero_bin=True, upper=1.0)
    return BinningConfig(
        {
            "tir": IntervalScheme("tir", **frac),
            "tar": IntervalScheme("tar", **frac),
            "tbr": IntervalScheme("tbr", **frac),
            "total_bolus": IntervalScheme("total_bolus", True, (30.0, 50.0)),
            "total_meal_bolus": IntervalScheme("total_meal_bolus", True, (10.0, 20.0)),
            "total_correction_bolus": IntervalScheme("total_correction_bolus", True, (10.0, 20.0)),
            "total_meal_size": IntervalScheme("total_meal_size", True, (120.0, 200.0, 300.0)),
        }
    )
