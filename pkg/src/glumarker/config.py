"""YAML pipeline configuration with dotted-key overrides."""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import yaml

from .binning import BinningConfig, default_binning_config
from .core_types import DEFAULT_HIGH_MGDL, DEFAULT_LOW_MGDL, LabelThresholds
from .errors import ConfigError, ValidationError
from .network import Architecture, TrainConfig
from .synth import DEFAULT_RULES, GeneratorConfig, PlantedRule

MODEL_NAMES = ("glumarker", "mlp", "naive_bayes", "linear_svc")

DEFAULTS: Dict[str, Any] = {
    "seed": 0,
    "out_dir": "glumarker_out",
    "data": {
        "source": "synthetic",
        "csv_path": None,
        "glucose_low": DEFAULT_LOW_MGDL,
        "glucose_high": DEFAULT_HIGH_MGDL,
        "synthetic": {
            "n_patients": 30,
            "days_per_patient": 90,
            "effect_strength": 1.0,
            "noise_level": 0.05,
            "base_tir": 0.625,
            "planted_rules": [list(r) for r in DEFAULT_RULES],
        },
    },
    "labels": {"m_l": 0.55, "m_u": 0.70},
    "binning": {},
    "split": {"ratios": [0.6, 0.2, 0.2]},
    "models": {
        "glumarker": {
            "enabled": True,
            "branch_c": [32, 16],
            "branch_d": [64, 32, 16],
            "train": {"learning_rate": 1e-3, "epochs": 60, "batch_size": 32,
                      "optimizer": "adam", "patience": 15},
        },
        "mlp": {
            "enabled": True,
            "hidden": [64, 32],
            "train": {"learning_rate": 1e-3, "epochs": 60, "batch_size": 32,
                      "optimizer": "adam", "patience": 15},
        },
        "naive_bayes": {"enabled": True, "variance_floor": 1e-9},
        "linear_svc": {"enabled": True, "C": 1.0, "epochs": 50, "learning_rate": 0.05,
                       "batch_size": 32},
    },
    "importance": {"k": 10, "exclusive": False, "split": "test", "model": "glumarker"},
}


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        key = f"{path}{k}"
        if k not in base and path != "binning.":
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            out[k] = _merge(base[k], v, key + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_key(tree: dict, dotted: str, value: Any) -> None:
    node = tree
    parts = dotted.split(".")
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigError(f"unknown config key {dotted!r}")
        node = node[p]
    if parts[-1] not in node and parts[0] != "binning":
        raise ConfigError(f"unknown config key {dotted!r}")
    node[parts[-1]] = value


def _number(v: Any, kind, key: str):
    if isinstance(v, bool):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    try:
        out = kind(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {v!r}") from None
    if kind is int and out != float(v):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return out


@dataclass
class PipelineConfig:
    """Validated view over the raw config tree."""

    raw: dict
    base_dir: Path = Path(".")

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: Iterable[str] = ()) -> "PipelineConfig":
        tree: dict = {}
        base_dir = Path(".")
        if path is not None:
            p = Path(path)
            try:
                tree = yaml.safe_load(p.read_text()) or {}
            except OSError as exc:
                raise ConfigError(f"cannot read config {p}: {exc}") from exc
            except yaml.YAMLError as exc:
                raise ConfigError(f"invalid YAML in {p}: {exc}") from exc
            if not isinstance(tree, dict):
                raise ConfigError(f"{p}: top level must be a mapping")
            base_dir = p.parent
        raw = _merge(DEFAULTS, tree)
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} must look like key=value")
            k, v = item.split("=", 1)
            set_key(raw, k.strip(), yaml.safe_load(v))
        cfg = cls(raw, base_dir)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        try:
            self.binning
            self.thresholds
            self.generator
            self.train_config("glumarker")
            self.train_config("mlp")
            self.architecture
        except (ValidationError, TypeError, KeyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        src = self.raw["data"]["source"]
        if src not in ("synthetic", "csv"):
            raise ConfigError(f"data.source must be 'synthetic' or 'csv', got {src!r}")
        if src == "csv":
            p = self.csv_path
            if p is None or not p.exists():
                raise ConfigError(f"data.csv_path {p} does not exist")
        imp = self.raw["importance"]
        if int(imp["k"]) < 1:
            raise ConfigError("importance.k must be >= 1")
        if imp["split"] not in ("train", "validation", "test"):
            raise ConfigError("importance.split must be train, validation or test")
        unknown = set(self.raw["models"]) - set(MODEL_NAMES)
        if unknown:
            raise ConfigError(f"unknown models {sorted(unknown)}")
        if not self.raw["models"]["glumarker"]["enabled"]:
            raise ConfigError("models.glumarker.enabled cannot be false")

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def out_dir(self) -> Path:
        return Path(self.raw["out_dir"])

    @property
    def csv_path(self) -> Optional[Path]:
        p = self.raw["data"]["csv_path"]
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def binning(self) -> BinningConfig:
        return BinningConfig.from_dict(self.raw["binning"], default_binning_config())

    @property
    def thresholds(self) -> LabelThresholds:
        return LabelThresholds(float(self.raw["labels"]["m_l"]), float(self.raw["labels"]["m_u"]))

    @property
    def generator(self) -> GeneratorConfig:
        s = self.raw["data"]["synthetic"]
        return GeneratorConfig(
            n_patients=int(s["n_patients"]),
            days_per_patient=int(s["days_per_patient"]),
            seed=self.seed,
            effect_strength=float(s["effect_strength"]),
            noise_level=float(s["noise_level"]),
            base_tir=float(s["base_tir"]),
            planted_rules=tuple(PlantedRule(str(r[0]), str(r[1]), str(r[2]), float(r[3]))
                                for r in s["planted_rules"]),
            binning=self.binning,
        )

    @property
    def architecture(self) -> Architecture:
        m = self.raw["models"]["glumarker"]
        return Architecture(tuple(m["branch_c"]), tuple(m["branch_d"]))

    def train_config(self, model: str) -> TrainConfig:
        t = dict(self.raw["models"][model]["train"])
        # YAML 1.1 reads "1e-3" as a string; coerce the numeric fields
        for k in ("learning_rate", "beta1", "beta2", "eps"):
            if k in t:
                t[k] = _number(t[k], float, f"models.{model}.train.{k}")
        for k in ("epochs", "batch_size", "patience"):
            if k in t:
                t[k] = _number(t[k], int, f"models.{model}.train.{k}")
        return TrainConfig(seed=self.seed, **t)

    def enabled_models(self):
        return [m for m in MODEL_NAMES if self.raw["models"][m].get("enabled", True)]

    def dump(self) -> str:
        """YAML snapshot of the effective config, minus the output location."""
        tree = {k: v for k, v in self.raw.items() if k != "out_dir"}
        return yaml.safe_dump(tree, sort_keys=False)
