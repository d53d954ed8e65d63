"""GluMarker: digital-biomarker prediction of next-day glycemic control.

Day-level diabetes records are interval-coded into one-hot biomarkers, fed with
the raw values to a two-branch gated-fusion network, compared against naive
Bayes / linear SVC / MLP baselines by one-vs-rest ROC AUC, and explained by
perturbation importance.
"""

__version__ = "0.1.0"

from .baselines import LinearSVC, MLP, NaiveBayes, fit_linear_svc, fit_mlp, fit_naive_bayes
from .binning import (
    BiomarkerDescriptor,
    BiomarkerVector,
    BinningConfig,
    IntervalScheme,
    default_binning_config,
    digitize,
    encode_window,
)
from .core_types import (
    ControlLabel,
    DayRecord,
    GlucoseRangeStats,
    LabelThresholds,
    compute_range_stats,
    label_control,
)
from .errors import ConfigError, DataError, GluMarkerError, TrainingError, ValidationError
from .evaluation import EvalReport, RocCurve, emit_roc_artifacts, evaluate, roc_curve
from .features import DatasetSplit, Example, build_examples, split_by_patient, stack
from .importance import ImportanceReport, compute_importance, emit_importance_artifacts, top_k
from .network import Architecture, ModelParams, TrainConfig, backward, forward, init_params, loss, predict_proba, train
from .persistence import load_model, save_model
from .synth import GeneratorConfig, PlantedRule, generate, load_csv, load_readings_csv, write_csv
