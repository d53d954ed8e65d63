"""
The whole pipeline from a config file
=====================================

The same stages the ``glumarker`` command runs, driven from Python with a
YAML config and a couple of overrides.
"""

import csv
import tempfile
from pathlib import Path

from glumarker.cli import cmd_run_all
from glumarker.config import PipelineConfig

out = Path(tempfile.mkdtemp())
(out / "pipeline.yaml").write_text(
    "seed: 4\n"
    "data:\n"
    "  synthetic: {n_patients: 20, effect_strength: 1.0}\n"
    "importance: {k: 5}\n"
)
cfg = PipelineConfig.load(out / "pipeline.yaml", overrides=[f"out_dir={out / 'run'}"])
cmd_run_all(cfg)

with open(out / "run" / "evaluation" / "comparison.csv") as fh:
    for row in csv.DictReader(fh):
        print(row["model"], row["macro_auc"][:6])

print(sorted(p.name for p in (out / "run" / "importance").iterdir()))
