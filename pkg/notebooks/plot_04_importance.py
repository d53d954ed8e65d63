"""
Which biomarkers move the prediction?
=====================================

Force one biomarker on across the whole test set and watch the mean class
probabilities shift. A rule planted in the generator should surface at the
top for the class it favors.
"""

from glumarker import (GeneratorConfig, PlantedRule, build_examples, compute_importance,
                       default_binning_config, generate, split_by_patient, top_k, train)
from glumarker.core_types import ControlLabel

rule = PlantedRule("total_correction_bolus", "prior", "no-entry", 0.3)
data = generate(GeneratorConfig(seed=3, planted_rules=(rule,)))
split = split_by_patient(build_examples(data, default_binning_config()), seed=3)
model, _ = train(split)

report = compute_importance(model, split.test)
for entry in top_k(report, 5)[ControlLabel.GOOD]:
    print(f"{entry.delta_good:+.4f}  {entry.biomarker}")

###############################################################################
# Forcing a bin on normally leaves the other bins of its group untouched.
# The exclusive variant clears them so every row stays one-hot.

exclusive = compute_importance(model, split.test, exclusive=True)
print([str(e.biomarker) for e in top_k(exclusive, 3)[ControlLabel.GOOD]])
