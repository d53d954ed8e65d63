"""
One-vs-rest ROC curves for four models
======================================

GluMarker against naive Bayes, a linear SVM and a plain MLP on the same
patient-level split.
"""

from glumarker import (GeneratorConfig, TrainConfig, build_examples, default_binning_config,
                       evaluate, fit_linear_svc, fit_mlp, fit_naive_bayes, generate,
                       split_by_patient, train)
from glumarker.evaluation import pairwise_auc, roc_curve

split = split_by_patient(build_examples(generate(GeneratorConfig(seed=2)), default_binning_config()),
                         seed=2)
cfg = TrainConfig(seed=2)
models = {
    "glumarker": train(split, config=cfg)[0],
    "mlp": fit_mlp(split.train, (64, 32), cfg, split.validation)[0],
    "naive_bayes": fit_naive_bayes(split.train),
    "linear_svc": fit_linear_svc(split.train, seed=2),
}
for name, m in models.items():
    rep = evaluate(m, split.test)
    aucs = ", ".join(f"{k.display} {v:.3f}" for k, v in rep.aucs.items())
    print(f"{name:12s} macro {rep.macro_auc:.3f} | {aucs}")

###############################################################################
# Ties matter. Tied scores move the curve diagonally and count one half in
# the pairwise view; both give the same area.

scores = [0.9, 0.5, 0.5, 0.5, 0.1]
positive = [1, 1, 0, 1, 0]
curve = roc_curve(scores, positive)
print(curve.points)
print(curve.auc, pairwise_auc(scores, positive))
