"""
Training the gated two-branch network
=====================================

A small synthetic cohort is split by patient and the network is trained
with Adam. The checkpoint with the lowest validation loss is kept.
"""

import numpy as np

from glumarker import (Architecture, GeneratorConfig, TrainConfig, build_examples,
                       default_binning_config, generate, split_by_patient, train)
from glumarker.features import stack
from glumarker.network import forward

data = generate(GeneratorConfig(n_patients=30, seed=1))
examples = build_examples(data, default_binning_config())
split = split_by_patient(examples, (0.6, 0.2, 0.2), seed=1)
print(len(split.train), len(split.validation), len(split.test))

model, history = train(split, Architecture((32, 16), (64, 32, 16)), TrainConfig(epochs=40, seed=1))
print("best epoch", history.best_epoch)
for e, tl, vl in list(history.rows())[::10]:
    print(f"{e:3d}  train {tl:.4f}  val {vl:.4f}")

###############################################################################
# The gate weighs the two branches per dimension. Values near 1 lean on the
# continuous branch, values near 0 on the biomarkers.

Fc, Fd, y = stack(split.test)
probs, cache = forward(model, Fc, Fd)
print("mean gate per dimension", np.round(cache["g"].mean(axis=0), 2))
print("test accuracy", np.mean(probs.argmax(axis=1) == y))
