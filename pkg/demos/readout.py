"""
State readout by spin-dependent heating
=======================================

Shelve |g> into the auxiliary level, map |e> onto |+X>, then drive the
bichromatic tones: only population left in the qubit manifold heats the
motion, which an energy threshold detects.  The measurement is QND.
"""

import numpy as np

from eggsim.config import paper_config
from eggsim.gates import spam_model, spam_protocol

cfg = paper_config()
model = spam_model(cfg)
print(f"deposited energy |alpha|^2 = {abs(model.alpha) ** 2:.1f} quanta, "
      f"threshold {model.threshold:.1f}, dark mean {model.dark_mean:.2f}")
print(f"misclassification: dark {model.false_bright:.1e}, bright {model.false_dark:.1e}")

for label in ("g", "e"):
    rec = spam_protocol(label, cfg, model=model, repeats=2)
    print(f"|{label}> -> {rec.herald:6s} label {rec.label}, repeats {rec.repeat_heralds}")
    for step in rec.steps:
        print("    ", step)

# A superposition is projected; each herald then repeats with certainty
rng = np.random.default_rng(3)
plus = np.array([1, 1]) / np.sqrt(2)
heralds = [spam_protocol(plus, cfg, model=model, rng=rng).herald for _ in range(1000)]
print(f"(|g> + |e>)/sqrt2: bright fraction {heralds.count('bright') / 1000:.3f}")
