#!/usr/bin/env python3
"""Re-identification risk of released feature signals, before and after noise.

Trains a kNN identifier on the first half of each participant's recording and
attacks the second half. On raw data the attack almost always works. A
whole-signal spectral release with one retained coefficient publishes each participant's
(noisy) level, which the two halves share, so the attack survives the noise.
Chunked differencing breaks the shared level into independent per-chunk draws
and the attack collapses to chance.

Run: python3 demos/identity_leakage.py
"""
import numpy as np

from gazeprivkit._rng import derived_rng
from gazeprivkit.datasets import Dataset, gen_ar1_dataset
from gazeprivkit.leakage import person_id_eval
from gazeprivkit.mechanisms import PrivacyBudget, compute_sensitivity_table, privatize

SEED = 3
EPSILON = 0.48


def released_under(dataset, mechanism, chunk):
    representation = "difference" if mechanism == "dcfpa" else "raw"
    table = compute_sensitivity_table(dataset, chunk, representation)
    budget = PrivacyBudget(epsilon=EPSILON, k=1, chunk_size=chunk)
    out = Dataset()
    for signal in dataset:
        rng = derived_rng(SEED, "leak-demo", mechanism, signal.participant)
        out.add(privatize(signal, mechanism, table, budget, rng))
    return out


dataset = gen_ar1_dataset(10, 1, 512, 0.9, participant_offset_scale=10.0, seed=SEED)

print("== attack on the raw signals ==")
raw_report = person_id_eval(dataset, base_seed=SEED)
print(f"  window accuracy {raw_report.window_accuracy:.2f}, "
      f"majority vote {raw_report.majority_accuracy:.2f} (chance 0.10)")

print(f"\n== attack on releases at epsilon {EPSILON} ==")
for mechanism, chunk in (("fpa", None), ("dcfpa", 32)):
    report = person_id_eval(released_under(dataset, mechanism, chunk), base_seed=SEED)
    label = mechanism if chunk is None else f"{mechanism}-{chunk}"
    print(f"  {label:>8}: window accuracy {report.window_accuracy:.2f}, "
          f"majority vote {report.majority_accuracy:.2f}")
print("same epsilon, very different leakage: structure matters, not just scale")
