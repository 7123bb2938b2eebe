"""
Quantization schemes and storage cost
=====================================

Logical model size: element count times bit width, plus one float64 per
normalisation parameter.
"""

# %%
import numpy as np

from erpquant.evaluation import blda_labels, condition_sizes, parse_condition
from erpquant.quant import QuantScheme, dequantize, quantize

rng = np.random.default_rng(0)
w = rng.standard_normal(1025) * 0.01

for scheme in QuantScheme:
    if scheme.is_codebook:
        continue
    err = np.abs(dequantize(quantize(w, scheme)) - w).max()
    print(f"{scheme.tag:<20} max error {err:.2e}")

# %%
# Filter / classifier / total bits for every BLDA condition.
print(f"{'cond':<6}{'filter':>8}{'clf':>8}{'total':>8}")
for label in blda_labels():
    s = condition_sizes(parse_condition("blda", label))
    print(f"{label:<6}{s.filter_bits:>8}{s.classifier_bits:>8}{s.total_bits:>8}")

base = condition_sizes(parse_condition("blda", "0/0")).total_bits
best = condition_sizes(parse_condition("blda", "1/1")).total_bits
print(f"compression {base}/{best} = {base / best:.2f}")
