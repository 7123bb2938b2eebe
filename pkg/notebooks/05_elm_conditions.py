"""
ELM initialisation conditions
=============================

Input weights drawn from a continuous range or small codebooks. With the
{0, 1} codebook every hidden unit sums a random half of the features, so
the units move together and the hidden layer carries far fewer independent
directions. That condition collapses towards chance.
"""

# %%
import numpy as np

from erpquant.classify import hidden_layer, init_elm_weights
from erpquant.evaluation import evaluate_subject, parse_condition
from erpquant.spatial import apply_filters, fit_xdawn
from erpquant.synthdata import GeneratorConfig, generate_subject

config = GeneratorConfig(n_subjects=3, seed=42)
labels = ["1", "2", "3", "4", "5", "13"]
conditions = [parse_condition("elm", lab) for lab in labels]

rows = []
for s in range(config.n_subjects):
    aucs = evaluate_subject(generate_subject(config, s), conditions, 5, [42, s])
    rows.append([aucs[lab].mean() for lab in labels])
rows = np.array(rows)
for lab, m in zip(labels, rows.mean(0)):
    print(f"condition {lab:>3}: mean AUC {m:.3f}")

# %%
# Hidden-unit redundancy: mean |correlation| between units and the
# participation ratio of the centred hidden matrix.
epochs = generate_subject(config, 0)
x = apply_filters(fit_xdawn(epochs), epochs.data)
x = (x - x.mean(0)) / x.std(0)
for cond in (1, 2, 3, 4, 5):
    iw, ib = init_elm_weights(cond, seed=0)
    h = hidden_layer(x, iw, ib)
    corr = np.abs(np.corrcoef(h.T)[np.triu_indices(h.shape[1], 1)]).mean()
    sv = np.linalg.svd(h - h.mean(0), compute_uv=False)
    print(f"condition {cond}: mean |corr| {corr:.3f}, effective rank {sv.sum()**2 / (sv**2).sum():.0f}")
