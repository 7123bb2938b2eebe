"""
BLDA under quantization
=======================

Five-fold cross-validated AUC on a handful of subjects for the BLDA table
conditions. int8 classifiers track the float baseline closely; int4 on
both stages costs a little.
"""

# %%
import numpy as np

from erpquant.evaluation import (BLDA_TABLE_LABELS, condition_sizes, evaluate_subject,
                                 parse_condition)
from erpquant.report import build_report
from erpquant.synthdata import GeneratorConfig, generate_subject

n_subjects = 5
config = GeneratorConfig(n_subjects=n_subjects, seed=42)
conditions = [parse_condition("blda", lab) for lab in BLDA_TABLE_LABELS]

grid = {c.label: [] for c in conditions}
for s in range(n_subjects):
    aucs = evaluate_subject(generate_subject(config, s), conditions, 5, [42, s])
    for c in conditions:
        grid[c.label].append(aucs[c.label].mean())

# %%
report = build_report("blda", grid, {c.label: condition_sizes(c) for c in conditions})
print(report.markdown())
