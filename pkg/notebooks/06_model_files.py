"""
Model files
===========

Write the smallest BLDA model to disk and read it back.
"""

# %%
import tempfile
from pathlib import Path

from erpquant.evaluation import fit_condition_model, parse_condition
from erpquant.cli import describe_model
from erpquant.modelfmt import load_model, save_model
from erpquant.synthdata import GeneratorConfig, generate_subject

epochs = generate_subject(GeneratorConfig(n_subjects=1, seed=42), 0)
sections = fit_condition_model(epochs, parse_condition("blda", "1/1"), seed=0)

path = Path(tempfile.mkdtemp()) / "blda_1-1.ptqm"
nbytes = save_model(sections, path)
print(f"{nbytes} bytes on disk")
print(describe_model(path))

# %%
back = load_model(path)
print("identical:", all(a.tensor == b.tensor for a, b in zip(sections, back)))
