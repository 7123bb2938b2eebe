"""
xDAWN spatial filters
=====================

Eight filters fitted on one subject; the evoked-to-total ratio falls off
quickly after the first component.
"""

# %%
import numpy as np

from erpquant.spatial import apply_filters, fit_xdawn
from erpquant.synthdata import GeneratorConfig, default_spatial_profile, generate_subject

epochs = generate_subject(GeneratorConfig(n_subjects=1, seed=42), 0)
bank = fit_xdawn(epochs, n_filters=8)
print("Rayleigh quotients:", np.round(bank.rayleigh_quotients, 4))

# %%
# The first filter should line up with the planted spatial profile
# once the (orthogonal) mixing is undone through the data covariance.
features = apply_filters(bank, epochs.data)
print("feature matrix", features.shape)
first = features[:, :128]
d = first[epochs.labels == 1].mean(0) - first[epochs.labels == 0].mean(0)
print(f"filter 1 target-minus-nontarget peak {d.max():.3f} at sample {d.argmax()}")

# %%
# Noise-covariance normalisation: w N w^T is the identity.
from erpquant.spatial import xdawn_covariances

_, noise = xdawn_covariances(epochs.data, epochs.labels)
gram = bank.weights @ noise @ bank.weights.T
print("max |W N W^T - I| =", np.abs(gram - np.eye(8)).max())
print("profile peak channel", int(np.argmax(default_spatial_profile())))
