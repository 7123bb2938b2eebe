"""
Synthetic RSVP epochs
=====================

A look at what the generator produces: class balance, the evoked
response hidden under AR(1) noise, and the continuous-recording path.
"""

# %%
import numpy as np

from erpquant.synthdata import (GeneratorConfig, extract_epochs, generate_recording,
                                generate_subject, preprocess)

config = GeneratorConfig(n_subjects=3, seed=42)
epochs = generate_subject(config, 0)
print(epochs.subject_id, epochs.data.shape, epochs.n_targets, epochs.n_nontargets)

# %%
# Averaging cancels the noise; the target mean keeps the ERP.
t = np.arange(config.samples_per_epoch) / config.sample_rate_hz
target_mean = epochs.data[epochs.labels == 1].mean(axis=0)
other_mean = epochs.data[epochs.labels == 0].mean(axis=0)
peak_ch = np.argmax(np.abs(target_mean).max(axis=1))
peak_t = t[np.argmax(target_mean[peak_ch])]
print(f"peak channel {peak_ch}, latency {peak_t:.3f} s")
print(f"target mean rms {np.sqrt(np.mean(target_mean**2)):.3f}, "
      f"non-target mean rms {np.sqrt(np.mean(other_mean**2)):.3f}")

# %%
# Single trials are dominated by noise: the lag-1 autocorrelation sits near 0.9.
x = epochs.data[:, peak_ch, :]
lag1 = np.mean(x[:, 1:] * x[:, :-1]) / np.mean(x * x)
print(f"single-trial std {x.std():.3f}, lag-1 autocorrelation {lag1:.3f}")

# %%
# The raw-recording path: 512 Hz stream, band-pass, decimate, cut epochs.
rec = generate_recording(GeneratorConfig(n_subjects=1, n_targets=20, n_nontargets=180, seed=1), 0)
clean = preprocess(rec, 0.5, 30.0, 128)
cut = extract_epochs(clean, 1.0, subject_id="S01", seed=1)
print(rec.data.shape, "->", clean.data.shape, "->", cut.data.shape)
