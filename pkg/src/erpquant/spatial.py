"""xDAWN spatial filters: evoked-vs-total covariance GEVD and projection to features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionError, NumericError, TrainingError
from .synthdata import TARGET

RIDGE = 1e-8


def jacobi_eigh(a, tol=1e-12, max_sweeps=100):
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Stops once the off-diagonal Frobenius norm falls below ``tol * ||A||_F``.
    Returns ``(eigenvalues, eigenvectors)`` unsorted, eigenvectors in columns.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"square matrix required, got {a.shape}")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    threshold = tol * np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise NumericError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    return np.diag(a).copy(), v


def generalized_eigh(signal_cov, noise_cov):
    """Solve ``S w = lam N w`` for symmetric S and SPD N.

    Cholesky-whitens N, diagonalises the whitened S with :func:`jacobi_eigh`
    and maps back, so that ``W.T @ N @ W = I``. Eigenvalues are returned in
    descending order with eigenvectors in matching columns.
    """
    signal_cov = np.asarray(signal_cov, dtype=np.float64)
    noise_cov = np.asarray(noise_cov, dtype=np.float64)
    if not (np.all(np.isfinite(signal_cov)) and np.all(np.isfinite(noise_cov))):
        raise NumericError("non-finite covariance")
    try:
        chol = np.linalg.cholesky(noise_cov)
    except np.linalg.LinAlgError as exc:
        raise NumericError("noise covariance is not positive definite") from exc
    tmp = solve_triangular(chol, signal_cov, lower=True)
    whitened = solve_triangular(chol, tmp.T, lower=True)
    vals, vecs = jacobi_eigh(whitened)
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    w = solve_triangular(chol.T, vecs[:, order], lower=False)
    return vals, w


@dataclass(frozen=True)
class SpatialFilterBank:
    weights: np.ndarray
    rayleigh_quotients: np.ndarray

    @property
    def n_filters(self):
        return self.weights.shape[0]

    @property
    def n_channels(self):
        return self.weights.shape[1]


def xdawn_covariances(data, labels):
    """Evoked covariance of the target mean and average per-epoch covariance, both ridged."""
    data = np.asarray(data, dtype=np.float64)
    labels = np.asarray(labels)
    target = labels == TARGET
    if not target.any() or target.all():
        raise TrainingError("xDAWN needs at least one target and one non-target epoch")
    n_samples = data.shape[2]
    evoked = data[target].mean(axis=0)
    sig = evoked @ evoked.T / n_samples
    noise = np.einsum("ect,edt->cd", data, data) / (n_samples * data.shape[0])
    if not (np.all(np.isfinite(sig)) and np.all(np.isfinite(noise))):
        raise NumericError("non-finite covariance")
    n_ch = data.shape[1]
    sig = sig + RIDGE * np.trace(sig) / n_ch * np.eye(n_ch)
    noise = noise + RIDGE * np.trace(noise) / n_ch * np.eye(n_ch)
    return sig, noise


def fit_xdawn(train, n_filters=8) -> SpatialFilterBank:
    """Fit ``n_filters`` xDAWN filters on an :class:`~erpquant.synthdata.EpochSet`.

    Rows are sorted by descending generalised Rayleigh quotient, scaled to unit
    norm in the total-covariance metric, and signed so that each row's
    largest-magnitude coefficient is positive.
    """
    n_ch = train.data.shape[1]
    if not 1 <= n_filters <= n_ch:
        raise TrainingError(f"n_filters must be in [1, {n_ch}], got {n_filters}")
    sig, noise = xdawn_covariances(train.data, train.labels)
    vals, vecs = generalized_eigh(sig, noise)
    w = vecs[:, :n_filters].T.copy()
    peak = w[np.arange(n_filters), np.argmax(np.abs(w), axis=1)]
    w *= np.where(peak < 0, -1.0, 1.0)[:, None]
    return SpatialFilterBank(weights=w, rayleigh_quotients=vals[:n_filters].copy())


def apply_filters(bank, epochs):
    """Project epochs through the bank; filter-major flattening.

    ``epochs`` may be a single ``(channels, samples)`` array (returns a
    vector) or a batch ``(n, channels, samples)`` (returns ``(n, F*samples)``).
    """
    weights = bank.weights if isinstance(bank, SpatialFilterBank) else np.asarray(bank)
    x = np.asarray(epochs, dtype=np.float64)
    if x.shape[-2] != weights.shape[1]:
        raise DimensionError(f"filters expect {weights.shape[1]} channels, epoch has {x.shape[-2]}")
    if x.ndim == 2:
        return (weights @ x).ravel()
    return np.einsum("fc,ecs->efs", weights, x).reshape(x.shape[0], -1)
