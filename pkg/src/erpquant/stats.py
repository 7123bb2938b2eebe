"""Paired Wilcoxon signed-rank test and Bonferroni-corrected pairwise matrices."""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np
from scipy.stats import norm, rankdata

from .errors import EvaluationError

EXACT_MAX_N = 20


def _signed_rank_inputs(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise EvaluationError("paired samples must be 1-D and of equal length")
    if a.size < 5:
        raise EvaluationError(f"need at least 5 pairs, got {a.size}")
    d = a - b
    d = d[d != 0]
    return d, rankdata(np.abs(d))


def exact_signed_rank_distribution(doubled_ranks):
    """Counts of every achievable doubled positive-rank sum over all ``2**n`` sign patterns."""
    doubled_ranks = [int(r) for r in doubled_ranks]
    counts = np.zeros(sum(doubled_ranks) + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        counts[r:] = counts[r:] + counts[:-r]
    return counts


def wilcoxon_signed_rank(a, b):
    """Two-sided p-value of the paired signed-rank test.

    Zero differences are dropped and tied magnitudes share average ranks.
    Up to 20 non-zero differences the null distribution is counted exactly;
    beyond that a tie- and continuity-corrected normal approximation is used.
    """
    d, ranks = _signed_rank_inputs(a, b)
    n = d.size
    if n == 0:
        return 1.0
    t_plus = float(ranks[d > 0].sum())
    if n <= EXACT_MAX_N:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = exact_signed_rank_distribution(doubled)
        t2 = int(np.rint(2 * t_plus))
        total = 2**n
        lower = int(counts[: t2 + 1].sum())
        upper = int(counts[t2:].sum())
        return min(1.0, 2 * min(lower, upper) / total)
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    if var <= 0:
        return 1.0
    z = max(abs(t_plus - mean) - 0.5, 0.0) / math.sqrt(var)
    return float(min(1.0, 2 * norm.sf(z)))


def bonferroni_threshold(n_conditions, alpha=0.05):
    return alpha / math.comb(n_conditions, 2)


def pairwise_pvalues(per_subject_auc):
    m = np.asarray(per_subject_auc, dtype=np.float64)
    n_cond = m.shape[1]
    p = np.full((n_cond, n_cond), np.nan)
    for i, j in combinations(range(n_cond), 2):
        p[i, j] = p[j, i] = wilcoxon_signed_rank(m[:, i], m[:, j])
    return p


def pairwise_significance(per_subject_auc, alpha=0.05):
    """Symmetric 0/1 matrix (NaN on the diagonal) of Bonferroni-corrected significance.

    ``per_subject_auc`` is ``subjects x conditions``.
    """
    m = np.asarray(per_subject_auc, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] < 2:
        raise EvaluationError("need a subjects x conditions matrix with at least 2 conditions")
    p = pairwise_pvalues(m)
    sig = (p < bonferroni_threshold(m.shape[1], alpha)).astype(float)
    np.fill_diagonal(sig, np.nan)
    return sig
