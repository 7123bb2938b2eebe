"""Condition naming, AUC, stratified cross-validation and model export."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import classify, spatial
from .errors import ConfigurationError, EvaluationError
from .modelfmt import Section, SectionKind
from .quant import QuantScheme, as_float64, dequantize, model_size_bits, quantize

N_FILTERS = 8
N_HIDDEN = 200

# Integer method numbers for the xDAWN+BLDA conditions ("filter/classifier").
BLDA_METHODS = {
    0: None,
    1: QuantScheme.SYM_MAX_INT4,
    2: QuantScheme.SYM_MAX_INT8,
    3: QuantScheme.AFFINE_MINMAX_INT4,
    4: QuantScheme.AFFINE_MINMAX_INT8,
}
ELM_INIT_SCHEMES = {
    1: QuantScheme.FLOAT64,
    2: QuantScheme.CODEBOOK1_PM,
    3: QuantScheme.CODEBOOK1_01,
    4: QuantScheme.CODEBOOK2,
    5: QuantScheme.CODEBOOK3,
}
BLDA_TABLE_LABELS = ("0/0", "1/0", "2/0", "3/0", "4/0", "0/1", "0/2", "0/3", "0/4", "1/1")
ELM_TABLE_LABELS = ("1", "2", "3", "4", "5", "11", "12", "13", "14", "15")


@dataclass(frozen=True)
class ConditionId:
    """One cell of the experiment grid.

    For BLDA, ``filter_scheme``/``classifier_scheme`` are ``None`` when that
    stage is left in float64. For ELM, ``elm_init`` is the input-layer
    condition (1-5) and ``classifier_scheme`` is ``HIST256`` for 11-15.
    """

    classifier: str
    label: str
    filter_scheme: QuantScheme | None = None
    classifier_scheme: QuantScheme | None = None
    elm_init: int | None = None

    @property
    def filename(self):
        return f"{self.classifier}_{self.label.replace('/', '-')}"


def blda_labels():
    return [f"{f}/{c}" for f, c in itertools.product(BLDA_METHODS, BLDA_METHODS)]


def elm_labels():
    return [str(c) for c in ELM_INIT_SCHEMES] + [str(c + 10) for c in ELM_INIT_SCHEMES]


def valid_labels(classifier):
    if classifier == "blda":
        return blda_labels()
    if classifier == "elm":
        return elm_labels()
    raise ConfigurationError(f"unknown classifier {classifier!r}; expected 'blda' or 'elm'")


def parse_condition(classifier, label) -> ConditionId:
    label = str(label).strip()
    if label not in valid_labels(classifier):
        raise ConfigurationError(
            f"unknown {classifier} condition {label!r}; valid: {', '.join(valid_labels(classifier))}"
        )
    if classifier == "blda":
        f, c = (int(p) for p in label.split("/"))
        return ConditionId("blda", label, BLDA_METHODS[f], BLDA_METHODS[c])
    n = int(label)
    return ConditionId("elm", label, None, QuantScheme.HIST256 if n > 10 else None, n % 10)


# ---------------------------------------------------------------------------
# AUC


def compute_auc(scores, labels):
    """Mann-Whitney AUC with average ranks for ties; targets are ``labels > 0``."""
    scores = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(labels) > 0
    n_pos = int(np.count_nonzero(pos))
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("AUC needs both classes")
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    # 1-based average ranks over runs of equal scores
    starts = np.flatnonzero(np.r_[True, s[1:] != s[:-1]])
    ends = np.r_[starts[1:], s.size]
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(s.size)
    ranks[order] = np.repeat(avg, ends - starts)
    # doubled ranks are integers, so the sum is exact
    u2 = np.sum(2 * ranks[pos]) - n_pos * (n_pos + 1)
    return float(u2 / (2.0 * n_pos * n_neg))


# ---------------------------------------------------------------------------
# Cross-validation


def stratified_folds(labels, k=5, seed=0):
    """Test-index arrays of ``k`` stratified folds; deterministic in ``seed``."""
    labels = np.asarray(labels)
    pos = np.flatnonzero(labels > 0)
    neg = np.flatnonzero(labels <= 0)
    if k < 2:
        raise EvaluationError(f"need at least 2 folds, got {k}")
    if pos.size < k or neg.size < k:
        raise EvaluationError(
            f"{pos.size} targets / {neg.size} non-targets cannot fill {k} stratified folds"
        )
    rng = np.random.default_rng(seed)
    pos_parts = np.array_split(rng.permutation(pos), k)
    neg_parts = np.array_split(rng.permutation(neg), k)
    return [np.sort(np.concatenate([p, n])) for p, n in zip(pos_parts, neg_parts)]


def _roundtrip(weights, scheme):
    if scheme is None:
        return weights
    return dequantize(quantize(weights, scheme)).reshape(np.shape(weights))


def elm_seed(cv_seed, fold, init_condition):
    return np.random.SeedSequence(cv_seed, spawn_key=(fold, init_condition))


@dataclass
class FoldResult:
    fold: int
    auc: dict  # condition label -> AUC


def evaluate_fold(train, test, conditions, fold=0, cv_seed=0):
    """AUC of every condition on one train/test split.

    The xDAWN bank is fit once on ``train``; classifiers are shared between
    conditions that only differ in post-training quantization.
    """
    bank = spatial.fit_xdawn(train, N_FILTERS)
    y_tr, y_te = train.signed_labels, test.signed_labels
    feats = {}

    def features(filter_scheme):
        if filter_scheme not in feats:
            w = _roundtrip(bank.weights, filter_scheme)
            feats[filter_scheme] = (spatial.apply_filters(w, train.data),
                                    spatial.apply_filters(w, test.data))
        return feats[filter_scheme]

    aucs = {}
    blda_models, elm_models = {}, {}
    for cond in conditions:
        if cond.classifier == "blda":
            x_tr, x_te = features(cond.filter_scheme)
            if cond.filter_scheme not in blda_models:
                blda_models[cond.filter_scheme] = classify.train_blda(x_tr, y_tr)
            w = _roundtrip(blda_models[cond.filter_scheme].weights, cond.classifier_scheme)
            scores = classify.predict_linear(w, x_te)
        else:
            x_tr, x_te = features(None)
            if cond.elm_init not in elm_models:
                n_feat = x_tr.shape[1]
                iw, ib = classify.init_elm_weights(cond.elm_init, elm_seed(cv_seed, fold, cond.elm_init),
                                                   N_HIDDEN, n_feat)
                elm_models[cond.elm_init] = classify.train_elm(iw, ib, x_tr, y_tr, cond.elm_init)
            model = elm_models[cond.elm_init]
            if cond.classifier_scheme is not None:
                model = model.with_output_weights(_roundtrip(model.output_weights, cond.classifier_scheme))
            scores = classify.predict_elm(model, x_te)
        aucs[cond.label] = compute_auc(scores, y_te)
    return FoldResult(fold, aucs)


def evaluate_subject(epochs, conditions, k=5, seed=0):
    """Per-fold AUCs for each condition: ``{label: np.ndarray(k)}``."""
    folds = stratified_folds(epochs.labels, k, seed)
    results = []
    for i, test_idx in enumerate(folds):
        mask = np.zeros(len(epochs), dtype=bool)
        mask[test_idx] = True
        results.append(evaluate_fold(epochs.subset(~mask), epochs.subset(mask), conditions, i, seed))
    return {c.label: np.array([r.auc[c.label] for r in results]) for c in conditions}


def cross_validate(epochs, condition, k=5, seed=0):
    """Returns ``(per_fold_aucs, mean_auc)`` for one condition."""
    aucs = evaluate_subject(epochs, [condition], k, seed)[condition.label]
    return aucs, float(aucs.mean())


# ---------------------------------------------------------------------------
# Size accounting and model export


def condition_sizes(cond, n_channels=32, n_samples=128):
    """Logical storage in bits for a condition's filter bank and classifier."""
    n_filter = N_FILTERS * n_channels
    n_feat = N_FILTERS * n_samples
    filt = [(n_filter, cond.filter_scheme or QuantScheme.FLOAT64)]
    if cond.classifier == "blda":
        clf = [(n_feat + 1, cond.classifier_scheme or QuantScheme.FLOAT64)]
    else:
        init = ELM_INIT_SCHEMES[cond.elm_init]
        clf = [
            (N_HIDDEN * n_feat, init),
            (N_HIDDEN, init),
            (N_HIDDEN, cond.classifier_scheme or QuantScheme.FLOAT64),
            (2 * n_feat, QuantScheme.FLOAT64),
        ]
    return model_size_bits(filt, clf)


def _stored(weights, scheme):
    return as_float64(weights) if scheme is None else quantize(weights, scheme)


def fit_condition_model(epochs, cond, seed=0):
    """Train on all epochs and return the model-file sections for ``cond``."""
    bank = spatial.fit_xdawn(epochs, N_FILTERS)
    filt = _stored(bank.weights, cond.filter_scheme)
    sections = [Section(SectionKind.XDAWN_FILTERS, filt)]
    x = spatial.apply_filters(dequantize(filt), epochs.data)
    y = epochs.signed_labels
    if cond.classifier == "blda":
        model = classify.train_blda(x, y)
        sections.append(Section(SectionKind.BLDA, _stored(model.weights, cond.classifier_scheme)))
        return sections
    init_scheme = ELM_INIT_SCHEMES[cond.elm_init]
    iw, ib = classify.init_elm_weights(cond.elm_init, elm_seed(seed, 0, cond.elm_init), N_HIDDEN, x.shape[1])
    model = classify.train_elm(iw, ib, x, y, cond.elm_init)
    sections += [
        Section(SectionKind.ELM_INPUT, quantize(model.input_weights, init_scheme)),
        Section(SectionKind.ELM_BIAS, quantize(model.input_biases, init_scheme)),
        Section(SectionKind.ELM_OUTPUT, _stored(model.output_weights, cond.classifier_scheme)),
        Section(SectionKind.STANDARDIZER, as_float64(np.vstack([model.feature_mean, model.feature_std]))),
    ]
    return sections
