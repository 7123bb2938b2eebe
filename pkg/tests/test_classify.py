import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from erpquant import classify
from erpquant.classify import (
    BldaModel,
    ElmModel,
    init_elm_weights,
    predict_elm,
    predict_linear,
    solve_output_weights,
    train_blda,
    train_elm,
)
from erpquant.errors import ConfigurationError, DimensionError, TrainingError
from erpquant.evaluation import compute_auc
from erpquant.spatial import apply_filters, fit_xdawn


@pytest.fixture(scope="module")
def features(default_subject):
    bank = fit_xdawn(default_subject)
    return apply_filters(bank, default_subject.data), default_subject.signed_labels


@pytest.fixture(scope="module")
def blda(features):
    return train_blda(*features)


# --- BLDA ----------------------------------------------------------------------


def test_blda_weight_count(blda):
    assert blda.weights.shape == (1025,)
    assert np.isfinite(blda.alpha) and blda.alpha > 0
    assert np.isfinite(blda.beta) and blda.beta > 0
    assert blda.converged


def test_blda_fixed_point(features, blda):
    x, y = features
    n = y.size
    t = np.where(y > 0, n / np.sum(y > 0), -n / np.sum(y < 0))
    xa = np.hstack([x, np.ones((n, 1))]).T
    rhs = blda.beta * (xa @ t)
    lhs = blda.beta * (xa @ (xa.T @ blda.weights)) + blda.alpha * blda.weights
    assert np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs) < 1e-6


def test_blda_separable_toy_agrees_with_ols(rng):
    labels = np.repeat([1, -1], 10)
    x = np.zeros((20, 1024))
    x[:, 0] = labels + 1e-3 * rng.standard_normal(20)
    model = train_blda(x, labels)
    # OLS oracle on the informative column plus bias
    design = np.column_stack([x[:, 0], np.ones(20)])
    ols, *_ = np.linalg.lstsq(design, labels.astype(float), rcond=None)
    scores = predict_linear(model, x)
    assert np.all(np.sign(scores) == labels)
    assert np.all(np.sign(design @ ols) == np.sign(scores))


def test_blda_label_flip_negates_exactly(features):
    x, y = features
    a = train_blda(x[:400], y[:400])
    b = train_blda(x[:400], -y[:400])
    np.testing.assert_array_equal(b.weights, -a.weights)


def _scaled_aucs(features, scales):
    x, y = features
    tr, te = slice(0, 1200), slice(1200, None)
    return [compute_auc(predict_linear(train_blda(c * x[tr], y[tr]), c * x[te]), y[te]) for c in scales]


@pytest.mark.xfail(strict=True, reason="the bias shares the prior precision, so feature scaling "
                   "changes the relative bias penalty and can reorder a few test scores")
def test_blda_scale_keeps_auc_exactly(features):
    ref, *others = _scaled_aucs(features, (1.0, 0.01, 3.0, 250.0))
    assert all(a == ref for a in others)


def test_blda_scale_changes_auc_only_marginally(features):
    ref, *others = _scaled_aucs(features, (1.0, 0.01, 3.0, 250.0))
    assert max(abs(a - ref) for a in others) < 0.005


def test_blda_errors(rng):
    x = rng.standard_normal((6, 4))
    with pytest.raises(TrainingError):
        train_blda(x, np.ones(6))
    with pytest.raises(TrainingError):
        train_blda(x, [1, -1, -1, -1, -1, -1])
    with pytest.raises(DimensionError):
        train_blda(x, [1, 1, -1, -1])


def test_blda_nonconvergence_warns(monkeypatch, rng):
    monkeypatch.setattr(classify, "BLDA_MAX_ITERS", 1)
    x = rng.standard_normal((30, 5))
    y = np.repeat([1, -1], 15)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        model = train_blda(x, y)
    assert not model.converged
    assert model.n_iters == 1
    assert any("did not converge" in str(w.message) for w in caught)


def test_predict_linear_examples():
    w = np.zeros(1025)
    w[-1] = -0.75
    assert predict_linear(BldaModel(w, 1.0, 1.0, 0), np.arange(1024.0)) == -0.75
    w = np.zeros(1025)
    w[0] = 1.0
    x = np.zeros(1024)
    x[0] = 3.5
    assert predict_linear(BldaModel(w, 1.0, 1.0, 0), x) == 3.5
    # 3-feature toy: 0.5*2 - 1*4 + 2*0.25 + 0.1 = -2.4
    assert predict_linear(np.array([0.5, -1.0, 2.0, 0.1]), np.array([2.0, 4.0, 0.25])) == pytest.approx(-2.4, abs=1e-15)


def test_predict_linear_dimension():
    with pytest.raises(DimensionError):
        predict_linear(BldaModel(np.zeros(1025), 1.0, 1.0, 0), np.zeros(1023))


# --- ELM init ------------------------------------------------------------------


def test_condition5_levels():
    w, b = init_elm_weights(5, seed=0)
    values = np.unique(np.concatenate([w.ravel(), b]))
    np.testing.assert_array_equal(np.round(values, 4),
                                  [-1.0, -0.7143, -0.4286, -0.1429, 0.1429, 0.4286, 0.7143, 1.0])


@pytest.mark.parametrize("condition,levels", [
    (2, {-1.0, 1.0}),
    (3, {0.0, 1.0}),
    (4, {-1.0, -0.33, 0.33, 1.0}),
    (5, {-1.0, -5 / 7, -3 / 7, -1 / 7, 1 / 7, 3 / 7, 5 / 7, 1.0}),
])
def test_codebook_membership_is_exact(condition, levels):
    w, b = init_elm_weights(condition, seed=condition)
    assert w.shape == (200, 1024) and b.shape == (200,)
    assert set(np.unique(w)) == levels
    assert set(np.unique(b)) <= levels


def test_condition1_uniform_and_deterministic():
    w1, b1 = init_elm_weights(1, seed=5)
    w2, b2 = init_elm_weights(1, seed=5)
    w3, _ = init_elm_weights(1, seed=6)
    np.testing.assert_array_equal(w1, w2)
    np.testing.assert_array_equal(b1, b2)
    assert not np.array_equal(w1, w3)
    assert w1.min() >= -1 and w1.max() <= 1
    assert abs(w1.mean()) < 0.01 and w1.std() == pytest.approx(1 / np.sqrt(3), rel=0.01)


def test_unknown_condition():
    with pytest.raises(ConfigurationError):
        init_elm_weights(6, seed=0)


# --- ELM training ------------------------------------------------------------------


def test_elm_square_system_interpolates(rng):
    n = 12
    x = rng.standard_normal((n, 6))
    y = np.where(rng.random(n) > 0.5, 1, -1)
    y[:2] = [1, -1]
    w = rng.standard_normal((n, 6))
    b = rng.standard_normal(n)
    model = train_elm(w, b, x, y)
    h = classify.hidden_layer((x - model.feature_mean) / model.feature_std, w, b)
    assert np.linalg.matrix_rank(h) == n
    assert np.max(np.abs(h @ model.output_weights - y)) < 1e-8


def test_output_weights_duplicates_match_weighted_normal_equations(rng):
    h = rng.random((5, 3))
    t = np.array([1.0, -1.0, 1.0, -1.0, 1.0])
    counts = np.array([1, 3, 1, 2, 1])
    beta = solve_output_weights(np.repeat(h, counts, axis=0), np.repeat(t, counts))
    wmat = np.diag(counts.astype(float))
    oracle = np.linalg.solve(h.T @ wmat @ h, h.T @ wmat @ t)
    np.testing.assert_allclose(beta, oracle, atol=1e-10)


def test_output_weights_match_normal_equations(rng):
    h = rng.random((40, 6))
    t = rng.standard_normal(40)
    np.testing.assert_allclose(solve_output_weights(h, t), np.linalg.solve(h.T @ h, h.T @ t), atol=1e-10)


def test_elm_default_size(features):
    x, y = features
    w, b = init_elm_weights(1, seed=1)
    model = train_elm(w, b, x, y)
    assert model.output_weights.shape == (200,)
    assert model.n_hidden == 200


def test_elm_least_squares_optimality(features, rng):
    x, y = features
    w, b = init_elm_weights(2, seed=3)
    model = train_elm(w, b, x, y)
    h = classify.hidden_layer((x - model.feature_mean) / model.feature_std, w, b)
    beta = model.output_weights
    sse = np.sum((h @ beta - y) ** 2)
    deltas = rng.standard_normal((1000, beta.size))
    deltas *= 1e-3 * np.linalg.norm(beta) / np.linalg.norm(deltas, axis=1, keepdims=True)
    perturbed = np.sum((h @ (beta + deltas).T - y[:, None]) ** 2, axis=0)
    assert np.all(perturbed >= sse - 1e-9)


def test_elm_single_class():
    with pytest.raises(TrainingError):
        train_elm(np.ones((2, 3)), np.zeros(2), np.ones((4, 3)), np.ones(4))


def _elm(w, b, beta, n_features):
    return ElmModel(np.atleast_2d(w), np.atleast_1d(b), np.atleast_1d(beta),
                    np.zeros(n_features), np.ones(n_features))


def test_predict_elm_zero_beta(rng):
    model = _elm(rng.standard_normal((4, 3)), rng.standard_normal(4), np.zeros(4), 3)
    assert predict_elm(model, rng.standard_normal(3)) == 0.0


def test_predict_elm_half():
    model = _elm(np.zeros((1, 5)), [0.0], [1.0], 5)
    assert predict_elm(model, np.array([1.0, -2.0, 3.0, 100.0, 0.0])) == 0.5


def test_predict_elm_two_unit_toy():
    model = ElmModel(np.array([[1.0, -1.0], [0.5, 2.0]]), np.array([0.0, -1.0]), np.array([2.0, -3.0]),
                     feature_mean=np.array([1.0, 0.0]), feature_std=np.array([2.0, 1.0]))
    x = np.array([3.0, 0.5])  # standardized: [1.0, 0.5]
    z1 = 1.0 - 0.5          # 0.5
    z2 = 0.5 + 1.0 - 1.0    # 0.5
    expected = 2.0 / (1 + np.exp(-z1)) - 3.0 / (1 + np.exp(-z2))
    assert predict_elm(model, x) == pytest.approx(expected, abs=1e-15)


def test_predict_elm_dimension():
    with pytest.raises(DimensionError):
        predict_elm(_elm(np.zeros((1, 5)), [0.0], [1.0], 5), np.zeros(4))


@settings(max_examples=30, deadline=None)
@given(st.floats(-800, 800))
def test_sigmoid_is_finite_and_bounded(z):
    v = classify.sigmoid(np.array(z))
    assert 0.0 <= v <= 1.0
