import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lowlight.classify import (
    CONDITIONS,
    FeatureRecord,
    SoftmaxClassifier,
    TrainConfig,
    cross_entropy,
    cross_entropy_grad,
    evaluate,
    evaluate_records,
    gradient_check,
    load_model,
    make_feature_clusters,
    read_features_csv,
    save_model,
    softmax,
    train,
    write_features_csv,
)
from lowlight.exceptions import FileFormatError, InvalidDatasetError, InvalidInputError

finite_logits = arrays(np.float64, st.integers(1, 8), elements=st.floats(-50, 50))


def test_softmax_uniform():
    assert softmax(np.full(5, 3.7)) == pytest.approx(np.full(5, 0.2), abs=1e-15)


def test_softmax_one_hot_logit():
    p = softmax([1.0, 0, 0, 0, 0])
    e = math.e
    assert p[0] == pytest.approx(e / (e + 4), abs=1e-12)
    assert p[1] == pytest.approx(1 / (e + 4), abs=1e-12)


def test_softmax_huge_logits_are_stable():
    p = softmax([1000.0, 1000.0, -1000.0])
    assert np.all(np.isfinite(p))
    assert p[:2] == pytest.approx([0.5, 0.5])


@given(finite_logits, st.floats(-100, 100))
def test_softmax_shift_invariant(z, c):
    assert np.allclose(softmax(z), softmax(z + c), atol=1e-12)


@given(finite_logits)
def test_softmax_sums_to_one(z):
    p = softmax(z)
    assert abs(p.sum() - 1.0) < 1e-12
    assert np.all(p >= 0)


def test_softmax_rows():
    z = np.arange(12.0).reshape(3, 4)
    assert np.allclose(softmax(z).sum(axis=1), 1.0)


# ---------------------------------------------------------------- gradients


def _problem(rng, n=40, d=30, k=5):
    X = np.abs(rng.normal(size=(n, d)))
    y = rng.integers(0, k, n)
    W = rng.normal(scale=0.1, size=(d, k))
    b = rng.normal(scale=0.1, size=k)
    return X, y, W, b


@pytest.mark.parametrize("l2", [0.0, 0.1])
def test_gradient_check(rng, l2):
    X, y, W, b = _problem(rng)
    assert gradient_check(X, y, W, b, n_params=50, l2=l2) < 1e-5


def test_zero_features_give_bias_only_gradient(rng):
    W = rng.normal(size=(10, 5))
    b = rng.normal(size=5)
    gW, gb = cross_entropy_grad(W, b, np.zeros((1, 10)), np.array([2]))
    assert np.all(gW == 0)
    expected = softmax(b)
    expected[2] -= 1
    assert np.allclose(gb, expected, atol=1e-15)


def test_duplicated_record_same_gradient(rng):
    X, y, W, b = _problem(rng, n=1)
    g1 = cross_entropy_grad(W, b, X, y)
    g2 = cross_entropy_grad(W, b, np.vstack([X, X]), np.concatenate([y, y]))
    assert np.allclose(g1[0], g2[0], atol=1e-15)
    assert np.allclose(g1[1], g2[1], atol=1e-15)


def test_cross_entropy_uniform_model():
    X = np.ones((4, 3))
    y = np.array([0, 1, 2, 3])
    W = np.zeros((3, 5))
    assert cross_entropy(W, np.zeros(5), X, y) == pytest.approx(math.log(5))


# ---------------------------------------------------------------- training


def _one_hot_toy(n_per_class=10, k=5):
    X = np.repeat(np.eye(k), n_per_class, axis=0)
    y = np.repeat(np.arange(k), n_per_class)
    return X, y


def test_separable_toy_reaches_full_accuracy():
    X, y = _one_hot_toy()
    model = SoftmaxClassifier(learning_rate=0.5, epochs=100, batch_size=8).fit(X, y)
    assert model.score(X, y) == 1.0


def test_zero_learning_rate_keeps_initial_weights():
    X, y = _one_hot_toy()
    model = SoftmaxClassifier(learning_rate=0.0, epochs=5, seed=4).fit(X, y)
    assert np.array_equal(model.coef_, model.initial_coef_)
    assert np.all(model.intercept_ == 0)
    assert np.abs(model.initial_coef_).max() <= 0.01


def test_same_seed_bit_identical():
    X, y, _ = make_feature_clusters(n_per_class=20, n_features=64, conditions=("original",), seed=1)
    a = SoftmaxClassifier(epochs=10, seed=3).fit(X, y)
    b = SoftmaxClassifier(epochs=10, seed=3).fit(X, y)
    assert np.array_equal(a.coef_, b.coef_)
    assert np.array_equal(a.intercept_, b.intercept_)
    assert a.loss_curve_ == b.loss_curve_


def test_different_seed_differs():
    X, y = _one_hot_toy()
    a = SoftmaxClassifier(epochs=2, seed=0).fit(X, y)
    b = SoftmaxClassifier(epochs=2, seed=1).fit(X, y)
    assert not np.array_equal(a.coef_, b.coef_)


def test_loss_nonincreasing_with_small_steps():
    X, y, _ = make_feature_clusters(n_per_class=40, n_features=128, conditions=("original",), seed=2)
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    model = SoftmaxClassifier(learning_rate=1e-3, epochs=50, batch_size=len(y), l2=1e-3).fit(X, y)
    diffs = np.diff(model.loss_curve_)
    assert np.all(diffs <= 1e-15)


def test_missing_class_rejected():
    X, y = _one_hot_toy()
    with pytest.raises(InvalidDatasetError):
        SoftmaxClassifier().fit(X[y < 4], y[y < 4])


def test_out_of_range_label_rejected():
    X, y = _one_hot_toy()
    y = y.copy()
    y[0] = 7
    with pytest.raises(InvalidDatasetError):
        SoftmaxClassifier().fit(X, y)


def test_bad_config_rejected():
    with pytest.raises(InvalidInputError):
        TrainConfig(batch_size=0)
    with pytest.raises(InvalidInputError):
        TrainConfig(learning_rate=-1.0)


def test_train_from_records():
    X, y = _one_hot_toy()
    records = [FeatureRecord(x, int(label)) for x, label in zip(X, y)]
    model, losses = train(records, TrainConfig(learning_rate=0.5, epochs=20, batch_size=5))
    assert len(losses) == 20
    assert evaluate_records(model, records)["all"] == 1.0


def test_feature_count_checked_at_predict():
    X, y = _one_hot_toy()
    model = SoftmaxClassifier(epochs=1).fit(X, y)
    with pytest.raises(InvalidInputError):
        model.predict(np.zeros((2, 3)))


# ---------------------------------------------------------------- evaluation


def _constant_model(n_features, label, k=5):
    bias = np.zeros(k)
    bias[label] = 1.0
    return SoftmaxClassifier.from_dict({"weights": np.zeros((n_features, k)).tolist(), "bias": bias.tolist()})


def test_always_zero_model_on_class_zero():
    model = _constant_model(8, 0)
    X = np.random.default_rng(0).normal(size=(30, 8))
    table = evaluate(model, X, np.zeros(30, int), ["he"] * 30)
    assert table == {"he": 1.0, "all": 1.0}


def test_random_labels_near_chance():
    rng = np.random.default_rng(11)
    X, y, _ = make_feature_clusters(n_per_class=30, n_features=64, conditions=("original",), seed=5)
    model = SoftmaxClassifier(learning_rate=0.5, epochs=30).fit(X, y)
    Xr = np.abs(rng.normal(size=(1000, 64)))
    yr = rng.integers(0, 5, 1000)
    acc = evaluate(model, Xr, yr)["all"]
    assert 0.14 <= acc <= 0.26


def test_evaluation_ignores_record_order(rng):
    X, y, cond = make_feature_clusters(n_per_class=10, n_features=32, seed=6)
    model = SoftmaxClassifier(epochs=3).fit(X, y)
    perm = rng.permutation(len(y))
    assert evaluate(model, X, y, cond) == evaluate(model, X[perm], y[perm], cond[perm])


def test_condition_order_is_canonical():
    model = _constant_model(2, 1)
    X = np.zeros((4, 2))
    table = evaluate(model, X, np.array([1, 0, 1, 1]), ["clahe", "original", "zz", "he"])
    assert list(table) == ["original", "he", "clahe", "zz", "all"]
    assert table["original"] == 0.0 and table["all"] == 0.75


def test_evaluate_empty():
    with pytest.raises(InvalidInputError):
        evaluate(_constant_model(2, 0), np.zeros((0, 2)), np.zeros(0, int))


# ---------------------------------------------------------------- files


def test_features_csv_round_trip(tmp_path):
    X, y, cond = make_feature_clusters(n_per_class=3, n_features=16, seed=0)
    path = tmp_path / "f.csv"
    write_features_csv(X, y, cond, path)
    X2, y2, c2 = read_features_csv(path, n_features=16)
    assert np.allclose(X2, X, rtol=1e-8)
    assert np.array_equal(y2, y)
    assert list(c2) == list(cond)
    assert set(c2) == set(CONDITIONS)


def test_features_csv_wrong_width(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("1,2,3,0,he\n")
    with pytest.raises(FileFormatError):
        read_features_csv(path, n_features=4)


def test_features_csv_non_finite(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("1,nan,0,he\n")
    with pytest.raises(FileFormatError):
        read_features_csv(path, n_features=2)


def test_model_json_round_trip(tmp_path):
    X, y = _one_hot_toy()
    model = SoftmaxClassifier(epochs=3).fit(X, y)
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    assert np.allclose(loaded.coef_, model.coef_, rtol=1e-8)
    assert np.array_equal(loaded.predict(X), model.predict(X))


def test_model_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        SoftmaxClassifier.from_dict({"weights": [[float("nan")]], "bias": [0.0]})


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_predict_proba_rows_sum_to_one(n, seed):
    rng = np.random.default_rng(seed)
    model = SoftmaxClassifier.from_dict(
        {"weights": rng.normal(size=(4, 5)).tolist(), "bias": rng.normal(size=5).tolist()}
    )
    P = model.predict_proba(rng.normal(size=(n, 4)))
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
