import numpy as np
import pytest

from textcgr.classify import LabeledImage, predict_svm, train_svm
from textcgr.errors import DataError

from test_lr import toy_separable


def three_blobs(rng, n_per=15):
    centers = [(-4, 0), (4, 0), (0, 5)]
    data = []
    for label, center in zip("abc", centers):
        pts = rng.normal(loc=center, scale=0.4, size=(n_per, 2))
        data += [LabeledImage(features=p, label=label) for p in pts]
    return data


def test_separable_training_accuracy(rng):
    data = toy_separable(rng)
    model = train_svm(data)
    hits = sum(predict_svm(model, d.features).top_label() == d.label
               for d in data)
    assert hits == len(data)


def test_multiclass_one_vs_rest(rng):
    data = three_blobs(rng)
    model = train_svm(data)
    assert model.weights.shape == (3, 2)
    hits = sum(predict_svm(model, d.features).top_label() == d.label
               for d in data)
    assert hits == len(data)


def test_margin_scores_sum_to_one(rng):
    model = train_svm(three_blobs(rng))
    for _ in range(200):
        sv = predict_svm(model, rng.normal(scale=6, size=2))
        assert abs(sv.scores.sum() - 1.0) < 1e-9
        assert np.all(np.isfinite(sv.scores))


def test_training_is_deterministic(rng):
    data = three_blobs(rng)
    m1 = train_svm(data)
    m2 = train_svm(data)
    assert np.array_equal(m1.weights, m2.weights)
    assert np.array_equal(m1.bias, m2.bias)


def test_rejects_degenerate_training_sets():
    with pytest.raises(DataError):
        train_svm([])
    with pytest.raises(DataError):
        train_svm([LabeledImage(features=np.ones(2), label="only")] * 4)


def test_dimension_mismatch(rng):
    model = train_svm(toy_separable(rng))
    with pytest.raises(DataError):
        predict_svm(model, np.ones(9))


def test_label_permutation_equivariance(rng):
    data = three_blobs(rng)
    renamed = [LabeledImage(features=d.features,
                            label={"a": "x3", "b": "x1", "c": "x2"}[d.label])
               for d in data]
    base = train_svm(data)
    perm = train_svm(renamed)
    q = rng.normal(size=2)
    s1 = predict_svm(base, q).as_dict()
    s2 = predict_svm(perm, q).as_dict()
    for old, new in (("a", "x3"), ("b", "x1"), ("c", "x2")):
        assert s1[old] == pytest.approx(s2[new], abs=1e-6)
