import numpy as np
import pytest

from textcgr.classify import (LabeledImage, LrModel, lr_objective, predict_lr,
                              train_lr)
from textcgr.errors import DataError


def toy_separable(rng, n_per=20):
    """Two point clouds far apart in 2-D."""
    a = rng.normal(loc=(-3, 0), scale=0.3, size=(n_per, 2))
    b = rng.normal(loc=(+3, 0), scale=0.3, size=(n_per, 2))
    data = [LabeledImage(features=x, label="a", doc_id=f"a{i}")
            for i, x in enumerate(a)]
    data += [LabeledImage(features=x, label="b", doc_id=f"b{i}")
             for i, x in enumerate(b)]
    return data


def finite_difference_grad(params, x, y, c, strength, h=1e-6):
    grad = np.zeros_like(params)
    for i in range(params.size):
        up, down = params.copy(), params.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (lr_objective(up, x, y, c, strength)[0]
                   - lr_objective(down, x, y, c, strength)[0]) / (2 * h)
    return grad


def test_separable_training_accuracy(rng):
    data = toy_separable(rng)
    model = train_lr(data)
    hits = sum(predict_lr(model, d.features).top_label() == d.label
               for d in data)
    assert hits == len(data)


def test_zero_weights_give_uniform_scores(rng):
    model = LrModel(weights=np.zeros((3, 5)), bias=np.zeros(3),
                    class_ids=("a", "b", "c"))
    for _ in range(10):
        sv = predict_lr(model, rng.normal(size=5))
        assert np.allclose(sv.scores, 1 / 3)


def test_scores_sum_to_one(rng):
    model = train_lr(toy_separable(rng))
    for _ in range(1000):
        sv = predict_lr(model, rng.normal(scale=5, size=2))
        assert abs(sv.scores.sum() - 1.0) < 1e-9
        assert (sv.scores >= 0).all()


def test_gradient_matches_central_differences(rng):
    for _ in range(5):
        n, d, c = (int(rng.integers(4, 10)), int(rng.integers(2, 6)),
                   int(rng.integers(2, 4)))
        x = rng.normal(size=(n, d))
        y = rng.integers(0, c, size=n)
        y[:c] = np.arange(c)  # every class present
        params = rng.normal(scale=0.5, size=c * (d + 1))
        _, grad = lr_objective(params, x, y, c, 1.0)
        fd = finite_difference_grad(params, x, y, c, 1.0)
        assert np.linalg.norm(grad - fd) / np.linalg.norm(fd) < 1e-5


def test_loss_history_non_increasing(rng):
    model = train_lr(toy_separable(rng))
    hist = np.array(model.loss_history)
    assert len(hist) >= 2
    assert (np.diff(hist) <= 1e-12).all()


def test_rejects_degenerate_training_sets():
    with pytest.raises(DataError):
        train_lr([])
    with pytest.raises(DataError):
        train_lr([LabeledImage(features=np.ones(2), label="only")] * 3)


def test_dimension_mismatch(rng):
    model = train_lr(toy_separable(rng))
    with pytest.raises(DataError):
        predict_lr(model, np.ones(7))


def test_label_permutation_equivariance(rng):
    data = toy_separable(rng)
    renamed = [LabeledImage(features=d.features,
                            label={"a": "zebra", "b": "ant"}[d.label])
               for d in data]
    base = train_lr(data)
    perm = train_lr(renamed)
    q = rng.normal(size=2)
    s1 = predict_lr(base, q).as_dict()
    s2 = predict_lr(perm, q).as_dict()
    assert s1["a"] == pytest.approx(s2["zebra"], abs=1e-6)
    assert s1["b"] == pytest.approx(s2["ant"], abs=1e-6)
