import numpy as np
import pytest
import torch

from pqbert.train import (
    make_classification_head,
    make_regression_head,
    predict_ranked,
    predict_values,
    train_head_classification,
    train_head_regression,
)


def separable_data(rng, n_per_class=20, classes=4, dim=16, scale=10.0):
    xs, ys = [], []
    for c in range(classes):
        center = np.zeros(dim)
        center[c] = scale
        xs.append(center + rng.normal(scale=0.2, size=(n_per_class, dim)))
        ys.append(np.full(n_per_class, c))
    return np.vstack(xs), np.concatenate(ys)


def test_classification_head_shape():
    head = make_classification_head(256)
    out = head(torch.zeros(2, 256))
    assert out.shape == (2, 124)
    widths = [m.out_features for m in head if isinstance(m, torch.nn.Linear)]
    assert widths == [512, 256, 124]


def test_untrained_head_is_chance_level(rng):
    torch.manual_seed(0)
    head = make_classification_head(32)
    x = rng.normal(size=(1240, 32))
    y = np.tile(np.arange(124), 10)
    ranked = predict_ranked(head, x)
    top1 = (ranked[:, 0] == y).mean()
    # Chance is 1/124 ~ 0.8%; allow generous statistical slack.
    assert top1 < 0.05


def test_separable_data_reaches_perfect_top1(rng):
    x, y = separable_data(rng)
    head, metrics = train_head_classification(x, y, epochs=200, lr=1e-3, seed=0)
    assert metrics["train_top1"] == pytest.approx(100.0)
    assert metrics["train_top5"] == pytest.approx(100.0)


def test_ranked_predictions_are_permutations(rng):
    torch.manual_seed(1)
    head = make_classification_head(8, n_classes=10)
    ranked = predict_ranked(head, rng.normal(size=(5, 8)))
    for row in ranked:
        assert sorted(row) == list(range(10))


def test_regression_head_shape():
    head = make_regression_head(256)
    out = head(torch.zeros(3, 256))
    assert out.shape == (3, 1)
    widths = [m.out_features for m in head if isinstance(m, torch.nn.Linear)]
    assert widths[0] > widths[-1] and widths[-1] == 1


def test_regression_fits_constant_zero(rng):
    x = rng.normal(size=(64, 16))
    y = np.zeros(64)
    _, metrics = train_head_regression(x, y, epochs=300, lr=1e-3, seed=0)
    assert metrics["train_mae"] < 0.5


def test_regression_fits_linear_target(rng):
    x = rng.normal(size=(128, 8))
    w = rng.normal(size=8)
    y = x @ w + 2.0
    head, metrics = train_head_regression(x, y, epochs=800, lr=3e-3, seed=0)
    assert metrics["train_mae"] < 1.0
    preds = predict_values(head, x)
    assert preds.shape == (128,)


def test_classification_loss_decreases(rng):
    x, y = separable_data(rng, n_per_class=10)
    _, metrics = train_head_classification(x, y, epochs=50, lr=1e-3, seed=0)
    assert metrics["loss_history"][-1] < metrics["loss_history"][0]
