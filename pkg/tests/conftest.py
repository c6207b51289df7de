"""Shared test factories: random datasets, predictors, and metrics."""

import numpy as np
import pytest

from metricfair import (
    ConstantMetric,
    ConstantPredictor,
    LabeledDataset,
    LinearPredictor,
    LogisticPredictor,
    ScaledEuclideanMetric,
)


def unit_ball_points(rng, m, n):
    g = rng.standard_normal((m, n))
    g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
    return g * (rng.random(m) ** (1.0 / n))[:, None]


def random_dataset(rng, m, n):
    X = unit_ball_points(rng, m, n)
    labels = rng.choice([-1, 1], size=m)
    return LabeledDataset(X, labels)


def random_unit_vector(rng, n):
    w = rng.standard_normal(n)
    return w / max(float(np.linalg.norm(w)), 1e-300)


def random_predictor(rng, n):
    kind = rng.integers(0, 3)
    if kind == 0:
        return ConstantPredictor(float(rng.random()))
    w = random_unit_vector(rng, n) * float(rng.random())
    if kind == 1:
        return LinearPredictor(w)
    return LogisticPredictor(w, float(rng.uniform(0.5, 4.0)))


def random_metric(rng):
    if rng.random() < 0.5:
        return ConstantMetric(float(rng.uniform(0.0, 0.6)))
    return ScaledEuclideanMetric(float(rng.uniform(0.2, 1.5)))


class TablePredictor:
    """Maps known feature rows to fixed prediction values (test stub)."""

    dimension = None

    def __init__(self, features, values):
        self._table = {
            np.ascontiguousarray(np.asarray(row, dtype=np.float64)).tobytes(): float(v)
            for row, v in zip(features, values)
        }

    def predict(self, x):
        return self._table[np.ascontiguousarray(np.asarray(x, dtype=np.float64)).tobytes()]

    def predict_batch(self, xs):
        return np.array([self.predict(x) for x in np.atleast_2d(xs)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
