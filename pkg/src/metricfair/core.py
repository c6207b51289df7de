"""Core domain types for metric-fair learning.

Datasets live in the unit ball with labels in {-1, +1}. Similarity metrics
are bounded pairwise distances d(x, x') in [0, 1]. Predictors are
probabilistic classifiers h: X -> [0, 1], interpreted as the probability of
assigning the label +1. A matching is a disjoint pairing of sample indices
used by the empirical fairness estimators.

All types are immutable after construction and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

NORM_TOLERANCE = 1e-9
PSD_TOLERANCE = 1e-8


class MetricFairError(Exception):
    """Base error for this package."""


class ValidationError(MetricFairError, ValueError):
    """Inputs violate a domain-type contract."""


class DimensionMismatchError(ValidationError):
    """An example's dimension does not match the consumer's."""


class MetricUndefinedError(MetricFairError, KeyError):
    """A precomputed metric has no entry for the requested pair."""


def _as_float_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"expected a 1-d feature vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("features must be finite")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Example:
    """A single labeled point: features in the unit ball, label in {-1, +1}."""

    features: np.ndarray
    label: int

    def __post_init__(self):
        feats = _freeze(_as_float_vector(self.features))
        object.__setattr__(self, "features", feats)
        norm = float(np.linalg.norm(feats))
        if norm > 1.0 + NORM_TOLERANCE:
            raise ValidationError(f"feature norm {norm:.12g} exceeds the unit ball")
        if self.label not in (-1, 1):
            raise ValidationError(f"label must be -1 or +1, got {self.label!r}")

    @property
    def dimension(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class LabeledDataset:
    """An ordered sample of examples sharing one dimension.

    `features` is the (m, n) matrix of points, `labels` the (m,) vector of
    +/-1 labels. `targets01` maps labels to the [0, 1] prediction scale.
    """

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        if feats.ndim != 2:
            raise ValidationError(f"features must be 2-d, got shape {feats.shape}")
        if feats.shape[0] == 0:
            raise ValidationError("dataset must be non-empty")
        if labels.shape != (feats.shape[0],):
            raise ValidationError("labels must align with feature rows")
        if not np.all(np.isfinite(feats)):
            raise ValidationError("features must be finite")
        if not np.all(np.isin(labels, (-1, 1))):
            raise ValidationError("labels must be -1 or +1")
        norms = np.linalg.norm(feats, axis=1)
        worst = float(norms.max())
        if worst > 1.0 + NORM_TOLERANCE:
            raise ValidationError(f"feature norm {worst:.12g} exceeds the unit ball")
        object.__setattr__(self, "features", _freeze(feats))
        object.__setattr__(self, "labels", _freeze(labels.astype(np.int64)))

    @classmethod
    def from_examples(cls, examples: Sequence[Example]) -> "LabeledDataset":
        if not examples:
            raise ValidationError("dataset must be non-empty")
        dims = {ex.dimension for ex in examples}
        if len(dims) != 1:
            raise ValidationError(f"examples have mixed dimensions {sorted(dims)}")
        feats = np.stack([ex.features for ex in examples])
        labels = np.array([ex.label for ex in examples])
        return cls(feats, labels)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    @property
    def targets01(self) -> np.ndarray:
        """Labels mapped to the predictor scale: (1 + y) / 2 in {0, 1}."""
        return (1.0 + self.labels) / 2.0

    def example(self, i: int) -> Example:
        return Example(self.features[i], int(self.labels[i]))

    def __iter__(self) -> Iterator[Example]:
        return (self.example(i) for i in range(len(self)))


# ---------------------------------------------------------------------------
# Similarity metrics
# ---------------------------------------------------------------------------


class SimilarityMetric:
    """Pairwise distance with outputs in [0, 1] and d(x, x) = 0."""

    def distance(self, x: np.ndarray, y: np.ndarray) -> float:
        raise NotImplementedError

    def pair_distances(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Row-wise distances d(xs[i], ys[i]). Default loops over `distance`."""
        xs = np.atleast_2d(xs)
        ys = np.atleast_2d(ys)
        return np.array([self.distance(a, b) for a, b in zip(xs, ys)])

    def pairwise_matrix(self, xs: np.ndarray) -> np.ndarray:
        """Full m x m distance matrix over the rows of `xs`."""
        xs = np.atleast_2d(xs)
        m = xs.shape[0]
        out = np.zeros((m, m))
        for i in range(m):
            for j in range(i + 1, m):
                out[i, j] = out[j, i] = self.distance(xs[i], xs[j])
        return out


@dataclass(frozen=True)
class ConstantMetric(SimilarityMetric):
    """d(x, x') = c for distinct points, 0 on identical points."""

    c: float

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise ValidationError(f"constant distance must be in [0, 1], got {self.c}")

    def distance(self, x, y) -> float:
        return 0.0 if np.array_equal(x, y) else self.c

    def pair_distances(self, xs, ys) -> np.ndarray:
        xs = np.atleast_2d(xs)
        ys = np.atleast_2d(ys)
        same = np.all(xs == ys, axis=1)
        return np.where(same, 0.0, self.c)

    def pairwise_matrix(self, xs) -> np.ndarray:
        xs = np.atleast_2d(xs)
        m = xs.shape[0]
        out = np.full((m, m), self.c)
        np.fill_diagonal(out, 0.0)
        return out


@dataclass(frozen=True)
class ScaledEuclideanMetric(SimilarityMetric):
    """d(x, x') = min(1, scale * ||x - x'||)."""

    scale: float

    def __post_init__(self):
        if self.scale < 0:
            raise ValidationError("scale must be non-negative")

    def distance(self, x, y) -> float:
        return min(1.0, self.scale * float(np.linalg.norm(np.asarray(x) - np.asarray(y))))

    def pair_distances(self, xs, ys) -> np.ndarray:
        xs = np.atleast_2d(xs)
        ys = np.atleast_2d(ys)
        return np.minimum(1.0, self.scale * np.linalg.norm(xs - ys, axis=1))

    def pairwise_matrix(self, xs) -> np.ndarray:
        xs = np.atleast_2d(xs)
        sq = np.sum(xs * xs, axis=1)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (xs @ xs.T), 0.0)
        out = np.minimum(1.0, self.scale * np.sqrt(d2))
        np.fill_diagonal(out, 0.0)
        return out


class MatrixMetric(SimilarityMetric):
    """Distances read from a precomputed square matrix.

    Rows are tied to dataset rows through an index map; evaluation on raw
    vectors looks the vector up among the known points and raises
    MetricUndefinedError for unknown ones.
    """

    def __init__(self, matrix: np.ndarray, points: np.ndarray, index_map: Sequence[int] | None = None):
        matrix = np.asarray(matrix, dtype=np.float64)
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValidationError(f"metric matrix must be square, got shape {matrix.shape}")
        if index_map is None:
            index_map = range(points.shape[0])
        index_map = list(index_map)
        if len(index_map) != matrix.shape[0]:
            raise ValidationError("index map length must match the matrix order")
        self.matrix = _freeze(matrix)
        self._row_of: dict[bytes, int] = {}
        for row, dataset_row in enumerate(index_map):
            if not 0 <= dataset_row < points.shape[0]:
                raise ValidationError(f"index map entry {dataset_row} out of range")
            self._row_of[points[dataset_row].tobytes()] = row

    def _lookup(self, x: np.ndarray) -> int:
        key = np.ascontiguousarray(np.asarray(x, dtype=np.float64)).tobytes()
        try:
            return self._row_of[key]
        except KeyError:
            raise MetricUndefinedError("metric undefined for pair") from None

    def distance(self, x, y) -> float:
        if np.array_equal(x, y):
            return 0.0
        return float(self.matrix[self._lookup(x), self._lookup(y)])


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


class KernelSpec:
    """A positive-semidefinite kernel with known sup value M = sup K(x, x')."""

    sup_value: float

    def value(self, x: np.ndarray, y: np.ndarray) -> float:
        raise NotImplementedError

    def gram(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(xs)
        return self.cross(xs, xs)

    def cross(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Matrix K[i, j] = K(xs[i], ys[j])."""
        raise NotImplementedError

    @property
    def name(self) -> str:
        raise NotImplementedError


class VovkHalfKernel(KernelSpec):
    """K(x, x') = 1 / (1 - <x, x'> / 2); on the unit ball K is in [2/3, 2]."""

    sup_value = 2.0
    name = "vovk-half"

    def value(self, x, y) -> float:
        return 1.0 / (1.0 - 0.5 * float(np.dot(x, y)))

    def cross(self, xs, ys) -> np.ndarray:
        xs = np.atleast_2d(xs)
        ys = np.atleast_2d(ys)
        return 1.0 / (1.0 - 0.5 * (xs @ ys.T))


class LinearDotKernel(KernelSpec):
    """K(x, x') = <x, x'>; on the unit ball K is in [-1, 1]."""

    sup_value = 1.0
    name = "linear-dot"

    def value(self, x, y) -> float:
        return float(np.dot(x, y))

    def cross(self, xs, ys) -> np.ndarray:
        return np.atleast_2d(xs) @ np.atleast_2d(ys).T


class PrecomputedGramKernel(KernelSpec):
    """A fixed Gram matrix; usable wherever only the Gram is needed."""

    name = "precomputed-gram"

    def __init__(self, gram: np.ndarray):
        gram = np.asarray(gram, dtype=np.float64)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
            raise ValidationError("gram matrix must be square")
        self._gram = _freeze(gram)
        self.sup_value = float(np.max(np.abs(gram))) if gram.size else 0.0

    def value(self, x, y) -> float:
        raise MetricFairError("precomputed-gram kernel cannot evaluate raw vectors")

    def cross(self, xs, ys) -> np.ndarray:
        raise MetricFairError("precomputed-gram kernel cannot evaluate raw vectors")

    def gram(self, xs=None) -> np.ndarray:
        return self._gram


def check_psd(gram: np.ndarray, rel_tolerance: float = PSD_TOLERANCE) -> None:
    """Raise unless `gram` is symmetric PSD within the relative tolerance."""
    gram = np.asarray(gram, dtype=np.float64)
    if not np.allclose(gram, gram.T, atol=1e-10):
        raise ValidationError("gram matrix is not symmetric")
    eigs = np.linalg.eigvalsh(gram)
    top = float(max(eigs.max(), 0.0))
    if float(eigs.min()) < -rel_tolerance * max(top, 1e-300):
        raise ValidationError(
            f"gram matrix is not positive semidefinite (min eig {eigs.min():.3e})"
        )


# ---------------------------------------------------------------------------
# Predictors
# ---------------------------------------------------------------------------


class Predictor:
    """Probabilistic classifier h: X -> [0, 1]."""

    #: expected input dimension, or None when any dimension is accepted
    dimension: int | None = None

    def predict(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def predict_batch(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(xs)
        return np.array([self.predict(x) for x in xs])

    def _check_dimension(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.dimension is not None and x.shape[-1] != self.dimension:
            raise DimensionMismatchError(
                f"predictor expects dimension {self.dimension}, got {x.shape[-1]}"
            )
        return x


@dataclass(frozen=True)
class ConstantPredictor(Predictor):
    """h(x) = p for every x."""

    p: float
    dimension: None = field(default=None, init=False)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"constant prediction must be in [0, 1], got {self.p}")

    def predict(self, x) -> float:
        return self.p

    def predict_batch(self, xs) -> np.ndarray:
        return np.full(np.atleast_2d(xs).shape[0], self.p)


class LinearPredictor(Predictor):
    """h(x) = (1 + <w, x>) / 2 with ||w|| <= 1, so h maps the ball into [0, 1]."""

    def __init__(self, weights):
        w = _as_float_vector(weights)
        norm = float(np.linalg.norm(w))
        if norm > 1.0 + NORM_TOLERANCE:
            raise ValidationError(f"weight norm {norm:.12g} exceeds 1")
        self.weights = _freeze(w)
        self.dimension = w.shape[0]

    def predict(self, x) -> float:
        x = self._check_dimension(x)
        return 0.5 * (1.0 + float(np.dot(self.weights, x)))

    def predict_batch(self, xs) -> np.ndarray:
        xs = self._check_dimension(np.atleast_2d(xs))
        return 0.5 * (1.0 + xs @ self.weights)


def sigmoid_transfer(z, lipschitz: float):
    """The transfer 1 / (1 + exp(-4 * lipschitz * z)); fixes 0 -> 1/2."""
    return 1.0 / (1.0 + np.exp(-4.0 * lipschitz * np.asarray(z, dtype=np.float64)))


class LogisticPredictor(Predictor):
    """h(x) = sigmoid_transfer(<w, x>) with ||w|| <= 1; lipschitz-Lipschitz in x."""

    def __init__(self, weights, lipschitz: float):
        w = _as_float_vector(weights)
        norm = float(np.linalg.norm(w))
        if norm > 1.0 + NORM_TOLERANCE:
            raise ValidationError(f"weight norm {norm:.12g} exceeds 1")
        if lipschitz < 0:
            raise ValidationError("lipschitz constant must be non-negative")
        self.weights = _freeze(w)
        self.lipschitz = float(lipschitz)
        self.dimension = w.shape[0]

    def predict(self, x) -> float:
        x = self._check_dimension(x)
        return float(sigmoid_transfer(np.dot(self.weights, x), self.lipschitz))

    def predict_batch(self, xs) -> np.ndarray:
        xs = self._check_dimension(np.atleast_2d(xs))
        return sigmoid_transfer(xs @ self.weights, self.lipschitz)


class KernelPredictor(Predictor):
    """h(x) = clamp(sum_l beta_l K(x_l, x), 0, 1) over stored support points."""

    def __init__(self, support: np.ndarray, beta, kernel: KernelSpec):
        support = np.atleast_2d(np.asarray(support, dtype=np.float64))
        beta = _as_float_vector(beta)
        if beta.shape[0] != support.shape[0]:
            raise ValidationError("beta must have one coefficient per support point")
        self.support = _freeze(support)
        self.beta = _freeze(beta)
        self.kernel = kernel
        self.dimension = support.shape[1]

    def raw(self, x) -> float:
        """Unclamped score sum_l beta_l K(x_l, x); training operates on this."""
        x = self._check_dimension(x)
        k = np.array([self.kernel.value(s, x) for s in self.support])
        return float(np.dot(self.beta, k))

    def raw_batch(self, xs) -> np.ndarray:
        xs = self._check_dimension(np.atleast_2d(xs))
        return self.kernel.cross(xs, self.support) @ self.beta

    def predict(self, x) -> float:
        return float(min(1.0, max(0.0, self.raw(x))))

    def predict_batch(self, xs) -> np.ndarray:
        return np.clip(self.raw_batch(xs), 0.0, 1.0)


def predict(predictor: Predictor, example: Example) -> float:
    """Evaluate a predictor on one example; output is in [0, 1]."""
    value = predictor.predict(example.features)
    if not 0.0 <= value <= 1.0:
        raise MetricFairError(f"predictor emitted {value} outside [0, 1]")
    return value


# ---------------------------------------------------------------------------
# Matchings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Consecutive:
    """Pair indices (0,1), (2,3), ... in dataset order."""


@dataclass(frozen=True)
class RandomPermutation:
    """Shuffle indices with a seeded generator, then pair consecutively."""

    seed: int


@dataclass(frozen=True)
class Matching:
    """Disjoint index pairs over a sample; (m-1)/2 pairs for odd m."""

    pairs: tuple[tuple[int, int], ...]
    m: int

    def __post_init__(self):
        seen: set[int] = set()
        for i, j in self.pairs:
            for k in (i, j):
                if not 0 <= k < self.m:
                    raise ValidationError(f"matching index {k} out of range for m={self.m}")
                if k in seen:
                    raise ValidationError(f"matching index {k} appears more than once")
                seen.add(k)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def left(self) -> np.ndarray:
        return np.array([i for i, _ in self.pairs], dtype=np.intp)

    @property
    def right(self) -> np.ndarray:
        return np.array([j for _, j in self.pairs], dtype=np.intp)


def build_matching(dataset: LabeledDataset, strategy=Consecutive()) -> Matching:
    """Build a floor(m/2)-pair matching; the odd leftover index is dropped."""
    m = len(dataset)
    if m < 2:
        raise ValidationError("insufficient examples for matching")
    if isinstance(strategy, Consecutive):
        order = np.arange(m)
    elif isinstance(strategy, RandomPermutation):
        order = np.random.default_rng(strategy.seed).permutation(m)
    else:
        raise ValidationError(f"unknown matching strategy {strategy!r}")
    k = m // 2
    pairs = tuple((int(order[2 * t]), int(order[2 * t + 1])) for t in range(k))
    return Matching(pairs, m)


def default_matching(dataset: LabeledDataset, seed: int) -> Matching:
    """The default estimator matching: seeded shuffle, then consecutive pairs."""
    return build_matching(dataset, RandomPermutation(seed))


# ---------------------------------------------------------------------------
# Metric validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricValidationReport:
    """Sampled-triple audit of the metric axioms on a dataset."""

    n_triples: int
    symmetry_violations: tuple
    range_violations: tuple
    triangle_violations: tuple

    @property
    def ok(self) -> bool:
        return not (self.symmetry_violations or self.range_violations or self.triangle_violations)

    def to_dict(self) -> dict:
        return {
            "n_triples": self.n_triples,
            "n_symmetry_violations": len(self.symmetry_violations),
            "n_range_violations": len(self.range_violations),
            "n_triangle_violations": len(self.triangle_violations),
            "symmetry_violations": [list(v) for v in self.symmetry_violations[:20]],
            "range_violations": [list(v) for v in self.range_violations[:20]],
            "triangle_violations": [list(v) for v in self.triangle_violations[:20]],
            "ok": self.ok,
        }


def validate_metric(
    metric: SimilarityMetric,
    dataset: LabeledDataset,
    n_triples: int,
    seed: int,
    tolerance: float = 1e-12,
) -> MetricValidationReport:
    """Check symmetry, range, reflexivity and the triangle inequality on
    `n_triples` index triples sampled with replacement."""
    rng = np.random.default_rng(seed)
    m = len(dataset)
    X = dataset.features
    idx = rng.integers(0, m, size=(n_triples, 3))
    symmetry = []
    rng_viol = []
    triangle = []
    cache: dict[tuple[int, int], float] = {}

    def d(i: int, j: int) -> float:
        if i == j:
            return metric.distance(X[i], X[j])
        key = (i, j) if i < j else (j, i)
        if key not in cache:
            cache[key] = metric.distance(X[key[0]], X[key[1]])
        return cache[key]

    for a, b, c in idx:
        a, b, c = int(a), int(b), int(c)
        dab = d(a, b)
        dba = metric.distance(X[b], X[a])
        dac = d(a, c)
        dcb = d(c, b)
        daa = d(a, a)
        if abs(dab - dba) > tolerance:
            symmetry.append((a, b, dab, dba))
        for val in (dab, dac, dcb):
            if not -tolerance <= val <= 1.0 + tolerance:
                rng_viol.append((a, b, c, val))
                break
        if abs(daa) > tolerance:
            rng_viol.append((a, a, a, daa))
        if dab > dac + dcb + tolerance:
            triangle.append((a, b, c, dab, dac, dcb))
    return MetricValidationReport(
        n_triples=n_triples,
        symmetry_violations=tuple(symmetry),
        range_violations=tuple(rng_viol),
        triangle_violations=tuple(triangle),
    )
