"""Fairness losses and audits.

The 0/1 metric-fairness loss charges a pair (x, x') when the prediction gap
|h(x) - h(x')| strictly exceeds d(x, x') + gamma. The l1 loss charges the
clamped magnitude max(0, |h(x) - h(x')| - d(x, x')) instead, which is convex
in the predictor and sandwiches the 0/1 loss. Empirical variants average
over the edges of a matching so that per-edge losses are independent draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Example,
    LabeledDataset,
    Matching,
    MetricFairError,
    Predictor,
    SimilarityMetric,
    ValidationError,
)


@dataclass(frozen=True)
class FairnessParams:
    """A validated bundle of fairness parameters.

    gamma must be strictly positive: at gamma = 0 the l1-to-0/1 containment
    degenerates. When both alpha1 and alpha2 are set, `group_regime` says
    whether alpha1 * alpha2 >= alpha, the regime in which an (alpha, gamma)-
    fair predictor is also (alpha1, alpha2; gamma)-fair.
    """

    alpha: float
    gamma: float
    alpha1: float | None = None
    alpha2: float | None = None
    tau: float | None = None
    sigma: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValidationError(f"alpha must be in [0, 1), got {self.alpha}")
        if not 0.0 < self.gamma < 1.0:
            raise ValidationError(f"gamma must be in (0, 1), got {self.gamma}")
        for name in ("alpha1", "alpha2", "sigma"):
            v = getattr(self, name)
            if v is not None and not 0.0 < v < 1.0:
                raise ValidationError(f"{name} must be in (0, 1), got {v}")
        if self.tau is not None and not 0.0 <= self.tau <= 1.0:
            raise ValidationError(f"tau must be in [0, 1], got {self.tau}")

    @property
    def group_regime(self) -> bool | None:
        if self.alpha1 is None or self.alpha2 is None:
            return None
        return self.alpha1 * self.alpha2 >= self.alpha


def pair_mf_loss(h: Predictor, x: Example, x2: Example, d: SimilarityMetric, gamma: float) -> int:
    """0/1 fairness loss on a pair: 1 iff |h(x) - h(x')| > d(x, x') + gamma."""
    if not 0.0 <= gamma < 1.0:
        raise ValidationError(f"gamma must be in [0, 1), got {gamma}")
    gap = abs(h.predict(x.features) - h.predict(x2.features))
    return int(gap > d.distance(x.features, x2.features) + gamma)


def pair_l1_loss(h: Predictor, x: Example, x2: Example, d: SimilarityMetric) -> float:
    """l1 fairness loss on a pair: max(0, |h(x) - h(x')| - d(x, x'))."""
    gap = abs(h.predict(x.features) - h.predict(x2.features))
    return max(0.0, gap - d.distance(x.features, x2.features))


def _edge_gaps_and_distances(h, S: LabeledDataset, M: Matching, d: SimilarityMetric):
    if len(M) == 0:
        raise ValidationError("matching has no edges")
    if M.m != len(S):
        raise ValidationError("matching does not belong to this dataset")
    values = h.predict_batch(S.features)
    left, right = M.left, M.right
    gaps = np.abs(values[left] - values[right])
    dists = d.pair_distances(S.features[left], S.features[right])
    return gaps, dists


def empirical_mf_loss(h, S: LabeledDataset, M: Matching, d: SimilarityMetric, gamma: float) -> float:
    """Average 0/1 fairness loss over the matching's edges."""
    if not 0.0 <= gamma < 1.0:
        raise ValidationError(f"gamma must be in [0, 1), got {gamma}")
    gaps, dists = _edge_gaps_and_distances(h, S, M, d)
    return float(np.mean(gaps > dists + gamma))


def empirical_l1_loss(h, S: LabeledDataset, M: Matching, d: SimilarityMetric) -> float:
    """Average l1 fairness loss over the matching's edges."""
    gaps, dists = _edge_gaps_and_distances(h, S, M, d)
    return float(np.mean(np.maximum(0.0, gaps - dists)))


@dataclass(frozen=True)
class ViolationVector:
    """Per-edge clamped fairness violations max(0, |h(x)-h(x')| - d - gamma).

    The vector's support fraction (l0 / edges) is the empirical 0/1 loss at
    the same gamma; its mean at gamma = 0 is the empirical l1 loss.
    """

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if np.any(vals < 0) or np.any(vals > 1):
            raise ValidationError("violation entries must lie in [0, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def support_fraction(self) -> float:
        return float(np.mean(self.values > 0))

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


def violation_vector(h, S: LabeledDataset, M: Matching, d: SimilarityMetric, gamma: float) -> ViolationVector:
    """The induced per-edge violation vector at slack gamma."""
    gaps, dists = _edge_gaps_and_distances(h, S, M, d)
    vals = np.clip(np.maximum(0.0, gaps - dists - gamma), 0.0, 1.0)
    return ViolationVector(vals)


def surrogate_ramp(u, gamma: float, G: float):
    """Piecewise-linear G-Lipschitz ramp: 0 below gamma, 1 above gamma + 1/G."""
    if G < 1.0:
        raise ValidationError(f"ramp slope G must be >= 1, got {G}")
    u = np.asarray(u, dtype=np.float64)
    return np.clip(G * (u - gamma), 0.0, 1.0)


def surrogate_loss(h, x: Example, x2: Example, d: SimilarityMetric, gamma: float, G: float) -> float:
    """Surrogate fairness loss: the ramp applied to |h(x)-h(x')| - d(x, x')."""
    gap = abs(h.predict(x.features) - h.predict(x2.features))
    u = gap - d.distance(x.features, x2.features)
    return float(surrogate_ramp(u, gamma, G))


# ---------------------------------------------------------------------------
# Population estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnitBallSampler:
    """Draw points uniformly from the n-dimensional unit ball."""

    dimension: int

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        g = rng.standard_normal((count, self.dimension))
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        radii = rng.random(count) ** (1.0 / self.dimension)
        return g * radii[:, None]


@dataclass(frozen=True)
class DatasetSampler:
    """Draw points uniformly (with replacement) from a dataset's rows."""

    dataset: LabeledDataset

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        idx = rng.integers(0, len(self.dataset), size=count)
        return self.dataset.features[idx]


@dataclass(frozen=True)
class PopulationEstimate:
    estimate: float
    half_width: float
    n_pairs: int


def hoeffding_half_width(n_pairs: int, confidence: float = 0.95) -> float:
    """Two-sided Hoeffding half-width for a [0,1] mean at the given confidence."""
    if n_pairs < 1:
        raise ValidationError("need at least one pair")
    return float(np.sqrt(np.log(2.0 / (1.0 - confidence)) / (2.0 * n_pairs)))


def population_mf_estimate(
    h,
    sampler,
    d: SimilarityMetric,
    gamma: float,
    n_pairs: int,
    seed: int,
) -> PopulationEstimate:
    """Monte-Carlo estimate of the population 0/1 fairness loss.

    Pairs are drawn i.i.d. from `sampler`; the half-width is the 95%
    two-sided Hoeffding bound, so it is distribution-free.
    """
    if n_pairs < 1:
        raise ValidationError("need at least one pair")
    rng = np.random.default_rng(seed)
    xs = sampler.sample(rng, n_pairs)
    ys = sampler.sample(rng, n_pairs)
    gaps = np.abs(h.predict_batch(xs) - h.predict_batch(ys))
    dists = d.pair_distances(xs, ys)
    est = float(np.mean(gaps > dists + gamma))
    return PopulationEstimate(est, hoeffding_half_width(n_pairs), n_pairs)


# ---------------------------------------------------------------------------
# Group profiles and perfect fairness
# ---------------------------------------------------------------------------


def _per_individual_rates(h, S: LabeledDataset, d: SimilarityMetric, gamma: float) -> np.ndarray:
    """For each x in S, the fraction of x' in S (self included) violating the
    fairness condition at slack gamma. O(m^2)."""
    values = h.predict_batch(S.features)
    gaps = np.abs(values[:, None] - values[None, :])
    dists = d.pairwise_matrix(S.features)
    return np.mean(gaps > dists + gamma, axis=1)


def all_pairs_mf_loss(h, S: LabeledDataset, d: SimilarityMetric, gamma: float) -> float:
    """0/1 fairness loss averaged over all ordered pairs within S."""
    return float(np.mean(_per_individual_rates(h, S, d, gamma)))


def group_fairness_profile(
    h,
    S: LabeledDataset,
    d: SimilarityMetric,
    gamma: float,
    alpha2_grid,
) -> list[tuple[float, float]]:
    """For each alpha2, the fraction of individuals whose violation rate
    strictly exceeds alpha2. A rate cannot exceed 1, so alpha2 = 1 maps to 0."""
    rates = _per_individual_rates(h, S, d, gamma)
    return [(float(a2), float(np.mean(rates > a2))) for a2 in alpha2_grid]


def is_perfectly_fair(h, pairs, d: SimilarityMetric, tolerance: float = 0.0):
    """Check |h(x) - h(x')| <= d(x, x') + tolerance on every given pair.

    Returns (ok, violating_pairs) where each violation records the pair and
    its gap/distance.
    """
    violations = []
    for x, x2 in pairs:
        xf = x.features if isinstance(x, Example) else np.asarray(x, dtype=np.float64)
        yf = x2.features if isinstance(x2, Example) else np.asarray(x2, dtype=np.float64)
        gap = abs(h.predict(xf) - h.predict(yf))
        dist = d.distance(xf, yf)
        if gap > dist + tolerance:
            violations.append((xf, yf, gap, dist))
    return (len(violations) == 0), violations


# ---------------------------------------------------------------------------
# Aggregate report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FairnessReport:
    empirical_mf_loss: float
    empirical_l1_loss: float
    population_estimate: float | None
    population_ci: float | None
    group_profile: tuple[tuple[float, float], ...]
    gamma: float
    n_edges: int

    def __post_init__(self):
        for name in ("empirical_mf_loss", "empirical_l1_loss"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise MetricFairError(f"{name} = {v} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "empirical_mf_loss": self.empirical_mf_loss,
            "empirical_l1_loss": self.empirical_l1_loss,
            "population_estimate": self.population_estimate,
            "population_ci": self.population_ci,
            "group_profile": [[a2, a1] for a2, a1 in self.group_profile],
            "gamma": self.gamma,
            "n_edges": self.n_edges,
        }


def audit_predictor(
    h,
    S: LabeledDataset,
    M: Matching,
    d: SimilarityMetric,
    gamma: float,
    alpha2_grid=(0.05, 0.1, 0.2, 0.5, 1.0),
    population_sampler=None,
    population_pairs: int = 0,
    seed: int = 0,
) -> FairnessReport:
    """Run the full audit: matching-based losses, the all-pairs group profile,
    and (optionally) a Monte-Carlo population estimate."""
    mf = empirical_mf_loss(h, S, M, d, gamma)
    l1 = empirical_l1_loss(h, S, M, d)
    profile = group_fairness_profile(h, S, d, gamma, alpha2_grid)
    pop_est = pop_ci = None
    if population_pairs > 0:
        sampler = population_sampler if population_sampler is not None else DatasetSampler(S)
        pop = population_mf_estimate(h, sampler, d, gamma, population_pairs, seed)
        pop_est, pop_ci = pop.estimate, pop.half_width
    return FairnessReport(
        empirical_mf_loss=mf,
        empirical_l1_loss=l1,
        population_estimate=pop_est,
        population_ci=pop_ci,
        group_profile=tuple(profile),
        gamma=gamma,
        n_edges=len(M),
    )
