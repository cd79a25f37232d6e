"""Aggregation of replicate verdicts and agreement with human labels."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import ContractError, GoldLabel, TaskKind, exact_mean, round_half_away
from .judge import JudgmentSet

LEVELS = ("nominal", "ordinal", "interval")
RNG_NAME = f"numpy.random.PCG64 (numpy {np.__version__})"


class DegenerateDataWarning(UserWarning):
    """All ratings identical: expected disagreement is zero and alpha is set to 1."""


@dataclass(frozen=True)
class AggregatedOutcome:
    instance_id: str
    pairwise_outcome: Optional[str] = None  # "win_1", "win_2" or "tie"
    direct_score: Optional[int] = None

    def __post_init__(self):
        if (self.pairwise_outcome is None) == (self.direct_score is None):
            raise ContractError("exactly one of pairwise_outcome / direct_score must be set")
        if self.pairwise_outcome not in (None, "win_1", "win_2", "tie"):
            raise ContractError(f"bad pairwise outcome {self.pairwise_outcome!r}")


@dataclass(frozen=True)
class BootstrapConfig:
    iterations: int = 1000
    seed: int = 42
    confidence: float = 0.95

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must be in (0, 1)")


@dataclass(frozen=True)
class BootstrapResult:
    ci_low: float
    ci_high: float
    significant: bool
    observed: float


def _require(jset: JudgmentSet, kind: TaskKind) -> None:
    if jset.kind is not kind:
        raise ContractError(f"{jset.instance_id}: expected {kind.value} set, got {jset.kind.value}")
    if not jset.replicates:
        raise ContractError(f"{jset.instance_id}: empty judgment set")


def aggregate_pairwise(jset: JudgmentSet) -> AggregatedOutcome:
    """Majority vote; an even split is a tie."""
    _require(jset, TaskKind.PAIRWISE)
    ones = jset.values.count(1)
    twos = len(jset.values) - ones
    outcome = "win_1" if ones > twos else "win_2" if twos > ones else "tie"
    return AggregatedOutcome(jset.instance_id, pairwise_outcome=outcome)


def aggregate_direct(jset: JudgmentSet) -> AggregatedOutcome:
    _require(jset, TaskKind.DIRECT)
    score = round_half_away(exact_mean(jset.values))
    return AggregatedOutcome(jset.instance_id, direct_score=min(5, max(1, score)))


def aggregate(jset: JudgmentSet) -> AggregatedOutcome:
    return aggregate_pairwise(jset) if jset.kind is TaskKind.PAIRWISE else aggregate_direct(jset)


def pairwise_instance_score(outcome: AggregatedOutcome, gold: GoldLabel) -> float:
    if outcome.pairwise_outcome is None or gold.pairwise_winner is None:
        raise ContractError(f"{outcome.instance_id}: not a pairwise outcome")
    if outcome.pairwise_outcome == "tie":
        return 0.5
    return 1.0 if outcome.pairwise_outcome == f"win_{gold.pairwise_winner}" else 0.0


def accuracy(outcomes: Sequence[AggregatedOutcome], golds: Sequence[GoldLabel]) -> float:
    """Expected-value accuracy: a tie earns half credit."""
    if not outcomes or len(outcomes) != len(golds):
        raise ContractError(f"accuracy needs aligned non-empty lists ({len(outcomes)} vs {len(golds)})")
    return sum(pairwise_instance_score(o, g) for o, g in zip(outcomes, golds)) / len(outcomes)


def _delta_matrix(values: np.ndarray, marginals: np.ndarray, level: str) -> np.ndarray:
    if level == "nominal":
        return (values[:, None] != values[None, :]).astype(float)
    if level == "interval":
        return (values[:, None] - values[None, :]) ** 2
    if level == "ordinal":
        cum = np.concatenate([[0.0], np.cumsum(marginals)])
        v = len(values)
        delta = np.zeros((v, v))
        for c in range(v):
            for k in range(v):
                lo, hi = min(c, k), max(c, k)
                delta[c, k] = (cum[hi + 1] - cum[lo] - (marginals[c] + marginals[k]) / 2) ** 2
        return delta
    raise ValueError(f"unknown level {level!r}; choose from {LEVELS}")


def krippendorff_alpha(pairs: Sequence[tuple[float, float]], level: str = "interval") -> float:
    """Alpha for two raters (system, gold) over the same units.

    Computed from the coincidence matrix of the pooled values. When every
    value is identical the expected disagreement is zero; alpha is then
    reported as 1.0 and a ``DegenerateDataWarning`` is issued.
    """
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}; choose from {LEVELS}")
    data = np.asarray(pairs, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise ContractError("krippendorff_alpha needs at least two (system, gold) pairs")
    values, inverse = np.unique(data, return_inverse=True)
    codes = inverse.reshape(data.shape)
    v = len(values)
    coincidence = np.zeros((v, v))
    # each unit holds two pairable values, so each ordered pair weighs 1/(2-1)
    np.add.at(coincidence, (codes[:, 0], codes[:, 1]), 1.0)
    np.add.at(coincidence, (codes[:, 1], codes[:, 0]), 1.0)
    marginals = coincidence.sum(axis=1)
    n = marginals.sum()
    delta = _delta_matrix(values, marginals, level)
    observed = (coincidence * delta).sum() / n
    expected = (np.outer(marginals, marginals) * delta).sum() / (n * (n - 1))
    if expected == 0:
        warnings.warn("no variation in ratings; alpha defined as 1.0", DegenerateDataWarning,
                      stacklevel=2)
        return 1.0
    return float(1.0 - observed / expected)


def _interval(diffs: np.ndarray, observed: float, confidence: float) -> BootstrapResult:
    tail = (1 - confidence) / 2 * 100
    low, high = np.percentile(diffs, [tail, 100 - tail])
    return BootstrapResult(float(low), float(high), bool(low > 0 or high < 0), float(observed))


def resample_indices(n: int, config: BootstrapConfig) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(config.seed))
    return rng.integers(0, n, size=(config.iterations, n))


def bootstrap_diff(per_instance_a: Sequence[float], per_instance_b: Sequence[float],
                   config: BootstrapConfig = BootstrapConfig(),
                   statistic: Callable[[np.ndarray], float] = np.mean) -> BootstrapResult:
    """Paired bootstrap CI for statistic(a) - statistic(b).

    Both lists are indexed by the same resampled instance indices each
    iteration. The difference is significant when the CI excludes zero.
    """
    a = np.asarray(per_instance_a, dtype=float)
    b = np.asarray(per_instance_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError(f"bootstrap needs aligned 1-d lists ({a.shape} vs {b.shape})")
    if len(a) < 2:
        raise ContractError("bootstrap needs at least two instances")
    idx = resample_indices(len(a), config)
    if statistic is np.mean:
        diffs = a[idx].mean(axis=1) - b[idx].mean(axis=1)
    else:
        diffs = np.array([statistic(a[row]) - statistic(b[row]) for row in idx])
    return _interval(diffs, statistic(a) - statistic(b), config.confidence)


def bootstrap_alpha_diff(system_a: Sequence[float], system_b: Sequence[float],
                         gold: Sequence[float], config: BootstrapConfig = BootstrapConfig(),
                         level: str = "interval") -> BootstrapResult:
    """Paired bootstrap on alpha itself rather than a per-instance proxy."""
    a, b, g = (np.asarray(x, dtype=float) for x in (system_a, system_b, gold))
    if not (a.shape == b.shape == g.shape) or len(a) < 2:
        raise ContractError("alpha bootstrap needs aligned lists of at least two instances")
    idx = resample_indices(len(a), config)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateDataWarning)
        diffs = np.array([
            krippendorff_alpha(np.column_stack([a[row], g[row]]), level)
            - krippendorff_alpha(np.column_stack([b[row], g[row]]), level)
            for row in idx
        ])
        observed = (krippendorff_alpha(np.column_stack([a, g]), level)
                    - krippendorff_alpha(np.column_stack([b, g]), level))
    return _interval(diffs, observed, config.confidence)
