"""Evaluation metrics: classification scores, distribution distances,
best-of-k error, and the Bayesian bootstrap.

AUC uses the rank (Mann-Whitney) formulation with ties averaged; a
single-class label set yields an explicitly undefined AUC (``None``),
never a flattering 0.5. Distribution distances operate on empirical
samples; for cross-feature averaging, normalize values to the true
dataset's per-feature range first (:func:`normalize_feature`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels


@dataclass(frozen=True, slots=True)
class ClassificationMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    n: int

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "n": self.n,
        }


def _rank_auc(labels: np.ndarray, risks: np.ndarray) -> float | None:
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(risks, kind="mergesort")
    sorted_risks = risks[order]
    ranks = np.empty(labels.shape[0])
    i = 0
    while i < sorted_risks.shape[0]:
        j = i
        while j + 1 < sorted_risks.shape[0] and sorted_risks[j + 1] == sorted_risks[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def compute_classification_metrics(
    labels: Sequence[int], risks: Sequence[float], threshold: float = 0.5
) -> ClassificationMetrics:
    """Threshold metrics plus rank AUC; empty denominators score 0."""
    labels_arr = np.asarray(labels, dtype=np.int64)
    risks_arr = np.asarray(risks, dtype=np.float64)
    if labels_arr.shape != risks_arr.shape or labels_arr.size == 0:
        raise ValueError("labels and risks must be equal-length and non-empty")
    predictions = (risks_arr >= threshold).astype(np.int64)
    tp = int(((predictions == 1) & (labels_arr == 1)).sum())
    fp = int(((predictions == 1) & (labels_arr == 0)).sum())
    fn = int(((predictions == 0) & (labels_arr == 1)).sum())
    accuracy = float((predictions == labels_arr).mean())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ClassificationMetrics(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        auc=_rank_auc(labels_arr, risks_arr),
        n=labels_arr.size,
    )


def wasserstein_1d(a: Sequence[float], b: Sequence[float]) -> float:
    """1-Wasserstein distance between empirical distributions.

    Computed as the area between the two empirical CDFs (quantile
    integration), which is exact for equal and unequal sample sizes.
    """
    a_arr = np.sort(np.asarray(a, dtype=np.float64))
    b_arr = np.sort(np.asarray(b, dtype=np.float64))
    if a_arr.size == 0 or b_arr.size == 0:
        raise ValueError("empty sample set")
    return float(_kernels.wasserstein_sorted(a_arr, b_arr))


def energy_distance_1d(a: Sequence[float], b: Sequence[float]) -> float:
    """Energy distance sqrt(2 E|A-B| - E|A-A'| - E|B-B'|) over samples."""
    a_arr = np.asarray(a, dtype=np.float64)
    b_arr = np.asarray(b, dtype=np.float64)
    if a_arr.size == 0 or b_arr.size == 0:
        raise ValueError("empty sample set")
    stat = float(_kernels.energy_stat(a_arr, b_arr))
    return math.sqrt(max(stat, 0.0))


def normalize_feature(
    values: Sequence[float], empirical_min: float, empirical_max: float
) -> np.ndarray:
    """Min-max scale by the true dataset's range, clamping overshoot."""
    if not empirical_max > empirical_min:
        raise ValueError("constant feature")
    scaled = (np.asarray(values, dtype=np.float64) - empirical_min) / (
        empirical_max - empirical_min
    )
    return np.clip(scaled, 0.0, 1.0)


def best_of_k_mae(samples: Sequence[float], truth: float, k: int) -> float:
    """Smallest absolute error among the first ``k`` samples."""
    if k < 1 or k > len(samples):
        raise ValueError(f"k={k} out of range for {len(samples)} samples")
    return float(min(abs(float(s) - truth) for s in samples[:k]))


def bayesian_bootstrap(
    values: Sequence[float], draws: int = 2000, rng_seed: int | None = None
) -> tuple[float, float, tuple[float, float]]:
    """Posterior of the mean under flat-Dirichlet observation weights.

    Each draw weights the observations by normalized unit exponentials
    and records the weighted mean. Returns (mean, std, 95% interval) of
    the draw distribution; use at least ~1000 draws for stable interval
    endpoints.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty sample set")
    if draws < 1:
        raise ValueError("draws must be positive")
    rng = np.random.default_rng(rng_seed)
    weights = rng.exponential(size=(draws, arr.size))
    weights /= weights.sum(axis=1, keepdims=True)
    means = weights @ arr
    mean = float(means.mean())
    lower, upper = np.percentile(means, [2.5, 97.5])
    # Guard the lower <= mean <= upper contract against percentile
    # rounding on (near-)degenerate inputs.
    return mean, float(means.std()), (min(float(lower), mean), max(float(upper), mean))
