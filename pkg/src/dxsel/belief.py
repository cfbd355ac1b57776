"""Closed-form Bernoulli information theory for a binary disease belief.

The belief over a diagnosis is a single Bernoulli parameter ``p``. This
module provides the KL divergence and entropy of such beliefs, the
Monte Carlo estimator of expected information gain over hypothetical
posterior draws, cost-normalized utility, and the confidence-margin
stopping threshold used by the selection loop.

All logarithms are natural (results in nats). Probabilities are clamped
into ``[EPS, 1 - EPS]`` before any logarithm so that degenerate 0/1
beliefs emitted by simulators stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import CostError

EPS = 1e-6

# Slack accepted on raw inputs before rejecting them as non-probabilities.
_CONSTRUCTION_TOL = 1e-9


def clamp_probability(p: float) -> float:
    """Clamp ``p`` into ``[EPS, 1 - EPS]``, rejecting values outside [0, 1].

    Values within ``1e-9`` of the unit interval are accepted and pulled
    inside; anything further out is a caller bug, not noise.
    """
    p = float(p)
    if math.isnan(p) or p < -_CONSTRUCTION_TOL or p > 1.0 + _CONSTRUCTION_TOL:
        raise ValueError(f"not a probability: {p!r}")
    return min(max(p, EPS), 1.0 - EPS)


@dataclass(frozen=True, slots=True)
class Belief:
    """Bernoulli disease-probability belief, stored clamped."""

    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", clamp_probability(self.p))


@dataclass(frozen=True, slots=True)
class StoppingPolicy:
    """Decision threshold ``theta`` and confidence margin ``gamma``.

    ``gamma`` scales how far beyond the decision boundary the target
    posterior sits: larger values demand stronger expected evidence
    before another test is worth acquiring.
    """

    theta: float = 0.5
    gamma: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie strictly inside (0, 1): {self.theta}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1]: {self.gamma}")


@dataclass(frozen=True, slots=True)
class CostModel:
    """Test cost structure for the normalized utility.

    In ``uniform`` mode utility reduces to the raw information gain. In
    ``per-feature`` mode each raw cost ``c*`` must exceed 1 so that the
    log-scaled divisor ``ln c*`` is positive. ``trade_off`` records the
    nominal accuracy-vs-cost weight of the underlying constrained
    objective; it is metadata only and never enters the utility.
    """

    mode: str = "uniform"
    raw_costs: Mapping[str, float] = field(default_factory=dict)
    trade_off: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("uniform", "per-feature"):
            raise ValueError(f"unknown cost mode: {self.mode!r}")
        if self.trade_off < 0.0:
            raise ValueError("trade_off must be nonnegative")
        if self.mode == "per-feature":
            for name, cost in self.raw_costs.items():
                if cost <= 1.0:
                    raise ValueError(
                        f"per-feature cost for {name!r} must exceed 1, got {cost}"
                    )

    @classmethod
    def uniform(cls) -> "CostModel":
        return cls(mode="uniform")

    @classmethod
    def per_feature(cls, raw_costs: Mapping[str, float], trade_off: float = 0.0) -> "CostModel":
        return cls(mode="per-feature", raw_costs=dict(raw_costs), trade_off=trade_off)


def _prob(value) -> float:
    return clamp_probability(value.p if isinstance(value, Belief) else value)


def kl_bernoulli(q, p) -> float:
    """KL(Bern(q) || Bern(p)) in nats. Zero iff q == p after clamping.

    Floored at 0: cancellation for q very close to p can otherwise leak
    a tiny negative value.
    """
    q = _prob(q)
    p = _prob(p)
    value = q * math.log(q / p) + (1.0 - q) * math.log((1.0 - q) / (1.0 - p))
    return max(value, 0.0)


def entropy_bernoulli(p) -> float:
    """Shannon entropy of Bern(p) in nats; maximal (ln 2) at p = 0.5."""
    p = _prob(p)
    return -(p * math.log(p) + (1.0 - p) * math.log(1.0 - p))


def _draws_array(posterior_draws: Sequence[float]) -> np.ndarray:
    if len(posterior_draws) == 0:
        raise ValueError("no posterior samples")
    return np.array([_prob(q) for q in posterior_draws], dtype=np.float64)


def _weights_array(weights: Sequence[float], n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError("weights must match the number of posterior draws")
    if np.any(w < 0.0) or not math.isclose(float(w.sum()), 1.0, abs_tol=1e-9):
        raise ValueError("weights must be nonnegative and sum to 1")
    return w


def expected_kl(posterior_draws: Sequence[float], prior, weights: Sequence[float] | None = None) -> float:
    """Average KL from each posterior draw to the (fixed) prior.

    The prior is a constant across draws; each draw contributes
    ``KL(posterior || prior)``. With ``weights`` the mean becomes a
    weighted expectation (used by exact-enumeration simulators); the
    default is the uniform Monte Carlo average.
    """
    q = _draws_array(posterior_draws)
    p = _prob(prior)
    if weights is None:
        value = float(_kernels.expected_kl_arr(q, p))
    else:
        w = _weights_array(weights, q.shape[0])
        value = float(_kernels.expected_kl_weighted_arr(q, w, p))
    return max(value, 0.0)


def entropy_eig(prior, posterior_draws: Sequence[float], weights: Sequence[float] | None = None) -> float:
    """Entropy-based expected information gain; may be negative.

    Returns ``H(prior) - mean_j H(posterior_j)``. A test that moves a
    confident-but-wrong belief toward 0.5 raises expected entropy and
    scores negative here even though it is genuinely informative, which
    is exactly why the KL criterion exists.
    """
    q = _draws_array(posterior_draws)
    prior_h = entropy_bernoulli(prior)
    if weights is None:
        return prior_h - float(_kernels.mean_entropy_arr(q))
    w = _weights_array(weights, q.shape[0])
    return prior_h - float(_kernels.mean_entropy_weighted_arr(q, w))


def utility(info_gain: float, feature: str, cost_model: CostModel) -> float:
    """Cost-normalized utility of an information gain.

    Uniform costs leave the gain unchanged; per-feature costs divide by
    ``ln c*(feature)``.
    """
    if info_gain < 0.0:
        raise ValueError("information gain must be nonnegative")
    if cost_model.mode == "uniform":
        return info_gain
    try:
        raw = cost_model.raw_costs[feature]
    except KeyError:
        raise CostError(f"no cost for feature {feature!r}") from None
    return info_gain / math.log(raw)


def stopping_threshold(prior, policy: StoppingPolicy) -> float:
    """Minimum expected KL a test must promise to justify acquisition.

    The target posterior sits at distance ``gamma * |p - theta|`` past
    the decision boundary, on the far side from the prior, so the
    threshold strictly increases with ``gamma`` whenever the prior is
    away from the boundary.
    """
    p = _prob(prior)
    delta = abs(p - policy.theta)
    if p < policy.theta:
        q_target = policy.theta + policy.gamma * delta
    else:
        q_target = policy.theta - policy.gamma * delta
    return kl_bernoulli(q_target, p)
