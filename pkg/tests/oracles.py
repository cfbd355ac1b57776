"""Independent oracles used only by the tests.

These deliberately do not call the package's own math: KL and entropy
come from high-precision mpmath closed forms, and the world oracle does
its own Bayes enumeration over world parameters. Expected values frozen
in the tests were computed with these.
"""

from __future__ import annotations

from mpmath import mp, mpf, log

mp.dps = 40


def kl_oracle(q: float, p: float) -> float:
    q, p = mpf(repr(q)), mpf(repr(p))
    return float(q * log(q / p) + (1 - q) * log((1 - q) / (1 - p)))


def entropy_oracle(p: float) -> float:
    p = mpf(repr(p))
    return float(-p * log(p) - (1 - p) * log(1 - p))


def mean_kl_oracle(draws, prior) -> float:
    return float(sum(kl_oracle(q, prior) for q in draws) / len(draws))


# -- exact world computations (own Bayes, no package calls) -----------------


def world_posterior(world, evidence: dict) -> float:
    """P(sick | evidence) for a conditionally independent binary world."""
    like_sick, like_healthy = 1.0, 1.0
    for name, value in evidence.items():
        feature = world.features[name]
        index = feature.support.index(value)
        like_sick *= feature.p_given_sick[index]
        like_healthy *= feature.p_given_healthy[index]
    numerator = world.prior_disease_rate * like_sick
    denominator = numerator + (1.0 - world.prior_disease_rate) * like_healthy
    return numerator / denominator


def world_expected_kl(world, feature_name: str, evidence: dict) -> float:
    """Exact expected KL of one candidate by outcome enumeration."""
    prior = world_posterior(world, evidence)
    feature = world.features[feature_name]
    total = 0.0
    for index, value in enumerate(feature.support):
        p_sick = world_posterior(world, evidence)
        prob = p_sick * feature.p_given_sick[index] + (1 - p_sick) * feature.p_given_healthy[index]
        if prob <= 0.0:
            continue
        extended = dict(evidence)
        extended[feature_name] = value
        posterior = world_posterior(world, extended)
        total += prob * kl_oracle(posterior, prior)
    return total


def world_argmax_feature(world, evidence: dict, candidates) -> str:
    """Brute-force optimal next test; first candidate wins ties."""
    best_name, best_gain = None, -1.0
    for name in candidates:
        gain = world_expected_kl(world, name, evidence)
        if gain > best_gain:
            best_name, best_gain = name, gain
    return best_name
