"""Hot numeric kernels.

Every kernel has a pure-numpy implementation and, by default, a
numba ``@njit`` compiled twin. Set ``DXSEL_NO_NUMBA=1`` to force the
numpy path (useful for debugging and for the benchmark in
``benchmarks/bench_kernels.py``, which times both).

Inputs are assumed pre-clamped into (0, 1) where a logarithm is taken;
clamping is the caller's contract (see :mod:`dxsel.belief`).
"""

from __future__ import annotations

import math
import os

import numpy as np

NUMBA_DISABLED = os.environ.get("DXSEL_NO_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
}


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------


def _kl_bernoulli_many_np(q: np.ndarray, p: float) -> np.ndarray:
    return q * np.log(q / p) + (1.0 - q) * np.log((1.0 - q) / (1.0 - p))


def _expected_kl_np(q: np.ndarray, p: float) -> float:
    return float(np.mean(_kl_bernoulli_many_np(q, p)))


def _expected_kl_weighted_np(q: np.ndarray, w: np.ndarray, p: float) -> float:
    return float(np.dot(w, _kl_bernoulli_many_np(q, p)))


def _entropy_many_np(p: np.ndarray) -> np.ndarray:
    return -(p * np.log(p) + (1.0 - p) * np.log(1.0 - p))


def _mean_entropy_np(q: np.ndarray) -> float:
    return float(np.mean(_entropy_many_np(q)))


def _mean_entropy_weighted_np(q: np.ndarray, w: np.ndarray) -> float:
    return float(np.dot(w, _entropy_many_np(q)))


def _wasserstein_sorted_np(a: np.ndarray, b: np.ndarray) -> float:
    # Area between the two empirical CDFs; a and b must be sorted ascending.
    values = np.concatenate([a, b])
    values.sort(kind="mergesort")
    deltas = np.diff(values)
    cdf_a = np.searchsorted(a, values[:-1], side="right") / a.shape[0]
    cdf_b = np.searchsorted(b, values[:-1], side="right") / b.shape[0]
    return float(np.sum(np.abs(cdf_a - cdf_b) * deltas))


def _energy_stat_np(a: np.ndarray, b: np.ndarray) -> float:
    # 2 E|A-B| - E|A-A'| - E|B-B'| with V-statistic (n*m) normalization.
    ab = np.abs(a[:, None] - b[None, :]).mean()
    aa = np.abs(a[:, None] - a[None, :]).mean()
    bb = np.abs(b[:, None] - b[None, :]).mean()
    return float(2.0 * ab - aa - bb)


# ---------------------------------------------------------------------------
# numba loop implementations (compiled below when enabled)
# ---------------------------------------------------------------------------


def _kl_bernoulli_many_loop(q, p):
    out = np.empty(q.shape[0])
    for j in range(q.shape[0]):
        qj = q[j]
        out[j] = qj * math.log(qj / p) + (1.0 - qj) * math.log((1.0 - qj) / (1.0 - p))
    return out


def _expected_kl_loop(q, p):
    total = 0.0
    for j in range(q.shape[0]):
        qj = q[j]
        total += qj * math.log(qj / p) + (1.0 - qj) * math.log((1.0 - qj) / (1.0 - p))
    return total / q.shape[0]


def _expected_kl_weighted_loop(q, w, p):
    total = 0.0
    for j in range(q.shape[0]):
        qj = q[j]
        kl = qj * math.log(qj / p) + (1.0 - qj) * math.log((1.0 - qj) / (1.0 - p))
        total += w[j] * kl
    return total


def _entropy_many_loop(p):
    out = np.empty(p.shape[0])
    for j in range(p.shape[0]):
        pj = p[j]
        out[j] = -(pj * math.log(pj) + (1.0 - pj) * math.log(1.0 - pj))
    return out


def _mean_entropy_loop(q):
    total = 0.0
    for j in range(q.shape[0]):
        qj = q[j]
        total += -(qj * math.log(qj) + (1.0 - qj) * math.log(1.0 - qj))
    return total / q.shape[0]


def _mean_entropy_weighted_loop(q, w):
    total = 0.0
    for j in range(q.shape[0]):
        qj = q[j]
        total += w[j] * -(qj * math.log(qj) + (1.0 - qj) * math.log(1.0 - qj))
    return total


def _wasserstein_sorted_loop(a, b):
    n = a.shape[0]
    m = b.shape[0]
    i = 0
    j = 0
    cdf_a = 0.0
    cdf_b = 0.0
    last = 0.0
    area = 0.0
    started = False
    while i < n or j < m:
        if j >= m or (i < n and a[i] <= b[j]):
            nxt = a[i]
        else:
            nxt = b[j]
        if started:
            area += abs(cdf_a - cdf_b) * (nxt - last)
        while i < n and a[i] == nxt:
            i += 1
        while j < m and b[j] == nxt:
            j += 1
        cdf_a = i / n
        cdf_b = j / m
        last = nxt
        started = True
    return area


def _energy_stat_loop(a, b):
    n = a.shape[0]
    m = b.shape[0]
    ab = 0.0
    for i in range(n):
        for j in range(m):
            ab += abs(a[i] - b[j])
    ab /= n * m
    aa = 0.0
    for i in range(n):
        for j in range(n):
            aa += abs(a[i] - a[j])
    aa /= n * n
    bb = 0.0
    for i in range(m):
        for j in range(m):
            bb += abs(b[i] - b[j])
    bb /= m * m
    return 2.0 * ab - aa - bb


# ---------------------------------------------------------------------------
# path selection
# ---------------------------------------------------------------------------

NUMBA_ENABLED = False

if not NUMBA_DISABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        njit = None
    if njit is not None:
        kl_bernoulli_many = njit(cache=True)(_kl_bernoulli_many_loop)
        expected_kl_arr = njit(cache=True)(_expected_kl_loop)
        expected_kl_weighted_arr = njit(cache=True)(_expected_kl_weighted_loop)
        entropy_many = njit(cache=True)(_entropy_many_loop)
        mean_entropy_arr = njit(cache=True)(_mean_entropy_loop)
        mean_entropy_weighted_arr = njit(cache=True)(_mean_entropy_weighted_loop)
        wasserstein_sorted = njit(cache=True)(_wasserstein_sorted_loop)
        energy_stat = njit(cache=True)(_energy_stat_loop)
        NUMBA_ENABLED = True

if not NUMBA_ENABLED:
    kl_bernoulli_many = _kl_bernoulli_many_np
    expected_kl_arr = _expected_kl_np
    expected_kl_weighted_arr = _expected_kl_weighted_np
    entropy_many = _entropy_many_np
    mean_entropy_arr = _mean_entropy_np
    mean_entropy_weighted_arr = _mean_entropy_weighted_np
    wasserstein_sorted = _wasserstein_sorted_np
    energy_stat = _energy_stat_np


def warm_up() -> None:
    """Trigger JIT compilation of every kernel on tiny inputs."""
    q = np.array([0.4, 0.6])
    w = np.array([0.5, 0.5])
    kl_bernoulli_many(q, 0.5)
    expected_kl_arr(q, 0.5)
    expected_kl_weighted_arr(q, w, 0.5)
    entropy_many(q)
    mean_entropy_arr(q)
    mean_entropy_weighted_arr(q, w)
    wasserstein_sorted(q, q)
    energy_stat(q, q)
