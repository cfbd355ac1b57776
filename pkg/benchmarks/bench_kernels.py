"""Benchmark the jit kernels against the pure-numpy fallback.

Runs each kernel under the active configuration, then re-executes
itself with ``DXSEL_NO_NUMBA=1`` and prints both timings side by side:

    python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time

import numpy as np


def bench() -> dict[str, float]:
    from dxsel import _kernels

    rng = np.random.default_rng(0)
    q_small = rng.uniform(1e-6, 1 - 1e-6, size=200)       # one candidate's draws
    q_large = rng.uniform(1e-6, 1 - 1e-6, size=200_000)   # a fidelity sweep
    w_large = rng.dirichlet(np.ones(200_000))
    a = np.sort(rng.normal(size=4_000))
    b = np.sort(rng.normal(loc=0.3, size=4_000))

    cases = {
        "expected_kl[200] x2000": lambda: [
            _kernels.expected_kl_arr(q_small, 0.3) for _ in range(2000)
        ],
        "expected_kl[200k]": lambda: _kernels.expected_kl_arr(q_large, 0.3),
        "weighted_kl[200k]": lambda: _kernels.expected_kl_weighted_arr(q_large, w_large, 0.3),
        "mean_entropy[200k]": lambda: _kernels.mean_entropy_arr(q_large),
        "wasserstein[4k,4k]": lambda: _kernels.wasserstein_sorted(a, b),
        "energy[4k,4k]": lambda: _kernels.energy_stat(a, b),
    }

    _kernels.warm_up()
    for case in cases.values():
        case()  # one untimed pass per input shape

    timings = {}
    for name, case in cases.items():
        start = time.perf_counter()
        for _ in range(3):
            case()
        timings[name] = (time.perf_counter() - start) / 3
    return {"numba_enabled": _kernels.NUMBA_ENABLED, "timings": timings}


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] == "--json":
        print(json.dumps(bench()))
        sys.exit(0)

    here = bench()
    env = dict(os.environ, DXSEL_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, __file__, "--json"], capture_output=True, text=True, env=env, check=True
    )
    there = json.loads(out.stdout.strip().splitlines()[-1])

    label_a = "numba" if here["numba_enabled"] else "numpy"
    label_b = "numba" if there["numba_enabled"] else "numpy"
    print(f"{'kernel':<28} {label_a:>12} {label_b:>12} {'speedup':>9}")
    for name, t_here in here["timings"].items():
        t_there = there["timings"][name]
        ratio = t_there / t_here if t_here else float("inf")
        print(f"{name:<28} {t_here * 1e3:>10.3f}ms {t_there * 1e3:>10.3f}ms {ratio:>8.2f}x")
