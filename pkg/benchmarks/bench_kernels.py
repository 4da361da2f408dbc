"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py --repeat 5

Each kernel is run on identical inputs under both backends; the outputs are
compared bit for bit before any timing is reported.
"""
import argparse
import statistics
import time

import numpy as np

from fairopt import backend
from fairopt.dynamics import optimizer_params
from fairopt.optimizers import Algorithm, OptimizerConfig
from fairopt.stats import SeededStream


def workloads(scale: float):
    trials = max(1, int(1000 * scale))
    s = SeededStream(0)
    w0 = np.zeros(trials)
    u = s.uniform((trials, 100))
    xi = s.normal((max(1, int(200 * scale)), 5000))
    ranks = 2 * np.arange(1, 21, dtype=np.int64)  # doubled ranks, the exact-test limit
    cases = {}
    for alg in (Algorithm.SGD, Algorithm.RMSPROP, Algorithm.ADAM):
        params = optimizer_params(OptimizerConfig(alg, eta=0.1))
        cases[f"warmup_paths[{alg.value}] {trials}x100"] = (
            "warmup_paths", (w0, u, 0.1, 1.0, -1.0, params, 1))
    cases[f"sgd_sde_paths {xi.shape[0]}x{xi.shape[1]}"] = (
        "sgd_sde_paths", (np.zeros(xi.shape[0]), xi, -0.8, 0.01, 0.019, 10))
    cases[f"rmsprop_sde_paths {xi.shape[0]}x{xi.shape[1]}"] = (
        "rmsprop_sde_paths",
        (np.zeros(xi.shape[0]), np.full(xi.shape[0], 0.36), xi, -0.8, 0.36, 1.0, 0.1, 1e-8, 0.9, 0.001, 10, 1.0))
    cases["signed_rank_null_counts n=20"] = ("signed_rank_null_counts", (ranks,))
    return cases


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b, equal_nan=True)


def best_time(fn, args, repeat: int) -> tuple[float, float]:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return min(times), statistics.median(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--scale", type=float, default=1.0, help="multiplies the problem sizes")
    args = parser.parse_args(argv)

    if "cython" not in backend.BACKENDS:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    py, cy = backend.get("python"), backend.get("cython")

    print(f"{'kernel':44s} {'python [s]':>11s} {'cython [s]':>11s} {'speed-up':>9s}")
    for label, (name, kargs) in workloads(args.scale).items():
        if not same(getattr(py, name)(*kargs), getattr(cy, name)(*kargs)):
            raise SystemExit(f"{label}: backends disagree")
        t_py, _ = best_time(getattr(py, name), kargs, args.repeat)
        t_cy, _ = best_time(getattr(cy, name), kargs, args.repeat)
        print(f"{label:44s} {t_py:11.4f} {t_cy:11.4f} {t_py / t_cy:8.1f}x")


if __name__ == "__main__":
    main()
