"""Time the compiled and pure-Python episode kernels on identical inputs.

    python benchmarks/bench_kernels.py [-T 101000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from monotone_bandits.env import grid_values, make_random_peak_instance
from monotone_bandits.kernels import get_backend
from monotone_bandits.policies import escalation_params, ucb_grid_size


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(T, repeat, sigma=0.1):
    f = make_random_peak_instance(np.random.default_rng(0))
    noise = np.random.default_rng(1).standard_normal(T)
    K, m = escalation_params(T)
    Ku = ucb_grid_size(T)
    cases = {
        "alg1": (grid_values(f, K), lambda kern, g, a, r: kern.escalation_episode(g, noise, sigma, K, m, sigma, a, r)),
        "ucb": (grid_values(f, Ku), lambda kern, g, a, r: kern.ucb_episode(g, noise, sigma, Ku, sigma, False, False, a, r)),
        "ucb-mono": (grid_values(f, Ku), lambda kern, g, a, r: kern.ucb_episode(g, noise, sigma, Ku, sigma, True, False, a, r)),
    }
    backends = {}
    for name in ("python", "cython"):
        try:
            backends[name] = get_backend(name)
        except ImportError:
            print(f"{name} backend unavailable")
    print(f"T={T}")
    for case, (g, call) in cases.items():
        times, arms = {}, {}
        for name, kern in backends.items():
            a, r = np.empty(T, dtype=np.int64), np.empty(T)
            times[name], _ = _time(lambda: call(kern, g, a, r), repeat)
            arms[name] = a.copy()
        line = "  ".join(f"{n} {t:.4f}s" for n, t in times.items())
        if len(times) == 2:
            same = np.array_equal(arms["python"], arms["cython"])
            line += f"  speedup {times['python'] / times['cython']:.1f}x  identical={same}"
        print(f"  {case:9s} {line}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("-T", type=int, default=101000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    bench(args.T, args.repeat)


if __name__ == "__main__":
    main()
