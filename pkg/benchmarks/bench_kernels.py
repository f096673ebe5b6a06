"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 1000 5000] [--repeat 3]

Prints one line per (kernel, size, backend) with the best wall time, and the
speed-up of numba over numpy.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from sgnpoly import _accel, kernels
from sgnpoly.graph import sample_adjacency
from sgnpoly.model import DcmmParams, MembershipLaw, ThetaLaw, build_omega, two_level_p, sample_params
from sgnpoly.stats import eta_hat


def dcmm_omega(n: int, mean_degree: float, seed: int = 0) -> np.ndarray:
    law = ThetaLaw.pareto(10, 0.375, 1.0)
    params = sample_params(n, 2, law, MembershipLaw.uniform_basis(2), two_level_p(2, 0.5), seed)
    om = build_omega(params)
    scale = mean_degree / ((om.sum() - np.trace(om)) / n)
    return build_omega(DcmmParams(params.theta * math.sqrt(scale), params.pi, params.p))


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n: int, seed: int = 0):
    omega = dcmm_omega(n, 20.0, seed)
    adj = sample_adjacency(omega, seed)
    c = eta_hat(adj).values
    reps = 64
    chi_n = min(n, 300)
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.01, 0.1, (reps, chi_n, 2))
    xts = rng.uniform(0.01, 0.1, (reps, chi_n, 2))
    p = two_level_p(2, 0.5)
    t = np.full(chi_n, 0.05)
    return {
        "bernoulli_edges": lambda: kernels.keyed_bernoulli_edges(omega, seed),
        "centered_square_rows": lambda: kernels.centered_square_rows(adj.csr, c),
        f"chi2_log_products[{reps}x{chi_n}]": lambda: kernels.chi2_log_products(xs, xts, p, t),
    }


def run(sizes, repeat: int) -> list[tuple[str, int, str, float]]:
    results = []
    names = ["numba", "numpy"] if _accel.HAVE_NUMBA else ["numpy"]
    for n in sizes:
        for kernel, fn in cases(n).items():
            for name in names:
                with _accel.backend(name):
                    fn()  # warm-up (JIT compile or cache load)
                    results.append((kernel, n, name, best_of(fn, repeat)))
    return results


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 2000, 5000])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rows = run(args.sizes, args.repeat)
    print(f"threads={_accel.thread_count()} numba={'yes' if _accel.HAVE_NUMBA else 'no'}")
    print(f"{'kernel':34s} {'n':>6s} {'backend':>8s} {'seconds':>10s}")
    timing = {}
    for kernel, n, name, sec in rows:
        timing[(kernel, n, name)] = sec
        print(f"{kernel:34s} {n:6d} {name:>8s} {sec:10.4f}")
    if _accel.HAVE_NUMBA:
        print()
        for kernel, n, name, _ in rows:
            if name == "numba":
                speed = timing[(kernel, n, "numpy")] / timing[(kernel, n, "numba")]
                print(f"{kernel:34s} {n:6d} speed-up x{speed:.1f}")


if __name__ == "__main__":
    main()
