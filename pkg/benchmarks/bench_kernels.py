"""Compiled kernels vs numpy fallback on simulator-sized inputs.

    python benchmarks/bench_kernels.py [--repeat 200]
"""
import argparse
import timeit

import numpy as np

from maopac import _fallback
from maopac.social_learning import LOG_FLOOR
from maopac.topology import Graph, build_metropolis_matrix

try:
    from maopac import _kernels
except ImportError:
    _kernels = None


def cases():
    rng = np.random.default_rng(0)
    for K, S, T in [(5, 16, 20), (7, 16, 60), (9, 64, 20)]:
        C = build_metropolis_matrix(Graph.path(K))
        loglik = -rng.uniform(0, 4, size=(T, K, S))
        prior = np.full((K, S), -np.log(S))
        yield f"belief_rounds K={K} S={S} T={T}", "belief_rounds", (loglik, C, prior, LOG_FLOOR)
        yield f"consensus_rounds K={K} T=50", "consensus_rounds", (rng.normal(size=K), C, 50)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled kernels not built; only the fallback is available")
    print(f"{'case':<36} {'python us':>10} {'cython us':>10} {'speedup':>8}")
    for label, name, inputs in cases():
        py = timeit.timeit(lambda: getattr(_fallback, name)(*inputs), number=args.repeat) / args.repeat
        if _kernels is None:
            print(f"{label:<36} {py * 1e6:>10.1f}")
            continue
        np.testing.assert_allclose(getattr(_kernels, name)(*inputs), getattr(_fallback, name)(*inputs), atol=1e-10)
        cy = timeit.timeit(lambda: getattr(_kernels, name)(*inputs), number=args.repeat) / args.repeat
        print(f"{label:<36} {py * 1e6:>10.1f} {cy * 1e6:>10.1f} {py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
