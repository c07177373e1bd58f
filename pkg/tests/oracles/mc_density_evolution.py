"""Sampled (Monte Carlo) density evolution for a regular LDPC ensemble.

Independent of the Gaussian-approximation code in ``umac.ldpc.design``: it
tracks a population of LLR samples through the exact sum-product updates on
the all-zero codeword over BI-AWGN.  Run once; the printed threshold is frozen
into ``tests/test_acceptance.py``.

    python3 tests/oracles/mc_density_evolution.py --samples 1000000
"""

import argparse
import time

import numpy as np

CLIP = 30.0


def converges(dv, dc, sigma, samples, iters, rng, target=1e-6):
    ch = 2.0 / sigma**2 + (2.0 / sigma) * rng.standard_normal(samples)
    c2v = np.zeros(samples)
    for _ in range(iters):
        v2c = ch.copy()
        for _ in range(dv - 1):
            v2c += c2v[rng.integers(samples, size=samples)]
        v2c = np.clip(v2c, -CLIP, CLIP)
        prod = np.ones(samples)
        for _ in range(dc - 1):
            prod *= np.tanh(0.5 * v2c[rng.integers(samples, size=samples)])
        c2v = 2.0 * np.arctanh(np.clip(prod, -1 + 1e-15, 1 - 1e-15))
        # error probability of the full posterior
        post = ch + sum(c2v[rng.integers(samples, size=samples)] for _ in range(dv))
        if np.mean(post < 0) < target:
            return True
    return False


def threshold(dv, dc, samples, iters, seed, lo=0.80, hi=0.95, tol=2e-3):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        rng = np.random.default_rng(seed)
        if converges(dv, dc, mid, samples, iters, rng):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dv", type=int, default=3)
    ap.add_argument("--dc", type=int, default=6)
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--iters", type=int, default=300)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    t0 = time.perf_counter()
    sig = threshold(args.dv, args.dc, args.samples, args.iters, args.seed)
    print(f"regular ({args.dv},{args.dc}) sampled-DE threshold sigma* = {sig:.4f} "
          f"({args.samples} samples, {time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
