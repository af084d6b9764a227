"""Compares the compiled greedy-matching kernel with the pure-Python
fallback on synthetic workloads and checks that they agree bitwise.

Usage: python3 benchmarks/bench_match.py [--pairs N] [--tokens N] [--dim N]
"""

import argparse
import random
import time

import numpy as np

from metricprobe.metrics import _match_py

try:
    from metricprobe.metrics import _matchkernel
except ImportError:
    _matchkernel = None


def make_case(rng, n_tokens, vocab_in_table, dim):
    # roughly half the tokens hit the embedding table, half are one-hot
    def side():
        rows = np.empty(n_tokens, dtype=np.int64)
        ids = np.empty(n_tokens, dtype=np.int64)
        for i in range(n_tokens):
            tok = rng.randrange(2 * vocab_in_table)
            rows[i] = tok if tok < vocab_in_table else -1
            ids[i] = tok
        return rows, ids

    h_rows, h_ids = side()
    r_rows, r_ids = side()
    mat = np.asarray([[rng.gauss(0, 1) for _ in range(dim)]
                      for _ in range(vocab_in_table)])
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    return h_rows, r_rows, h_ids, r_ids, mat


def bench(fn, cases, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for case in cases:
            fn(*case)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--pairs", type=int, default=2000)
    parser.add_argument("--tokens", type=int, default=20)
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    rng = random.Random(0)
    cases = [make_case(rng, args.tokens, 50, args.dim) for _ in range(args.pairs)]

    for case in cases[:200]:
        assert _match_py.greedy_match(*case) == (
            _matchkernel.greedy_match(*case) if _matchkernel else
            _match_py.greedy_match(*case)
        )

    t_py = bench(_match_py.greedy_match, cases, args.repeats)
    print(f"pure python : {t_py:.4f} s for {args.pairs} pairs "
          f"({args.pairs / t_py:,.0f} pairs/s)")
    if _matchkernel is None:
        print("compiled kernel not available; skipping")
        return
    t_cy = bench(_matchkernel.greedy_match, cases, args.repeats)
    print(f"cython      : {t_cy:.4f} s for {args.pairs} pairs "
          f"({args.pairs / t_cy:,.0f} pairs/s)")
    print(f"speedup     : {t_py / t_cy:.1f}x")


if __name__ == "__main__":
    main()
