#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot paths (boosted-tree split search, Pegasos epochs, CSR
row products) on a synthetic detection corpus, calling both backend
implementations directly so one process measures both. Training-level
numbers compare a full gbdt/svm fit under each backend.

Usage:
    python benchmarks/bench_kernels.py [--n-per-class 600] [--repeats 3]

The numba columns require numba; run AITD_DISABLE_NUMBA=1 to confirm the
package works without it (this script then reports the fallback only).
"""

import argparse
import time

import numpy as np

from aitd import kernels
from aitd.corpus import generate_synthetic_corpus
from aitd.features import FeatureSpec, fit_featurizer
from aitd.gbdt import GbdtParams, train_gbdt
from aitd.preprocess import PreprocessConfig, default_stopwords
from aitd.prng import SplitMix64
from aitd.svm import SvmParams, train_svm


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_split_search(X, g, h, repeats):
    col_indptr, col_rows, col_vals = X.to_columnar()
    rows = np.arange(X.n_rows, dtype=np.int64)
    g_node = float(np.sum(g))
    h_node = float(np.sum(h))

    def run(impl):
        in_node = np.zeros(X.n_rows, dtype=np.bool_)
        bufs = (np.empty(X.n_rows), np.empty(X.n_rows), np.empty(X.n_rows))
        return lambda: impl(
            col_indptr, col_rows, col_vals, rows, g, h, g_node, h_node,
            1.0, 0.0, 1e-3, in_node, *bufs,
        )

    return {
        "numba": timeit(run(kernels._gbdt_best_split_jit), repeats),
        "numpy": timeit(run(kernels._gbdt_best_split_np), repeats),
    }


def bench_pegasos(X, y_signed, repeats, epochs=5):
    rng = SplitMix64(0)
    order = np.empty(epochs * X.n_rows, dtype=np.int64)
    for e in range(epochs):
        idx = list(range(X.n_rows))
        rng.shuffle(idx)
        order[e * X.n_rows : (e + 1) * X.n_rows] = idx

    def run(impl):
        def inner():
            w = np.zeros(X.n_cols)
            w_sum = np.zeros(X.n_cols)
            impl(X.indptr, X.indices, X.values, y_signed, order, 1e-4, w, w_sum)

        return inner

    return {
        "numba": timeit(run(kernels._pegasos_jit), repeats),
        "numpy": timeit(run(kernels._pegasos_np), repeats),
    }


def bench_row_dots(X, repeats):
    w = np.random.default_rng(0).normal(size=X.n_cols)

    def run(impl):
        out = np.empty(X.n_rows)
        return lambda: impl(X.indptr, X.indices, X.values, w, out)

    return {
        "numba": timeit(run(kernels._csr_row_dots_jit), repeats),
        "numpy": timeit(run(kernels._csr_row_dots_np), repeats),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-per-class", type=int, default=600)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    print(f"active backend: {kernels.BACKEND}"
          + ("" if kernels.NUMBA_ACTIVE else " (numba timings unavailable)"))
    corpus = generate_synthetic_corpus(args.n_per_class, seed=42)
    config = PreprocessConfig()
    stopwords = default_stopwords(config)
    vocab, X = fit_featurizer(corpus, config, stopwords, FeatureSpec(kind="counts"))
    y = np.asarray(corpus.labels())
    print(f"corpus: {X.n_rows} docs x {X.n_cols} terms, nnz={X.nnz}")

    rng = np.random.default_rng(1)
    p = rng.uniform(0.2, 0.8, X.n_rows)
    g = p - y
    h = p * (1 - p)
    y_signed = np.where(y == 1, 1.0, -1.0)

    if kernels.NUMBA_ACTIVE:
        # trigger jit compilation outside the timed region
        bench_split_search(X, g, h, 1)
        bench_pegasos(X, y_signed, 1, epochs=1)
        bench_row_dots(X, 1)

    results = {
        "gbdt split search (1 node, all features)": bench_split_search(X, g, h, args.repeats),
        "pegasos (5 epochs)": bench_pegasos(X, y_signed, args.repeats),
        "csr row dots": bench_row_dots(X, args.repeats),
    }

    # without numba the "_jit" functions are plain interpreted loops
    left = "numba" if kernels.NUMBA_ACTIVE else "py-loop"
    print(f"\n{'kernel':<42}{left:>12}{'numpy':>12}{'speedup':>10}")
    for name, r in results.items():
        speedup = r["numpy"] / r["numba"] if r["numba"] > 0 else float("nan")
        print(f"{name:<42}{r['numba'] * 1e3:>10.2f}ms{r['numpy'] * 1e3:>10.2f}ms{speedup:>9.1f}x")

    # end-to-end training comparison under the dispatched backend
    t0 = time.perf_counter()
    train_gbdt(X, y, GbdtParams(n_rounds=50), seed=0)
    t_gbdt = time.perf_counter() - t0
    t0 = time.perf_counter()
    train_svm(X, y, SvmParams(lambda_reg=1e-4, epochs=20), seed=0)
    t_svm = time.perf_counter() - t0
    print(f"\nfull training on the {kernels.BACKEND} backend: "
          f"gbdt 50 rounds {t_gbdt:.2f}s, svm 20 epochs {t_svm:.2f}s")


if __name__ == "__main__":
    main()
