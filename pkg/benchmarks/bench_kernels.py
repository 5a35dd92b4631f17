#!/usr/bin/env python3
"""Benchmark the JIT kernels against the pure-Python/numpy fallback.

Runs the two hot paths (embedding training, k-means fitting) on synthetic
data with numba enabled and then with ETHCLUSTER_NO_NUMBA=1 semantics, and
prints a timing table. Both paths execute the same arithmetic, so outputs
are also compared bit-for-bit.

    python benchmarks/bench_kernels.py [--docs N] [--doc-len N] [--dim N]
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from ethcluster import _kernels
from ethcluster.cluster import kmeans_fit
from ethcluster.embed import EmbeddingConfig, train_embedding


def synthetic_docs(n_docs: int, doc_len: int, vocab: int, seed: int) -> list[list[str]]:
    rng = np.random.default_rng(seed)
    words = [f"w{i}" for i in range(vocab)]
    # zipf-ish draw so the noise distribution has some shape to it
    weights = 1.0 / np.arange(1, vocab + 1)
    weights /= weights.sum()
    return [
        [words[j] for j in rng.choice(vocab, size=doc_len, p=weights)]
        for _ in range(n_docs)
    ]


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, time.perf_counter() - start


def run(path_name: str, enabled: bool, docs, config, X, k):
    if enabled:
        os.environ.pop("ETHCLUSTER_NO_NUMBA", None)
    else:
        os.environ["ETHCLUSTER_NO_NUMBA"] = "1"
    assert _kernels.numba_enabled() == enabled

    model, embed_s = timed(train_embedding, docs, config)
    cluster, kmeans_s = timed(kmeans_fit, X, k=k, max_iterations=100, seed=1194)
    print(f"{path_name:<18} embedding {embed_s:>8.3f}s   k-means {kmeans_s:>8.3f}s")
    return model, cluster, embed_s, kmeans_s


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--docs", type=int, default=60)
    parser.add_argument("--doc-len", type=int, default=80)
    parser.add_argument("--vocab", type=int, default=400)
    parser.add_argument("--dim", type=int, default=48)
    parser.add_argument("--rows", type=int, default=1500, help="k-means rows")
    parser.add_argument("--k", type=int, default=8)
    args = parser.parse_args()

    if not _kernels._HAS_NUMBA:
        print("numba is not installed; only the fallback path can run")
        return 1

    docs = synthetic_docs(args.docs, args.doc_len, args.vocab, seed=3)
    config = EmbeddingConfig(vector_size=args.dim, seed=1194, epochs=2)
    rng = np.random.default_rng(4)
    X = rng.standard_normal((args.rows, args.dim))

    print(f"embedding: {args.docs} docs x {args.doc_len} tokens, vocab {args.vocab}, "
          f"dim {args.dim}; k-means: {args.rows} x {args.dim}, k={args.k}")

    # warm-up so JIT compilation is not billed to the measurement
    run("jit (warm-up)", True, docs[:2], EmbeddingConfig(vector_size=4, seed=0, epochs=1),
        X[:20], 2)

    jit_model, jit_cluster, jit_embed, jit_kmeans = run("jit", True, docs, config, X, args.k)
    py_model, py_cluster, py_embed, py_kmeans = run("pure python", False, docs, config, X, args.k)

    same_vectors = np.array_equal(jit_model.vectors, py_model.vectors)
    same_assign = np.array_equal(jit_cluster.assignments, py_cluster.assignments)
    same_centers = np.array_equal(jit_cluster.centers, py_cluster.centers)
    print(f"bit-identical outputs: embedding={same_vectors} "
          f"k-means assignments={same_assign} centers={same_centers}")
    print(f"speedup: embedding x{py_embed / jit_embed:.1f}, "
          f"k-means x{py_kmeans / jit_kmeans:.1f}")
    return 0 if (same_vectors and same_assign and same_centers) else 1


if __name__ == "__main__":
    raise SystemExit(main())
