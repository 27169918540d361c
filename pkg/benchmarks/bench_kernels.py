"""Compare the compiled kernel backend against the pure numpy fallback.

Times the fused cell kernels (forward and backward) at several hidden
sizes, then a full teacher-forced loss+gradient pass over synthetic
sentence pairs.  Run:

    python benchmarks/bench_kernels.py [--repeats 2000] [--pairs 64]
"""
import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from treenmt import kernels  # noqa: E402
from treenmt.blackout import UnigramSampler  # noqa: E402
from treenmt.corpus import SentencePair  # noqa: E402
from treenmt.params import ModelParams, randomize_params  # noqa: E402
from treenmt.tensor import GradientStore  # noqa: E402
from treenmt.toy import random_binary_tree  # noqa: E402
from treenmt.trainer import TrainConfig, batch_loss_and_grads  # noqa: E402


def time_fn(fn, repeats):
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best


def bench_cells(d, dtype, repeats):
    rng = np.random.default_rng(0)
    e = d
    x = rng.standard_normal(e).astype(dtype)
    h = rng.standard_normal(d).astype(dtype)
    c = rng.standard_normal(d).astype(dtype)
    W = rng.standard_normal((4 * d, e)).astype(dtype)
    U = rng.standard_normal((4 * d, d)).astype(dtype)
    b = rng.standard_normal(4 * d).astype(dtype)
    _, c_new, gates = kernels.lstm_forward(x, h, c, W, U, b)
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros_like(b)
    dh = rng.standard_normal(d).astype(dtype)
    dc = rng.standard_normal(d).astype(dtype)

    fwd = time_fn(lambda: kernels.lstm_forward(x, h, c, W, U, b), repeats)
    bwd = time_fn(
        lambda: kernels.lstm_backward(dh, dc, x, h, c, gates, c_new, W, U, dW, dU, db),
        repeats,
    )

    Ul = rng.standard_normal((5 * d, d)).astype(dtype)
    Ur = rng.standard_normal((5 * d, d)).astype(dtype)
    tb = rng.standard_normal(5 * d).astype(dtype)
    _, tc_new, tgates = kernels.tree_forward(h, c, dh, dc, Ul, Ur, tb)
    dUl = np.zeros_like(Ul)
    dUr = np.zeros_like(Ur)
    dtb = np.zeros_like(tb)
    tfwd = time_fn(lambda: kernels.tree_forward(h, c, dh, dc, Ul, Ur, tb), repeats)
    tbwd = time_fn(
        lambda: kernels.tree_backward(dh, dc, h, c, dh, dc, tgates, tc_new,
                                      Ul, Ur, dUl, dUr, dtb),
        repeats,
    )
    return fwd, bwd, tfwd, tbwd


def bench_end_to_end(d, n_pairs, dtype_name):
    rng = np.random.default_rng(1)
    vocab = 64
    cfg = TrainConfig(d=d, e=d, k_negatives=10, loss_mode="blackout",
                      precision=dtype_name, min_count=1, batch_size=n_pairs)
    params = ModelParams(vocab, vocab, d, d, dtype=dtype_name)
    randomize_params(params, rng, scale=0.1)
    sampler = UnigramSampler(rng.integers(1, 50, size=vocab), beta=0.4)
    pairs = []
    for _ in range(n_pairs):
        n = int(rng.integers(4, 12))
        src = [int(i) for i in rng.integers(2, vocab, size=n)] + [1]
        tgt = [int(i) for i in rng.integers(2, vocab, size=n)] + [1]
        tree = random_binary_tree([f"t{i}" for i in range(n)], rng)
        pairs.append(SentencePair(src, tgt, tree))

    grads = GradientStore.for_params(params)

    def run():
        grads.zero()
        batch_loss_and_grads(pairs, params, cfg, sampler,
                             np.random.default_rng(7), grads=grads)

    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        run()
        best = min(best, time.perf_counter() - t0)
    return best / n_pairs


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=2000)
    parser.add_argument("--pairs", type=int, default=64)
    parser.add_argument("--dtype", choices=("float32", "float64"), default="float32")
    args = parser.parse_args()

    backends = kernels.available_backends()
    if len(backends) < 2:
        print(f"only {backends} available; build the extension to compare")
    dtype = np.float32 if args.dtype == "float32" else np.float64

    print(f"cell kernels, {args.dtype}, best of 3 x {args.repeats} (microseconds)")
    header = f"{'d':>5s}  " + "  ".join(
        f"{b + ':' + k:>14s}" for b in backends for k in ("lstm-f", "lstm-b", "tree-f", "tree-b")
    )
    print(header)
    for d in (32, 64, 128, 256):
        cols = []
        for backend in backends:
            kernels.set_backend(backend)
            cols.extend(bench_cells(d, dtype, args.repeats))
        print(f"{d:5d}  " + "  ".join(f"{1e6 * v:14.2f}" for v in cols))

    print(f"\nend-to-end loss+gradients per pair, {args.dtype} (milliseconds)")
    print(f"{'d':>5s}  " + "  ".join(f"{b:>10s}" for b in backends) + "  ext speedup")
    for d in (32, 64, 128):
        per_backend = {}
        for backend in backends:
            kernels.set_backend(backend)
            per_backend[backend] = bench_end_to_end(d, args.pairs, args.dtype)
        row = f"{d:5d}  " + "  ".join(f"{1e3 * per_backend[b]:10.3f}" for b in backends)
        if "ext" in per_backend and "pure" in per_backend:
            row += f"  {per_backend['pure'] / per_backend['ext']:10.2f}x"
        print(row)

    kernels.set_backend("ext" if "ext" in backends else "pure")


if __name__ == "__main__":
    main()
