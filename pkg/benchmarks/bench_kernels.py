"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Sizes default to one ModCloth-scale pass: a 2048-row embedding gradient
scatter into a 48k-row table, and AUC / ROC / top-k over 8279 test rows
with k = 3. The last column is an end-to-end epoch-sized training step
count with each backend.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from sfnet import _kernels_py

try:
    from sfnet import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(scale: float):
    rng = np.random.default_rng(0)
    n_rows, dim, batch = int(48_000 * scale), 10, int(2048 * scale)
    idx = rng.integers(0, n_rows, batch).astype(np.int64)
    src = rng.normal(size=(batch, dim))
    n_test = int(8279 * scale)
    probs = rng.dirichlet(np.ones(3), size=n_test)
    # quantized like float32 checkpoints so ties occur
    probs = np.round(probs, 4)
    targets = rng.integers(0, 3, n_test).astype(np.int64)
    scores = probs.ravel()
    labels = np.zeros(probs.shape, dtype=np.int8)
    labels[np.arange(n_test), targets] = 1
    labels = labels.ravel()
    asc = np.argsort(scores, kind="stable")
    desc = np.argsort(-scores, kind="stable")
    s_asc, y_asc = np.ascontiguousarray(scores[asc]), np.ascontiguousarray(labels[asc])
    s_desc, y_desc = np.ascontiguousarray(scores[desc]), np.ascontiguousarray(labels[desc])

    def scatter(mod):
        out = np.zeros((n_rows, dim))
        mod.scatter_add_rows(out, idx, src)

    return {
        "scatter_add_rows": scatter,
        "midrank_positive_sum": lambda mod: mod.midrank_positive_sum(s_asc, y_asc),
        "roc_staircase": lambda mod: mod.roc_staircase(s_desc, y_desc),
        "top_k_hits": lambda mod: mod.top_k_hits(probs, targets, 2),
    }


def epoch_seconds(pure: bool) -> float:
    """Wall time of one synthetic training epoch in a fresh interpreter."""
    code = (
        "import time, warnings; warnings.simplefilter('ignore');"
        "from sfnet.synthetic import make_fit_records;"
        "from sfnet.data import record_from_json, build_schema, encode_records;"
        "from sfnet.training import TrainConfig, train;"
        "r=[record_from_json(o,'modcloth',i+1) for i,o in enumerate(make_fit_records(20000, n_articles=2000))];"
        "s=build_schema(r,'modcloth'); d=encode_records(r,s); v=d.subset(range(2000));"
        "t=time.perf_counter(); train(d,v,s,'sfnet',TrainConfig(max_epochs=1,min_epochs=1));"
        "print(time.perf_counter()-t)"
    )
    env = dict(os.environ)
    if pure:
        env["SFNET_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--skip-epoch", action="store_true")
    args = ap.parse_args()

    print(f"{'kernel':<22}{'python ms':>12}{'compiled ms':>14}{'speedup':>10}")
    for name, fn in cases(args.scale).items():
        number = 5
        py = min(timeit.repeat(lambda: fn(_kernels_py), number=number, repeat=args.repeat)) / number
        if _kernels is None:
            print(f"{name:<22}{py * 1e3:>12.3f}{'n/a':>14}{'':>10}")
            continue
        c = min(timeit.repeat(lambda: fn(_kernels), number=number, repeat=args.repeat)) / number
        print(f"{name:<22}{py * 1e3:>12.3f}{c * 1e3:>14.3f}{py / c:>9.1f}x")
    if not args.skip_epoch:
        py, c = epoch_seconds(True), epoch_seconds(False)
        print(f"{'train epoch (20k)':<22}{py * 1e3:>12.0f}{c * 1e3:>14.0f}{py / c:>9.2f}x")


if __name__ == "__main__":
    main()
