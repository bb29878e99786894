"""Compare the compiled and numpy kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Times one local epoch at several shard sizes and one full federation
(defaults: E=50, R=200, leanfed_adaptive) per backend.
"""

import argparse
import time

import numpy as np

from leanfed import _kernels_py
from leanfed import config as C
from leanfed.data import generate_synthetic
from leanfed.experiment import run_seed
from leanfed.model import TrainConfig, init_params, sgd_epoch

try:
    from leanfed import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--rounds", type=int, default=200)
    args = parser.parse_args()

    backends = {"python": _kernels_py}
    if _kernels is not None:
        backends["cython"] = _kernels
    else:
        print("compiled kernels not built; timing numpy only")

    train, _ = generate_synthetic()
    cfg = TrainConfig()
    print(f"{'workload':<28}" + "".join(f"{name:>12}" for name in backends) + "     speedup")
    for size in (16, 64, 200, 1000, 10000):
        X, y = train.features[:size], train.labels[:size]
        row = {}
        for name, backend in backends.items():
            row[name] = best_of(lambda: sgd_epoch(init_params(10, 32), X, y, cfg,
                                                  np.random.default_rng(0), backend), args.repeat)
        _print_row(f"sgd_epoch n={size}", row)

    exp = C.load(None, [f"federation.total_rounds={args.rounds}"])
    row = {name: best_of(lambda: run_seed(exp, 0, backend=backend), 1) for name, backend in backends.items()}
    _print_row(f"federation E=50 R={args.rounds}", row)


def _print_row(label, row):
    cells = "".join(f"{t * 1e3:>10.2f}ms" if t < 1 else f"{t:>11.2f}s" for t in row.values())
    speed = f"{row['python'] / row['cython']:>10.1f}x" if "cython" in row else ""
    print(f"{label:<28}{cells}{speed}")


if __name__ == "__main__":
    main()
