"""Compare the compiled and pure-Python pair kernels.

    python benchmarks/bench_pairs.py [--nodes 2000] [--pairs 1000000] [--repeat 5]

Prints the best wall time per kernel and backend, the speedup, and the
largest difference between the two backends' outputs.
"""
import argparse
import math
import time

import numpy as np

from gapverify import _kernels
from gapverify._kernels import _pairs_py

try:
    from gapverify._kernels import _pairs as _compiled
except ImportError:
    _compiled = None


def best_time(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, default=2000)
    p.add_argument("--pairs", type=int, default=1_000_000)
    p.add_argument("--ratio-nodes", type=int, default=1500)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    if _compiled is None:
        raise SystemExit("compiled kernels are not built; run pip install -e . first")

    rng = np.random.default_rng(args.seed)
    side = int(math.ceil(math.sqrt(args.nodes)))
    lattice = np.stack(np.divmod(np.arange(args.nodes), side), axis=1).astype(np.int64)
    vec = rng.normal(size=(args.nodes, 2))
    I = rng.integers(0, args.nodes, size=args.pairs)
    J = (I + 1 + rng.integers(0, args.nodes - 1, size=args.pairs)) % args.nodes
    w = rng.normal(size=args.ratio_nodes)
    lat_r = lattice[:args.ratio_nodes]
    h, a = 1 / side, math.pi / math.sqrt(2)

    cases = {
        "pair_projection": lambda impl: _kernels.pair_projection(lattice, vec, I, J, h, impl)[0],
        "tan_slack": lambda impl: _kernels.tan_slack(lattice, vec, I, J, h, a, impl)[0],
        "ratio_max": lambda impl: np.array(_kernels.ratio_max(lat_r, w, h, a, impl)[:1]),
    }
    print(f"{'kernel':16} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8} {'max diff':>10}")
    for name, fn in cases.items():
        t_py, o_py = best_time(lambda: fn(_pairs_py), args.repeat)
        t_cy, o_cy = best_time(lambda: fn(_compiled), args.repeat)
        diff = float(np.max(np.abs(o_py - o_cy)))
        print(f"{name:16} {t_py:11.4f} {t_cy:11.4f} {t_py / t_cy:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
