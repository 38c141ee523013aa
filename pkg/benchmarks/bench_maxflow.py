"""Compare the compiled and pure-Python max-flow kernels on grid graphs.

Builds the same pixel-grid flow networks graph cut produces (4-neighbor
n-links plus per-pixel t-links) at a few sizes and times both backends.

Usage: python3 benchmarks/bench_maxflow.py [--sizes 32,64,96] [--repeats 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from segbench.flow import BACKEND, FlowNetwork


def grid_network(side: int, rng: np.random.Generator) -> FlowNetwork:
    n = side * side
    net = FlowNetwork(n)
    src = rng.random(n) * 10
    snk = rng.random(n) * 10
    for p in range(n):
        net.add_tlink(p, float(src[p]), float(snk[p]))
    w = rng.random(2 * n) * 5
    i = 0
    for y in range(side):
        for x in range(side):
            p = y * side + x
            if x + 1 < side:
                net.add_nlink(p, p + 1, float(w[i]))
                i += 1
            if y + 1 < side:
                net.add_nlink(p, p + side, float(w[i]))
                i += 1
    return net


def bench(side: int, repeats: int, backend: str) -> float:
    best = float("inf")
    for rep in range(repeats):
        net = grid_network(side, np.random.default_rng(rep))
        t0 = time.perf_counter()
        net.max_flow(backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="32,64,96")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = ["python"] + (["cython"] if BACKEND == "cython" else [])
    if BACKEND != "cython":
        print("note: compiled extension unavailable, timing pure Python only")
    print(f"{'grid':>8} {'pixels':>8} " + " ".join(f"{b:>12}" for b in backends) + "  speedup")
    for side in sizes:
        times = {b: bench(side, args.repeats, b) for b in backends}
        ratio = times["python"] / times["cython"] if "cython" in times else float("nan")
        cols = " ".join(f"{times[b] * 1e3:>10.1f}ms" for b in backends)
        print(f"{side:>4}x{side:<3} {side * side:>8} {cols}  {ratio:>6.1f}x")


if __name__ == "__main__":
    main()
