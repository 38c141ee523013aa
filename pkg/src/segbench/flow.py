"""Max-flow / min-cut on pixel grids via Dinic's algorithm.

Two interchangeable backends implement the same blocking-flow kernel: a
Cython extension (segbench._native._maxflow) and a pure-Python fallback.
The extension is picked automatically when importable; set
SEGBENCH_PURE_PYTHON=1 to force the fallback. `benchmarks/bench_maxflow.py`
compares the two.
"""

from __future__ import annotations

import os
from collections import deque

import numpy as np

SOURCE = -1
SINK = -2


def _dinic_py_simple(n_nodes, source, sink, head, nxt, to, cap):
    """Pure-Python Dinic; paired arcs live at indices e and e^1."""
    level = [-1] * n_nodes
    it = [0] * n_nodes

    def bfs():
        for i in range(n_nodes):
            level[i] = -1
        level[source] = 0
        q = deque([source])
        while q:
            u = q.popleft()
            e = head[u]
            while e != -1:
                v = to[e]
                if cap[e] > 1e-12 and level[v] < 0:
                    level[v] = level[u] + 1
                    q.append(v)
                e = nxt[e]
        return level[sink] >= 0

    def dfs_blocking():
        # iterative DFS with current-arc optimization
        total = 0.0
        stack = [source]
        path_edges = []
        while stack:
            u = stack[-1]
            if u == sink:
                bottleneck = min(cap[e] for e in path_edges)
                for e in path_edges:
                    cap[e] -= bottleneck
                    cap[e ^ 1] += bottleneck
                total += bottleneck
                cut = next(i for i, e in enumerate(path_edges) if cap[e] <= 1e-12)
                path_edges = path_edges[:cut]
                stack = stack[: cut + 1]
                continue
            e = it[u]
            advanced = False
            while e != -1:
                v = to[e]
                if cap[e] > 1e-12 and level[v] == level[u] + 1:
                    break
                e = nxt[e]
            it[u] = e
            if e != -1:
                path_edges.append(e)
                stack.append(to[e])
                advanced = True
            if not advanced:
                level[u] = -1
                stack.pop()
                if path_edges:
                    last = path_edges.pop()
                    it[stack[-1]] = nxt[last]
        return total

    flow = 0.0
    while bfs():
        for i in range(n_nodes):
            it[i] = head[i]
        flow += dfs_blocking()
    return flow


def _solve_python(n_nodes, source, sink, head, nxt, to, cap):
    head = head.tolist()
    nxt = nxt.tolist()
    to = to.tolist()
    caps = cap.tolist()
    flow = _dinic_py_simple(n_nodes, source, sink, head, nxt, to, caps)
    return flow, np.array(caps, dtype=np.float64)


_native = None
if os.environ.get("SEGBENCH_PURE_PYTHON", "") != "1":
    try:
        from ._native import _maxflow as _native  # noqa: F401
    except ImportError:
        _native = None

BACKEND = "cython" if _native is not None else "python"


def solve_kernel(n_nodes, source, sink, head, nxt, to, cap, backend=None):
    """Run Dinic; returns (flow_value, residual capacities)."""
    backend = backend or BACKEND
    if backend == "cython":
        if _native is None:
            raise RuntimeError("cython backend unavailable")
        residual = cap.astype(np.float64).copy()
        flow = _native.dinic(
            int(n_nodes), int(source), int(sink),
            head.astype(np.int64), nxt.astype(np.int64), to.astype(np.int64), residual,
        )
        return flow, residual
    return _solve_python(n_nodes, source, sink, head, nxt, to, cap.astype(np.float64))


class FlowNetwork:
    """Grid flow network: n pixel nodes plus implicit source and sink.

    Pixel nodes are 0..n-1; use SOURCE/SINK sentinels in add_arc. n-links
    added with add_nlink get a paired reverse arc of equal capacity.
    """

    def __init__(self, n: int):
        self.n = n
        self._src = n
        self._snk = n + 1
        self._from: list[int] = []
        self._to: list[int] = []
        self._cap: list[float] = []

    def _resolve(self, u: int) -> int:
        if u == SOURCE:
            return self._src
        if u == SINK:
            return self._snk
        if not 0 <= u < self.n:
            raise ValueError(f"node {u} out of range")
        return u

    def add_arc(self, u: int, v: int, cap: float, rev_cap: float = 0.0) -> None:
        if cap < 0 or rev_cap < 0:
            raise ValueError("capacities must be >= 0")
        u, v = self._resolve(u), self._resolve(v)
        self._from += [u, v]
        self._to += [v, u]
        self._cap += [float(cap), float(rev_cap)]

    def add_tlink(self, p: int, src_cap: float, sink_cap: float) -> None:
        self.add_arc(SOURCE, p, src_cap)
        self.add_arc(p, SINK, sink_cap)

    def add_nlink(self, p: int, q: int, cap: float) -> None:
        self.add_arc(p, q, cap, rev_cap=cap)

    def total_capacity(self) -> float:
        return float(sum(self._cap))

    def _build(self):
        m = len(self._to)
        n_nodes = self.n + 2
        head = np.full(n_nodes, -1, dtype=np.int64)
        nxt = np.full(m, -1, dtype=np.int64)
        to = np.array(self._to, dtype=np.int64)
        cap = np.array(self._cap, dtype=np.float64)
        for e, u in enumerate(self._from):
            nxt[e] = head[u]
            head[u] = e
        return n_nodes, head, nxt, to, cap

    def max_flow(self, backend: str | None = None) -> tuple[float, np.ndarray]:
        """Returns (flow value, source-side membership per pixel node).

        Source side = nodes reachable from the source in the residual graph;
        for segmentation, source side means foreground.
        """
        if not self._to:
            return 0.0, np.zeros(self.n, dtype=bool)
        n_nodes, head, nxt, to, cap = self._build()
        flow, residual = solve_kernel(n_nodes, self._src, self._snk, head, nxt, to, cap, backend)
        side = np.zeros(n_nodes, dtype=bool)
        side[self._src] = True
        q = deque([self._src])
        while q:
            u = q.popleft()
            e = head[u]
            while e != -1:
                v = to[e]
                if residual[e] > 1e-9 and not side[v]:
                    side[v] = True
                    q.append(v)
                e = nxt[e]
        return float(flow), side[: self.n]
