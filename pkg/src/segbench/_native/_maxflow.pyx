# cython: boundscheck=False, wraparound=False, cdivision=True
"""Dinic max-flow kernel over linked adjacency arrays.

Arc e and e^1 are a residual pair. Mutates `cap` into residual capacities
and returns the flow value. Mirrors segbench.flow._dinic_py_simple.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def dinic(int n_nodes, int source, int sink,
          cnp.int64_t[:] head, cnp.int64_t[:] nxt, cnp.int64_t[:] to,
          cnp.float64_t[:] cap):
    cdef cnp.int64_t[:] level = np.empty(n_nodes, dtype=np.int64)
    cdef cnp.int64_t[:] it = np.empty(n_nodes, dtype=np.int64)
    cdef cnp.int64_t[:] queue = np.empty(n_nodes, dtype=np.int64)
    cdef cnp.int64_t[:] stack_edges = np.empty(cap.shape[0] + 1, dtype=np.int64)
    cdef double flow = 0.0, bottleneck
    cdef Py_ssize_t i, qh, qt, depth, cut
    cdef long long u, v, e
    cdef double EPS = 1e-12

    while True:
        # BFS level graph
        for i in range(n_nodes):
            level[i] = -1
        level[source] = 0
        queue[0] = source
        qh = 0
        qt = 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            e = head[u]
            while e != -1:
                v = to[e]
                if cap[e] > EPS and level[v] < 0:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
                e = nxt[e]
        if level[sink] < 0:
            return flow
        for i in range(n_nodes):
            it[i] = head[i]

        # blocking flow via iterative DFS with current-arc optimization
        depth = 0  # number of edges on the current path; current node derives from it
        u = source
        while True:
            if u == sink:
                bottleneck = cap[stack_edges[0]]
                for i in range(1, depth):
                    if cap[stack_edges[i]] < bottleneck:
                        bottleneck = cap[stack_edges[i]]
                for i in range(depth):
                    cap[stack_edges[i]] -= bottleneck
                    cap[stack_edges[i] ^ 1] += bottleneck
                flow += bottleneck
                cut = 0
                while cap[stack_edges[cut]] > EPS:
                    cut += 1
                depth = cut
                u = source if depth == 0 else to[stack_edges[depth - 1]]
                continue
            e = it[u]
            while e != -1:
                v = to[e]
                if cap[e] > EPS and level[v] == level[u] + 1:
                    break
                e = nxt[e]
            it[u] = e
            if e != -1:
                stack_edges[depth] = e
                depth += 1
                u = to[e]
            else:
                level[u] = -1
                if depth == 0:
                    break
                depth -= 1
                e = stack_edges[depth]
                u = source if depth == 0 else to[stack_edges[depth - 1]]
                it[u] = nxt[e]
