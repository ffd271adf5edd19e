"""Compiled inner loops over CSR adjacency with per-edge ids.

Nodes are 0-based positions here; edges are indexed in canonical order.
"""

import numpy as np
from numba import njit

# relative slack used to treat two betweenness scores as tied
TIE_RTOL = 1e-9


@njit(cache=True)
def build_csr(n, eu, ev):
    m = eu.shape[0]
    deg = np.zeros(n + 1, np.int64)
    for e in range(m):
        deg[eu[e] + 1] += 1
        deg[ev[e] + 1] += 1
    indptr = np.cumsum(deg)
    fill = indptr[:-1].copy()
    nbr = np.empty(2 * m, np.int64)
    eid = np.empty(2 * m, np.int64)
    for e in range(m):
        u = eu[e]
        v = ev[e]
        nbr[fill[u]] = v
        eid[fill[u]] = e
        fill[u] += 1
        nbr[fill[v]] = u
        eid[fill[v]] = e
        fill[v] += 1
    return indptr, nbr, eid


@njit(cache=True)
def edge_betweenness(n, m, indptr, nbr, eid, alive):
    """Unnormalised edge betweenness over unordered pairs (Brandes accumulation)."""
    eb = np.zeros(m)
    sigma = np.empty(n)
    dist = np.empty(n, np.int64)
    delta = np.empty(n)
    order = np.empty(n, np.int64)
    for src in range(n):
        sigma[:] = 0.0
        dist[:] = -1
        sigma[src] = 1.0
        dist[src] = 0
        order[0] = src
        head = 0
        tail = 1
        while head < tail:
            v = order[head]
            head += 1
            dv = dist[v]
            for p in range(indptr[v], indptr[v + 1]):
                if not alive[eid[p]]:
                    continue
                w = nbr[p]
                if dist[w] < 0:
                    dist[w] = dv + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dv + 1:
                    sigma[w] += sigma[v]
        for i in range(tail):
            delta[order[i]] = 0.0
        for i in range(tail - 1, 0, -1):
            w = order[i]
            dw = dist[w]
            coeff = (1.0 + delta[w]) / sigma[w]
            for p in range(indptr[w], indptr[w + 1]):
                e = eid[p]
                if not alive[e]:
                    continue
                v = nbr[p]
                if dist[v] == dw - 1:
                    c = sigma[v] * coeff
                    eb[e] += c
                    delta[v] += c
    for e in range(m):
        eb[e] *= 0.5
    return eb


@njit(cache=True)
def _reachable(n, indptr, nbr, eid, alive, a, b, seen, queue):
    seen[:] = False
    seen[a] = True
    queue[0] = a
    head = 0
    tail = 1
    while head < tail:
        v = queue[head]
        head += 1
        for p in range(indptr[v], indptr[v + 1]):
            if not alive[eid[p]]:
                continue
            w = nbr[p]
            if not seen[w]:
                if w == b:
                    return True
                seen[w] = True
                queue[tail] = w
                tail += 1
    return False


@njit(cache=True)
def split_by_betweenness(n, eu, ev):
    """Remove top-betweenness edges until one removal disconnects its endpoints.

    Returns the removed edge ids in removal order and a success flag. The
    caller guarantees the input graph is connected.
    """
    m = eu.shape[0]
    indptr, nbr, eid = build_csr(n, eu, ev)
    alive = np.ones(m, np.bool_)
    removed = np.empty(m, np.int64)
    seen = np.empty(n, np.bool_)
    queue = np.empty(n, np.int64)
    count = 0
    while count < m:
        eb = edge_betweenness(n, m, indptr, nbr, eid, alive)
        top = -1.0
        for e in range(m):
            if alive[e] and eb[e] > top:
                top = eb[e]
        cutoff = top - TIE_RTOL * top
        best = -1
        for e in range(m):
            if alive[e] and eb[e] >= cutoff:
                best = e
                break
        alive[best] = False
        removed[count] = best
        count += 1
        if not _reachable(n, indptr, nbr, eid, alive, eu[best], ev[best], seen, queue):
            return removed[:count], True
    return removed[:count], False
