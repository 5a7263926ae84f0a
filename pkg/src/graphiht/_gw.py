"""Compiled kernels for Goemans-Williamson moat growing and strong pruning.

Event queue entries are ``(time, kind, index, version)``; kind 0 is an edge
becoming tight, kind 1 a cluster exhausting its prize budget. Entries whose
version no longer matches are stale and skipped. Equal times resolve edge
events first, then by lowest index.
"""
import heapq

import numpy as np
from numba import njit


# Indexed binary min-heap over items 0..m+n-1 (edges first, then clusters),
# ordered by (key, item). Mutating helpers return the new heap size.

@njit(cache=True)
def _hless(hkey, a, b):
    if hkey[a] != hkey[b]:
        return hkey[a] < hkey[b]
    return a < b


@njit(cache=True)
def _hswap(heap, hpos, i, j):
    a = heap[i]
    b = heap[j]
    heap[i] = b
    heap[j] = a
    hpos[b] = i
    hpos[a] = j


@njit(cache=True)
def _hup(heap, hpos, hkey, i):
    while i > 0:
        par = (i - 1) >> 1
        if _hless(hkey, heap[i], heap[par]):
            _hswap(heap, hpos, i, par)
            i = par
        else:
            break


@njit(cache=True)
def _hdown(heap, hpos, hkey, i, size):
    while True:
        c = 2 * i + 1
        if c >= size:
            break
        if c + 1 < size and _hless(hkey, heap[c + 1], heap[c]):
            c += 1
        if _hless(hkey, heap[c], heap[i]):
            _hswap(heap, hpos, i, c)
            i = c
        else:
            break


@njit(cache=True)
def _hset(heap, hpos, hkey, hsz, item, key):
    i = hpos[item]
    if i < 0:
        heap[hsz] = item
        hpos[item] = hsz
        hkey[item] = key
        _hup(heap, hpos, hkey, hsz)
        return hsz + 1
    old = hkey[item]
    hkey[item] = key
    if key < old:
        _hup(heap, hpos, hkey, i)
    else:
        _hdown(heap, hpos, hkey, i, hsz)
    return hsz


@njit(cache=True)
def _hremove(heap, hpos, hkey, hsz, item):
    i = hpos[item]
    if i < 0:
        return hsz
    last = hsz - 1
    if i != last:
        _hswap(heap, hpos, i, last)
    hpos[item] = -1
    if i < last:
        _hdown(heap, hpos, hkey, i, last)
        _hup(heap, hpos, hkey, i)
    return last


@njit(cache=True)
def gw_grow(n, indptr, nbr_edge, eu, ev, cost, prize, target):
    """Grow moats until at most ``target`` clusters remain active.

    Returns the indices of the edges that became tight, in merge order.
    """
    m = len(eu)
    label = np.arange(n)
    nxt = np.full(n, -1, dtype=np.int64)
    head = np.arange(n)
    tail = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    active = np.zeros(n, dtype=np.bool_)
    psum = prize.copy()
    ysum = np.zeros(n)
    grow = np.zeros(n)
    t_upd = np.zeros(n)
    dbase = np.zeros(n)
    gjoin = np.zeros(n)
    selected = np.empty(max(n - 1, 0), dtype=np.int64)
    nsel = 0

    num_active = 0
    for v in range(n):
        if prize[v] > 0.0:
            active[v] = True
            num_active += 1
    if num_active <= target:
        return selected[:0]

    heap = np.empty(n + m, dtype=np.int64)
    hpos = np.full(n + m, -1, dtype=np.int64)
    hkey = np.zeros(n + m)
    hsz = 0
    for v in range(n):
        if active[v]:
            hsz = _hset(heap, hpos, hkey, hsz, m + v, prize[v])

    # vertices whose incident edges need re-timing; every vertex at the start
    scan = np.arange(n)
    nscan = n
    t = 0.0
    while True:
        for k in range(nscan):
            v = scan[k]
            for j in range(indptr[v], indptr[v + 1]):
                e = nbr_edge[j]
                a = eu[e]
                b = ev[e]
                ca = label[a]
                cb = label[b]
                rate = 0
                if ca != cb:
                    if active[ca]:
                        rate += 1
                    if active[cb]:
                        rate += 1
                if rate == 0:
                    # internal or between two inactive clusters
                    hsz = _hremove(heap, hpos, hkey, hsz, e)
                    continue
                da = dbase[a] + grow[ca] - gjoin[a]
                if active[ca]:
                    da += t - t_upd[ca]
                db = dbase[b] + grow[cb] - gjoin[b]
                if active[cb]:
                    db += t - t_upd[cb]
                slack = cost[e] - da - db
                if slack < 0.0:
                    slack = 0.0
                hsz = _hset(heap, hpos, hkey, hsz, e, t + slack / rate)
        nscan = 0
        if num_active <= target or hsz == 0:
            break

        item = heap[0]
        t = hkey[item]
        hsz = _hremove(heap, hpos, hkey, hsz, item)
        if item >= m:
            c = item - m
            grow[c] += t - t_upd[c]
            ysum[c] += t - t_upd[c]
            t_upd[c] = t
            active[c] = False
            num_active -= 1
            v = head[c]
            while v != -1:
                scan[nscan] = v
                nscan += 1
                v = nxt[v]
            continue

        e = item
        cu = label[eu[e]]
        cv = label[ev[e]]
        if active[cu]:
            grow[cu] += t - t_upd[cu]
            ysum[cu] += t - t_upd[cu]
        t_upd[cu] = t
        if active[cv]:
            grow[cv] += t - t_upd[cv]
            ysum[cv] += t - t_upd[cv]
        t_upd[cv] = t
        if size[cu] > size[cv] or (size[cu] == size[cv] and cu < cv):
            big, small = cu, cv
        else:
            big, small = cv, cu
        was_big = active[big]
        was_small = active[small]

        v = head[small]
        while v != -1:
            dbase[v] = dbase[v] + grow[small] - gjoin[v]
            gjoin[v] = grow[big]
            label[v] = big
            v = nxt[v]
        # edges that turned internal must leave the queue; edges whose rate
        # changed must be re-timed
        v = head[small] if was_big else head[big]
        nxt[tail[big]] = head[small]
        tail[big] = tail[small]
        size[big] += size[small]
        psum[big] += psum[small]
        ysum[big] += ysum[small]
        active[small] = False
        hsz = _hremove(heap, hpos, hkey, hsz, m + small)
        active[big] = True
        num_active += 1 - int(was_big) - int(was_small)
        selected[nsel] = e
        nsel += 1

        while v != -1:
            scan[nscan] = v
            nscan += 1
            v = nxt[v]
        rem = psum[big] - ysum[big]
        if rem < 0.0:
            rem = 0.0
        hsz = _hset(heap, hpos, hkey, hsz, m + big, t + rem)

    return selected[:nsel]


@njit(cache=True)
def _root_dp(root, fptr, fnbr, fcost, order, parent, pcost, val, prize):
    """BFS from ``root`` over the forest; fills ``order``/``parent`` and the
    bottom-up pruned value of every subtree. Returns the component size."""
    order[0] = root
    parent[root] = -1
    pcost[root] = 0.0
    cnt = 1
    k = 0
    while k < cnt:
        v = order[k]
        k += 1
        for j in range(fptr[v], fptr[v + 1]):
            w = fnbr[j]
            if w != parent[v]:
                parent[w] = v
                pcost[w] = fcost[j]
                order[cnt] = w
                cnt += 1
    for k in range(cnt - 1, -1, -1):
        v = order[k]
        val[v] = prize[v]
    for k in range(cnt - 1, 0, -1):
        v = order[k]
        gain = val[v] - pcost[v]
        if gain > 0.0:
            val[parent[v]] += gain
    return cnt


@njit(cache=True)
def strong_prune(n, sel, eu, ev, cost, prize, g):
    """Prune the grown forest and keep the ``g`` most valuable trees.

    Each tree is re-rooted at the vertex maximizing its net worth (collected
    prize minus edge cost); a child subtree survives when its value covers
    the connecting edge. Returns ``(vertex_tree, edge_keep, num_trees)`` where
    ``vertex_tree[v]`` is the output tree id or -1.
    """
    deg = np.zeros(n + 1, dtype=np.int64)
    for e in sel:
        deg[eu[e] + 1] += 1
        deg[ev[e] + 1] += 1
    fptr = np.cumsum(deg)
    fill = fptr[:-1].copy()
    fnbr = np.empty(2 * len(sel), dtype=np.int64)
    fedge = np.empty(2 * len(sel), dtype=np.int64)
    fcost = np.empty(2 * len(sel))
    for e in sel:
        u, v = eu[e], ev[e]
        fnbr[fill[u]] = v
        fedge[fill[u]] = e
        fcost[fill[u]] = cost[e]
        fill[u] += 1
        fnbr[fill[v]] = u
        fedge[fill[v]] = e
        fcost[fill[v]] = cost[e]
        fill[v] += 1

    order = np.empty(n, dtype=np.int64)
    parent = np.empty(n, dtype=np.int64)
    pcost = np.empty(n)
    val = np.empty(n)
    full = np.empty(n)
    seen = np.zeros(n, dtype=np.bool_)
    roots = np.empty(n, dtype=np.int64)
    worths = np.empty(n)
    mins = np.empty(n, dtype=np.int64)
    ntrees = 0
    for s in range(n):
        if seen[s]:
            continue
        cnt = _root_dp(s, fptr, fnbr, fcost, order, parent, pcost, val, prize)
        full[s] = val[s]
        best = s
        for k in range(cnt):
            v = order[k]
            seen[v] = True
            if k > 0:
                p = parent[v]
                gain = val[v] - pcost[v]
                up = full[p] - (gain if gain > 0.0 else 0.0)
                extra = up - pcost[v]
                full[v] = val[v] + (extra if extra > 0.0 else 0.0)
                if full[v] > full[best] or (full[v] == full[best] and v < best):
                    best = v
        if full[best] > 0.0:
            roots[ntrees] = best
            worths[ntrees] = full[best]
            mins[ntrees] = s
            ntrees += 1

    # g best trees: larger worth first, then lower smallest vertex
    keys = np.empty(ntrees, dtype=np.int64)
    for i in range(ntrees):
        keys[i] = i
    for i in range(1, ntrees):
        j = i
        while j > 0:
            a, b = keys[j - 1], keys[j]
            if worths[b] > worths[a] or (worths[b] == worths[a] and mins[b] < mins[a]):
                keys[j - 1], keys[j] = b, a
                j -= 1
            else:
                break
    nkeep = min(g, ntrees)

    vertex_tree = np.full(n, -1, dtype=np.int64)
    edge_keep = np.zeros(len(eu), dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    for t in range(nkeep):
        r = roots[keys[t]]
        _root_dp(r, fptr, fnbr, fcost, order, parent, pcost, val, prize)
        vertex_tree[r] = t
        top = 1
        stack[0] = r
        while top > 0:
            top -= 1
            v = stack[top]
            for j in range(fptr[v], fptr[v + 1]):
                w = fnbr[j]
                if w == parent[v]:
                    continue
                if val[w] > 0.0 and val[w] >= fcost[j]:
                    vertex_tree[w] = t
                    edge_keep[fedge[j]] = True
                    stack[top] = w
                    top += 1
    return vertex_tree, edge_keep, nkeep


@njit(cache=True)
def trim_leaves(n, keep_vertex, edge_keep, indptr, nbr, nbr_edge, magnitude,
                target):
    """Drop lowest-magnitude leaves of the kept forest until ``target``
    vertices remain. Isolated vertices count as leaves; ties go to the lower
    index. Returns the new vertex mask; ``edge_keep`` is updated in place."""
    deg = np.zeros(n, dtype=np.int64)
    count = 0
    for v in range(n):
        if keep_vertex[v]:
            count += 1
            for j in range(indptr[v], indptr[v + 1]):
                if edge_keep[nbr_edge[j]]:
                    deg[v] += 1
    keep = keep_vertex.copy()
    heap = [(0.0, 0)]
    heap.pop()
    for v in range(n):
        if keep[v] and deg[v] <= 1:
            heapq.heappush(heap, (magnitude[v], v))
    while count > target and len(heap) > 0:
        _, v = heapq.heappop(heap)
        if not keep[v] or deg[v] > 1:
            continue
        keep[v] = False
        count -= 1
        for j in range(indptr[v], indptr[v + 1]):
            e = nbr_edge[j]
            if edge_keep[e]:
                edge_keep[e] = False
                w = nbr[j]
                deg[w] -= 1
                deg[v] -= 1
                if keep[w] and deg[w] <= 1:
                    heapq.heappush(heap, (magnitude[w], w))
    return keep
