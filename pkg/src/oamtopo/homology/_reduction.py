"""GF(2) boundary-matrix reduction kernels (numba-compiled hot path).

Columns arrive in filtration order with face indices expressed in the face
dimension's own filtration order, so the pivot of a column is simply its
largest entry.  `skip` implements the clearing optimization: columns known to
reduce to zero (pivot rows of the next dimension up) are never touched.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def reduce_columns(init_cols, n_rows, skip):
    """Left-to-right column reduction.

    init_cols: (m, w) int64, each row the sorted face indices of one column.
    Returns pivot row per column (-1 when the column reduces to zero or is
    skipped by clearing).

    Column storage is an append-only arena of int64 with (start, length)
    bookkeeping; every symmetric difference writes a fresh run at the tail and
    the arena doubles when full.  Rips columns mostly pair immediately, so the
    arena stays near its initial size in practice.
    """
    m = init_cols.shape[0]
    w = init_cols.shape[1]
    owner = np.full(n_rows, -1, np.int64)
    pivot = np.full(m, -1, np.int64)
    start = np.zeros(m, np.int64)
    length = np.zeros(m, np.int64)

    cap = max(4 * m * w, 1024)
    arena = np.empty(cap, np.int64)
    top = 0

    for j in range(m):
        if skip[j]:
            continue
        # load the initial column at the tail
        if top + w > cap:
            cap = max(2 * cap, top + w)
            bigger = np.empty(cap, np.int64)
            bigger[:top] = arena[:top]
            arena = bigger
        s = top
        n = 0
        for e in range(w):
            arena[top] = init_cols[j, e]
            top += 1
            n += 1
        while n > 0:
            low = arena[s + n - 1]
            o = owner[low]
            if o < 0:
                owner[low] = j
                pivot[j] = low
                break
            # xor with the owner column into fresh arena space
            so, no = start[o], length[o]
            need = n + no
            if top + need > cap:
                cap = max(2 * cap, top + need)
                bigger = np.empty(cap, np.int64)
                bigger[:top] = arena[:top]
                arena = bigger
            dst = top
            ia = s
            ib = so
            k = dst
            ea = s + n
            eb = so + no
            while ia < ea and ib < eb:
                va = arena[ia]
                vb = arena[ib]
                if va < vb:
                    arena[k] = va
                    ia += 1
                    k += 1
                elif va > vb:
                    arena[k] = vb
                    ib += 1
                    k += 1
                else:
                    ia += 1
                    ib += 1
            while ia < ea:
                arena[k] = arena[ia]
                ia += 1
                k += 1
            while ib < eb:
                arena[k] = arena[ib]
                ib += 1
                k += 1
            s = dst
            n = k - dst
            top = k
        start[j] = s
        length[j] = n
    return pivot


@njit(cache=True)
def tree_edge_mask(e_i, e_j, n):
    """Boolean mask of the union-find tree edges, in filtration order.

    Tree (negative) edges kill H0 classes; the rest create cycles.
    """
    parent = np.arange(n)
    mask = np.zeros(e_i.size, np.bool_)
    for e in range(e_i.size):
        a = e_i[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = e_j[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
            mask[e] = True
    return mask


@njit(cache=True)
def kruskal_merge_values(order_i, order_j, values, n):
    """Union-find sweep over edges already sorted by filtration value.

    Returns the merge value per union event (length n - final component count)
    and the final component count.  All vertices are born at the same time, so
    the elder rule degenerates and only values matter.
    """
    parent = np.arange(n)
    merges = np.empty(n, np.float64)
    k = 0
    for e in range(order_i.size):
        a = order_i[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = order_j[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
            merges[k] = values[e]
            k += 1
    return merges[:k], n - k


@njit(cache=True)
def sublevel_merge_pairs(order_i, order_j, edge_values, births, n):
    """Union-find for sublevel H0 with per-vertex birth values (elder rule).

    Each component is represented by its eldest vertex: lowest (birth, index).
    A union at edge value t kills the younger representative -> one
    (birth_young, t) pair.  Returns pairs plus the index of the global eldest
    vertex (the essential class).
    """
    parent = np.arange(n)
    pair_birth = np.empty(n, np.float64)
    pair_death = np.empty(n, np.float64)
    k = 0
    for e in range(order_i.size):
        a = order_i[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = order_j[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        # elder = smaller (birth value, vertex index)
        if (births[a] < births[b]) or (births[a] == births[b] and a < b):
            elder, young = a, b
        else:
            elder, young = b, a
        parent[young] = elder
        pair_birth[k] = births[young]
        pair_death[k] = edge_values[e]
        k += 1
    root = 0
    while parent[root] != root:
        root = parent[root]
    return pair_birth[:k], pair_death[:k], root
