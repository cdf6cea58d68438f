"""Vietoris-Rips persistence over 3-D point clouds.

Filtration value of a simplex = its diameter (max pairwise distance);
simplices beyond max_radius never enter.  H0 comes from a union-find sweep,
H1/H2 from GF(2) boundary reduction with clearing, processed top dimension
first.  Ties are broken by (dimension, lexicographic vertex order).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._reduction import kruskal_merge_values, reduce_columns, tree_edge_mask
from .cloud import PointCloud3
from .diagram import PersistenceDiagram, build_diagram


@njit(cache=True)
def _count_triangles(adj):
    n = adj.shape[0]
    m = 0
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j]:
                for k in range(j + 1, n):
                    if adj[i, k] and adj[j, k]:
                        m += 1
    return m


@njit(cache=True)
def _fill_triangles(adj, dist, verts, diam):
    n = adj.shape[0]
    m = 0
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j]:
                d_ij = dist[i, j]
                for k in range(j + 1, n):
                    if adj[i, k] and adj[j, k]:
                        verts[m, 0] = i
                        verts[m, 1] = j
                        verts[m, 2] = k
                        d = d_ij
                        if dist[i, k] > d:
                            d = dist[i, k]
                        if dist[j, k] > d:
                            d = dist[j, k]
                        diam[m] = d
                        m += 1
    return m


@njit(cache=True)
def _count_tetrahedra(tri_verts, adj):
    n = adj.shape[0]
    m = 0
    for t in range(tri_verts.shape[0]):
        i, j, k = tri_verts[t, 0], tri_verts[t, 1], tri_verts[t, 2]
        for l in range(k + 1, n):
            if adj[i, l] and adj[j, l] and adj[k, l]:
                m += 1
    return m


@njit(cache=True)
def _fill_tetrahedra(tri_verts, tri_diam, adj, dist, verts, diam):
    n = adj.shape[0]
    m = 0
    for t in range(tri_verts.shape[0]):
        i, j, k = tri_verts[t, 0], tri_verts[t, 1], tri_verts[t, 2]
        for l in range(k + 1, n):
            if adj[i, l] and adj[j, l] and adj[k, l]:
                verts[m, 0] = i
                verts[m, 1] = j
                verts[m, 2] = k
                verts[m, 3] = l
                d = tri_diam[t]
                if dist[i, l] > d:
                    d = dist[i, l]
                if dist[j, l] > d:
                    d = dist[j, l]
                if dist[k, l] > d:
                    d = dist[k, l]
                diam[m] = d
                m += 1
    return m


def _sort_simplices(verts: np.ndarray, diam: np.ndarray):
    """Filtration order: (diameter, lexicographic vertex order)."""
    keys = tuple(verts[:, c] for c in reversed(range(verts.shape[1]))) + (diam,)
    order = np.lexsort(keys)
    return verts[order], diam[order]


def _index_lookup(verts: np.ndarray, n: int):
    """Sorted encoding of vertex tuples -> positions in the filtration order."""
    base = np.int64(n)
    key = np.zeros(len(verts), dtype=np.int64)
    for c in range(verts.shape[1]):
        key = key * base + verts[:, c]
    order = np.argsort(key, kind="stable")
    return key[order], order


def _positions(sorted_keys, order, query_verts, n):
    base = np.int64(n)
    key = np.zeros(len(query_verts), dtype=np.int64)
    for c in range(query_verts.shape[1]):
        key = key * base + query_verts[:, c]
    return order[np.searchsorted(sorted_keys, key)]


def rips_persistence(cloud: PointCloud3, max_dim: int, max_radius: float) -> PersistenceDiagram:
    if not 0 <= max_dim <= 2:
        raise ValueError("rips engine supports max_dim in 0..2")
    if not max_radius > 0:
        raise ValueError("max_radius must be positive")
    n = len(cloud)
    if n == 0:
        return PersistenceDiagram((), max_radius, "rips")

    pts = cloud.points
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    adj = np.logical_and(dist <= max_radius, ~np.eye(n, dtype=bool))

    iu, ju = np.triu_indices(n, k=1)
    keep = adj[iu, ju]
    e_i = iu[keep].astype(np.int64)
    e_j = ju[keep].astype(np.int64)
    e_d = dist[iu, ju][keep]
    e_order = np.lexsort((e_j, e_i, e_d))
    e_i, e_j, e_d = e_i[e_order], e_j[e_order], e_d[e_order]

    pairs: list[tuple[int, float, float]] = []
    essentials: list[tuple[int, float]] = []

    merge_vals, n_components = kruskal_merge_values(e_i, e_j, e_d, n)
    pairs.extend((0, 0.0, float(v)) for v in merge_vals)
    essentials.extend((0, 0.0) for _ in range(n_components))

    if max_dim >= 1 and e_i.size:
        n_tri = _count_triangles(adj)
        tri_verts = np.empty((n_tri, 3), dtype=np.int64)
        tri_diam = np.empty(n_tri, dtype=np.float64)
        _fill_triangles(adj, dist, tri_verts, tri_diam)
        tri_verts, tri_diam = _sort_simplices(tri_verts, tri_diam)

        cleared = np.zeros(n_tri, dtype=np.bool_)
        tri_killed = np.zeros(n_tri, dtype=np.bool_)
        if max_dim >= 2 and n_tri:
            n_tet = _count_tetrahedra(tri_verts, adj)
            if n_tet:
                tet_verts = np.empty((n_tet, 4), dtype=np.int64)
                tet_diam = np.empty(n_tet, dtype=np.float64)
                _fill_tetrahedra(tri_verts, tri_diam, adj, dist, tet_verts, tet_diam)
                tet_verts, tet_diam = _sort_simplices(tet_verts, tet_diam)

                t_keys, t_pos = _index_lookup(tri_verts, n)
                tet_cols = np.stack(
                    [
                        _positions(t_keys, t_pos, tet_verts[:, [0, 1, 2]], n),
                        _positions(t_keys, t_pos, tet_verts[:, [0, 1, 3]], n),
                        _positions(t_keys, t_pos, tet_verts[:, [0, 2, 3]], n),
                        _positions(t_keys, t_pos, tet_verts[:, [1, 2, 3]], n),
                    ],
                    axis=1,
                )
                tet_cols.sort(axis=1)
                tet_pivots = reduce_columns(tet_cols, n_tri, np.zeros(n_tet, dtype=np.bool_))
                hit = tet_pivots >= 0
                tri_killed[tet_pivots[hit]] = True
                cleared = tri_killed.copy()
                for col in np.nonzero(hit)[0]:
                    piv = tet_pivots[col]
                    pairs.append((2, float(tri_diam[piv]), float(tet_diam[col])))

        e_keys, e_pos = _index_lookup(np.column_stack([e_i, e_j]), n)
        tri_cols = np.stack(
            [
                _positions(e_keys, e_pos, tri_verts[:, [0, 1]], n),
                _positions(e_keys, e_pos, tri_verts[:, [0, 2]], n),
                _positions(e_keys, e_pos, tri_verts[:, [1, 2]], n),
            ],
            axis=1,
        )
        tri_cols.sort(axis=1)
        tri_pivots = reduce_columns(tri_cols, e_i.size, cleared)

        edge_killed = np.zeros(e_i.size, dtype=np.bool_)
        hit = tri_pivots >= 0
        edge_killed[tri_pivots[hit]] = True
        for col in np.nonzero(hit)[0]:
            piv = tri_pivots[col]
            pairs.append((1, float(e_d[piv]), float(tri_diam[col])))

        positive_edge = ~tree_edge_mask(e_i, e_j, n)
        for e in np.nonzero(positive_edge & ~edge_killed)[0]:
            essentials.append((1, float(e_d[e])))

        if max_dim >= 2:
            tri_positive = cleared | (tri_pivots < 0)
            for t in np.nonzero(tri_positive & ~tri_killed)[0]:
                essentials.append((2, float(tri_diam[t])))

    return build_diagram(pairs, essentials, max_radius, "rips")
