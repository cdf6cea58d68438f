"""Sublevel cubical persistence of 2-D images (V-construction).

The filtration function is f = -I, so bright regions enter first.  Vertices
carry pixel values; edges and squares carry the max over their vertices.  H0
uses the elder-rule union-find, H1 the boundary reduction of squares over
edges.  The full image domain is connected and contractible, so exactly one
essential H0 class survives and no essential H1 can.
"""

from __future__ import annotations

import numpy as np

from ._reduction import reduce_columns, sublevel_merge_pairs, tree_edge_mask
from ..optics import Image
from .diagram import PersistenceDiagram, build_diagram


def cubical_persistence(img: Image, max_dim: int = 1) -> PersistenceDiagram:
    if not 0 <= max_dim <= 1:
        raise ValueError("cubical engine supports max_dim in 0..1")
    f = -img.values
    side = f.shape[0]
    births = f.ravel()
    max_filtration = float(births.max())

    # edges: horizontal then vertical, value = max of endpoints
    vid = np.arange(side * side).reshape(side, side)
    h_a, h_b = vid[:, :-1].ravel(), vid[:, 1:].ravel()
    v_a, v_b = vid[:-1, :].ravel(), vid[1:, :].ravel()
    e_a = np.concatenate([h_a, v_a]).astype(np.int64)
    e_b = np.concatenate([h_b, v_b]).astype(np.int64)
    e_val = np.maximum(births[e_a], births[e_b])
    order = np.lexsort((e_b, e_a, e_val))
    e_a, e_b, e_val = e_a[order], e_b[order], e_val[order]

    pair_b, pair_d, _root = sublevel_merge_pairs(e_a, e_b, e_val, births, side * side)
    pairs = [(0, float(b), float(d)) for b, d in zip(pair_b, pair_d)]
    essentials: list[tuple[int, float]] = [(0, float(births.min()))]

    if max_dim >= 1:
        # squares (a, b, c, d) in raster order; value = max of the 4 corners
        q_a = vid[:-1, :-1].ravel().astype(np.int64)
        q_b = vid[:-1, 1:].ravel().astype(np.int64)
        q_c = vid[1:, :-1].ravel().astype(np.int64)
        q_d = vid[1:, 1:].ravel().astype(np.int64)
        q_val = np.maximum.reduce([births[q_a], births[q_b], births[q_c], births[q_d]])
        order = np.lexsort((q_d, q_c, q_b, q_a, q_val))
        q_a, q_b, q_c, q_d, q_val = (
            q_a[order],
            q_b[order],
            q_c[order],
            q_d[order],
            q_val[order],
        )

        # positions of the 4 side edges of each square in the edge order
        e_keys = e_a * np.int64(side * side) + e_b
        key_order = np.argsort(e_keys, kind="stable")
        sorted_keys = e_keys[key_order]

        def edge_pos(a, b):
            return key_order[np.searchsorted(sorted_keys, a * np.int64(side * side) + b)]

        sq_cols = np.stack(
            [
                edge_pos(q_a, q_b),
                edge_pos(q_c, q_d),
                edge_pos(q_a, q_c),
                edge_pos(q_b, q_d),
            ],
            axis=1,
        )
        sq_cols.sort(axis=1)
        pivots = reduce_columns(sq_cols, e_a.size, np.zeros(q_val.size, dtype=np.bool_))
        hit = pivots >= 0
        edge_killed = np.zeros(e_a.size, dtype=np.bool_)
        edge_killed[pivots[hit]] = True
        for col in np.nonzero(hit)[0]:
            piv = pivots[col]
            pairs.append((1, float(e_val[piv]), float(q_val[col])))

        # cycle-creating edges never filled by a square would be essential H1;
        # a full rectangular grid has none, but keep the bookkeeping honest
        tree = tree_edge_mask(e_a, e_b, side * side)
        for e in np.nonzero(~tree & ~edge_killed)[0]:
            essentials.append((1, float(e_val[e])))

    return build_diagram(pairs, essentials, max_filtration, "cubical")
