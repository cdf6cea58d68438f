"""Reference persistence via naive column-by-column boundary reduction.

No clearing, no union-find shortcut: every cell's boundary column is reduced
left to right with plain GF(2) symmetric differences on Python sets.  Slow on
purpose; used to cross-check the production engines on small instances.
"""

from __future__ import annotations

import itertools
import math

from .diagram import PersistenceDiagram, build_diagram

Cell = tuple[float, tuple[int, ...]]  # (filtration value, vertex ids)

_CUBE_DIM = {1: 0, 2: 1, 4: 2}


def _cell_dim(vertices: tuple[int, ...], complex_type: str) -> int:
    if complex_type == "simplicial":
        return len(vertices) - 1
    try:
        return _CUBE_DIM[len(vertices)]
    except KeyError:
        raise ValueError(f"cubical cell must have 1, 2 or 4 vertices, got {len(vertices)}")


def _faces(vertices: tuple[int, ...], complex_type: str) -> list[tuple[int, ...]]:
    if complex_type == "simplicial":
        return [tuple(f) for f in itertools.combinations(vertices, len(vertices) - 1)]
    if len(vertices) == 2:
        return [(vertices[0],), (vertices[1],)]
    # grid square with vertices sorted in raster order (a, b, c, d):
    # a-b and c-d are the horizontal edges, a-c and b-d the vertical ones
    a, b, c, d = vertices
    return [(a, b), (c, d), (a, c), (b, d)]


def oracle_persistence(
    cells: list[Cell],
    complex_type: str = "simplicial",
    max_filtration: float | None = None,
    source_mode: str | None = None,
    max_dim: int = 2,
) -> PersistenceDiagram:
    """Persistence diagram of an explicit filtration, naively reduced.

    `cells` must already be sorted by (value, dimension, vertex order); the
    sort is verified, not repaired, so callers stay honest about tie-breaking.
    Classes above `max_dim` are reduced but not reported, mirroring an engine
    that only includes higher cells as killers.
    """
    if source_mode is None:
        source_mode = "rips" if complex_type == "simplicial" else "cubical"
    if max_filtration is None:
        max_filtration = max((v for v, _ in cells), default=0.0)

    keys = [(v, _cell_dim(verts, complex_type), verts) for v, verts in cells]
    if keys != sorted(keys):
        raise ValueError("cells are not sorted by (value, dimension, vertex order)")

    index_of: dict[tuple[int, ...], int] = {}
    for idx, (_, verts) in enumerate(cells):
        if verts in index_of:
            raise ValueError(f"duplicate cell {verts}")
        index_of[verts] = idx

    columns: list[set[int]] = []
    for value, verts in cells:
        col = set()
        if _cell_dim(verts, complex_type) > 0:
            for face in _faces(verts, complex_type):
                if face not in index_of:
                    raise ValueError(f"face {face} of cell {verts} missing from complex")
                col.add(index_of[face])
        columns.append(col)

    owner: dict[int, int] = {}  # pivot row -> column index
    killed: set[int] = set()
    pairs: list[tuple[int, float, float]] = []
    for j, col in enumerate(columns):
        while col:
            low = max(col)
            if low not in owner:
                break
            col ^= columns[owner[low]]
        columns[j] = col
        if col:
            low = max(col)
            owner[low] = j
            killed.add(low)
            dim = _cell_dim(cells[low][1], complex_type)
            if dim <= max_dim:
                pairs.append((dim, cells[low][0], cells[j][0]))

    essentials: list[tuple[int, float]] = []
    for j, col in enumerate(columns):
        dim = _cell_dim(cells[j][1], complex_type)
        if not col and j not in killed and dim <= max_dim:
            essentials.append((dim, cells[j][0]))

    return build_diagram(pairs, essentials, max_filtration, source_mode)


def explicit_rips_filtration(
    points, max_dim: int, max_radius: float
) -> list[Cell]:
    """Brute-force Vietoris-Rips cell list: every simplex up to max_dim + 1
    vertices whose diameter stays within max_radius, sorted for the oracle."""
    import numpy as np

    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    cells: list[Cell] = [(0.0, (i,)) for i in range(n)]
    for size in range(2, max_dim + 3):
        for verts in itertools.combinations(range(n), size):
            diam = max(dist[a, b] for a, b in itertools.combinations(verts, 2))
            if diam <= max_radius:
                cells.append((diam, verts))
    cells.sort(key=lambda c: (c[0], len(c[1]), c[1]))
    return cells


def explicit_cubical_filtration(values) -> list[Cell]:
    """Vertex-based (V-construction) cubical cell list for a 2-D array:
    vertices carry the pixel values, edges and squares the max over their
    vertices; sorted for the oracle."""
    import numpy as np

    f = np.asarray(values, dtype=np.float64)
    rows, cols = f.shape
    vid = lambda r, c: r * cols + c
    cells: list[Cell] = []
    for r in range(rows):
        for c in range(cols):
            cells.append((float(f[r, c]), (vid(r, c),)))
    for r in range(rows):
        for c in range(cols - 1):
            cells.append((float(max(f[r, c], f[r, c + 1])), (vid(r, c), vid(r, c + 1))))
    for r in range(rows - 1):
        for c in range(cols):
            cells.append((float(max(f[r, c], f[r + 1, c])), (vid(r, c), vid(r + 1, c))))
    for r in range(rows - 1):
        for c in range(cols - 1):
            quad = (vid(r, c), vid(r, c + 1), vid(r + 1, c), vid(r + 1, c + 1))
            cells.append((float(max(f[r : r + 2, c : c + 2].max(), -math.inf)), quad))
    cells.sort(key=lambda cell: (cell[0], _CUBE_DIM[len(cell[1])], cell[1]))
    return cells
