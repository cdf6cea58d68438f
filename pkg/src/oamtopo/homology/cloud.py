"""Intensity images lifted to 3-D point clouds for the Rips filtration."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..optics import Image

RIPS_MAX_POINTS = 512  # complexity guard for the Rips engine


@dataclass(frozen=True)
class FiltrationParams:
    """Knobs of the image -> diagram stage.  These are tuning defaults, not
    physical constants; `cubical` mode ignores the cloud-related fields."""

    mode: str = "rips"
    max_dim: int = 2
    max_radius: float = 1.5
    tau: float = 0.2
    max_points: int = 192
    alpha: float = 0.5

    def __post_init__(self):
        if self.mode not in ("rips", "cubical"):
            raise ValueError(f"unknown filtration mode {self.mode!r}")
        if not 0 <= self.max_dim <= 2:
            raise ValueError("max_dim must be in 0..2")
        if self.mode == "cubical" and self.max_dim > 1:
            raise ValueError("cubical filtration supports max_dim <= 1 only")
        if not self.max_radius > 0:
            raise ValueError("max_radius must be positive")
        if not 0 <= self.tau < 1:
            raise ValueError("tau must lie in [0, 1)")
        if self.max_points < 4:
            raise ValueError("max_points must be >= 4")
        if self.mode == "rips" and self.max_points > RIPS_MAX_POINTS:
            raise ValueError(f"rips mode caps max_points at {RIPS_MAX_POINTS}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class PointCloud3:
    """Points (x, y, h) with x, y normalized pixel coordinates and h the
    scaled normalized intensity."""

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if p.size and not np.all(np.isfinite(p)):
            raise ValueError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return len(self.points)


def _farthest_point_subset(pts: np.ndarray, count: int, start: int) -> np.ndarray:
    """Greedy farthest-point sampling; ties resolve to the lowest index."""
    selected = np.empty(count, dtype=np.int64)
    selected[0] = start
    dist = np.linalg.norm(pts - pts[start], axis=1)
    for k in range(1, count):
        nxt = int(np.argmax(dist))
        selected[k] = nxt
        dist = np.minimum(dist, np.linalg.norm(pts - pts[nxt], axis=1))
    return np.sort(selected)


def image_to_cloud(img: Image, params: FiltrationParams) -> PointCloud3:
    """Pixels with normalized intensity above tau become points
    (x/side, y/side, alpha * I/I_max); oversized clouds are thinned by
    farthest-point sampling seeded from the image content."""
    vals = img.values
    if np.any(vals < 0):
        raise ValueError("image_to_cloud expects a non-negative intensity image")
    peak = vals.max()
    if peak <= 0:
        return PointCloud3(np.empty((0, 3)))
    norm = vals / peak
    rows, cols = np.nonzero(norm > params.tau)
    side = img.grid.side
    pts = np.column_stack([cols / side, rows / side, params.alpha * norm[rows, cols]])
    if len(pts) > params.max_points:
        digest = hashlib.blake2b(vals.tobytes(), digest_size=8).digest()
        seed = int.from_bytes(digest, "little")
        rng = np.random.Generator(np.random.Philox(key=seed))
        start = int(rng.integers(len(pts)))
        pts = pts[_farthest_point_subset(pts, params.max_points, start)]
    return PointCloud3(pts)
