"""Diagram cache file: magic 'OAMP', u32 version, u32 sample_count; per sample
u32 point_count then (u8 dim, f32 birth, f32 death) triples, little-endian,
with infinite deaths stored as f32 infinity."""

from __future__ import annotations

import math
import struct

import numpy as np

from ..fileio import atomic_write_bytes
from .diagram import PersistenceDiagram, PersistencePoint

CACHE_MAGIC = b"OAMP"
CACHE_VERSION = 1


def save_diagrams(path, diagrams: list[PersistenceDiagram]) -> None:
    out = [CACHE_MAGIC, struct.pack("<II", CACHE_VERSION, len(diagrams))]
    for dg in diagrams:
        out.append(struct.pack("<I", len(dg.points)))
        for p in dg.points:
            death = np.float32(np.inf) if math.isinf(p.death) else np.float32(p.death)
            out.append(struct.pack("<Bff", p.dim, np.float32(p.birth), death))
    atomic_write_bytes(path, b"".join(out))


def load_diagrams(path, max_filtration: float, source_mode: str) -> list[PersistenceDiagram]:
    """The binary format carries points only; filtration metadata comes from
    the cache sidecar the pipeline writes next to it."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != CACHE_MAGIC:
        raise ValueError("not an OAMP diagram cache")
    version, count = struct.unpack_from("<II", raw, 4)
    if version != CACHE_VERSION:
        raise ValueError(f"unsupported cache version {version}")
    pos = 12
    diagrams = []
    for _ in range(count):
        (n_pts,) = struct.unpack_from("<I", raw, pos)
        pos += 4
        pts = []
        for _ in range(n_pts):
            dim, birth, death = struct.unpack_from("<Bff", raw, pos)
            pos += 9
            birth = float(birth)
            death = float(death)
            if math.isfinite(death):
                # f32 round-trip may nudge values past the cap or collapse
                # near-diagonal pairs; clamp and drop accordingly
                death = min(death, max_filtration)
                if not birth < death:
                    continue
            pts.append(PersistencePoint(dim, birth, death))
        diagrams.append(PersistenceDiagram(tuple(pts), max_filtration, source_mode))
    if pos != len(raw):
        raise ValueError("trailing bytes in diagram cache")
    return diagrams
