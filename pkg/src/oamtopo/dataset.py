"""Labeled beam-image datasets on disk.

Binary layout ('OAMD'): u32 version=1, u32 sample_count, u16 side, u16 side,
u8 channel_count, u8 dtype tag (0 = f32 LE), u16 n_bits, then channel-kind
tags (u8 each: 0 = intensity, 1 = phase); per sample u32 label, u64
sample_seed, then channel_count * side^2 f32 values row-major.  A JSON
sidecar (<path>.json) records the physical/config context.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .fileio import atomic_write_bytes, atomic_write_json, read_json

DATASET_MAGIC = b"OAMD"
DATASET_VERSION = 1
CHANNEL_TAGS = {"intensity": 0, "phase": 1}
CHANNEL_NAMES = {v: k for k, v in CHANNEL_TAGS.items()}


def derive_seed(*parts: int) -> int:
    """Stable 64-bit seed from integer parts (order-sensitive)."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(struct.pack("<q", int(p) & 0x7FFFFFFFFFFFFFFF))
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class Dataset:
    """In-memory view of an OAMD file."""

    side: int
    n_bits: int
    channel_kinds: tuple[str, ...]
    labels: np.ndarray  # (N,) int64
    seeds: np.ndarray  # (N,) uint64
    images: np.ndarray  # (N, channels, side, side) float32
    sidecar: dict

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def class_count(self) -> int:
        return 1 << self.n_bits

    def channel(self, kind: str) -> np.ndarray:
        return self.images[:, self.channel_kinds.index(kind)]


def write_dataset(path, side, n_bits, channel_kinds, labels, seeds, images, sidecar) -> None:
    n = len(labels)
    header = DATASET_MAGIC + struct.pack(
        "<IIHHBBH",
        DATASET_VERSION,
        n,
        side,
        side,
        len(channel_kinds),
        0,
        n_bits,
    )
    header += bytes(CHANNEL_TAGS[k] for k in channel_kinds)
    body = bytearray(header)
    for i in range(n):
        body += struct.pack("<IQ", int(labels[i]), int(seeds[i]))
        body += np.ascontiguousarray(images[i], dtype="<f4").tobytes()
    atomic_write_bytes(path, bytes(body))
    atomic_write_json(str(path) + ".json", sidecar)


def read_dataset(path) -> Dataset:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != DATASET_MAGIC:
        raise ValueError("not an OAMD dataset")
    version, n, side, side2, n_ch, dtype_tag, n_bits = struct.unpack_from("<IIHHBBH", raw, 4)
    if version != DATASET_VERSION:
        raise ValueError(f"unsupported dataset version {version}")
    if side != side2:
        raise ValueError("non-square grids are not supported")
    if dtype_tag != 0:
        raise ValueError(f"unknown dtype tag {dtype_tag}")
    pos = 4 + struct.calcsize("<IIHHBBH")
    kinds = tuple(CHANNEL_NAMES[b] for b in raw[pos : pos + n_ch])
    pos += n_ch
    labels = np.empty(n, dtype=np.int64)
    seeds = np.empty(n, dtype=np.uint64)
    images = np.empty((n, n_ch, side, side), dtype=np.float32)
    frame = n_ch * side * side
    for i in range(n):
        label, seed = struct.unpack_from("<IQ", raw, pos)
        pos += 12
        labels[i] = label
        seeds[i] = seed
        images[i] = np.frombuffer(raw, dtype="<f4", count=frame, offset=pos).reshape(
            n_ch, side, side
        )
        pos += 4 * frame
    if pos != len(raw):
        raise ValueError("trailing bytes in dataset file")
    try:
        sidecar = read_json(str(path) + ".json")
    except FileNotFoundError:
        sidecar = {}
    return Dataset(side, n_bits, kinds, labels, seeds, images, sidecar)


def content_hash(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.blake2b(fh.read(), digest_size=16).hexdigest()


def stratified_split(labels: np.ndarray, ratio: float, seed: int):
    """Per-class deterministic split; test count rounds down so the remainder
    rounds toward train.  Returns sorted (train_idx, test_idx)."""
    if not 0 < ratio < 1:
        raise ValueError("split ratio must lie in (0, 1)")
    train, test = [], []
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        if len(idx) < 2:
            raise ValueError(f"class {cls} has fewer than 2 samples")
        rng = np.random.Generator(np.random.Philox(key=derive_seed(seed, int(cls))))
        perm = rng.permutation(len(idx))
        n_test = int(np.floor(len(idx) * (1.0 - ratio)))
        if n_test == 0:
            n_test = 1  # every class keeps at least one held-out sample
        test.extend(idx[perm[:n_test]])
        train.extend(idx[perm[n_test:]])
    return np.sort(np.array(train, dtype=np.int64)), np.sort(np.array(test, dtype=np.int64))
