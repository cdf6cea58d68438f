import math

import numpy as np
import pytest

from oamtopo.fileio import atomic_write_bytes, atomic_write_json, read_json
from oamtopo.homology import PersistenceDiagram, PersistencePoint
from oamtopo.homology.cache import load_diagrams, save_diagrams


def test_diagram_cache_roundtrip(tmp_path):
    diagrams = [
        PersistenceDiagram((), 1.5, "rips"),
        PersistenceDiagram(
            (
                PersistencePoint(0, 0.0, math.inf),
                PersistencePoint(0, 0.0, 0.25),
                PersistencePoint(1, 0.125, 0.5),
                PersistencePoint(2, 0.25, 1.0),
            ),
            1.5,
            "rips",
        ),
    ]
    path = tmp_path / "d.oamp"
    save_diagrams(path, diagrams)
    raw = path.read_bytes()
    assert raw[:4] == b"OAMP"
    assert int.from_bytes(raw[4:8], "little") == 1  # version
    assert int.from_bytes(raw[8:12], "little") == 2  # sample count

    back = load_diagrams(path, 1.5, "rips")
    assert len(back) == 2
    assert back[0].multiset() == ()
    assert back[1].multiset() == diagrams[1].multiset()
    deaths = [p.death for p in back[1].points]
    assert any(math.isinf(d) for d in deaths)


def test_diagram_cache_f32_quantization_guard(tmp_path):
    # a death microscopically above the cap must clamp, not crash
    d = PersistenceDiagram(
        (PersistencePoint(1, 0.1, 1.4999999999),), 1.4999999999, "rips"
    )
    path = tmp_path / "d.oamp"
    save_diagrams(path, [d])
    back = load_diagrams(path, 1.4999999999, "rips")
    assert len(back) == 1
    assert back[0].points[0].death <= 1.4999999999


def test_cache_rejects_garbage(tmp_path):
    path = tmp_path / "x.oamp"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError):
        load_diagrams(path, 1.0, "rips")


def test_atomic_write_replaces_not_partial(tmp_path):
    path = tmp_path / "out.bin"
    atomic_write_bytes(path, b"first")
    atomic_write_bytes(path, b"second")
    assert path.read_bytes() == b"second"
    assert list(tmp_path.glob("*.tmp")) == []


def test_atomic_json_roundtrip(tmp_path):
    path = tmp_path / "meta.json"
    atomic_write_json(path, {"b": 2, "a": [1, 2]})
    assert read_json(path) == {"a": [1, 2], "b": 2}
    # sorted keys for stable bytes
    assert path.read_text().index('"a"') < path.read_text().index('"b"')
