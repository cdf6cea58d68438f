"""Persistence diagram containers.

Conventions shared by every engine:
  - zero-lifetime pairs are dropped;
  - exactly the essential H0 classes carry death = inf;
  - essential classes in dimension >= 1 are truncated to death =
    max_filtration (and dropped if that leaves zero lifetime);
  - Rips diagrams have non-negative births (distances); cubical sublevel
    diagrams inherit the sign of the filtration values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PersistencePoint:
    dim: int
    birth: float
    death: float  # math.inf for essential H0 classes

    def __post_init__(self):
        if self.dim not in (0, 1, 2):
            raise ValueError(f"homology dimension must be in {{0,1,2}}, got {self.dim}")
        if not self.birth < self.death:
            raise ValueError(f"need birth < death, got ({self.birth}, {self.death})")

    @property
    def lifetime(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True)
class PersistenceDiagram:
    points: tuple[PersistencePoint, ...]
    max_filtration: float
    source_mode: str  # "rips" | "cubical"

    def __post_init__(self):
        if self.source_mode not in ("rips", "cubical"):
            raise ValueError(f"unknown source mode {self.source_mode!r}")
        for p in self.points:
            if math.isinf(p.death):
                if p.dim != 0:
                    raise ValueError("only H0 essential classes may carry death = inf")
            elif p.death > self.max_filtration + 1e-12:
                raise ValueError(
                    f"finite death {p.death} exceeds max_filtration {self.max_filtration}"
                )
            if self.source_mode == "rips" and p.birth < 0:
                raise ValueError("Rips births are distances and must be >= 0")

    def __len__(self) -> int:
        return len(self.points)

    def points_of_dim(self, dim: int) -> tuple[PersistencePoint, ...]:
        return tuple(p for p in self.points if p.dim == dim)

    def multiset(self, ndigits: int = 9) -> tuple:
        """Canonical sorted multiset of (dim, birth, death) for comparisons."""
        return tuple(
            sorted(
                (p.dim, round(float(p.birth), ndigits), round(float(p.death), ndigits))
                for p in self.points
            )
        )


def build_diagram(
    pairs: list[tuple[int, float, float]],
    essential_births: list[tuple[int, float]],
    max_filtration: float,
    source_mode: str,
) -> PersistenceDiagram:
    """Assemble a diagram from raw (dim, birth, death) pairs and essential births.

    Applies the shared conventions: drop zero-lifetime pairs, death = inf for
    essential H0, truncate higher-dimensional essentials at max_filtration.
    """
    pts = [PersistencePoint(d, b, dth) for d, b, dth in pairs if b < dth]
    for dim, birth in essential_births:
        if dim == 0:
            pts.append(PersistencePoint(0, birth, math.inf))
        elif birth < max_filtration:
            pts.append(PersistencePoint(dim, birth, max_filtration))
    pts.sort(key=lambda p: (p.dim, p.birth, p.death))
    return PersistenceDiagram(tuple(pts), max_filtration, source_mode)
