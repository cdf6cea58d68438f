"""Persistent homology of received beams.

Two engines produce diagrams: a Vietoris-Rips filtration over an
intensity-lifted 3-D point cloud (H0/H1/H2) and a cheaper 2-D cubical
sublevel filtration (H0/H1), plus a naive boundary-reduction oracle used to
cross-check both.
"""

from .cloud import FiltrationParams, PointCloud3, image_to_cloud
from .cubical import cubical_persistence
from .diagram import PersistenceDiagram, PersistencePoint
from .oracle import (
    explicit_cubical_filtration,
    explicit_rips_filtration,
    oracle_persistence,
)
from .rips import rips_persistence

__all__ = [
    "FiltrationParams",
    "PersistenceDiagram",
    "PersistencePoint",
    "PointCloud3",
    "compute_diagram",
    "cubical_persistence",
    "explicit_cubical_filtration",
    "explicit_rips_filtration",
    "image_to_cloud",
    "oracle_persistence",
    "rips_persistence",
]


def compute_diagram(img, params: FiltrationParams) -> PersistenceDiagram:
    """Route an intensity image through the configured filtration."""
    if params.mode == "rips":
        cloud = image_to_cloud(img, params)
        return rips_persistence(cloud, params.max_dim, params.max_radius)
    return cubical_persistence(img, params.max_dim)
