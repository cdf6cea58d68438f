"""Desk-scale OAM-mode decoding lab: optics, turbulence, persistent homology,
a learnable diagram projection, and from-scratch classifiers."""

__version__ = "0.1.0"
