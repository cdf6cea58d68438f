"""Laguerre-Gaussian mode synthesis and bit-to-mode message encoding.

All lengths are expressed in units of the beam waist w0, so the waist-plane
LG profile with radial index 0 reduces to (sqrt(2)*r)^|l| * exp(-r^2) *
exp(i*l*phi).  Fields live on a square grid of pixel centers symmetric about
the beam axis and are L2-normalized with the pixel area as quadrature weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PHASE_MASK_REL = 1e-12  # pixels dimmer than this fraction of the peak get phase 0


@dataclass(frozen=True)
class GridSpec:
    """Square sampling grid: `side` pixels per axis over [-extent, extent] (w0 units)."""

    side: int = 64
    extent: float = 3.0

    def __post_init__(self):
        if self.side < 8:
            raise ValueError(f"grid side must be >= 8, got {self.side}")
        if not self.extent > 0:
            raise ValueError(f"grid extent must be positive, got {self.extent}")

    @property
    def dx(self) -> float:
        return 2.0 * self.extent / self.side

    def axis(self) -> np.ndarray:
        """Pixel-center coordinates along one axis, symmetric about 0."""
        return (np.arange(self.side) + 0.5) * self.dx - self.extent

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) coordinate arrays; X varies along columns, Y along rows."""
        ax = self.axis()
        return np.meshgrid(ax, ax, indexing="xy")


@dataclass(frozen=True)
class ModeSet:
    """Ordered distinct topological charges; charge k+1 carries message bit k."""

    charges: tuple[int, ...]

    def __post_init__(self):
        if len(self.charges) < 1:
            raise ValueError("mode set must contain at least one charge")
        if len(set(self.charges)) != len(self.charges):
            raise ValueError(f"charges must be distinct, got {self.charges}")

    @classmethod
    def first_adjacent(cls, n: int) -> "ModeSet":
        """The default {1, 2, ..., n} assignment."""
        return cls(tuple(range(1, n + 1)))

    def __len__(self) -> int:
        return len(self.charges)


@dataclass(frozen=True)
class Message:
    """An n-bit message value in [0, 2^n_bits)."""

    value: int
    n_bits: int

    def __post_init__(self):
        if self.n_bits < 1:
            raise ValueError("n_bits must be >= 1")
        if not 0 <= self.value < (1 << self.n_bits):
            raise ValueError(f"message {self.value} out of range for {self.n_bits} bits")

    def active_bits(self) -> list[int]:
        """Indices of set bits, least-significant first."""
        return [k for k in range(self.n_bits) if (self.value >> k) & 1]


@dataclass(frozen=True)
class ComplexField:
    """Complex beam cross-section sampled on `grid`."""

    grid: GridSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.complex128)
        if a.shape != (self.grid.side, self.grid.side):
            raise ValueError(f"amplitude shape {a.shape} does not match grid {self.grid.side}")
        if not np.all(np.isfinite(a.view(np.float64))):
            raise ValueError("field contains non-finite amplitudes")
        object.__setattr__(self, "amplitudes", a)

    def norm_sq(self) -> float:
        """Total power: sum(|a|^2) * dx^2."""
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx**2)


@dataclass(frozen=True)
class Image:
    """Real-valued image (intensity or phase) on `grid`."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.side, self.grid.side):
            raise ValueError(f"image shape {v.shape} does not match grid {self.grid.side}")
        if not np.all(np.isfinite(v)):
            raise ValueError("image contains non-finite values")
        object.__setattr__(self, "values", v)


def lg_field(charge: int, grid: GridSpec) -> ComplexField:
    """Waist-plane Laguerre-Gaussian mode with azimuthal charge `charge`, radial index 0.

    The returned field is L2-normalized: sum(|a|^2) * dx^2 == 1.
    """
    x, y = grid.mesh()
    r = np.hypot(x, y)
    phi = np.arctan2(y, x)
    amp = (np.sqrt(2.0) * r) ** abs(charge) * np.exp(-(r**2))
    field = amp * np.exp(1j * charge * phi)
    power = np.sum(np.abs(field) ** 2) * grid.dx**2
    field /= np.sqrt(power)
    return ComplexField(grid, field)


def encode(message: Message, modes: ModeSet, grid: GridSpec) -> ComplexField:
    """Equal-amplitude superposition of the modes whose bits are set in `message`.

    Bit k (least-significant first) activates charges[k].  The all-zero message
    yields the zero field; any other result is L2-normalized.
    """
    if message.n_bits != len(modes):
        raise ValueError(
            f"message has {message.n_bits} bits but mode set has {len(modes)} charges"
        )
    total = np.zeros((grid.side, grid.side), dtype=np.complex128)
    for k in message.active_bits():
        total += lg_field(modes.charges[k], grid).amplitudes
    power = np.sum(np.abs(total) ** 2) * grid.dx**2
    if power > 0.0:
        total /= np.sqrt(power)
    return ComplexField(grid, total)


def intensity(field: ComplexField) -> Image:
    """Pixelwise |a|^2."""
    return Image(field.grid, np.abs(field.amplitudes) ** 2)


def phase(field: ComplexField) -> Image:
    """Pixelwise argument in [-pi, pi); near-zero pixels (relative to peak) map to 0."""
    a = field.amplitudes
    ph = np.angle(a)
    ph = np.where(ph >= np.pi, ph - 2.0 * np.pi, ph)
    peak = np.abs(a).max()
    if peak > 0.0:
        ph = np.where(np.abs(a) < PHASE_MASK_REL * peak, 0.0, ph)
    else:
        ph = np.zeros_like(ph)
    return Image(field.grid, ph)


def inner_product(a: ComplexField, b: ComplexField) -> complex:
    """Discrete L2 inner product sum(conj(a) * b) * dx^2."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return complex(np.sum(np.conj(a.amplitudes) * b.amplitudes) * a.grid.dx**2)


def _bilinear(amplitudes: np.ndarray, grid: GridSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a complex field at physical points (x, y)."""
    col = (x + grid.extent) / grid.dx - 0.5
    row = (y + grid.extent) / grid.dx - 0.5
    c0 = np.floor(col).astype(int)
    r0 = np.floor(row).astype(int)
    fc = col - c0
    fr = row - r0
    c1 = c0 + 1
    r1 = r0 + 1
    v00 = amplitudes[r0, c0]
    v01 = amplitudes[r0, c1]
    v10 = amplitudes[r1, c0]
    v11 = amplitudes[r1, c1]
    return (
        v00 * (1 - fr) * (1 - fc)
        + v01 * (1 - fr) * fc
        + v10 * fr * (1 - fc)
        + v11 * fr * fc
    )


def phase_winding(field: ComplexField, radius: float, samples: int = 720) -> int:
    """Net winding number of the phase along the centered circle of `radius`.

    Samples the field by bilinear interpolation and accumulates wrapped phase
    increments; requires the circle to stay inside the interpolable window.
    """
    grid = field.grid
    if not 0.0 < radius < grid.extent:
        raise ValueError(f"radius {radius} outside (0, extent={grid.extent})")
    if radius > grid.extent - grid.dx:
        raise ValueError(f"circle of radius {radius} leaves the sampled grid")
    theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    vals = _bilinear(field.amplitudes, grid, radius * np.cos(theta), radius * np.sin(theta))
    ph = np.angle(vals)
    dph = np.diff(ph, append=ph[:1])
    dph = (dph + np.pi) % (2.0 * np.pi) - np.pi
    return int(np.rint(dph.sum() / (2.0 * np.pi)))
