"""Kolmogorov-statistics phase screens and the single-screen beam channel.

Screens are synthesized spectrally: complex Gaussian coefficients shaped by a
von Karman phase spectrum are inverse-FFT'd, and a hierarchy of 3x3
subharmonic levels restores the low-frequency power the periodic FFT grid
cannot carry.  The structure function of pure Kolmogorov turbulence converges
like (f_min)^{1/3} in the lowest synthesized frequency, so the hierarchy has
to go deep: 9 levels with the outer scale tied just below the deepest cell
keep the ensemble structure function within a few percent of
6.88 (r/r0)^{5/3} across the aperture.  The Fried parameter follows from the
turbulence level T as r0 = D / T.

All randomness comes from numpy's Philox counter-based generator keyed by the
spec seed, so screens are bit-reproducible for a given spec.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .optics import ComplexField, GridSpec, Image

SUBHARMONIC_LEVELS = 9
OUTER_SCALE_FACTOR = 3.0 ** (SUBHARMONIC_LEVELS + 1)  # L0 just below the deepest subharmonic
NOISE_STREAM_TAG = 0x9E3779B97F4A7C15  # xor'ed into the seed for the noise stream

SCREEN_MAGIC = b"PHSC"


@dataclass(frozen=True)
class TurbulenceSpec:
    """Turbulence level T = D / r0 on a given grid; seed fixes the realization."""

    level: float
    grid: GridSpec
    aperture: float | None = None  # linear dimension D in grid units; None = full width
    seed: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"turbulence level must be >= 0, got {self.level}")
        if self.aperture is not None and not self.aperture > 0:
            raise ValueError("aperture must be positive")

    @property
    def aperture_width(self) -> float:
        return 2.0 * self.grid.extent if self.aperture is None else self.aperture

    @property
    def fried_parameter(self) -> float:
        if self.level == 0:
            return np.inf
        return self.aperture_width / self.level


def _von_karman_psd(f_sq: np.ndarray, r0: float, f0: float) -> np.ndarray:
    """Phase power spectral density 0.023 r0^(-5/3) (f^2 + f0^2)^(-11/6)."""
    return 0.023 * r0 ** (-5.0 / 3.0) * (f_sq + f0**2) ** (-11.0 / 6.0)


_NEAR_DC_HALFWIDTH = 4  # FFT bins within this index radius get cell-averaged power
_CELL_SUBSAMPLES = 41


def _cell_stats(fcx: float, fcy: float, cell: float, f0: float) -> tuple[float, float, float]:
    """Cell-averaged PSD shape and PSD-weighted centroid frequency of one cell.

    The r0^(-5/3) prefactor cancels in ratios, so it is applied by the caller.
    """
    off = ((np.arange(_CELL_SUBSAMPLES) + 0.5) / _CELL_SUBSAMPLES - 0.5) * cell
    gx, gy = np.meshgrid(fcx + off, fcy + off, indexing="xy")
    w = (gx**2 + gy**2 + f0**2) ** (-11.0 / 6.0)
    wm = float(w.mean())
    return wm, float((w * gx).mean() / wm), float((w * gy).mean() / wm)


def _correction_table(n: int, df: float, f0: float):
    """Quadrature corrections for the steep near-DC part of the spectrum.

    Midpoint PSD sampling badly underestimates the power of cells near the DC
    pole (the integrand is strongly convex), which shows up as a structure
    function several percent below the Kolmogorov law.  Near-DC FFT bins get
    cell-averaged power; each subharmonic wave gets cell-averaged power placed
    at the cell's PSD-weighted centroid frequency.
    """
    k = _NEAR_DC_HALFWIDTH
    fft_ratio = np.ones((2 * k + 1, 2 * k + 1))
    for j in range(-k, k + 1):
        for i in range(-k, k + 1):
            if i == 0 and j == 0:
                continue
            avg = _cell_stats(i * df, j * df, df, f0)[0]
            mid = ((i * df) ** 2 + (j * df) ** 2 + f0**2) ** (-11.0 / 6.0)
            fft_ratio[j + k, i + k] = avg / mid
    sub = []
    for p in range(1, SUBHARMONIC_LEVELS + 1):
        dfs = df / 3.0**p
        level = []
        for j in (-1, 0, 1):
            for i in (-1, 0, 1):
                if i == 0 and j == 0:
                    continue
                shape, cx, cy = _cell_stats(i * dfs, j * dfs, dfs, f0)
                level.append((shape, cx, cy, dfs))
        sub.append(level)
    return fft_ratio, sub


_CORRECTIONS: dict = {}


def _corrections_for(n: int, df: float, f0: float):
    key = (n, round(f0 / df, 12))
    tab = _CORRECTIONS.get(key)
    if tab is None:
        tab = _correction_table(n, df, f0)
        _CORRECTIONS[key] = tab
    return tab


def phase_screen(spec: TurbulenceSpec) -> Image:
    """One random phase screen with Kolmogorov second-order statistics.

    T = 0 returns the all-zero screen.  The per-screen mean (piston) is
    removed, since a global phase is unobservable in intensity.
    """
    n = spec.grid.side
    if spec.level == 0:
        return Image(spec.grid, np.zeros((n, n)))

    delta = spec.grid.dx
    r0 = spec.fried_parameter
    f0 = 1.0 / (OUTER_SCALE_FACTOR * spec.aperture_width)
    rng = np.random.Generator(np.random.Philox(key=spec.seed))

    # FFT part: centered frequency grid, DC zeroed, near-DC bins cell-averaged.
    df = 1.0 / (n * delta)
    fft_ratio, sub_table = _corrections_for(n, df, f0)
    f_ax = (np.arange(n) - n // 2) * df
    fx, fy = np.meshgrid(f_ax, f_ax, indexing="xy")
    psd = _von_karman_psd(fx**2 + fy**2, r0, f0)
    k = _NEAR_DC_HALFWIDTH
    psd[n // 2 - k : n // 2 + k + 1, n // 2 - k : n // 2 + k + 1] *= fft_ratio
    psd[n // 2, n // 2] = 0.0
    cn = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * np.sqrt(psd) * df
    screen = np.real(np.fft.ifft2(np.fft.ifftshift(cn)) * n**2)

    # Hierarchical 3x3 subharmonics: level p refines the central cell of level
    # p-1 (level 0 = the FFT grid's DC cell), its own center excluded.  Each
    # wave carries the cell-averaged power at the cell's centroid frequency.
    ax = spec.grid.axis()
    pref = 0.023 * r0 ** (-5.0 / 3.0)
    low = np.zeros_like(screen)
    for level in sub_table:
        coef = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        for (shape, cx, cy, dfs), c in zip(level, coef):
            amp = c * np.sqrt(pref * shape) * dfs
            wave_y = np.exp(2j * np.pi * cy * ax)
            wave_x = np.exp(2j * np.pi * cx * ax)
            low += np.real(amp * np.outer(wave_y, wave_x))

    screen += low
    screen -= screen.mean()
    return Image(spec.grid, screen)


def apply(field: ComplexField, screen: Image) -> ComplexField:
    """Multiply the field by exp(i * screen); preserves pixelwise magnitude."""
    if field.grid != screen.grid:
        raise ValueError("field and screen grids differ")
    return ComplexField(field.grid, field.amplitudes * np.exp(1j * screen.values))


def channel(field: ComplexField, spec: TurbulenceSpec, noise_sigma: float = 0.0) -> ComplexField:
    """Phase-screen distortion plus optional circular complex Gaussian detector noise.

    The noise stream is seeded by spec.seed xor a fixed tag, so screen and
    noise are independent but jointly reproducible.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    out = apply(field, phase_screen(spec))
    if noise_sigma > 0:
        n = spec.grid.side
        rng = np.random.Generator(np.random.Philox(key=spec.seed ^ NOISE_STREAM_TAG))
        noise = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        out = ComplexField(spec.grid, out.amplitudes + noise_sigma / np.sqrt(2.0) * noise)
    return out


def structure_function(screens: list[np.ndarray], lags: np.ndarray) -> np.ndarray:
    """Ensemble estimate of D_phi(r) = mean[(phi(x+r) - phi(x))^2] at pixel lags.

    Averages squared differences along both axes over all screens.
    """
    out = np.zeros(len(lags))
    for i, lag in enumerate(lags):
        acc = 0.0
        cnt = 0
        for s in screens:
            dx = s[:, lag:] - s[:, :-lag]
            dy = s[lag:, :] - s[:-lag, :]
            acc += float(np.sum(dx**2) + np.sum(dy**2))
            cnt += dx.size + dy.size
        out[i] = acc / cnt
    return out


def kolmogorov_structure(r: np.ndarray, r0: float) -> np.ndarray:
    """The 6.88 (r/r0)^(5/3) reference law."""
    return 6.88 * (np.asarray(r) / r0) ** (5.0 / 3.0)


def write_screen(path, screen: Image) -> None:
    """Debug export: magic 'PHSC', u16 side, u16 reserved, then f32 LE values."""
    side = screen.grid.side
    payload = SCREEN_MAGIC + struct.pack("<HH", side, 0)
    payload += screen.values.astype("<f4").tobytes()
    from .fileio import atomic_write_bytes

    atomic_write_bytes(path, payload)


def read_screen(path, extent: float = 3.0) -> Image:
    """Read a PHSC screen back; the physical extent is not stored in the file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != SCREEN_MAGIC:
        raise ValueError("not a PHSC screen file")
    side, _ = struct.unpack("<HH", raw[4:8])
    vals = np.frombuffer(raw[8:], dtype="<f4").reshape(side, side).astype(np.float64)
    return Image(GridSpec(side, extent), vals)
