"""Learnable Gaussian-kernel projection of persistence diagrams.

Each kernel i reads one homology dimension and contributes
v_i = sum_j exp(-r_j / (2 sigma_i^2)) over the surviving diagram points of
that dimension, with r_j = ||p_j - mu_i|| in literal mode (the published
form) or ||p_j - mu_i||^2 in squared mode (the smooth textbook Gaussian).
Points with lifetime below nu are pruned; infinite deaths are capped at the
diagram's max_filtration before anything else happens.  mu and sigma carry
analytic gradients so the projection trains jointly with the classifier.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .homology.diagram import PersistenceDiagram

SIGMA_MIN = 1e-3  # clamp after every optimizer update to keep dG/dsigma finite


@dataclass(frozen=True)
class Kernel:
    mu: tuple[float, float]  # (birth, death) location
    sigma: float
    dim_assignment: int  # homology dimension this kernel reads

    def __post_init__(self):
        if self.sigma < SIGMA_MIN:
            raise ValueError(f"sigma must be >= {SIGMA_MIN}, got {self.sigma}")
        if self.dim_assignment not in (0, 1, 2):
            raise ValueError("dim_assignment must be in {0,1,2}")


@dataclass(frozen=True)
class KernelBank:
    kernels: tuple[Kernel, ...]
    nu: float = 0.1
    norm_mode: str = "literal"  # "literal" | "squared"

    def __post_init__(self):
        if len(self.kernels) < 1:
            raise ValueError("bank needs at least one kernel")
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if self.norm_mode not in ("literal", "squared"):
            raise ValueError(f"unknown norm mode {self.norm_mode!r}")

    def __len__(self) -> int:
        return len(self.kernels)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(mu (N,2), sigma (N,), dims (N,)) views for vectorized evaluation."""
        mu = np.array([k.mu for k in self.kernels], dtype=np.float64)
        sigma = np.array([k.sigma for k in self.kernels], dtype=np.float64)
        dims = np.array([k.dim_assignment for k in self.kernels], dtype=np.int64)
        return mu, sigma, dims

    def with_arrays(self, mu: np.ndarray, sigma: np.ndarray) -> "KernelBank":
        """Same bank with updated parameters (sigma clamped)."""
        sigma = np.maximum(sigma, SIGMA_MIN)
        kernels = tuple(
            replace(k, mu=(float(m[0]), float(m[1])), sigma=float(s))
            for k, m, s in zip(self.kernels, mu, sigma)
        )
        return replace(self, kernels=kernels)


def surviving_points(diagram: PersistenceDiagram, nu: float) -> dict[int, np.ndarray]:
    """Per-dimension (m, 2) arrays of (birth, death) after capping infinite
    deaths at max_filtration and pruning lifetimes below nu.

    Points are sorted canonically so projection sums are bitwise identical
    no matter how the diagram was ordered.
    """
    out: dict[int, np.ndarray] = {}
    for dim in (0, 1, 2):
        pts = [
            (p.birth, min(p.death, diagram.max_filtration))
            for p in diagram.points
            if p.dim == dim
        ]
        arr = np.array(pts, dtype=np.float64).reshape(-1, 2)
        if arr.size:
            arr = arr[(arr[:, 1] - arr[:, 0]) >= nu]
            arr = arr[np.lexsort((arr[:, 1], arr[:, 0]))]
        out[dim] = arr
    return out


def gauss(kernel: Kernel, point, nu: float, norm_mode: str = "literal", max_filtration: float = np.inf) -> float:
    """Single point-kernel evaluation; 0 if the point is pruned or belongs to
    another dimension."""
    if point.dim != kernel.dim_assignment:
        return 0.0
    death = min(point.death, max_filtration)
    if death - point.birth < nu:
        return 0.0
    delta = np.array([point.birth - kernel.mu[0], death - kernel.mu[1]])
    r = float(np.linalg.norm(delta))
    if norm_mode == "squared":
        r = r * r
    return float(np.exp(-r / (2.0 * kernel.sigma**2)))


def project(diagram: PersistenceDiagram, bank: KernelBank) -> np.ndarray:
    """Topological feature vector v, one entry per kernel."""
    mu, sigma, dims = bank.arrays()
    pts = surviving_points(diagram, bank.nu)
    v = np.zeros(len(bank))
    for dim in (0, 1, 2):
        sel = dims == dim
        arr = pts[dim]
        if not sel.any() or not len(arr):
            continue
        delta = arr[None, :, :] - mu[sel][:, None, :]  # (k, m, 2)
        r = np.linalg.norm(delta, axis=2)
        if bank.norm_mode == "squared":
            r = r * r
        v[sel] = np.exp(-r / (2.0 * sigma[sel, None] ** 2)).sum(axis=1)
    return v


def project_backward(
    diagram: PersistenceDiagram, bank: KernelBank, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients (dL/dmu (N,2), dL/dsigma (N,)) given dL/dv.

    Literal mode: dG/dmu = G (p - mu) / (2 sigma^2 ||p - mu||) (0 at p = mu),
    dG/dsigma = G ||p - mu|| / sigma^3.  Squared mode uses the standard
    Gaussian derivatives.  Pruned points contribute nothing; nu is fixed.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    mu, sigma, dims = bank.arrays()
    pts = surviving_points(diagram, bank.nu)
    grad_mu = np.zeros_like(mu)
    grad_sigma = np.zeros_like(sigma)
    for dim in (0, 1, 2):
        sel = dims == dim
        arr = pts[dim]
        if not sel.any() or not len(arr):
            continue
        mu_d = mu[sel]
        sig_d = sigma[sel, None]
        delta = arr[None, :, :] - mu_d[:, None, :]  # (k, m, 2)
        dist = np.linalg.norm(delta, axis=2)  # (k, m)
        if bank.norm_mode == "squared":
            g = np.exp(-(dist**2) / (2.0 * sig_d**2))
            dmu = g[:, :, None] * delta / (sig_d[:, :, None] ** 2)
            dsig = g * dist**2 / sig_d[:, 0:1] ** 3
        else:
            g = np.exp(-dist / (2.0 * sig_d**2))
            with np.errstate(divide="ignore", invalid="ignore"):
                unit = np.where(dist[:, :, None] > 0.0, delta / dist[:, :, None], 0.0)
            dmu = g[:, :, None] * unit / (2.0 * sig_d[:, :, None] ** 2)
            dsig = g * dist / sig_d[:, 0:1] ** 3
        up = upstream[sel]
        grad_mu[sel] = (up[:, None, None] * dmu).sum(axis=1)
        grad_sigma[sel] = (up[:, None] * dsig).sum(axis=1)
    return grad_mu, grad_sigma


def init_bank(
    n_kernels: int,
    split: tuple[int, int, int] | None,
    sample_diagrams: list[PersistenceDiagram],
    nu: float = 0.1,
    norm_mode: str = "literal",
) -> KernelBank:
    """Deterministic grid initialization over the surviving-point bounding box
    of each dimension (unit box fallback when a dimension is empty).

    A dimension with count k gets an interior lattice of ceil(sqrt(k)) columns.
    The kernel width starts from half the lattice spacing: in squared mode
    sigma is that length directly; in literal mode exp(-r/(2 sigma^2)) decays
    on the scale 2 sigma^2 (a length, not a length squared), so the same
    characteristic length is reached with sigma = sqrt(length).  Without the
    conversion every literal-mode response starts around e^-20 and the layer
    cannot train.
    """
    if split is None:
        base = n_kernels // 3
        split = (n_kernels - 2 * base, base, base)
    if len(split) != 3 or any(s < 0 for s in split):
        raise ValueError("split must be three non-negative counts")
    if sum(split) != n_kernels:
        raise ValueError(f"split {split} does not sum to N={n_kernels}")
    if n_kernels < sum(1 for s in split if s > 0):
        raise ValueError("N smaller than the number of requested dimensions")

    boxes: dict[int, tuple[float, float, float, float]] = {}
    for dim in (0, 1, 2):
        pts_all = []
        for dg in sample_diagrams:
            arr = surviving_points(dg, nu)[dim]
            if len(arr):
                pts_all.append(arr)
        if pts_all:
            arr = np.vstack(pts_all)
            lo = arr.min(axis=0)
            hi = arr.max(axis=0)
            boxes[dim] = (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))
        else:
            boxes[dim] = (0.0, 0.0, 1.0, 1.0)

    kernels: list[Kernel] = []
    for dim, count in enumerate(split):
        if count == 0:
            continue
        x0, y0, x1, y1 = boxes[dim]
        w = max(x1 - x0, 1e-6)
        h = max(y1 - y0, 1e-6)
        g_cols = int(np.ceil(np.sqrt(count)))
        g_rows = int(np.ceil(count / g_cols))
        sx = w / (g_cols + 1)
        sy = h / (g_rows + 1)
        char_len = 0.5 * 0.5 * (sx + sy)
        sigma = char_len if norm_mode == "squared" else np.sqrt(char_len)
        sigma = max(float(sigma), SIGMA_MIN)
        made = 0
        for r in range(g_rows):
            for c in range(g_cols):
                if made == count:
                    break
                mu = (x0 + (c + 1) * sx, y0 + (r + 1) * sy)
                kernels.append(Kernel(mu, sigma, dim))
                made += 1
    return KernelBank(tuple(kernels), nu=nu, norm_mode=norm_mode)
