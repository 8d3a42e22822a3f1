"""Synthetic forward model: phantoms, MPI-like system matrices, noise,
and the band-pass / SNR / row-normalization preprocessing pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .solvers import SystemMatrix

__all__ = [
    "NoiseModel",
    "make_shape_phantom",
    "make_vascular_phantom",
    "make_delta_phantom",
    "synth_system_matrix",
    "make_noise_model",
    "forward_simulate",
    "preprocess_matrix",
]

DEFAULT_FREQ_LO_HZ = 70e3
DEFAULT_FREQ_HI_HZ = 3000e3
DEFAULT_SNR_MIN = 3.0


@dataclass(frozen=True)
class NoiseModel:
    """Phantom weight sigma plus a fixed colored background spectrum."""

    sigma: float
    background: np.ndarray  # complex per-row background, added to b
    seed: int = 0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        object.__setattr__(
            self, "background", np.asarray(self.background, dtype=np.complex128)
        )


def make_noise_model(n_rows: int, sigma: float, seed: int = 0,
                     amplitude: float = 5e-4) -> NoiseModel:
    """Colored complex Gaussian background: 1/f-shaped magnitude envelope
    over the row index with seeded phase."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    rng = np.random.default_rng(seed)
    envelope = 1.0 / (1.0 + 5.0 * np.arange(n_rows) / max(n_rows, 1))
    noise = (rng.standard_normal(n_rows) + 1j * rng.standard_normal(n_rows)) / np.sqrt(2)
    return NoiseModel(sigma=sigma, background=amplitude * envelope * noise, seed=seed)


def make_shape_phantom(dims) -> np.ndarray:
    """Piecewise-constant phantom: triangle at 0.75, ellipse at 1.0 and
    rectangle at 0.5 on zero background.  Deterministic layout scaled to the
    grid; geometry is a stand-in, intensities are fixed."""
    dims = tuple(int(v) for v in dims)
    if len(dims) != 2:
        raise ValueError("shape phantom is 2D")
    if min(dims) < 16:
        raise ValueError("shape phantom needs every axis >= 16")
    ny, nx = dims
    y, x = np.mgrid[0:ny, 0:nx]
    u = (x + 0.5) / nx  # in (0, 1)
    v = (y + 0.5) / ny
    img = np.zeros(dims)

    # rectangle, bottom strip
    img[(u >= 0.15) & (u <= 0.55) & (v >= 0.65) & (v <= 0.85)] = 0.5
    # ellipse, right half
    img[((u - 0.72) / 0.16) ** 2 + ((v - 0.38) / 0.24) ** 2 <= 1.0] = 1.0
    # triangle, top left: vertices (0.12, 0.50), (0.52, 0.50), (0.32, 0.10)
    in_tri = (
        (v <= 0.50)
        & (v >= 0.10)
        & (u >= 0.12 + 0.20 * (0.50 - v) / 0.40)
        & (u <= 0.52 - 0.20 * (0.50 - v) / 0.40)
    )
    img[in_tri] = 0.75
    return img


def _stamp_segment(img: np.ndarray, p0, p1, width: float) -> None:
    """Rasterize a thick segment by stamping discs along it."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = np.linalg.norm(p1 - p0)
    steps = max(int(np.ceil(length * 2)), 1)
    radius = max(width / 2.0, 0.5)
    r_int = int(np.ceil(radius))
    ny, nx = img.shape
    for t in np.linspace(0.0, 1.0, steps + 1):
        cy, cx = p0 + t * (p1 - p0)
        y0, y1 = int(np.floor(cy - r_int)), int(np.ceil(cy + r_int)) + 1
        x0, x1 = int(np.floor(cx - r_int)), int(np.ceil(cx + r_int)) + 1
        for yy in range(max(y0, 0), min(y1, ny)):
            for xx in range(max(x0, 0), min(x1, nx)):
                if (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2:
                    img[yy, xx] = 1.0


def make_vascular_phantom(dims) -> np.ndarray:
    """Deterministic recursive binary branching tree of 1-3 px wide
    segments at constant intensity on zero background."""
    dims = tuple(int(v) for v in dims)
    if len(dims) != 2:
        raise ValueError("vascular phantom is 2D")
    if min(dims) < 16:
        raise ValueError("vascular phantom needs every axis >= 16")
    ny, nx = dims
    img = np.zeros(dims)
    scale = min(ny, nx)

    def branch(pos, angle, length, width, depth):
        end = (pos[0] - length * np.cos(angle), pos[1] + length * np.sin(angle))
        _stamp_segment(img, pos, end, width)
        if depth == 0 or length < 2.0:
            return
        spread = 0.48
        branch(end, angle - spread, length * 0.72, max(width * 0.75, 1.0), depth - 1)
        branch(end, angle + spread, length * 0.72, max(width * 0.75, 1.0), depth - 1)

    root = (ny - 1.5, nx / 2.0)
    branch(root, 0.0, 0.34 * scale, 3.0, 4)
    return img


def make_delta_phantom(dims) -> np.ndarray:
    """Single unit-intensity voxel at the grid center."""
    dims = tuple(int(v) for v in dims)
    img = np.zeros(dims)
    img[tuple(n // 2 for n in dims)] = 1.0
    return img


def _freq_lattice(dims) -> list[tuple[int, ...]]:
    """All integer frequency tuples, sorted by normalized magnitude then
    lexicographically (deterministic order)."""
    axes = [np.fft.fftfreq(n, d=1.0 / n).astype(int) for n in dims]
    ks = list(product(*axes))
    ks.sort(key=lambda k: (sum((ki / ni) ** 2 for ki, ni in zip(k, dims)), k))
    return ks


def synth_system_matrix(dims, m_rows: int, seed: int = 0,
                        model: str = "fourier-blur") -> SystemMatrix:
    """Synthetic stand-in for a measured MPI system matrix.

    ``fourier-blur`` rows sample the Fourier coefficients of a
    Gaussian-blurred image: row i is the Fourier vector of frequency k_i
    attenuated by a Gaussian low-pass factor, with the blur width growing on
    every pass through the frequency lattice and a seeded unit-modulus phase
    per row.  Rows carry synthetic ascending frequency tags and an SNR tag
    decaying with frequency plus seeded jitter.  ``random-smooth`` rows are
    seeded complex Gaussian fields smoothed over the grid.
    """
    dims = tuple(int(v) for v in dims)
    if m_rows < 1:
        raise ValueError("m_rows must be >= 1")
    n = int(np.prod(dims))
    rng = np.random.default_rng(seed)
    coords = [np.arange(ni) for ni in dims]
    grids = np.meshgrid(*coords, indexing="ij")

    if model == "fourier-blur":
        lattice = _freq_lattice(dims)
        rows = np.empty((m_rows, n), dtype=np.complex128)
        for i in range(m_rows):
            k = lattice[i % n]
            cycle = i // n
            sigma_b = 0.6 + 0.35 * cycle
            phase_arg = sum(
                ki * g / ni for ki, g, ni in zip(k, grids, dims)
            )
            atten = np.exp(
                -2.0 * np.pi**2 * sigma_b**2
                * sum((ki / ni) ** 2 for ki, ni in zip(k, dims))
            )
            row_phase = np.exp(2j * np.pi * rng.uniform())
            rows[i] = (atten * row_phase) * np.exp(-2j * np.pi * phase_arg).ravel()
    elif model == "random-smooth":
        from scipy.ndimage import gaussian_filter

        rows = np.empty((m_rows, n), dtype=np.complex128)
        for i in range(m_rows):
            re = gaussian_filter(rng.standard_normal(dims), sigma=1.0, mode="wrap")
            im = gaussian_filter(rng.standard_normal(dims), sigma=1.0, mode="wrap")
            rows[i] = (re + 1j * im).ravel()
    else:
        raise ValueError(f"unknown system-matrix model {model!r}")

    freq = np.linspace(80e3, 2.5e6, m_rows)
    snr = 50.0 * np.exp(-3.0 * np.arange(m_rows) / m_rows)
    snr = snr * (1.0 + 0.1 * rng.standard_normal(m_rows))
    snr = np.maximum(snr, 0.05)
    return SystemMatrix.from_entries(rows, dims, row_snr=snr, row_freq_hz=freq)


def forward_simulate(A: SystemMatrix, x: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """Measurement synthesis b = A (x / sigma) + background."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != A.shape[1]:
        raise ValueError("phantom size does not match the system matrix")
    if noise.background.shape[0] != A.shape[0]:
        raise ValueError("background length does not match the row count")
    return A.entries @ (x / noise.sigma) + noise.background


def preprocess_matrix(A: SystemMatrix, b: np.ndarray,
                      snr_min: float = DEFAULT_SNR_MIN,
                      f_lo_hz: float = DEFAULT_FREQ_LO_HZ,
                      f_hi_hz: float = DEFAULT_FREQ_HI_HZ):
    """Band-pass and SNR row filtering followed by row normalization.

    Keeps rows with ``f_lo <= freq <= f_hi`` and ``snr > snr_min`` (strict),
    drops the matching entries of b, then scales surviving rows to unit norm
    with the identical scaling applied to b, leaving the solution set of the
    linear system unchanged.  The surviving row order is preserved.
    """
    if A.row_freq_hz is None or A.row_snr is None:
        raise ValueError("preprocessing needs row_freq_hz and row_snr metadata")
    b = np.asarray(b, dtype=np.complex128)
    if b.shape[0] != A.shape[0]:
        raise ValueError("b length does not match the row count")
    mask = (
        (A.row_freq_hz >= f_lo_hz)
        & (A.row_freq_hz <= f_hi_hz)
        & (A.row_snr > snr_min)
    )
    if not np.any(mask):
        raise ValueError("preprocessing filtered out every row")
    entries = A.entries[mask]
    norms = np.linalg.norm(entries, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero-norm row survived filtering")
    entries = entries / norms[:, None]
    b_out = b[mask] / norms
    out = SystemMatrix.from_entries(
        entries,
        A.grid_dims,
        row_snr=A.row_snr[mask],
        row_freq_hz=A.row_freq_hz[mask],
    )
    return out, b_out
