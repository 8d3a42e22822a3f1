"""Image-quality metrics: inverse-MSE PSNR and windowed SSIM."""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve

__all__ = ["psnr", "ssim"]


def psnr(x_rec: np.ndarray, x_true: np.ndarray, sigma: float = 1.0) -> float:
    """Inverse-MSE PSNR in dB: ``10 log10(1 / mean((sigma*x_rec - x_true)^2))``.

    The reconstruction is rescaled by sigma to undo the forward model's
    1/sigma weighting; there is no peak-normalization term.  Returns
    ``inf`` for a zero-error pair.
    """
    x_rec = np.asarray(x_rec, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if x_rec.shape != x_true.shape:
        raise ValueError("image shapes differ")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    mse = float(np.mean((sigma * x_rec - x_true) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def _gaussian_window(size: int = 11, sigma_w: float = 1.5) -> np.ndarray:
    half = (size - 1) / 2.0
    ax = np.arange(size) - half
    g = np.exp(-(ax**2) / (2.0 * sigma_w**2))
    win = np.outer(g, g)
    return win / win.sum()


def _ssim_2d(a: np.ndarray, b: np.ndarray, data_range: float,
             k1: float = 0.01, k2: float = 0.03) -> float:
    win = _gaussian_window()
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2

    mu_a = fftconvolve(a, win, mode="valid")
    mu_b = fftconvolve(b, win, mode="valid")
    aa = fftconvolve(a * a, win, mode="valid")
    bb = fftconvolve(b * b, win, mode="valid")
    ab = fftconvolve(a * b, win, mode="valid")
    var_a = aa - mu_a**2
    var_b = bb - mu_b**2
    cov = ab - mu_a * mu_b

    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(x_rec: np.ndarray, x_true: np.ndarray) -> float:
    """Mean local SSIM with an 11x11 Gaussian window (sigma 1.5) and
    stability constants K1=0.01, K2=0.03.

    The reconstruction is rescaled to the reference's dynamic range
    [0, max(x_true)] before comparison; 3D inputs are evaluated slice-wise
    along the last axis and averaged.
    """
    a = np.asarray(x_rec, dtype=float)
    b = np.asarray(x_true, dtype=float)
    if a.shape != b.shape:
        raise ValueError("image shapes differ")
    if a.ndim not in (2, 3):
        raise ValueError("ssim expects 2D or 3D images")
    max_a = float(np.max(np.abs(a)))
    max_b = float(np.max(np.abs(b)))
    if max_a == 0.0 and max_b == 0.0:
        return 1.0
    # normalize each input to unit dynamic range; equivalent to rescaling the
    # reconstruction onto [0, max(x_true)] and keeps the metric symmetric
    if max_a > 0.0:
        a = a / max_a
    if max_b > 0.0:
        b = b / max_b
    if a.ndim == 2:
        return _ssim_2d(a, b, 1.0)
    return float(np.mean([_ssim_2d(a[..., k], b[..., k], 1.0)
                          for k in range(a.shape[-1])]))
