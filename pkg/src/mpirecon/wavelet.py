"""Undecimated (a trous / stationary) wavelet transform in 1D/2D/3D.

The transform is built from an orthonormal quadrature-mirror filter pair.
With the default per-level rescaling by 1/sqrt(2) along every axis the
analysis operator is a Parseval tight frame (``Phi* Phi = I``), which is
what the composed proximal step in :mod:`mpirecon.prox` relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

__all__ = [
    "FilterPair",
    "WaveletPyramid",
    "UdwtOperator",
    "GridTooSmallError",
    "PyramidShapeError",
    "udwt_forward",
    "udwt_adjoint",
    "udwt_inverse",
    "udwt_inverse_decimated",
    "dwt_single_level",
]

_SQRT2 = float(np.sqrt(2.0))

# Orthonormal decomposition low-pass taps.
_LOWPASS_TAPS = {
    "haar": np.array([1.0, 1.0]) / _SQRT2,
    "db2": np.array(
        [
            0.48296291314453414,
            0.8365163037378079,
            0.22414386804201336,
            -0.12940952255126037,
        ]
    ),
}


class GridTooSmallError(ValueError):
    """A grid axis cannot support the requested decomposition depth."""


class PyramidShapeError(ValueError):
    """Pyramid metadata is inconsistent with its band arrays."""


@dataclass(frozen=True)
class FilterPair:
    """Orthonormal decomposition filter pair (low-pass / high-pass)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.ndim != 1 or hi.ndim != 1 or lo.size != hi.size:
            raise ValueError("filter taps must be two 1D sequences of equal length")
        if abs(np.sum(lo**2) - 1.0) > 1e-10 or abs(np.sum(hi**2) - 1.0) > 1e-10:
            raise ValueError("filter taps must have unit energy")
        if abs(np.dot(lo, hi)) > 1e-10:
            raise ValueError("low- and high-pass taps must be orthogonal")

    @property
    def lo_r(self) -> np.ndarray:
        """Reconstruction low-pass taps (time-reverse of ``lo``)."""
        return self.lo[::-1]

    @property
    def hi_r(self) -> np.ndarray:
        """Reconstruction high-pass taps (time-reverse of ``hi``)."""
        return self.hi[::-1]

    @classmethod
    def from_name(cls, name: str) -> "FilterPair":
        try:
            lo = _LOWPASS_TAPS[name.lower()]
        except KeyError:
            raise ValueError(
                f"unknown wavelet family {name!r}; available: {sorted(_LOWPASS_TAPS)}"
            ) from None
        hi = _qmf(lo)
        return cls(lo=lo, hi=hi)

    @classmethod
    def haar(cls) -> "FilterPair":
        return cls.from_name("haar")


def _qmf(lo: np.ndarray) -> np.ndarray:
    # hi[k] = (-1)^k lo[L-1-k]
    hi = lo[::-1].copy()
    hi[1::2] *= -1.0
    return hi


@dataclass
class WaveletPyramid:
    """Redundant multi-level subband stack.

    ``bands[j]`` holds the detail bands of level ``j+1`` in the order given
    by ``band_codes`` ('l'/'h' letter per axis, all-'l' excluded); every band
    has the same spatial extent as the input grid.
    """

    levels: int
    dims: tuple[int, ...]
    bands: list[list[np.ndarray]]
    approx: np.ndarray
    band_codes: tuple[str, ...]
    frame_constant: float = 1.0

    def band_count(self) -> int:
        return self.levels * len(self.band_codes) + 1

    def coeff_count(self) -> int:
        return self.band_count() * int(np.prod(self.dims))

    def energy(self) -> float:
        total = float(np.sum(np.abs(self.approx) ** 2))
        for level in self.bands:
            for band in level:
                total += float(np.sum(np.abs(band) ** 2))
        return total

    def iter_bands(self):
        """Yield every band array, details (level-major) then approximation."""
        for level in self.bands:
            yield from level
        yield self.approx

    def map(self, detail_fn, approx_fn=None) -> "WaveletPyramid":
        """Apply ``detail_fn`` to every detail band and ``approx_fn`` (or the
        identity) to the approximation band, returning a new pyramid."""
        if approx_fn is None:
            approx_fn = lambda a: a.copy()
        return WaveletPyramid(
            levels=self.levels,
            dims=self.dims,
            bands=[[detail_fn(b) for b in level] for level in self.bands],
            approx=approx_fn(self.approx),
            band_codes=self.band_codes,
            frame_constant=self.frame_constant,
        )

    def validate(self) -> None:
        d = len(self.dims)
        if len(self.band_codes) != 2**d - 1:
            raise PyramidShapeError("band code count does not match dimensionality")
        if len(self.bands) != self.levels:
            raise PyramidShapeError("level count does not match band stack")
        if self.approx.shape != self.dims:
            raise PyramidShapeError("approximation band shape mismatch")
        for level in self.bands:
            if len(level) != len(self.band_codes):
                raise PyramidShapeError("detail band count mismatch")
            for band in level:
                if band.shape != self.dims:
                    raise PyramidShapeError("detail band shape mismatch")


def _detail_codes(ndim: int) -> tuple[str, ...]:
    codes = ["".join(c) for c in product("lh", repeat=ndim)]
    return tuple(c for c in codes if set(c) != {"l"})


def _filter_axis(x: np.ndarray, taps: np.ndarray, stride: int, axis: int,
                 adjoint: bool = False) -> np.ndarray:
    """Circular convolution with the stride-upsampled taps along one axis.

    Forward: y[n] = sum_k taps[k] * x[n - k*stride]  (periodic), adjoint
    flips the shift sign.
    """
    sign = -1 if adjoint else 1
    out = taps[0] * x
    for k in range(1, taps.size):
        out = out + taps[k] * np.roll(x, sign * k * stride, axis=axis)
    return out


def _check_depth(shape: tuple[int, ...], filters: FilterPair, levels: int) -> None:
    if levels < 1:
        raise ValueError("levels must be >= 1")
    need = filters.lo.size * 2 ** (levels - 1)
    for n in shape:
        if n < need:
            raise GridTooSmallError(
                f"grid axis of length {n} cannot support {levels} levels "
                f"(needs >= {need})"
            )


def udwt_forward(x: np.ndarray, filters: FilterPair, levels: int,
                 rescale: bool = True) -> WaveletPyramid:
    """Level-``levels`` a-trous decomposition with periodic boundaries.

    Filter taps at level j are upsampled by inserting ``2**(j-1) - 1`` zeros
    between taps.  With ``rescale`` the taps are additionally scaled by
    1/sqrt(2) per level and axis, making the overall operator a Parseval
    tight frame (frame constant 1).  ``rescale=False`` is only supported for
    a single level, where the frame constant is ``2**ndim``.
    """
    x = np.asarray(x)
    _check_depth(x.shape, filters, levels)
    if not rescale and levels > 1:
        raise ValueError("the unscaled transform is only tight for levels=1")
    d = x.ndim
    scale = 1.0 / _SQRT2 if rescale else 1.0
    lo = filters.lo * scale
    hi = filters.hi * scale
    codes = _detail_codes(d)

    bands: list[list[np.ndarray]] = []
    approx = x
    for j in range(1, levels + 1):
        stride = 2 ** (j - 1)
        parts = {"": approx}
        for axis in range(d):
            nxt = {}
            for code, arr in parts.items():
                nxt[code + "l"] = _filter_axis(arr, lo, stride, axis)
                nxt[code + "h"] = _filter_axis(arr, hi, stride, axis)
            parts = nxt
        bands.append([parts[c] for c in codes])
        approx = parts["l" * d]

    return WaveletPyramid(
        levels=levels,
        dims=x.shape,
        bands=bands,
        approx=approx,
        band_codes=codes,
        frame_constant=1.0 if rescale else float(2**d),
    )


def _apply_code_adjoint(arr: np.ndarray, code: str, lo: np.ndarray,
                        hi: np.ndarray, stride: int) -> np.ndarray:
    out = arr
    for axis, letter in enumerate(code):
        taps = lo if letter == "l" else hi
        out = _filter_axis(out, taps, stride, axis, adjoint=True)
    return out


def udwt_adjoint(p: WaveletPyramid, filters: FilterPair,
                 rescale: bool = True) -> np.ndarray:
    """Adjoint ``Phi*`` of :func:`udwt_forward` applied to a pyramid."""
    p.validate()
    d = len(p.dims)
    scale = 1.0 / _SQRT2 if rescale else 1.0
    lo = filters.lo * scale
    hi = filters.hi * scale

    acc = p.approx
    for j in range(p.levels, 0, -1):
        stride = 2 ** (j - 1)
        out = _apply_code_adjoint(acc, "l" * d, lo, hi, stride)
        for code, band in zip(p.band_codes, p.bands[j - 1]):
            out = out + _apply_code_adjoint(band, code, lo, hi, stride)
        acc = out
    return acc


def udwt_inverse(p: WaveletPyramid, filters: FilterPair) -> np.ndarray:
    """Inverse transform via the adjoint scaled by 1/frame_constant."""
    return udwt_adjoint(p, filters) / p.frame_constant


def _synthesis_axis(c: np.ndarray, taps: np.ndarray, parity: int,
                    axis: int) -> np.ndarray:
    """Adjoint of (circular-convolve with taps, keep parity-offset samples)
    along one axis; doubles the axis length."""
    cm = np.moveaxis(c, axis, 0)
    half = cm.shape[0]
    n = 2 * half
    out = np.zeros((n,) + cm.shape[1:], dtype=cm.dtype)
    base = 2 * np.arange(half) + parity
    for k in range(taps.size):
        out[(base - k) % n] += taps[k] * cm
    return np.moveaxis(out, 0, axis)


def _eo_level(approx: np.ndarray, details: list[np.ndarray],
              codes: tuple[str, ...], filters: FilterPair,
              stride: int) -> np.ndarray:
    """One recursion step of the even/odd decimated reconstruction."""
    d = approx.ndim
    unscale = _SQRT2**d  # undo the per-level 1/sqrt(2) tap scaling
    coeffs = {"l" * d: approx * unscale}
    for code, band in zip(codes, details):
        coeffs[code] = band * unscale

    out = np.empty(approx.shape, dtype=approx.dtype)
    for offset in product(range(stride), repeat=d):
        osl = tuple(slice(o, None, stride) for o in offset)
        sub = {code: arr[osl] for code, arr in coeffs.items()}
        rec = None
        for parity in product((0, 1), repeat=d):
            psl = tuple(slice(e, None, 2) for e in parity)
            part = None
            for code, arr in sub.items():
                c = arr[psl]
                for axis, letter in enumerate(code):
                    taps = filters.lo if letter == "l" else filters.hi
                    c = _synthesis_axis(c, taps, parity[axis], axis)
                part = c if part is None else part + c
            rec = part if rec is None else rec + part
        out[osl] = rec / 2**d
    return out


def udwt_inverse_decimated(p: WaveletPyramid, filters: FilterPair) -> np.ndarray:
    """Inverse transform by even/odd decimated reconstruction with averaging.

    Reconstructs each level by averaging the polyphase decimated
    reconstructions; agrees with :func:`udwt_inverse` to rounding on
    pyramids produced by :func:`udwt_forward`.  Requires every grid axis to
    be divisible by ``2**levels``.
    """
    p.validate()
    for n in p.dims:
        if n % 2**p.levels != 0:
            raise PyramidShapeError(
                "decimated reconstruction needs axes divisible by 2**levels"
            )
    a = p.approx
    for j in range(p.levels, 0, -1):
        a = _eo_level(a, p.bands[j - 1], p.band_codes, filters, 2 ** (j - 1))
    return a


def dwt_single_level(x: np.ndarray, filters: FilterPair) -> tuple[np.ndarray, np.ndarray]:
    """Single-level decimated DWT of a 1D signal with periodic extension.

    Returns (approx, detail) at half length; the input length must be even.
    """
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("dwt_single_level expects a 1D signal")
    if x.size % 2 != 0:
        raise ValueError("input length must be even")
    if x.size < filters.lo.size:
        raise GridTooSmallError("signal shorter than the filter")
    a = _filter_axis(x, filters.lo, 1, 0)[::2]
    d = _filter_axis(x, filters.hi, 1, 0)[::2]
    return a, d


@dataclass(frozen=True)
class UdwtOperator:
    """Tight-frame UDWT bound to a fixed grid shape and depth."""

    dims: tuple[int, ...]
    filters: FilterPair = field(default_factory=FilterPair.haar)
    levels: int = 2

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        _check_depth(self.dims, self.filters, self.levels)

    @property
    def frame_constant(self) -> float:
        return 1.0

    def forward(self, x: np.ndarray) -> WaveletPyramid:
        x = np.asarray(x).reshape(self.dims)
        return udwt_forward(x, self.filters, self.levels)

    def adjoint(self, p: WaveletPyramid) -> np.ndarray:
        return udwt_adjoint(p, self.filters)

    def inverse(self, p: WaveletPyramid) -> np.ndarray:
        return udwt_inverse(p, self.filters)
