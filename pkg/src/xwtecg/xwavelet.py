"""Morlet CWT, cross-wavelet spectrum and wavelet coherence on a linear scale grid.

Scales are in samples (dt = 1). The default grid is the integers 1..512.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional

import numpy as np

OMEGA0 = 6.0
N_SCALES = 512
COHERENCE_FLOOR = 1e-300
SCALE_BOX_HALF_WIDTH = 0.3  # fraction of the scale
TIME_SIGMA_TRUNCATE = 3.0
# FFT smoothing is accurate only relative to a row's largest value; cells
# below this fraction of it are recomputed by direct summation
FFT_RELATIVE_FLOOR = 1e-5

# scale-to-period ratio of the Morlet wavelet
FOURIER_FACTOR = 4 * np.pi / (OMEGA0 + np.sqrt(2 + OMEGA0 ** 2))


class WaveletError(ValueError):
    pass


@dataclass(frozen=True)
class ScaleGrid:
    scales: tuple = field(default_factory=lambda: tuple(float(s) for s in range(1, N_SCALES + 1)))

    def __post_init__(self):
        s = np.asarray(self.scales, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise WaveletError("scale grid must be a non-empty 1-D sequence")
        if np.any(s <= 0):
            raise WaveletError("scales must be positive")
        if np.any(np.diff(s) <= 0):
            raise WaveletError("scales must be strictly increasing")
        object.__setattr__(self, "scales", tuple(float(v) for v in s))

    @classmethod
    def linear(cls, first: int = 1, last: int = N_SCALES) -> "ScaleGrid":
        return cls(tuple(float(s) for s in range(first, last + 1)))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.scales)

    def __len__(self):
        return len(self.scales)

    def row_of(self, scale: float) -> int:
        """Row index of an exact grid scale."""
        idx = int(np.searchsorted(self.array, scale))
        if idx >= len(self) or self.scales[idx] != scale:
            raise WaveletError(f"scale {scale} is not on the grid")
        return idx


@dataclass(frozen=True)
class CwtMatrix:
    values: np.ndarray  # complex, n_scales x n_times
    grid: ScaleGrid


@dataclass(frozen=True)
class WcsMatrix:
    values: np.ndarray  # complex
    grid: ScaleGrid


@dataclass(frozen=True)
class WcohMatrix:
    values: np.ndarray  # real, in [0, 1]
    grid: ScaleGrid


def morlet(eta) -> np.ndarray:
    """Unit-energy Morlet mother wavelet, centre frequency 6."""
    eta = np.asarray(eta, dtype=float)
    return np.pi ** -0.25 * np.exp(1j * OMEGA0 * eta - 0.5 * eta ** 2)


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


@lru_cache(maxsize=8)
def _cwt_kernels(scales: tuple, n: int):
    """FFTs of the scaled wavelets psi(j/s)/sqrt(s), lags |j| < n, circularly placed."""
    nfft = _next_pow2(2 * n)
    lags = np.arange(-(n - 1), n)
    s = np.asarray(scales)[:, None]
    h = np.zeros((len(scales), nfft), dtype=complex)
    h[:, lags % nfft] = morlet(lags[None, :] / s) / np.sqrt(s)
    return nfft, np.fft.fft(h, axis=1)


def cwt_morlet(x, grid: Optional[ScaleGrid] = None) -> CwtMatrix:
    """Continuous wavelet transform with a Morlet wavelet.

    Row ``r``, column ``n`` holds ``sum_k x[k] conj(psi((k - n)/s_r)) / sqrt(s_r)``.
    The convolution is carried out by FFT after zero padding to the next
    power of two >= 2*len(x), so it equals the direct linear sum exactly
    (no wrap-around, no cone-of-influence masking).
    """
    grid = grid or ScaleGrid()
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise WaveletError("signal must be 1-D with at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise WaveletError("signal contains non-finite samples")
    n = len(x)
    nfft, kernels = _cwt_kernels(grid.scales, n)
    spec = np.fft.fft(x, nfft)
    w = np.fft.ifft(kernels * spec[None, :], axis=1)[:, :n]
    return CwtMatrix(w, grid)


def _check_pair(a, b):
    if a.values.shape != b.values.shape:
        raise WaveletError(f"shape mismatch {a.values.shape} vs {b.values.shape}")
    if a.grid != b.grid:
        raise WaveletError("scale grids differ")


def xwt(wx: CwtMatrix, wy: CwtMatrix) -> WcsMatrix:
    """Cross-wavelet spectrum ``W^X * conj(W^Y)``, unsmoothed."""
    _check_pair(wx, wy)
    return WcsMatrix(wx.values * np.conj(wy.values), wx.grid)


def gaussian_kernel(scale: float) -> np.ndarray:
    """Unit-sum Gaussian with sd ``scale``, truncated at +/-3 sd."""
    radius = int(np.floor(TIME_SIGMA_TRUNCATE * scale))
    t = np.arange(-radius, radius + 1)
    k = np.exp(-t ** 2 / (2.0 * scale ** 2))
    return k / k.sum()


@lru_cache(maxsize=8)
def _time_kernels(scales: tuple, n: int):
    radii = [int(np.floor(TIME_SIGMA_TRUNCATE * s)) for s in scales]
    pad = max(radii)
    nfft = _next_pow2(n + 2 * pad)
    k = np.zeros((len(scales), nfft))
    for row, s in enumerate(scales):
        g = gaussian_kernel(s)
        r = radii[row]
        k[row, np.arange(-r, r + 1) % nfft] = g
    return pad, nfft, np.fft.rfft(k, axis=1)


@lru_cache(maxsize=8)
def _scale_windows(scales: tuple):
    s = np.asarray(scales)
    lo = np.searchsorted(s, s * (1 - SCALE_BOX_HALF_WIDTH) - 1e-9 * s, side="left")
    hi = np.searchsorted(s, s * (1 + SCALE_BOX_HALF_WIDTH) + 1e-9 * s, side="right")
    rows = np.arange(len(s))
    lo = np.minimum(lo, rows)
    hi = np.maximum(hi, rows + 1)
    return lo, hi


def _direct_fix(out, ext, grid, pad):
    """Recompute small cells of an FFT-smoothed real matrix by direct summation."""
    n = out.shape[1]
    for row, s in enumerate(grid.scales):
        mag = np.abs(out[row])
        idx = np.flatnonzero(mag < FFT_RELATIVE_FLOOR * mag.max(initial=0.0))
        if idx.size == 0:
            continue
        k = gaussian_kernel(s)
        r = len(k) // 2
        win = np.lib.stride_tricks.sliding_window_view(ext[row, pad - r:pad + n + r], 2 * r + 1)
        out[row, idx] = win[idx] @ k[::-1]
    return out


def smooth_time(m: np.ndarray, grid: ScaleGrid) -> np.ndarray:
    """Convolve each row with its scale's Gaussian; edges are mirror-extended.

    The bulk is done by FFT; cells many orders of magnitude below their
    row's peak are summed directly so that they keep relative precision.
    """
    n = m.shape[1]
    pad, nfft, kspec = _time_kernels(grid.scales, n)
    ext = np.pad(m, ((0, 0), (pad, pad)), mode="symmetric")

    def conv(a):
        out = np.fft.irfft(np.fft.rfft(a, nfft, axis=1) * kspec, nfft, axis=1)[:, pad:pad + n]
        return _direct_fix(np.ascontiguousarray(out), a, grid, pad)

    if np.iscomplexobj(ext):
        return conv(ext.real) + 1j * conv(ext.imag)
    return conv(ext)


def smooth_scale(m: np.ndarray, grid: ScaleGrid) -> np.ndarray:
    """Boxcar average over the rows whose scale lies within +/-30% of each row's scale."""
    lo, hi = _scale_windows(grid.scales)
    # summed per window rather than by cumulative sums, which would cancel
    # catastrophically across rows of very different magnitude
    out = np.empty_like(m)
    for row, (a, b) in enumerate(zip(lo, hi)):
        out[row] = m[a:b].sum(axis=0) / (b - a)
    return out


def smooth(m, grid: ScaleGrid) -> np.ndarray:
    """Time-then-scale smoothing operator used by the coherence."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != len(grid):
        raise WaveletError(f"matrix shape {m.shape} does not match {len(grid)} scales")
    return smooth_scale(smooth_time(m, grid), grid)


def wcoh(wx: CwtMatrix, wy: CwtMatrix,
         smoother: Optional[Callable[[np.ndarray, ScaleGrid], np.ndarray]] = None) -> WcohMatrix:
    """Wavelet coherence |S(W^XY/s)|^2 / (S(|W^X|^2/s) S(|W^Y|^2/s)).

    ``smoother`` replaces the default operator (for testing). Cells with a
    vanishing denominator get coherence 0.
    """
    _check_pair(wx, wy)
    S = smoother or smooth
    inv_s = 1.0 / wx.grid.array[:, None]
    cross = S(inv_s * wx.values * np.conj(wy.values), wx.grid)
    px = S(inv_s * np.abs(wx.values) ** 2, wx.grid).real
    py = S(inv_s * np.abs(wy.values) ** 2, wx.grid).real
    den = px * py
    ok = den > COHERENCE_FLOOR
    r2 = np.zeros(den.shape)
    r2[ok] = np.abs(cross[ok]) ** 2 / den[ok]
    return WcohMatrix(np.clip(r2, 0.0, 1.0), wx.grid)


# -- matrix export --------------------------------------------------------

def _fmt_cell(v) -> str:
    if isinstance(v, complex) or np.iscomplexobj(v):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    return f"{float(v):.17g}"


def write_matrix_csv(values: np.ndarray, grid: ScaleGrid, path) -> None:
    """Header row ``scale,t0,t1,...`` then one row per scale."""
    values = np.asarray(values)
    lines = ["scale," + ",".join(f"t{i}" for i in range(values.shape[1]))]
    for s, row in zip(grid.scales, values):
        lines.append(f"{s:.17g}," + ",".join(_fmt_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_csv(path):
    """Returns ``(values, grid)``; complex cells are detected by a trailing ``j``."""
    rows = Path(path).read_text().splitlines()[1:]
    scales, data = [], []
    is_complex = any(c.endswith("j") for c in rows[0].split(",")[1:]) if rows else False
    conv = complex if is_complex else float
    for ln in rows:
        cells = ln.split(",")
        scales.append(float(cells[0]))
        data.append([conv(c) for c in cells[1:]])
    return np.array(data, dtype=complex if is_complex else float), ScaleGrid(tuple(scales))


def write_matrix_bin(values: np.ndarray, path) -> None:
    """16-byte header (two LE uint64: n_scales, n_times) + LE float64 data.

    Complex matrices are stored as interleaved (re, im) pairs.
    """
    values = np.asarray(values)
    n_s, n_t = values.shape
    if np.iscomplexobj(values):
        body = np.ascontiguousarray(values, dtype="<c16").view("<f8")
    else:
        body = np.ascontiguousarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", n_s, n_t))
        fh.write(body.tobytes())


def read_matrix_bin(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise WaveletError(f"{path}: truncated header")
    n_s, n_t = struct.unpack("<QQ", raw[:16])
    body = np.frombuffer(raw[16:], dtype="<f8")
    if body.size == n_s * n_t:
        return body.reshape(n_s, n_t).astype(float)
    if body.size == 2 * n_s * n_t:
        return body.view("<c16").reshape(n_s, n_t).astype(complex)
    raise WaveletError(f"{path}: payload size does not match {n_s}x{n_t}")
