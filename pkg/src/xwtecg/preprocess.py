"""Denoising, R-peak registration, 1:2 beat segmentation and time normalization."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pywt
from scipy import ndimage, signal as sps

BEAT_LENGTH = 1000
BEAT_R_INDEX = 333

DENOISE_WAVELET = "db6"
REFRACTORY_S = 0.2
THRESHOLD_FRACTION = 0.3
THRESHOLD_WINDOW_S = 2.0
REFINE_S = 0.025
MAINS_HZ = 50.0
MAINS_Q = 30.0
ENVELOPE_LEVELS = (3, 4, 5)
POLARITY_BASELINE_S = 0.1


class PreprocessError(ValueError):
    pass


@dataclass(frozen=True)
class BeatSegment:
    samples: np.ndarray
    r_offset: int
    source_record: str = ""
    source_r_index: int = -1

    def __post_init__(self):
        n = len(self.samples)
        if not 0 <= self.r_offset < n:
            raise PreprocessError(f"r_offset {self.r_offset} outside segment of length {n}")


@dataclass(frozen=True)
class NormalizedBeat:
    """One cardiac cycle on the common 1000-sample grid, R at index 333."""

    samples: np.ndarray
    r_index: int = BEAT_R_INDEX

    def __post_init__(self):
        if len(self.samples) != BEAT_LENGTH:
            raise PreprocessError(f"normalized beat must have {BEAT_LENGTH} samples, got {len(self.samples)}")
        if self.r_index != BEAT_R_INDEX:
            raise PreprocessError(f"normalized beat R index must be {BEAT_R_INDEX}")


def _dwt_levels(fs: float) -> int:
    # approximation band ends near 2 Hz: 8 levels at 1 kHz
    return max(1, int(round(np.log2(fs / 3.9))))


def _level_shift(fs: float) -> int:
    return int(round(np.log2(fs / 1000.0)))


def _check_signal(x, min_len: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise PreprocessError("signal must be one-dimensional")
    if len(x) < min_len:
        raise PreprocessError(f"signal too short: {len(x)} samples, need at least {min_len}")
    if not np.all(np.isfinite(x)):
        raise PreprocessError("signal contains non-finite samples")
    return x


def _wavedec(x, levels):
    with warnings.catch_warnings():
        # deep levels on short inputs only trigger a boundary-effect warning
        warnings.simplefilter("ignore", UserWarning)
        return pywt.wavedec(x, DENOISE_WAVELET, mode="symmetric", level=levels)


def _reconstruct(coeffs, keep, n):
    """Inverse DWT keeping only the coefficient arrays flagged in ``keep``."""
    sel = [c if k else np.zeros_like(c) for c, k in zip(coeffs, keep)]
    return pywt.waverec(sel, DENOISE_WAVELET, mode="symmetric")[:n]


def denoise(x, sampling_rate_hz: float) -> np.ndarray:
    """Remove baseline wander, high-frequency noise and mains interference.

    The signal is decomposed with an 8-level db6 DWT (at 1 kHz); the
    approximation and the two finest detail levels are dropped before
    reconstruction. A zero-phase 50 Hz notch follows, since mains falls
    inside detail level 4 which carries QRS energy. Every step is linear.
    """
    fs = float(sampling_rate_hz)
    levels = _dwt_levels(fs)
    x = _check_signal(x, 2 ** levels)
    coeffs = _wavedec(x, levels)
    # coeffs = [a_L, d_L, ..., d_1]; detail d_j has band fs/2^(j+1)..fs/2^j
    keep = [False]
    for j in range(levels, 0, -1):
        keep.append(fs / 2 ** (j + 1) < 125.0)
    y = _reconstruct(coeffs, keep, len(x))
    if MAINS_HZ < fs / 2:
        b, a = sps.iirnotch(MAINS_HZ, MAINS_Q, fs=fs)
        y = sps.filtfilt(b, a, y)
    return y


def detection_envelope(x, sampling_rate_hz: float) -> np.ndarray:
    """Sum of squared reconstructed details d3..d5 (levels shifted for fs != 1 kHz).

    The stationary (undecimated) transform is used so the envelope of a
    QRS complex does not depend on its alignment with the dyadic grid.
    """
    fs = float(sampling_rate_hz)
    x = np.asarray(x, dtype=float)
    n = len(x)
    shift = _level_shift(fs)
    wanted = [j + shift for j in ENVELOPE_LEVELS if j + shift >= 1]
    if not wanted or n < 2:
        return np.zeros(n)
    depth = max(wanted)
    block = 2 ** depth
    # mirror margin wider than the level-`depth` filters keeps the periodic
    # wrap of the stationary transform away from the data
    margin = 2 * block * pywt.Wavelet(DENOISE_WAVELET).dec_len
    total = -(-(n + 2 * margin) // block) * block
    xp = np.pad(x, (margin, total - n - margin), mode="symmetric")
    coeffs = pywt.swt(xp, DENOISE_WAVELET, level=depth, trim_approx=True)
    # coeffs = [a_depth, d_depth, ..., d_1]
    env = np.zeros(total)
    for lvl in wanted:
        sel = [np.zeros_like(c) for c in coeffs]
        sel[depth - lvl + 1] = coeffs[depth - lvl + 1]
        env += pywt.iswt(sel, DENOISE_WAVELET) ** 2
    return env[margin:margin + n]


def _suppress(candidates, strength, min_gap):
    """Greedy non-maximum suppression: strongest first, earlier index wins ties."""
    order = sorted(range(len(candidates)), key=lambda i: (-strength[i], candidates[i]))
    taken: list[int] = []
    for i in order:
        c = candidates[i]
        if all(abs(c - t) >= min_gap for t in taken):
            taken.append(c)
    return sorted(taken)


def detect_r_peaks(x, sampling_rate_hz: float) -> list[int]:
    """Locate R peaks; returns strictly increasing sample indices.

    Peaks of the wavelet detection envelope above 0.3 x its 2 s rolling
    maximum are kept subject to a 200 ms refractory period, then moved to
    the extremum of ``x`` within +/-25 ms, on the side of the record's
    dominant QRS polarity.
    """
    fs = float(sampling_rate_hz)
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        return []
    env = detection_envelope(x, fs)
    peak_env = env.max(initial=0.0)
    if not peak_env > 0 or not np.isfinite(peak_env):
        return []
    win = max(1, int(round(THRESHOLD_WINDOW_S * fs)))
    thresh = THRESHOLD_FRACTION * ndimage.maximum_filter1d(env, size=win, mode="nearest")
    # transform round-off on flat input is not a QRS
    floor = 1e-12 * max(float(np.max(x ** 2)), 1e-300)
    interior = np.arange(1, n - 1)
    is_max = (env[interior] >= env[interior - 1]) & (env[interior] > env[interior + 1])
    cand = interior[is_max & (env[interior] >= thresh[interior]) & (env[interior] > floor)]
    if cand.size == 0:
        return []

    gap = int(np.ceil(REFRACTORY_S * fs))
    peaks = _suppress(cand.tolist(), env[cand].tolist(), gap)

    half = int(round(REFINE_S * fs))
    wins = [(max(0, p - half), min(n, p + half + 1)) for p in peaks]
    sign = qrs_polarity(x, peaks, fs)
    refined = sorted({lo + int(np.argmax(sign * x[lo:hi])) for lo, hi in wins})
    return _suppress(refined, [sign * x[r] for r in refined], gap)


def qrs_polarity(x, peaks, sampling_rate_hz: float) -> int:
    """+1 if the QRS complexes around ``peaks`` are predominantly upright, else -1.

    Deflections are measured from the median of a +/-100 ms neighbourhood,
    which keeps slow ST/T shifts from masquerading as the R wave.
    """
    x = np.asarray(x, dtype=float)
    half = int(round(REFINE_S * sampling_rate_hz))
    reach = int(round(POLARITY_BASELINE_S * sampling_rate_hz))
    up = down = 0.0
    for p in peaks:
        base = np.median(x[max(0, p - reach):p + reach + 1])
        w = x[max(0, p - half):p + half + 1]
        up += w.max() - base
        down += base - w.min()
    return 1 if up >= down else -1


def _local_rr(r_peaks, i) -> float:
    intervals = []
    if i > 0:
        intervals.append(r_peaks[i] - r_peaks[i - 1])
    if i < len(r_peaks) - 1:
        intervals.append(r_peaks[i + 1] - r_peaks[i])
    return float(np.median(intervals))


def segment_beats(x, r_peaks, source_record: str = "") -> list[BeatSegment]:
    """Cut one beat per R peak: x samples left, 2x right, x = round(RR/3).

    RR is the median of the adjacent intervals. Beats that do not fit
    inside the signal are dropped.
    """
    x = np.asarray(x, dtype=float)
    r_peaks = [int(r) for r in r_peaks]
    if len(r_peaks) < 2:
        return []
    if any(b <= a for a, b in zip(r_peaks, r_peaks[1:])):
        raise PreprocessError("R peaks must be strictly increasing")
    if r_peaks[0] < 0 or r_peaks[-1] >= len(x):
        raise PreprocessError("R peak index outside the signal")
    beats = []
    for i, r in enumerate(r_peaks):
        left = int(np.floor(_local_rr(r_peaks, i) / 3.0 + 0.5))
        if left < 1:
            continue
        start, stop = r - left, r + 2 * left
        if start < 0 or stop > len(x):
            continue
        beats.append(BeatSegment(x[start:stop].copy(), left, source_record, r))
    return beats


def fft_resample(x, n_out: int) -> np.ndarray:
    """Band-limited resampling by spectral zero-padding or truncation.

    An even-length Nyquist bin is split equally between the positive and
    negative halves when padding, and folded back together when truncating.
    The result is scaled by ``n_out / len(x)`` so amplitudes are kept.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n == n_out:
        return x.copy()
    X = np.fft.fft(x)
    Y = np.zeros(n_out, dtype=complex)
    m = min(n, n_out)
    half = m // 2
    # bins 0..half-1 and the matching negative bins are copied as they are
    Y[:half] = X[:half]
    if m % 2:
        Y[half] = X[half]
        Y[n_out - half:] = X[n - half:]
    else:
        Y[n_out - half + 1:] = X[n - half + 1:]
        if n < n_out:
            Y[half] = X[half] / 2
            Y[n_out - half] = X[half] / 2
        else:
            Y[half] = X[half] + X[n - half]
    return np.fft.ifft(Y).real * (n_out / n)


def resample_to_1000(beat: BeatSegment) -> NormalizedBeat:
    if len(beat.samples) < 4:
        raise PreprocessError(f"beat too short to resample: {len(beat.samples)} samples")
    return NormalizedBeat(fft_resample(beat.samples, BEAT_LENGTH))
