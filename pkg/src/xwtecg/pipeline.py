"""End-to-end beat analysis against a template, plus synthetic beat/record generators."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from . import ingest, preprocess
from .classify import ClassLabel
from .features import AnalysisWindow, FeatureVector, extract_features
from .preprocess import BEAT_LENGTH, BEAT_R_INDEX, NormalizedBeat
from .xwavelet import CwtMatrix, ScaleGrid, WcohMatrix, WcsMatrix, cwt_morlet, wcoh, xwt

log = logging.getLogger(__name__)

THREADS_ENV = "XWT_ECG_THREADS"

# waveform landmarks on the normalized beat (samples)
P_CENTER, P_WIDTH, P_AMP = 193.0, 25.0, 0.15
Q_CENTER, Q_WIDTH = 305.0, 5.0
R_WIDTH = 10.0
S_CENTER, S_WIDTH, S_RATIO = 360.0, 5.0, 0.25
ST_START, ST_FULL, ST_FADE, ST_END = 360.0, 400.0, 480.0, 500.0
T_CENTER, T_WIDTH = 583.0, 40.0
NORMAL_QRS_MV = 1.0


class PipelineError(ValueError):
    pass


def n_workers(workers: Optional[int] = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class TemplateBeat:
    beat: NormalizedBeat
    record_id: str
    lead: str
    beat_ordinal: int = 0
    heart_rate_bpm: Optional[float] = None
    grid: ScaleGrid = field(default_factory=ScaleGrid)

    def __post_init__(self):
        if not self.record_id or not self.lead:
            raise PipelineError("template provenance must name a record and a lead")

    @property
    def provenance(self) -> str:
        lines = [f"record_id = {self.record_id}", f"lead = {self.lead}",
                 f"beat_ordinal = {self.beat_ordinal}"]
        if self.heart_rate_bpm is not None:
            lines.append(f"heart_rate_bpm = {self.heart_rate_bpm!r}")
        return "\n".join(lines) + "\n"

    @cached_property
    def cwt(self) -> CwtMatrix:
        return cwt_morlet(self.beat.samples, self.grid)


def save_template(template: TemplateBeat, path) -> Path:
    """Write the beat CSV (1000 lines) and its ``.prov`` sidecar. Returns the sidecar path."""
    path = Path(path)
    ingest.write_csv_signal(template.beat.samples, path)
    prov = path.with_name(path.name + ".prov")
    prov.write_text(template.provenance)
    return prov


def load_template(path) -> TemplateBeat:
    path = Path(path)
    rec = ingest.read_csv_signal(path, 1000.0, "template")
    meta = {}
    prov = path.with_name(path.name + ".prov")
    if prov.exists():
        for ln in prov.read_text().splitlines():
            key, sep, value = ln.partition("=")
            if sep:
                meta[key.strip()] = value.strip()
    hr = meta.get("heart_rate_bpm")
    return TemplateBeat(NormalizedBeat(rec.leads[0][1]), meta.get("record_id", path.stem),
                        meta.get("lead", "iii"), int(meta.get("beat_ordinal", 0)),
                        float(hr) if hr else None)


def analyze_beat(beat: NormalizedBeat, template: TemplateBeat,
                 window: Optional[AnalysisWindow] = None,
                 beat_id: str = "") -> tuple[WcsMatrix, WcohMatrix, FeatureVector]:
    """Cross-examine one beat with the template (template is X, beat is Y)."""
    if len(beat.samples) != BEAT_LENGTH:
        raise PipelineError("beat must be normalized to 1000 samples")
    wx = template.cwt
    wy = cwt_morlet(beat.samples, template.grid)
    wcs = xwt(wx, wy)
    coh = wcoh(wx, wy)
    return wcs, coh, extract_features(wcs, coh, window, beat_id)


def record_beats(record: ingest.EcgRecord, lead: str):
    """Denoise, register R peaks and cut the beats of one lead."""
    x = preprocess.denoise(ingest.select_lead(record, lead), record.sampling_rate_hz)
    peaks = preprocess.detect_r_peaks(x, record.sampling_rate_hz)
    if len(peaks) < 2:
        log.warning("record %s: %d R peak(s) found, no beats extracted", record.record_id, len(peaks))
        return []
    return preprocess.segment_beats(x, peaks, record.record_id)


def analyze_record(record: ingest.EcgRecord, lead: str, template: TemplateBeat,
                   window: Optional[AnalysisWindow] = None,
                   workers: Optional[int] = None) -> list[FeatureVector]:
    """Feature vectors for every complete beat of ``lead``, in R-peak order."""
    segments = record_beats(record, lead)

    def one(seg):
        beat = preprocess.resample_to_1000(seg)
        return analyze_beat(beat, template, window, f"{record.record_id}:{seg.source_r_index}")[2]

    nw = n_workers(workers)
    if nw == 1 or len(segments) < 2:
        return [one(s) for s in segments]
    with ThreadPoolExecutor(nw) as pool:
        return list(pool.map(one, segments))


def extract_template(record: ingest.EcgRecord, lead: str, beat_ordinal: int = 0,
                     grid: Optional[ScaleGrid] = None) -> TemplateBeat:
    """Normalize the ``beat_ordinal``-th complete beat of a record into a template."""
    segments = record_beats(record, lead)
    if not segments:
        raise PipelineError(f"record {record.record_id}: no complete beats in lead {lead}")
    if not 0 <= beat_ordinal < len(segments):
        raise PipelineError(f"beat ordinal {beat_ordinal} out of range (record has {len(segments)} beats)")
    seg = segments[beat_ordinal]
    hr = 60.0 * record.sampling_rate_hz / len(seg.samples)
    return TemplateBeat(preprocess.resample_to_1000(seg), record.record_id, lead,
                        beat_ordinal, hr, grid or ScaleGrid())


# -- synthetic beats --------------------------------------------------------

@dataclass(frozen=True)
class SyntheticBeatSpec:
    """Morphology of a synthetic lead-III beat.

    Type 1 IMI needs ST elevation and a QRS attenuated below 1 mV; Type 2
    needs a Q wave and an inverted T.
    """

    label: ClassLabel = ClassLabel.NORMAL
    st_elevation_mv: float = 0.0
    q_depth_mv: float = 0.05
    t_inverted: bool = False
    qrs_amplitude_mv: float = NORMAL_QRS_MV
    noise_rms_mv: float = 0.0
    random_seed: int = 0
    t_amplitude_mv: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "label", ClassLabel(self.label))
        if self.st_elevation_mv < 0 or self.q_depth_mv < 0 or self.noise_rms_mv < 0:
            raise PipelineError("ST elevation, Q depth and noise must be non-negative")
        if not self.qrs_amplitude_mv > 0:
            raise PipelineError("QRS amplitude must be positive")
        if self.label is ClassLabel.IMI_TYPE1:
            if not (self.st_elevation_mv > 0 and self.qrs_amplitude_mv < NORMAL_QRS_MV):
                raise PipelineError("Type 1 IMI needs ST elevation and an attenuated QRS")
        elif self.label is ClassLabel.IMI_TYPE2:
            if not (self.q_depth_mv > 0 and self.t_inverted):
                raise PipelineError("Type 2 IMI needs a Q wave and an inverted T")
        elif self.t_inverted or self.st_elevation_mv > 0:
            raise PipelineError("a Normal beat has no ST elevation and an upright T")


def _bump(tau, center, width):
    return np.exp(-0.5 * ((tau - center) / width) ** 2)


def _st_plateau(tau):
    up = np.clip((tau - ST_START) / (ST_FULL - ST_START), 0, 1)
    down = np.clip((ST_END - tau) / (ST_END - ST_FADE), 0, 1)
    ramp = np.minimum(up, down)
    return 0.5 - 0.5 * np.cos(np.pi * ramp)


def beat_waveform(spec: SyntheticBeatSpec, tau) -> np.ndarray:
    """Noise-free beat evaluated at normalized times ``tau`` (R at 333)."""
    tau = np.asarray(tau, dtype=float)
    a = spec.qrs_amplitude_mv
    t_sign = -1.0 if spec.t_inverted else 1.0
    return (P_AMP * _bump(tau, P_CENTER, P_WIDTH)
            - spec.q_depth_mv * _bump(tau, Q_CENTER, Q_WIDTH)
            + a * _bump(tau, BEAT_R_INDEX, R_WIDTH)
            - S_RATIO * a * _bump(tau, S_CENTER, S_WIDTH)
            + spec.st_elevation_mv * _st_plateau(tau)
            + t_sign * spec.t_amplitude_mv * _bump(tau, T_CENTER, T_WIDTH))


def generate_synthetic_beat(spec: SyntheticBeatSpec) -> NormalizedBeat:
    x = beat_waveform(spec, np.arange(BEAT_LENGTH))
    if spec.noise_rms_mv > 0:
        x = x + np.random.default_rng(spec.random_seed).normal(0.0, spec.noise_rms_mv, BEAT_LENGTH)
    return NormalizedBeat(x)


def random_beat_spec(label, rng: np.random.Generator, noise_rms_mv: float = 0.05) -> SyntheticBeatSpec:
    """Draw a class-consistent spec with natural beat-to-beat variability."""
    label = ClassLabel(label)
    seed = int(rng.integers(2 ** 31))
    t_amp = rng.uniform(0.25, 0.35)
    if label is ClassLabel.NORMAL:
        return SyntheticBeatSpec(label, 0.0, rng.uniform(0.03, 0.08), False,
                                 rng.uniform(0.9, 1.1), noise_rms_mv, seed, t_amp)
    if label is ClassLabel.IMI_TYPE1:
        return SyntheticBeatSpec(label, rng.uniform(0.15, 0.35), rng.uniform(0.0, 0.05), False,
                                 rng.uniform(0.5, 0.75), noise_rms_mv, seed, t_amp)
    return SyntheticBeatSpec(label, 0.0, rng.uniform(0.3, 0.5), True,
                             rng.uniform(0.7, 0.9), noise_rms_mv, seed, t_amp)


def synthetic_cohort(n_per_class: int, noise_rms_mv: float = 0.05, seed: int = 0):
    """Seeded beats: ``n_per_class`` of each label, returned as (beat, label) pairs."""
    rng = np.random.default_rng(seed)
    out = []
    for label in ClassLabel:
        for _ in range(n_per_class):
            out.append((generate_synthetic_beat(random_beat_spec(label, rng, noise_rms_mv)), label))
    return out


def synthetic_template(seed: int = 0) -> TemplateBeat:
    """The noise-free Normal template used when no real recording is available."""
    beat = generate_synthetic_beat(SyntheticBeatSpec(random_seed=seed))
    return TemplateBeat(beat, "synthetic-normal", "iii", 0)


def generate_synthetic_record(spec: SyntheticBeatSpec, n_beats: int = 10,
                              sampling_rate_hz: float = 1000.0, heart_rate_bpm: float = 72.0,
                              rr_jitter: float = 0.0, baseline_wander_mv: float = 0.0,
                              mains_mv: float = 0.0, record_id: str = "synth",
                              lead: str = "iii", seed: int = 0):
    """A single-lead recording of ``n_beats`` beats; returns ``(record, true_r_indices)``.

    Each beat is time-stretched piecewise: the part before R by the preceding
    RR interval, the part after R by the following one, so beats tile the
    signal without gaps. ``rr_jitter`` is the relative spread of RR.
    """
    if n_beats < 1:
        raise PipelineError("need at least one beat")
    rng = np.random.default_rng(seed)
    fs = float(sampling_rate_hz)
    rr_mean = 60.0 * fs / heart_rate_bpm
    rr = rr_mean * (1 + rr_jitter * rng.uniform(-1, 1, max(n_beats - 1, 1)))
    lead_in = int(np.ceil(rr[0] / 3)) + int(0.1 * fs)
    r = np.round(lead_in + np.concatenate([[0.0], np.cumsum(rr[:n_beats - 1])])).astype(int)
    tail = int(np.ceil(2 * rr[-1] / 3)) + int(0.1 * fs)
    n = int(r[-1]) + tail
    x = np.zeros(n)
    t = np.arange(n)
    for i in range(n_beats):
        left = r[i] - r[i - 1] if i > 0 else (r[1] - r[0] if n_beats > 1 else rr_mean)
        right = r[i + 1] - r[i] if i < n_beats - 1 else left
        lo = 0 if i == 0 else int(np.ceil(r[i] - left / 3))
        hi = n if i == n_beats - 1 else int(np.ceil(r[i] + 2 * right / 3))
        seg = t[lo:hi]
        scale = np.where(seg < r[i], 1000.0 / left, 1000.0 / right)
        x[lo:hi] = beat_waveform(spec, BEAT_R_INDEX + (seg - r[i]) * scale)
    secs = t / fs
    if baseline_wander_mv:
        x += baseline_wander_mv * np.sin(2 * np.pi * 0.2 * secs + rng.uniform(0, 2 * np.pi))
    if mains_mv:
        x += mains_mv * np.sin(2 * np.pi * 50.0 * secs)
    if spec.noise_rms_mv > 0:
        x += rng.normal(0.0, spec.noise_rms_mv, n)
    rec = ingest.EcgRecord(record_id, fs, ((lead, x),), spec.label.value)
    return rec, [int(v) for v in r]
