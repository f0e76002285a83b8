"""Reading ECG records from WFDB (format 16) files and single-column CSV."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_GAIN = 200.0
SUPPORTED_FORMAT = 16


class IngestError(ValueError):
    """Raised for unreadable, malformed or unsupported input files."""


@dataclass(frozen=True)
class EcgRecord:
    """A multichannel ECG recording, samples in millivolts.

    Lead names are unique case-insensitively; all leads share one length.
    """

    record_id: str
    sampling_rate_hz: float
    leads: tuple[tuple[str, np.ndarray], ...]
    diagnosis_label: Optional[str] = None

    def __post_init__(self):
        if not self.sampling_rate_hz > 0:
            raise IngestError(f"sampling rate must be positive, got {self.sampling_rate_hz}")
        if not self.leads:
            raise IngestError("record has no leads")
        lengths = {len(s) for _, s in self.leads}
        if len(lengths) != 1:
            raise IngestError(f"leads have unequal lengths {sorted(lengths)}")
        if lengths.pop() < 2:
            raise IngestError("leads must have at least 2 samples")
        keys = [_norm(name) for name, _ in self.leads]
        if len(set(keys)) != len(keys):
            raise IngestError(f"duplicate lead names in {self.lead_names}")

    @property
    def lead_names(self) -> list[str]:
        return [name for name, _ in self.leads]

    @property
    def n_samples(self) -> int:
        return len(self.leads[0][1])


@dataclass
class SignalSpec:
    file_name: str
    format_code: int
    gain_adu_per_mv: float
    baseline_adu: int
    lead_name: str
    units: str = "mV"
    checksum: Optional[int] = None


@dataclass
class WfdbHeader:
    record_name: str
    n_signals: int
    sampling_rate_hz: float
    n_samples: Optional[int]
    signals: list[SignalSpec] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.signals) != self.n_signals:
            raise IngestError(
                f"header declares {self.n_signals} signals but has {len(self.signals)} signal lines")


def _norm(name: str) -> str:
    return name.strip().lower()


def _parse_gain_field(text: str, lead: str):
    """Split a WFDB ``gain(baseline)/units`` field."""
    units = "mV"
    if "/" in text:
        text, units = text.split("/", 1)
    baseline = 0
    if "(" in text:
        text, rest = text.split("(", 1)
        baseline = int(rest.rstrip(")"))
    gain = float(text)
    if gain == 0:
        raise IngestError(f"zero gain for signal {lead!r}")
    return gain, baseline, units


def parse_wfdb_header(text: str) -> WfdbHeader:
    lines = [ln.strip() for ln in text.splitlines()]
    comments = [ln.lstrip("#").strip() for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if ln and not ln.startswith("#")]
    if not body:
        raise IngestError("empty header")

    head = body[0].split()
    name = head[0]
    if "/" in name:
        raise IngestError(f"multi-segment record {name!r} is not supported")
    try:
        n_signals = int(head[1])
        fs = float(head[2].split("/")[0].split("(")[0]) if len(head) > 2 else 250.0
        n_samples = int(head[3]) if len(head) > 3 else None
    except (IndexError, ValueError) as exc:
        raise IngestError(f"malformed record line {body[0]!r}") from exc
    if n_signals < 1:
        raise IngestError("header declares no signals")

    signals = []
    for ln in body[1:1 + n_signals]:
        parts = ln.split()
        if len(parts) < 2:
            raise IngestError(f"malformed signal line {ln!r}")
        fmt_text = parts[1]
        digits = ""
        for ch in fmt_text:
            if not ch.isdigit():
                break
            digits += ch
        fmt = int(digits) if digits else -1
        if fmt != SUPPORTED_FORMAT:
            raise IngestError(f"unsupported WFDB format code {fmt_text!r} (only 16 is read)")
        lead = parts[8] if len(parts) > 8 else f"sig{len(signals)}"
        if len(parts) > 2:
            gain, baseline, units = _parse_gain_field(parts[2], lead)
        else:
            log.warning("signal %r has no gain field, assuming %g adu/mV", lead, DEFAULT_GAIN)
            gain, baseline, units = DEFAULT_GAIN, 0, "mV"
        checksum = int(parts[6]) if len(parts) > 6 else None
        signals.append(SignalSpec(parts[0], fmt, gain, baseline, lead, units, checksum))

    return WfdbHeader(name, n_signals, fs, n_samples, signals, comments)


def _diagnosis(comments: Sequence[str]) -> Optional[str]:
    for c in comments:
        key, sep, value = c.partition(":")
        if sep and key.strip().lower() == "reason for admission":
            return value.strip() or None
    return None


def read_wfdb_record(header_path) -> EcgRecord:
    """Read a WFDB record given the path of its ``.hea`` file.

    Signal files must hold little-endian 16-bit frames, channel-interleaved.
    Samples are converted to mV as ``(adu - baseline) / gain``.
    """
    header_path = Path(header_path)
    try:
        text = header_path.read_text()
    except OSError as exc:
        raise IngestError(f"cannot read header {header_path}: {exc}") from exc
    hdr = parse_wfdb_header(text)

    # several signals may share one file; each file interleaves its own group
    groups: dict[str, list[int]] = {}
    for i, sig in enumerate(hdr.signals):
        groups.setdefault(sig.file_name, []).append(i)

    data: dict[int, np.ndarray] = {}
    for fname, idx in groups.items():
        path = header_path.parent / fname
        try:
            raw = np.fromfile(path, dtype="<i2")
        except OSError as exc:
            raise IngestError(f"cannot read signal file {path}: {exc}") from exc
        if path.stat().st_size % (2 * len(idx)):
            raise IngestError(f"{path} size is not a whole number of frames")
        n = raw.size // len(idx)
        if hdr.n_samples is not None and n != hdr.n_samples:
            raise IngestError(
                f"{path} holds {n} samples per signal, header declares {hdr.n_samples}")
        frames = raw.reshape(n, len(idx))
        for col, i in enumerate(idx):
            data[i] = frames[:, col]

    leads = []
    for i, sig in enumerate(hdr.signals):
        adu = data[i]
        if sig.checksum is not None:
            got = int(adu.astype(np.int64).sum())
            got = (got + 32768) % 65536 - 32768
            if got != sig.checksum:
                log.warning("checksum mismatch for %r: header %d, data %d",
                            sig.lead_name, sig.checksum, got)
        mv = (adu.astype(np.float64) - sig.baseline_adu) / sig.gain_adu_per_mv
        leads.append((sig.lead_name, mv))

    return EcgRecord(hdr.record_name, hdr.sampling_rate_hz, tuple(leads),
                     _diagnosis(hdr.comments))


def write_wfdb_record(record: EcgRecord, directory, gain: float = DEFAULT_GAIN) -> Path:
    """Write ``record`` as ``<record_id>.hea`` + ``.dat`` (format 16). Returns the header path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name = record.record_id
    adus = []
    for lead, mv in record.leads:
        adu = np.round(np.asarray(mv) * gain)
        if adu.min(initial=0) < -32768 or adu.max(initial=0) > 32767:
            raise IngestError(f"lead {lead!r} exceeds the 16-bit range at gain {gain}")
        adus.append(adu.astype("<i2"))
    frames = np.stack(adus, axis=1)
    dat = directory / f"{name}.dat"
    frames.tofile(dat)

    lines = [f"{name} {len(adus)} {record.sampling_rate_hz:g} {record.n_samples}"]
    for (lead, _), adu in zip(record.leads, adus):
        checksum = (int(adu.astype(np.int64).sum()) + 32768) % 65536 - 32768
        lines.append(f"{name}.dat 16 {gain:g}(0)/mV 16 0 {int(adu[0])} {checksum} 0 {lead}")
    if record.diagnosis_label:
        lines.append(f"# Reason for admission: {record.diagnosis_label}")
    hea = directory / f"{name}.hea"
    hea.write_text("\n".join(lines) + "\n")
    return hea


def read_csv_signal(path, sampling_rate_hz: float, lead_name: str,
                    record_id: Optional[str] = None) -> EcgRecord:
    """Read one mV value per line (optional ``mv`` header line) as a single-lead record."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if lines and lines[0].lower() == "mv":
        lines = lines[1:]
    if not lines:
        raise IngestError(f"{path} contains no samples")
    values = np.empty(len(lines))
    for i, ln in enumerate(lines):
        try:
            values[i] = float(ln)
        except ValueError:
            raise IngestError(f"{path}:{i + 1}: not a number: {ln!r}") from None
    return EcgRecord(record_id or path.stem, float(sampling_rate_hz), ((lead_name, values),))


def write_csv_signal(samples, path) -> None:
    path = Path(path)
    path.write_text("".join(f"{float(v)!r}\n" for v in samples))


def select_lead(record: EcgRecord, lead_name: str) -> np.ndarray:
    key = _norm(lead_name)
    for name, samples in record.leads:
        if _norm(name) == key:
            return samples
    raise IngestError(
        f"lead {lead_name!r} not in record {record.record_id}; available: {', '.join(record.lead_names)}")
