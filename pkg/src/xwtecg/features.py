"""Scalar features of the cross spectrum and coherence over the QT zone."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .preprocess import BEAT_LENGTH, BEAT_R_INDEX
from .xwavelet import WcohMatrix, WcsMatrix

QT_LEFT = 80
QT_RIGHT = 400
SCALE_LOW = 75
SCALE_HIGH = 300

FEATURE_COLUMNS = ("beat_id", "record_id", "lead", "pa", "pb", "label")


class FeatureError(ValueError):
    pass


def qt_window(r_index: int, n_times: int = BEAT_LENGTH,
              left: int = QT_LEFT, right: int = QT_RIGHT) -> tuple[int, int]:
    t1, t2 = r_index - left, r_index + right
    if t1 < 0 or t2 > n_times - 1:
        raise FeatureError(f"QT window [{t1}, {t2}] exceeds the {n_times}-sample beat")
    return t1, t2


@dataclass(frozen=True)
class AnalysisWindow:
    """Inclusive time (t1..t2) and scale (s1..s2) bounds for feature sums."""

    t1: int = BEAT_R_INDEX - QT_LEFT
    t2: int = BEAT_R_INDEX + QT_RIGHT
    s1: int = SCALE_LOW
    s2: int = SCALE_HIGH

    def __post_init__(self):
        if not 0 <= self.t1 < self.t2 < BEAT_LENGTH:
            raise FeatureError(f"invalid time window {self.t1}..{self.t2}")
        if not 1 <= self.s1 < self.s2 <= 512:
            raise FeatureError(f"invalid scale band {self.s1}..{self.s2}")

    @property
    def n_cells(self) -> int:
        return (self.s2 - self.s1 + 1) * (self.t2 - self.t1 + 1)


@dataclass(frozen=True)
class FeatureVector:
    pa: float  # coherence sum
    pb: float  # co-spectrum sum
    beat_id: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.pa) and math.isfinite(self.pb)):
            raise FeatureError(f"non-finite features for {self.beat_id!r}")


def _check_times(n_times, t1, t2):
    if not 0 <= t1 <= t2 < n_times:
        raise FeatureError(f"time window {t1}..{t2} outside 0..{n_times - 1}")


def sum_wcs_per_scale(wcs: WcsMatrix, t1: int, t2: int) -> np.ndarray:
    """Co-spectrum summed over t1..t2 (inclusive) at every scale."""
    _check_times(wcs.values.shape[1], t1, t2)
    return wcs.values[:, t1:t2 + 1].real.sum(axis=1)


def _band_rows(grid, window: AnalysisWindow):
    return grid.row_of(float(window.s1)), grid.row_of(float(window.s2))


def extract_features(wcs: WcsMatrix, wcoh: WcohMatrix,
                     window: Optional[AnalysisWindow] = None, beat_id: str = "") -> FeatureVector:
    """``pa`` = sum of coherence, ``pb`` = sum of Re(cross spectrum), over the window."""
    window = window or AnalysisWindow()
    if wcs.values.shape != wcoh.values.shape:
        raise FeatureError(f"shape mismatch {wcs.values.shape} vs {wcoh.values.shape}")
    _check_times(wcs.values.shape[1], window.t1, window.t2)
    r1, r2 = _band_rows(wcs.grid, window)
    rows = slice(r1, r2 + 1)
    cols = slice(window.t1, window.t2 + 1)
    pa = float(wcoh.values[rows, cols].sum())
    pb = float(wcs.values[rows, cols].real.sum())
    return FeatureVector(pa, pb, beat_id)


@dataclass
class FeatureRow:
    beat_id: str
    record_id: str
    lead: str
    pa: float
    pb: float
    label: str = ""

    @property
    def vector(self) -> FeatureVector:
        return FeatureVector(self.pa, self.pb, self.beat_id)


def write_feature_table(rows: Iterable[FeatureRow], path, extra: Optional[dict] = None) -> None:
    """CSV with columns beat_id, record_id, lead, pa, pb, label (+ extra columns).

    ``extra`` maps column name to a list aligned with ``rows``.
    """
    rows = list(rows)
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(FEATURE_COLUMNS) + list(extra))
        for i, r in enumerate(rows):
            w.writerow([r.beat_id, r.record_id, r.lead, repr(r.pa), repr(r.pb), r.label]
                       + [extra[k][i] for k in extra])


def read_feature_table(path) -> tuple[list[FeatureRow], dict]:
    """Returns the rows and a dict of any extra columns (as strings)."""
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(FEATURE_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise FeatureError(f"{path}: missing columns {sorted(missing)}")
        names = [c for c in reader.fieldnames if c not in FEATURE_COLUMNS]
        rows, extra = [], {c: [] for c in names}
        for rec in reader:
            try:
                rows.append(FeatureRow(rec["beat_id"], rec["record_id"], rec["lead"],
                                       float(rec["pa"]), float(rec["pb"]), rec["label"] or ""))
            except ValueError as exc:
                raise FeatureError(f"{path}: bad feature value in row {reader.line_num}") from exc
            for c in names:
                extra[c].append(rec[c])
    return rows, extra
