"""Hierarchical beat classifier: threshold rule for Normal vs IMI, k-NN for IMI type."""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import FeatureVector

MODEL_MAGIC = "xwtecg-model-v1"


class ClassifyError(ValueError):
    pass


class ClassLabel(str, enum.Enum):
    NORMAL = "Normal"
    IMI_TYPE1 = "IMI_Type1"
    IMI_TYPE2 = "IMI_Type2"

    @property
    def coarse(self) -> "Coarse":
        return Coarse.NORMAL if self is ClassLabel.NORMAL else Coarse.ABNORMAL

    @property
    def mark(self) -> str:
        return self.coarse.mark


class Coarse(str, enum.Enum):
    NORMAL = "normal"
    ABNORMAL = "abnormal"

    @property
    def mark(self) -> str:
        return "1" if self is Coarse.NORMAL else "0"


IMI_TYPES = (ClassLabel.IMI_TYPE1, ClassLabel.IMI_TYPE2)


def to_coarse(label) -> Coarse:
    """Accepts a Coarse value, a ClassLabel, or their string forms."""
    if isinstance(label, ClassLabel):
        return label.coarse
    try:
        return Coarse(label)
    except ValueError:
        return ClassLabel(label).coarse


@dataclass(frozen=True)
class ThresholdModel:
    th_pa: float
    th_pb: float

    def __post_init__(self):
        if not (math.isfinite(self.th_pa) and math.isfinite(self.th_pb)):
            raise ClassifyError("thresholds must be finite")


def _youden_scan(values, abnormal):
    """Youden index of ``value < th -> abnormal`` at every midpoint between distinct values.

    Returns (midpoints, youden, margins).
    """
    order = np.argsort(values, kind="stable")
    v = values[order]
    ab = abnormal[order]
    n_ab = ab.sum()
    n_no = len(ab) - n_ab
    distinct = np.flatnonzero(np.diff(v) > 0)  # split after index i
    mids = (v[distinct] + v[distinct + 1]) / 2
    below_ab = np.cumsum(ab)[distinct]
    below_no = np.cumsum(~ab)[distinct]
    youden = below_ab / n_ab + (n_no - below_no) / n_no - 1
    margins = (v[distinct + 1] - v[distinct]) / 2
    return mids, youden, margins


def _fit_one(values, abnormal, name):
    mids, youden, margins = _youden_scan(values, abnormal)
    if mids.size == 0:
        raise ClassifyError(f"feature {name} is constant; no threshold candidates")
    best = youden.max()
    # float noise in the Youden sums must not decide ties
    tied = np.flatnonzero(youden >= best - 1e-12)
    pick = tied[np.argmax(margins[tied])]  # first (smallest threshold) among equal margins
    return float(mids[pick])


def fit_thresholds(features: Sequence[FeatureVector], coarse_labels: Sequence) -> ThresholdModel:
    """Youden-optimal threshold per feature for the rule ``feature < th -> abnormal``.

    Candidates are midpoints between consecutive distinct training values;
    ties go to the widest gap.
    """
    if len(features) == 0:
        raise ClassifyError("no training features")
    if len(features) != len(coarse_labels):
        raise ClassifyError("features and labels differ in length")
    abnormal = np.array([to_coarse(c) is Coarse.ABNORMAL for c in coarse_labels])
    if abnormal.all() or not abnormal.any():
        raise ClassifyError("threshold fitting needs both normal and abnormal examples")
    pa = np.array([f.pa for f in features], dtype=float)
    pb = np.array([f.pb for f in features], dtype=float)
    return ThresholdModel(_fit_one(pa, abnormal, "pa"), _fit_one(pb, abnormal, "pb"))


def youden_index(model_th: float, values, abnormal) -> float:
    values = np.asarray(values, dtype=float)
    abnormal = np.asarray(abnormal, dtype=bool)
    pred = values < model_th
    se = (pred & abnormal).sum() / abnormal.sum()
    sp = (~pred & ~abnormal).sum() / (~abnormal).sum()
    return float(se + sp - 1)


def _check_finite(fv: FeatureVector):
    if not (math.isfinite(fv.pa) and math.isfinite(fv.pb)):
        raise ClassifyError(f"non-finite features for {fv.beat_id!r}")


def classify_coarse(fv: FeatureVector, model: ThresholdModel) -> Coarse:
    _check_finite(fv)
    if fv.pa < model.th_pa and fv.pb < model.th_pb:
        return Coarse.ABNORMAL
    return Coarse.NORMAL


@dataclass(frozen=True)
class KnnModel:
    points: np.ndarray  # raw (pa, pb), N x 2
    labels: tuple  # ClassLabel per point
    k: int
    mean: np.ndarray
    std: np.ndarray

    @property
    def standardized(self) -> np.ndarray:
        return (self.points - self.mean) / self.std


def knn_fit(features: Sequence[FeatureVector], labels: Sequence, k: int = 3) -> KnnModel:
    labels = tuple(ClassLabel(lb) for lb in labels)
    if len(features) != len(labels):
        raise ClassifyError("features and labels differ in length")
    if any(lb not in IMI_TYPES for lb in labels):
        raise ClassifyError("k-NN training labels must be IMI_Type1 or IMI_Type2")
    if k < 1 or k % 2 == 0:
        raise ClassifyError(f"k must be a positive odd integer, got {k}")
    if k > len(features):
        raise ClassifyError(f"k = {k} exceeds the {len(features)} training points")
    if len(set(labels)) < 2:
        raise ClassifyError("k-NN training needs both IMI types")
    pts = np.array([[f.pa, f.pb] for f in features], dtype=float)
    if not np.all(np.isfinite(pts)):
        raise ClassifyError("non-finite training features")
    mean = pts.mean(axis=0)
    std = pts.std(axis=0)
    for name, sd in zip(("pa", "pb"), std):
        if not sd > 0:
            raise ClassifyError(f"feature {name} has zero variance in the training set")
    return KnnModel(pts, labels, int(k), mean, std)


def knn_neighbors(model: KnnModel, fv: FeatureVector) -> np.ndarray:
    """Indices of the k nearest training points; equal distances favour lower index."""
    _check_finite(fv)
    q = (np.array([fv.pa, fv.pb]) - model.mean) / model.std
    d2 = ((model.standardized - q) ** 2).sum(axis=1)
    return np.argsort(d2, kind="stable")[:model.k]


def knn_predict(model: KnnModel, fv: FeatureVector) -> ClassLabel:
    votes = Counter(model.labels[i] for i in knn_neighbors(model, fv))
    # k odd and two classes, so there is always a strict majority
    return max(IMI_TYPES, key=lambda lb: votes[lb])


def classify_hierarchical(fv: FeatureVector, thresholds: ThresholdModel, knn: KnnModel) -> ClassLabel:
    if classify_coarse(fv, thresholds) is Coarse.NORMAL:
        return ClassLabel.NORMAL
    return knn_predict(knn, fv)


def save_models(thresholds: ThresholdModel, knn: KnnModel, path) -> None:
    """Text model file: magic line, ``key = value`` thresholds, then the k-NN block."""
    lines = [
        MODEL_MAGIC,
        f"th_pa = {float(thresholds.th_pa)!r}",
        f"th_pb = {float(thresholds.th_pb)!r}",
        (f"knn k={knn.k} mean_pa={float(knn.mean[0])!r} std_pa={float(knn.std[0])!r} "
         f"mean_pb={float(knn.mean[1])!r} std_pb={float(knn.std[1])!r}"),
        "pa,pb,label",
    ]
    for (pa, pb), lb in zip(knn.points, knn.labels):
        lines.append(f"{float(pa)!r},{float(pb)!r},{lb.value}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_models(path) -> tuple[ThresholdModel, KnnModel]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != MODEL_MAGIC:
        raise ClassifyError(f"{path}: not a {MODEL_MAGIC} file")
    kv = {}
    i = 1
    while i < len(lines) and "=" in lines[i] and not lines[i].startswith("knn"):
        key, _, value = lines[i].partition("=")
        kv[key.strip()] = float(value)
        i += 1
    try:
        th = ThresholdModel(kv["th_pa"], kv["th_pb"])
        knn_head = dict(tok.split("=", 1) for tok in lines[i].split()[1:])
        if lines[i + 1].strip() != "pa,pb,label":
            raise ClassifyError(f"{path}: missing k-NN column header")
        pts, labels = [], []
        for ln in lines[i + 2:]:
            if not ln.strip():
                continue
            pa, pb, lb = ln.split(",")
            pts.append([float(pa), float(pb)])
            labels.append(ClassLabel(lb.strip()))
    except (KeyError, IndexError, ValueError) as exc:
        raise ClassifyError(f"{path}: malformed model file ({exc})") from exc
    knn = KnnModel(np.array(pts), tuple(labels), int(knn_head["k"]),
                   np.array([float(knn_head["mean_pa"]), float(knn_head["mean_pb"])]),
                   np.array([float(knn_head["std_pa"]), float(knn_head["std_pb"])]))
    return th, knn
