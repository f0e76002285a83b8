"""Confusion counts and accuracy / sensitivity / specificity percentages.

Percentages are exact rationals (``Fraction``); rounding happens only when
formatting, to two decimals, half-even.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Optional, Sequence

log = logging.getLogger(__name__)

NA = "NA"


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise MetricsError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def errors(self) -> int:
        return self.fp + self.fn

    def swapped(self) -> "ConfusionCounts":
        """Counts with the other class taken as positive."""
        return ConfusionCounts(self.tn, self.tp, self.fn, self.fp)


def confusion(predicted: Sequence, truth: Sequence, positive_class) -> ConfusionCounts:
    if len(predicted) != len(truth):
        raise MetricsError(f"length mismatch: {len(predicted)} predictions, {len(truth)} labels")
    if len(truth) == 0:
        raise MetricsError("no labels to tally")
    tp = tn = fp = fn = 0
    for p, t in zip(predicted, truth):
        pp, tt = p == positive_class, t == positive_class
        if pp and tt:
            tp += 1
        elif pp:
            fp += 1
        elif tt:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, tn, fp, fn)


def accuracy(c: ConfusionCounts) -> Optional[Fraction]:
    """(N_T - N_E) / N_T * 100, or None when there are no beats."""
    if c.total == 0:
        return None
    return Fraction(c.total - c.errors, c.total) * 100


def sensitivity(c: ConfusionCounts) -> Optional[Fraction]:
    if c.tp + c.fn == 0:
        return None
    return Fraction(c.tp, c.tp + c.fn) * 100


def specificity(c: ConfusionCounts) -> Optional[Fraction]:
    if c.tn + c.fp == 0:
        return None
    return Fraction(c.tn, c.tn + c.fp) * 100


def fmt_pct(value: Optional[Fraction]) -> str:
    if value is None:
        return NA
    d = Decimal(value.numerator) / Decimal(value.denominator)
    return str(d.quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


@dataclass(frozen=True)
class MetricsReport:
    counts: ConfusionCounts
    accuracy_pct: Optional[Fraction]
    sensitivity_pct: Optional[Fraction]
    specificity_pct: Optional[Fraction]

    @classmethod
    def from_counts(cls, c: ConfusionCounts) -> "MetricsReport":
        return cls(c, accuracy(c), sensitivity(c), specificity(c))

    def row(self) -> list[str]:
        c = self.counts
        return [str(c.tp), str(c.tn), str(c.fp), str(c.fn),
                fmt_pct(self.sensitivity_pct), fmt_pct(self.specificity_pct),
                fmt_pct(self.accuracy_pct)]


REPORT_COLUMNS = ("TP", "TN", "FP", "FN", "Se(%)", "Sp(%)", "Acc(%)")


def per_class_accuracy(predicted: Sequence, truth: Sequence, cls) -> ConfusionCounts:
    """Counts for beats whose truth is ``cls``: correct ones as tp, the rest as fn.

    Accuracy of these counts is correct / number of ``cls`` beats.
    """
    pairs = [(p, t) for p, t in zip(predicted, truth) if t == cls]
    correct = sum(p == t for p, t in pairs)
    return ConfusionCounts(correct, 0, 0, len(pairs) - correct)


# Lead III counts and percentages as printed for the original real-data study.
REFERENCE_LEAD3 = ConfusionCounts(tp=2806, tn=15282, fp=338, fn=63)
REFERENCE_LEAD3_PRINTED = {"accuracy": "99.43", "sensitivity": "98.83", "specificity": "98.80"}
REFERENCE_TYPE_COUNTS = {"IMI_Type1": (926, 106), "IMI_Type2": (1880, 244)}  # (beats, errors)


def check_reported(c: ConfusionCounts, printed: dict) -> list[str]:
    """Compare recomputed percentages with printed ones; returns (and logs) the mismatches."""
    ours = {"accuracy": accuracy(c), "sensitivity": sensitivity(c), "specificity": specificity(c)}
    notes = []
    for key, shown in printed.items():
        got = fmt_pct(ours[key])
        if got != shown:
            notes.append(f"{key}: counts give {got}%, printed value is {shown}%")
    for n in notes:
        log.warning("reported metric inconsistent with its counts - %s", n)
    return notes


def format_table(rows: dict) -> str:
    """Human-readable table; ``rows`` maps a row name to a MetricsReport."""
    width = max([len(k) for k in rows] + [5])
    head = " " * width + "  " + "  ".join(f"{c:>7}" for c in REPORT_COLUMNS)
    out = [head]
    for name, rep in rows.items():
        out.append(f"{name:<{width}}  " + "  ".join(f"{v:>7}" for v in rep.row()))
    return "\n".join(out)
