"""Confusion counts, false negative / false positive rates and corpus reports."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyCorpus
from .imagecore import BinaryMask


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(pred: BinaryMask, truth: BinaryMask) -> ConfusionCounts:
    if pred.shape != truth.shape:
        raise DimensionMismatch(f"prediction {pred.shape} vs truth {truth.shape}")
    p, t = pred.bits, truth.bits
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    return ConfusionCounts(tp=tp, fp=fp, tn=p.size - tp - fp - fn, fn=fn)


def fnr(c: ConfusionCounts) -> float:
    """FN / (TP + FN); 0 when the truth holds no road."""
    d = c.tp + c.fn
    return c.fn / d if d else 0.0


def fpr(c: ConfusionCounts) -> float:
    """FP / (TN + FP); 0 when the truth is all road."""
    d = c.tn + c.fp
    return c.fp / d if d else 0.0


@dataclass(frozen=True)
class ImageMetrics:
    id: str
    fnr: float
    fpr: float
    counts: ConfusionCounts
    degenerate_flags: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "fnr": self.fnr,
            "fpr": self.fpr,
            "degenerate_flags": list(self.degenerate_flags),
        }


@dataclass(frozen=True)
class MetricsReport:
    per_image: list[ImageMetrics] = field(default_factory=list)
    mean_fnr: float = 0.0
    mean_fpr: float = 0.0

    def as_dict(self) -> dict:
        return {
            "per_image": [m.as_dict() for m in self.per_image],
            "mean_fnr": self.mean_fnr,
            "mean_fpr": self.mean_fpr,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "fnr", "fpr"])
        for m in self.per_image:
            w.writerow([m.id, repr(m.fnr), repr(m.fpr)])
        return buf.getvalue()


def image_metrics(pred: BinaryMask, truth: BinaryMask, image_id: str, extra_flags: Iterable[str] = ()) -> ImageMetrics:
    try:
        c = confusion(pred, truth)
    except DimensionMismatch as exc:
        raise DimensionMismatch(f"image {image_id!r}: {exc}") from exc
    flags = list(extra_flags)
    if c.tp + c.fn == 0:
        flags.append("no_road_in_truth")
    if c.tn + c.fp == 0:
        flags.append("no_background_in_truth")
    return ImageMetrics(image_id, fnr(c), fpr(c), c, tuple(flags))


def evaluate_corpus(pairs: Sequence[tuple[BinaryMask, BinaryMask, str]]) -> MetricsReport:
    """Per-image FNR/FPR and their unweighted means, rows ordered as given."""
    if not pairs:
        raise EmptyCorpus("nothing to evaluate")
    rows = [image_metrics(pred, truth, image_id) for pred, truth, image_id in pairs]
    return report_from_rows(rows)


def report_from_rows(rows: Sequence[ImageMetrics]) -> MetricsReport:
    if not rows:
        raise EmptyCorpus("nothing to evaluate")
    return MetricsReport(
        per_image=list(rows),
        # fsum is exact, so the means do not depend on row order
        mean_fnr=math.fsum(r.fnr for r in rows) / len(rows),
        mean_fpr=math.fsum(r.fpr for r in rows) / len(rows),
    )
