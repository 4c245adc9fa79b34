"""Macro-averaged precision/recall/F1 and mean/std aggregation.

Classes with an empty denominator score 0 (conservative convention); the
macro average weights both classes equally. Aggregation uses the population
standard deviation.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


def macro_prf(predictions: Sequence[int], golds: Sequence[int],
              classes: Sequence[int] = (0, 1)) -> PRF:
    if len(predictions) != len(golds):
        raise ValueError(f"{len(predictions)} predictions vs {len(golds)} golds")
    if not golds:
        raise ValueError("empty inputs")
    precisions, recalls, f1s = [], [], []
    for cls in classes:
        tp = sum(1 for p, g in zip(predictions, golds) if p == cls and g == cls)
        fp = sum(1 for p, g in zip(predictions, golds) if p == cls and g != cls)
        fn = sum(1 for p, g in zip(predictions, golds) if p != cls and g == cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)
    n = len(classes)
    return PRF(sum(precisions) / n, sum(recalls) / n, sum(f1s) / n)


class MeanStd(NamedTuple):
    mean: float
    std: float


def aggregate(scores: Sequence[float]) -> MeanStd:
    """Arithmetic mean and population standard deviation."""
    if not len(scores):
        raise ValueError("nothing to aggregate")
    arr = np.asarray(scores, dtype=np.float64)
    return MeanStd(float(arr.mean()), float(arr.std()))
