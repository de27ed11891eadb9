"""Equalized-odds gaps and F1 over per-group confusion counts.

All rates are one-vs-rest per class.  The headline gap sums, over each class
and group, the absolute deviation of the group's TPR/FPR from the overall
rate for that class; binary problems report the positive class (index 1)
alone, multi-class problems sum over classes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


class UndefinedRateWarning(UserWarning):
    """A (class, group) rate had empty support and was skipped."""


@dataclass(frozen=True)
class PredictionRecord:
    y_true: int
    y_pred: int
    attr: int


@dataclass
class GroupRates:
    """Per-(class, group) one-vs-rest rates plus the per-class overall rates.

    Entries are NaN where the defining support is empty (no positives for a
    TPR, no negatives for an FPR).
    """

    tpr: np.ndarray  # (C, G)
    fpr: np.ndarray  # (C, G)
    tpr_overall: np.ndarray  # (C,)
    fpr_overall: np.ndarray  # (C,)
    pos_support: np.ndarray  # (C, G) count of y_true == c in group
    neg_support: np.ndarray  # (C, G)


def group_confusion(
    records: list[PredictionRecord], num_classes: int, num_groups: int
) -> GroupRates:
    """Tally one-vs-rest TPR/FPR per class and group from prediction records."""
    if not records:
        raise ConfigError("no prediction records")
    for i, r in enumerate(records):
        if not (0 <= r.y_true < num_classes and 0 <= r.y_pred < num_classes):
            raise ConfigError(f"record {i}: label outside [0, {num_classes})")
        if not 0 <= r.attr < num_groups:
            raise ConfigError(f"record {i}: attr outside [0, {num_groups})")
    y = np.array([r.y_true for r in records])
    p = np.array([r.y_pred for r in records])
    a = np.array([r.attr for r in records])
    c_idx = np.arange(num_classes)[:, None]
    is_pos = y[None, :] == c_idx  # (C, M)
    pred_pos = p[None, :] == c_idx
    tp = np.zeros((num_classes, num_groups))
    fp = np.zeros((num_classes, num_groups))
    pos = np.zeros((num_classes, num_groups))
    neg = np.zeros((num_classes, num_groups))
    for g in range(num_groups):
        sel = a == g
        pos[:, g] = (is_pos & sel).sum(axis=1)
        neg[:, g] = (~is_pos & sel).sum(axis=1)
        tp[:, g] = (is_pos & pred_pos & sel).sum(axis=1)
        fp[:, g] = (~is_pos & pred_pos & sel).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        tpr = np.where(pos > 0, tp / np.where(pos > 0, pos, 1), np.nan)
        fpr = np.where(neg > 0, fp / np.where(neg > 0, neg, 1), np.nan)
        pos_all = pos.sum(axis=1)
        neg_all = neg.sum(axis=1)
        tpr_all = np.where(pos_all > 0, tp.sum(axis=1) / np.where(pos_all > 0, pos_all, 1), np.nan)
        fpr_all = np.where(neg_all > 0, fp.sum(axis=1) / np.where(neg_all > 0, neg_all, 1), np.nan)
    return GroupRates(tpr, fpr, tpr_all, fpr_all, pos, neg)


@dataclass
class ClassGaps:
    label: int
    delta_tpr: float
    delta_fpr: float

    @property
    def delta_eo(self) -> float:
        return self.delta_tpr + self.delta_fpr


@dataclass
class MetricsRecord:
    f1: float
    delta_tpr: float
    delta_fpr: float
    delta_eo: float
    per_class: list[ClassGaps] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "f1": self.f1,
            "delta_tpr": self.delta_tpr,
            "delta_fpr": self.delta_fpr,
            "delta_eo": self.delta_eo,
            "per_class": [
                {
                    "label": c.label,
                    "delta_tpr": c.delta_tpr,
                    "delta_fpr": c.delta_fpr,
                    "delta_eo": c.delta_eo,
                }
                for c in self.per_class
            ],
        }


def _gap_sum(per_group: np.ndarray, overall: float) -> float | None:
    """Sum of |group rate - overall rate| over defined groups; None if all NaN."""
    if np.isnan(overall):
        return None
    defined = ~np.isnan(per_group)
    if not defined.any():
        return None
    return float(np.abs(per_group[defined] - overall).sum())


def eo_gaps(rates: GroupRates) -> list[ClassGaps]:
    """Per-class equalized-odds gap components.

    Classes whose TPR or FPR is undefined everywhere contribute zero to that
    component and raise :class:`UndefinedRateWarning`; if every component of
    every reported class is undefined the request is an error.
    """
    num_classes = rates.tpr.shape[0]
    report_classes = [1] if num_classes == 2 else list(range(num_classes))
    out = []
    any_defined = False
    for c in report_classes:
        parts = []
        for kind, per_group, overall in (
            ("TPR", rates.tpr[c], float(rates.tpr_overall[c])),
            ("FPR", rates.fpr[c], float(rates.fpr_overall[c])),
        ):
            gap = _gap_sum(per_group, overall)
            if gap is None:
                warnings.warn(
                    f"class {c}: {kind} undefined for every group; gap treated as 0",
                    UndefinedRateWarning,
                    stacklevel=2,
                )
                parts.append(0.0)
            else:
                any_defined = True
                parts.append(gap)
        out.append(ClassGaps(c, parts[0], parts[1]))
    if not any_defined:
        raise ConfigError("every rate undefined; cannot compute equalized-odds gaps")
    return out


def f1_scores(records: list[PredictionRecord], num_classes: int) -> float:
    """Binary: F1 of class 1.  Multi-class: macro F1, empty classes scored 0."""
    y = np.array([r.y_true for r in records])
    p = np.array([r.y_pred for r in records])
    scores = []
    classes = [1] if num_classes == 2 else list(range(num_classes))
    for c in classes:
        tp = int(((y == c) & (p == c)).sum())
        fp = int(((y != c) & (p == c)).sum())
        fn = int(((y == c) & (p != c)).sum())
        if tp == 0 and fp == 0 and fn == 0:
            warnings.warn(
                f"class {c}: no true or predicted instances; F1 treated as 0",
                UndefinedRateWarning,
                stacklevel=2,
            )
            scores.append(0.0)
            continue
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def evaluate_predictions(
    records: list[PredictionRecord], num_classes: int, num_groups: int
) -> MetricsRecord:
    """Full metric bundle: F1 plus summed equalized-odds gap components."""
    rates = group_confusion(records, num_classes, num_groups)
    per_class = eo_gaps(rates)
    d_tpr = float(sum(c.delta_tpr for c in per_class))
    d_fpr = float(sum(c.delta_fpr for c in per_class))
    return MetricsRecord(
        f1=f1_scores(records, num_classes),
        delta_tpr=d_tpr,
        delta_fpr=d_fpr,
        delta_eo=d_tpr + d_fpr,
        per_class=per_class,
    )
