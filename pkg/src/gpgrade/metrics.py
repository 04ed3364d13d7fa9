"""Confusion analysis, sensitivity/specificity, ROC-AUC, and grouped uncertainty stats.

AUC is computed from the continuous posterior means via the rank
statistic with midrank tie handling, which equals trapezoidal ROC
integration. Undefined ratios (an empty class) are reported as explicit
``None`` markers, never as silent zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .diagnosis import Decision
from .errors import InputError

# Quartile convention for the per-group uncertainty summaries: linear
# interpolation between closest order statistics (numpy's "linear"
# method). Recorded in report output.
QUARTILE_METHOD = "linear"

_GROUPS = ("TP", "FP", "TN", "FN")


@dataclass(frozen=True)
class BoxStats:
    """Quartile summary of posterior standard deviations within one group."""

    count: int
    min: float | None = None
    q1: float | None = None
    median: float | None = None
    q3: float | None = None
    max: float | None = None

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "min": self.min,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.max,
        }


@dataclass(frozen=True)
class EvalReport:
    """Binary-screening evaluation: confusion counts, ratios, AUC, group stats."""

    tp: int
    fp: int
    tn: int
    fn: int
    sensitivity: float | None
    specificity: float | None
    auc: float | None
    group_stats: dict[str, BoxStats]

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "auc": self.auc,
            "quartile_method": QUARTILE_METHOD,
            "group_stats": {k: v.to_dict() for k, v in self.group_stats.items()},
        }

    def to_text(self) -> str:
        """Key-value report, one metric per line; undefined stays explicit."""

        def fmt(value):
            return "undefined" if value is None else repr(value)

        lines = [
            f"n {self.n}",
            f"tp {self.tp}",
            f"fp {self.fp}",
            f"tn {self.tn}",
            f"fn {self.fn}",
            f"sensitivity {fmt(self.sensitivity)}",
            f"specificity {fmt(self.specificity)}",
            f"auc {fmt(self.auc)}",
        ]
        return "\n".join(lines) + "\n"


def _check_lengths(decisions, labels):
    if len(decisions) != len(labels):
        raise InputError(
            f"decisions ({len(decisions)}) and labels ({len(labels)}) differ in length"
        )
    if len(decisions) == 0:
        raise InputError("cannot evaluate an empty batch")


def confusion(
    decisions: list[Decision], labels: list[bool]
) -> tuple[int, int, int, int]:
    """Counts (tp, fp, tn, fn) with referable as the positive class."""
    _check_lengths(decisions, labels)
    tp = fp = tn = fn = 0
    for d, label in zip(decisions, labels):
        if d.referable:
            if label:
                tp += 1
            else:
                fp += 1
        else:
            if label:
                fn += 1
            else:
                tn += 1
    return tp, fp, tn, fn


def sens_spec(
    tp: int, fp: int, tn: int, fn: int
) -> tuple[float | None, float | None]:
    """Sensitivity and specificity; None when the defining class is empty."""
    sensitivity = tp / (tp + fn) if (tp + fn) > 0 else None
    specificity = tn / (tn + fp) if (tn + fp) > 0 else None
    return sensitivity, specificity


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the midrank U statistic.

    Ties between scores count half, so the value equals trapezoidal
    integration of the ROC curve over all distinct thresholds.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.ndim != 1 or labels.ndim != 1 or scores.shape != labels.shape:
        raise InputError("scores and labels must be 1-d and equally long")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("AUC needs at least one positive and one negative sample")
    ranks = rankdata(scores)  # average ranks = midranks
    rank_sum = float(ranks[labels].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def group_uncertainty_stats(
    decisions: list[Decision], labels: list[bool]
) -> dict[str, BoxStats]:
    """Quartiles of posterior std per confusion group (TP/FP/TN/FN)."""
    _check_lengths(decisions, labels)
    buckets: dict[str, list[float]] = {g: [] for g in _GROUPS}
    for d, label in zip(decisions, labels):
        if d.referable:
            group = "TP" if label else "FP"
        else:
            group = "FN" if label else "TN"
        buckets[group].append(d.std)
    stats = {}
    for group in _GROUPS:
        values = buckets[group]
        if not values:
            stats[group] = BoxStats(count=0)
            continue
        q = np.quantile(values, [0.0, 0.25, 0.5, 0.75, 1.0], method=QUARTILE_METHOD)
        stats[group] = BoxStats(
            count=len(values),
            min=float(q[0]),
            q1=float(q[1]),
            median=float(q[2]),
            q3=float(q[3]),
            max=float(q[4]),
        )
    return stats


def box_stats_table(group_stats: dict[str, BoxStats]) -> str:
    """Plain-text TSV table of the group quartiles, for external plotting."""
    lines = ["group\tcount\tmin\tq1\tmedian\tq3\tmax"]
    for group in _GROUPS:
        stats = group_stats.get(group, BoxStats(count=0))
        cells = [group, str(stats.count)] + [
            "" if v is None else repr(v)
            for v in (stats.min, stats.q1, stats.median, stats.q3, stats.max)
        ]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def evaluate(
    decisions: list[Decision],
    labels: list[bool],
    scores=None,
) -> EvalReport:
    """Full evaluation of a decision batch against true referable labels.

    ``scores`` defaults to the decisions' posterior means (the continuous
    grade), which is what the AUC is defined over. AUC is None when only
    one class is present.
    """
    _check_lengths(decisions, labels)
    tp, fp, tn, fn = confusion(decisions, labels)
    sensitivity, specificity = sens_spec(tp, fp, tn, fn)
    if scores is None:
        scores = [d.mean for d in decisions]
    try:
        auc = roc_auc(scores, labels)
    except InputError:
        auc = None
    return EvalReport(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        sensitivity=sensitivity,
        specificity=specificity,
        auc=auc,
        group_stats=group_uncertainty_stats(decisions, labels),
    )
