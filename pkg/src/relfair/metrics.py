"""Accuracy and group-fairness metrics, plus aggregation across seeds.

The gap metrics follow the expectation form: delta_dp is the absolute gap in
mean predicted probability between sensitive groups, delta_eo the same gap
restricted to rows with positive labels.  Passing hard 0/1 predictions gives
the thresholded variants; ``thresholded`` is provided for that.  With more
than two groups the reported gap is the maximum over group pairs.
"""

import dataclasses
import json

import numpy as np


class MetricUndefinedError(ValueError):
    """A group needed by the metric is empty (or has no positive labels)."""


def _as_array(v, name):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d")
    return arr


def thresholded(yhat, threshold=0.5):
    """Hard 0/1 predictions from probabilities."""
    return (np.asarray(yhat, dtype=float) >= threshold).astype(float)


def accuracy(yhat, y, threshold=0.5):
    yhat = _as_array(yhat, "yhat")
    y = _as_array(y, "y")
    if len(yhat) == 0:
        raise ValueError("accuracy of an empty sample is undefined")
    if len(yhat) != len(y):
        raise ValueError("yhat and y must have equal length")
    return float(np.mean(thresholded(yhat, threshold) == y))


def _group_gap(yhat, s, mask, metric_name):
    s = np.asarray(s)
    groups = np.unique(s)
    if len(groups) < 2:
        raise MetricUndefinedError(
            f"{metric_name} needs at least two sensitive groups, got {len(groups)}"
        )
    means = []
    for g in groups:
        sel = (s == g) & mask
        if not np.any(sel):
            raise MetricUndefinedError(
                f"{metric_name} undefined: group {g!r} has no qualifying rows"
            )
        means.append(float(yhat[sel].mean()))
    return max(means) - min(means)  # == max pairwise absolute gap


def delta_dp(yhat, s):
    """Demographic-parity gap: |E[yhat | S=i] - E[yhat | S=j]|, max over pairs."""
    yhat = _as_array(yhat, "yhat")
    if len(yhat) != len(s):
        raise ValueError("yhat and s must have equal length")
    return _group_gap(yhat, s, np.ones(len(yhat), dtype=bool), "delta_dp")


def delta_eo(yhat, y, s):
    """Equal-opportunity gap: the delta_dp gap restricted to y=1 rows."""
    yhat = _as_array(yhat, "yhat")
    y = _as_array(y, "y")
    if not (len(yhat) == len(y) == len(s)):
        raise ValueError("yhat, y and s must have equal length")
    return _group_gap(yhat, s, y == 1.0, "delta_eo")


# ---------------------------------------------------------------------------
# aggregation across seeds


@dataclasses.dataclass(frozen=True)
class SeedResult:
    seed: int
    accuracy: float
    delta_eo: float
    delta_dp: float

    def __post_init__(self):
        for field in ("accuracy", "delta_eo", "delta_dp"):
            v = getattr(self, field)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{field}={v} outside [0, 1]")


@dataclasses.dataclass(frozen=True)
class FairnessReport:
    accuracy: float
    delta_eo: float
    delta_dp: float
    per_seed: tuple
    accuracy_std: object = None  # None with a single seed
    delta_eo_std: object = None
    delta_dp_std: object = None

    def to_dict(self):
        out = {
            "accuracy": self.accuracy,
            "delta_eo": self.delta_eo,
            "delta_dp": self.delta_dp,
            "per_seed": [dataclasses.asdict(r) for r in self.per_seed],
        }
        if self.accuracy_std is not None:
            out["accuracy_std"] = self.accuracy_std
            out["delta_eo_std"] = self.delta_eo_std
            out["delta_dp_std"] = self.delta_dp_std
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def aggregate(results):
    """Mean (and, with >= 2 seeds, sample std) of per-seed metrics."""
    results = tuple(results)
    if not results:
        raise ValueError("aggregate needs at least one seed result")

    def stats(field):
        vals = np.array([getattr(r, field) for r in results])
        mean = float(vals.mean())
        std = float(vals.std(ddof=1)) if len(vals) >= 2 else None
        return mean, std

    acc, acc_std = stats("accuracy")
    eo, eo_std = stats("delta_eo")
    dp, dp_std = stats("delta_dp")
    return FairnessReport(
        accuracy=acc,
        delta_eo=eo,
        delta_dp=dp,
        per_seed=results,
        accuracy_std=acc_std,
        delta_eo_std=eo_std,
        delta_dp_std=dp_std,
    )


def format_comparison_table(rows):
    """Aligned plain-text table; rows maps method name -> FairnessReport."""

    def cell(mean, std):
        if std is None:
            return f"{mean:.3f}"
        return f"{mean:.3f} +/- {std:.3f}"

    table = [("Method", "ACC", "dEO", "dDP")]
    for name, rep in rows.items():
        table.append(
            (
                name,
                cell(rep.accuracy, rep.accuracy_std),
                cell(rep.delta_eo, rep.delta_eo_std),
                cell(rep.delta_dp, rep.delta_dp_std),
            )
        )
    widths = [max(len(r[c]) for r in table) for c in range(4)]
    lines = []
    for i, row in enumerate(table):
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("-" * (sum(widths) + 6))
    return "\n".join(lines)
