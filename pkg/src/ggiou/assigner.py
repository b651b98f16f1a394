"""Threshold-based anchor labeling with a forced best-anchor match per truth box."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GGIoUParams
from .pairwise import (
    Metric,
    MetricMatrix,
    _check_metric,
    argmax_per_anchor,
    metric_from_dict,
    metric_to_dict,
)

__all__ = [
    "NEGATIVE",
    "IGNORE",
    "AssignmentConfig",
    "AssignmentResult",
    "assign",
    "positives_per_gt",
    "matched_metric",
]

NEGATIVE = -1
IGNORE = -2


@dataclass(frozen=True)
class AssignmentConfig:
    """Thresholds and metric for one assignment strategy.

    Anchors whose best metric is below ``neg_threshold`` are negative, those
    at or above ``pos_threshold`` are positive, and the band in between is
    ignored.
    """

    pos_threshold: float = 0.5
    neg_threshold: float = 0.4
    metric: Metric = "iou"
    force_match: bool = True
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "metric", _check_metric(self.metric))
        if not 0.0 < self.pos_threshold <= 1.0:
            raise ValueError(f"pos_threshold must lie in (0, 1], got {self.pos_threshold}")
        if not 0.0 <= self.neg_threshold < 1.0:
            raise ValueError(f"neg_threshold must lie in [0, 1), got {self.neg_threshold}")
        if self.neg_threshold > self.pos_threshold:
            raise ValueError(
                f"neg_threshold {self.neg_threshold} exceeds pos_threshold {self.pos_threshold}"
            )
        if not self.name:
            object.__setattr__(self, "name", self.default_name())

    def default_name(self) -> str:
        if self.metric == "iou":
            return "iou"
        p: GGIoUParams = self.metric
        return f"ggiou_a{p.alpha:g}_b{p.beta:.4g}_{p.sigma_source.value}"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "metric": metric_to_dict(self.metric),
            "pos_threshold": self.pos_threshold,
            "neg_threshold": self.neg_threshold,
            "force_match": self.force_match,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AssignmentConfig":
        d = dict(d)
        unknown = set(d) - {"name", "metric", "pos_threshold", "neg_threshold", "force_match"}
        if unknown:
            raise ValueError(f"unknown assigner field(s): {sorted(unknown)}")
        if "metric" in d:
            d["metric"] = metric_from_dict(d["metric"])
        return cls(**d)


@dataclass(frozen=True)
class AssignmentResult:
    """Per-anchor assignment.

    Attributes:
        labels: truth-box index for positives, ``NEGATIVE`` or ``IGNORE``.
        best_metric: each anchor's maximum metric over all truth boxes.
        forced: true where the anchor is positive only through force matching.
    """

    labels: np.ndarray
    best_metric: np.ndarray
    forced: np.ndarray

    @property
    def positive(self) -> np.ndarray:
        return self.labels >= 0

    def to_dict(self) -> dict:
        return {
            "labels": self.labels.tolist(),
            "best_metric": self.best_metric.tolist(),
            "forced": self.forced.tolist(),
        }

    def __eq__(self, other):
        if not isinstance(other, AssignmentResult):
            return NotImplemented
        return (np.array_equal(self.labels, other.labels)
                and np.array_equal(self.best_metric, other.best_metric)
                and np.array_equal(self.forced, other.forced))


def _force_match(values: np.ndarray, labels: np.ndarray, forced: np.ndarray) -> None:
    # Higher-index truth boxes claim first, so on a shared argmax the later
    # one keeps it and earlier ones fall back to their best unclaimed anchor.
    n, m = values.shape
    taken = np.zeros(m, dtype=bool)
    for g in range(n - 1, -1, -1):
        row = np.where(taken, -np.inf, values[g])
        j = int(np.argmax(row))
        if taken[j]:
            continue  # fewer anchors than truth boxes
        taken[j] = True
        if labels[j] != g:
            labels[j] = g
            forced[j] = True


def assign(matrix: MetricMatrix, cfg: AssignmentConfig) -> AssignmentResult:
    """Label every anchor from a metric matrix.

    1. Each anchor takes its best truth box (lowest index on ties) and is
       positive, ignored or negative according to the thresholds.
    2. With ``force_match`` every truth box then claims its best anchor and
       relabels it positive for itself, overriding any earlier label. When
       two truth boxes share a best anchor the higher index keeps it and the
       other moves to its best anchor not yet claimed. With fewer anchors
       than truth boxes the lowest-index truth boxes go without.

    Raises:
        ValueError: if the matrix was built with a different metric.
    """
    if matrix.metric != cfg.metric:
        raise ValueError(f"matrix metric {matrix.metric!r} does not match config metric {cfg.metric!r}")
    m = matrix.n_anchors
    forced = np.zeros(m, dtype=bool)
    if matrix.n_gts == 0:
        return AssignmentResult(np.full(m, NEGATIVE, dtype=np.int64), np.zeros(m), forced)

    best_gt, best = argmax_per_anchor(matrix)
    labels = np.full(m, IGNORE, dtype=np.int64)
    labels[best < cfg.neg_threshold] = NEGATIVE
    pos = best >= cfg.pos_threshold
    labels[pos] = best_gt[pos]
    if cfg.force_match and m:
        _force_match(matrix.values, labels, forced)
    return AssignmentResult(labels, np.array(best), forced)


def positives_per_gt(result: AssignmentResult, n_gts: int) -> np.ndarray:
    """Number of positive anchors assigned to each truth box."""
    pos = result.labels[result.labels >= 0]
    return np.bincount(pos, minlength=n_gts)[:n_gts] if n_gts else np.zeros(0, dtype=np.int64)


def matched_metric(matrix: MetricMatrix, result: AssignmentResult) -> np.ndarray:
    """Metric between each positive anchor and its assigned truth box.

    Returned in anchor order over the positive anchors; these are the values
    that feed :func:`ggiou.loss.balanced_weights`.
    """
    idx = np.flatnonzero(result.labels >= 0)
    return matrix.values[result.labels[idx], idx]
