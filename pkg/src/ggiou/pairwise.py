"""Dense truth-box x anchor metric matrices and their argmax reductions."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from .geometry import GGIoUParams, _metric_kernel, as_boxes

__all__ = [
    "Metric",
    "MetricMatrix",
    "EmptyGroundTruthError",
    "metric_matrix",
    "argmax_per_anchor",
    "argmax_per_gt",
    "metric_from_dict",
    "metric_to_dict",
]

# "iou" or the parameters of a GGIoU
Metric = Union[str, GGIoUParams]

DEFAULT_CHUNK = 16384


class EmptyGroundTruthError(ValueError):
    pass


def _check_metric(metric: Metric) -> Metric:
    if isinstance(metric, GGIoUParams):
        return metric
    if metric == "iou":
        return "iou"
    raise ValueError(f"metric must be 'iou' or GGIoUParams, got {metric!r}")


def metric_to_dict(metric: Metric):
    return "iou" if metric == "iou" else {"ggiou": metric.to_dict()}


def metric_from_dict(d) -> Metric:
    """Parse ``"iou"``, ``{"ggiou": {...}}`` or a bare GGIoU parameter dict."""
    if d == "iou" or d == "IoU":
        return "iou"
    if isinstance(d, dict):
        if "ggiou" in d:
            return GGIoUParams.from_dict(d["ggiou"])
        return GGIoUParams.from_dict(d)
    raise ValueError(f"cannot parse metric from {d!r}")


@dataclass(frozen=True)
class MetricMatrix:
    """Metric values with truth boxes as rows and anchors as columns.

    ``values`` has shape ``(n_gts, n_anchors)`` and is read-only.
    """

    values: np.ndarray
    metric: Metric

    @property
    def n_gts(self) -> int:
        return self.values.shape[0]

    @property
    def n_anchors(self) -> int:
        return self.values.shape[1]


def _block(anchors: np.ndarray, gts: np.ndarray, metric: Metric) -> np.ndarray:
    params = None if metric == "iou" else metric
    out = _metric_kernel(anchors[None, :, :], gts[:, None, :], params)
    return out[3] if params is None else out[5]


def metric_matrix(anchors, gts, metric: Metric = "iou", workers: int = 1,
                  chunk_size: int = DEFAULT_CHUNK) -> MetricMatrix:
    """Compute ``metric(anchor_j, gt_i)`` for every pair.

    Anchors are split into column chunks of ``chunk_size`` that are evaluated
    independently (optionally on ``workers`` threads) and written into
    disjoint slices, so the result does not depend on either setting.

    Args:
        anchors: ``(M, 4)`` corner boxes.
        gts: ``(N, 4)`` corner boxes.
        metric: ``"iou"`` or a :class:`GGIoUParams`.
        workers: thread count; numpy releases the GIL inside the kernels.
        chunk_size: anchors per chunk.

    Returns:
        MetricMatrix of shape ``(N, M)``.
    """
    metric = _check_metric(metric)
    anchors = as_boxes(anchors, "anchors")
    gts = as_boxes(gts, "gts")
    if chunk_size < 1 or workers < 1:
        raise ValueError("chunk_size and workers must be >= 1")
    m, n = len(anchors), len(gts)
    values = np.zeros((n, m), dtype=np.float64)
    if m and n:
        bounds = [(s, min(s + chunk_size, m)) for s in range(0, m, chunk_size)]

        def run(span):
            s, e = span
            values[:, s:e] = _block(anchors[s:e], gts, metric)

        if workers == 1 or len(bounds) == 1:
            for span in bounds:
                run(span)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run, bounds))
    values.flags.writeable = False
    return MetricMatrix(values, metric)


def argmax_per_anchor(m: MetricMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Best truth box for every anchor column.

    Ties go to the lowest truth-box index.

    Returns:
        ``(gt_index, value)`` arrays of length ``n_anchors``.
    """
    if m.n_gts == 0:
        raise EmptyGroundTruthError("argmax over anchors needs at least one ground truth")
    idx = np.argmax(m.values, axis=0)
    return idx, m.values[idx, np.arange(m.n_anchors)]


def argmax_per_gt(m: MetricMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Best anchor for every truth-box row, ties to the lowest anchor index."""
    if m.n_gts == 0:
        raise EmptyGroundTruthError("no ground truths")
    if m.n_anchors == 0:
        raise ValueError("argmax over an empty anchor set")
    idx = np.argmax(m.values, axis=1)
    return idx, m.values[np.arange(m.n_gts), idx]
