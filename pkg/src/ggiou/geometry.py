"""Box geometry: IoU, Gaussian center distance and Gaussian-guided IoU.

Every metric is computed by a single broadcasting kernel over ``(..., 4)``
arrays in ``x1, y1, x2, y2`` corner form. The scalar helpers below wrap one
box pair into length-1 arrays and reuse that kernel, so a scalar call and the
matching entry of a pairwise matrix are produced by identical arithmetic.

Coordinates are continuous (``width = x2 - x1``, no +1 pixel convention) and
all arithmetic is float64.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Box",
    "Intersection",
    "SigmaSource",
    "GGIoUParams",
    "InvalidBoxError",
    "as_boxes",
    "normalize",
    "normalize_boxes",
    "area",
    "intersect",
    "iou",
    "gaussian_distance",
    "ggiou",
    "paired_iou",
    "paired_gaussian_distance",
    "paired_ggiou",
]


class InvalidBoxError(ValueError):
    """Raised for boxes with non-finite coordinates or the wrong shape."""


@dataclass(frozen=True)
class Box:
    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.y1, self.x2, self.y2], dtype=np.float64)

    def scaled(self, s: float) -> "Box":
        return Box(self.x1 * s, self.y1 * s, self.x2 * s, self.y2 * s)

    def shifted(self, dx: float, dy: float) -> "Box":
        return Box(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)

    def __iter__(self):
        return iter((self.x1, self.y1, self.x2, self.y2))


BoxLike = Union[Box, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class Intersection:
    w: float
    h: float
    area: float


class SigmaSource(str, enum.Enum):
    """Which box's extent scales the Gaussian standard deviations."""

    OVERLAP = "overlap"
    TRUTH = "gt"


@dataclass(frozen=True)
class GGIoUParams:
    """Parameters of the Gaussian-guided IoU.

    Attributes:
        alpha: blend exponent in ``[0, 1]``; 0 reduces the metric to IoU.
        beta: ratio between Gaussian standard deviation and box extent.
        sigma_source: take the extent from the overlap box or the truth box.
    """

    alpha: float = 0.3
    beta: float = 1.0 / 6.0
    sigma_source: SigmaSource = SigmaSource.OVERLAP

    def __post_init__(self):
        object.__setattr__(self, "sigma_source", SigmaSource(self.sigma_source))
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not (self.beta > 0.0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "sigma_source": self.sigma_source.value}

    @classmethod
    def from_dict(cls, d: dict) -> "GGIoUParams":
        unknown = set(d) - {"alpha", "beta", "sigma_source"}
        if unknown:
            raise ValueError(f"unknown GGIoU parameter(s): {sorted(unknown)}")
        return cls(**d)


def as_boxes(boxes, name: str = "boxes") -> np.ndarray:
    """Convert boxes to a float64 ``(K, 4)`` array and check finiteness.

    Raises:
        InvalidBoxError: naming the first offending index.
    """
    if isinstance(boxes, Box):
        boxes = [boxes]
    if not isinstance(boxes, np.ndarray):
        boxes = [tuple(b) for b in boxes]
    try:
        arr = np.asarray(boxes, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidBoxError(f"{name}: cannot convert to a (K, 4) float array: {exc}") from exc
    if arr.size == 0:
        return arr.reshape(0, 4)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise InvalidBoxError(f"{name}: expected shape (K, 4), got {arr.shape}")
    finite = np.isfinite(arr).all(axis=1)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise InvalidBoxError(f"{name}[{bad}] has a non-finite coordinate: {arr[bad].tolist()}")
    return arr


def normalize_boxes(boxes: np.ndarray) -> np.ndarray:
    """Sort coordinates per axis so that ``x1 <= x2`` and ``y1 <= y2``."""
    b = np.asarray(boxes, dtype=np.float64)
    x1, y1, x2, y2 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [np.minimum(x1, x2), np.minimum(y1, y2), np.maximum(x1, x2), np.maximum(y1, y2)],
        axis=-1,
    )


def _metric_kernel(a: np.ndarray, g: np.ndarray, params: GGIoUParams | None):
    """Shared arithmetic for every metric.

    ``a`` (anchors) and ``g`` (truth boxes) are broadcastable ``(..., 4)``
    arrays. Returns ``(iw, ih, inter, iou, q, gg)`` where ``q`` is the
    Gaussian exponent ``dx²/σ1² + dy²/σ2²`` (``None`` when ``params`` is None)
    and ``gg`` the GGIoU (``None`` likewise).
    """
    a = normalize_boxes(a)
    g = normalize_boxes(g)
    ax1, ay1, ax2, ay2 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    gx1, gy1, gx2, gy2 = g[..., 0], g[..., 1], g[..., 2], g[..., 3]

    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_g = (gx2 - gx1) * (gy2 - gy1)
    iw = np.maximum(np.minimum(ax2, gx2) - np.maximum(ax1, gx1), 0.0)
    ih = np.maximum(np.minimum(ay2, gy2) - np.maximum(ay1, gy1), 0.0)
    inter = iw * ih
    union = area_a + area_g - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        iou_v = np.where(union > 0, inter / union, 0.0)
    if params is None:
        return iw, ih, inter, iou_v, None, None

    dx = (ax1 + ax2) / 2 - (gx1 + gx2) / 2
    dy = (ay1 + ay2) / 2 - (gy1 + gy2) / 2
    if params.sigma_source is SigmaSource.OVERLAP:
        s1 = params.beta * iw
        s2 = params.beta * ih
    else:
        s1 = params.beta * (gx2 - gx1)
        s2 = params.beta * (gy2 - gy1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # zero offset contributes nothing even when sigma is zero
        tx = np.where(dx == 0, 0.0, (dx * dx) / (s1 * s1))
        ty = np.where(dy == 0, 0.0, (dy * dy) / (s2 * s2))
        q = tx + ty
        # D_c ** alpha taken as exp(-alpha*q/2) so deep tails do not underflow twice
        weight = np.where(params.alpha == 0.0, 1.0, np.exp((-0.5 * params.alpha) * q))
        gg = np.where(inter > 0, iou_v ** (1.0 - params.alpha) * weight, 0.0)
    return iw, ih, inter, iou_v, q, gg


def paired_iou(a, g) -> np.ndarray:
    """Elementwise IoU of broadcastable ``(..., 4)`` box arrays."""
    return _metric_kernel(np.asarray(a, np.float64), np.asarray(g, np.float64), None)[3]


def paired_gaussian_distance(a, g, params: GGIoUParams) -> np.ndarray:
    """Elementwise Gaussian center distance in ``[0, 1]``."""
    q = _metric_kernel(np.asarray(a, np.float64), np.asarray(g, np.float64), params)[4]
    return np.exp(-0.5 * q)


def paired_ggiou(a, g, params: GGIoUParams) -> np.ndarray:
    """Elementwise GGIoU of anchors ``a`` against truth boxes ``g``.

    The metric is ``IoU ** (1 - alpha) * D_c ** alpha`` and is defined as 0
    whenever the boxes do not intersect.
    """
    return _metric_kernel(np.asarray(a, np.float64), np.asarray(g, np.float64), params)[5]


def _one(b: BoxLike, name: str) -> np.ndarray:
    return as_boxes([tuple(b)] if not isinstance(b, np.ndarray) else b.reshape(1, 4), name)


def normalize(b: BoxLike) -> Box:
    """Return ``b`` with per-axis sorted coordinates.

    >>> normalize(Box(3, 4, 1, 2))
    Box(x1=1.0, y1=2.0, x2=3.0, y2=4.0)
    """
    arr = normalize_boxes(_one(b, "box"))[0]
    return Box(*(float(v) for v in arr))


def area(b: BoxLike) -> float:
    b = normalize(b)
    return b.width * b.height


def intersect(a: BoxLike, gt: BoxLike) -> Intersection:
    iw, ih, inter, *_ = _metric_kernel(_one(a, "anchor"), _one(gt, "gt"), None)
    return Intersection(float(iw[0]), float(ih[0]), float(inter[0]))


def iou(a: BoxLike, gt: BoxLike) -> float:
    """IoU of two boxes; 0 when the union has no area."""
    return float(_metric_kernel(_one(a, "anchor"), _one(gt, "gt"), None)[3][0])


def gaussian_distance(a: BoxLike, gt: BoxLike, params: GGIoUParams | None = None) -> float:
    """Gaussian closeness of the two box centers.

    ``exp(-(dx²/σ1² + dy²/σ2²) / 2)`` with ``σ = beta * extent`` where the
    extent comes from the overlap box or the truth box. A zero sigma gives 0
    unless the matching center offset is also zero.
    """
    params = params or GGIoUParams()
    q = _metric_kernel(_one(a, "anchor"), _one(gt, "gt"), params)[4]
    return float(np.exp(-0.5 * q)[0])


def ggiou(a: BoxLike, gt: BoxLike, params: GGIoUParams | None = None) -> float:
    """Gaussian-guided IoU of anchor ``a`` against truth box ``gt``.

    Not symmetric under the truth-box sigma source.
    """
    params = params or GGIoUParams()
    return float(_metric_kernel(_one(a, "anchor"), _one(gt, "gt"), params)[5][0])
