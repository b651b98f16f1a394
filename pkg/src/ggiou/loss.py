"""Delta encoding and the metric-weighted smooth-L1 localization loss."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import InvalidBoxError, as_boxes

__all__ = [
    "DeltaEncoding",
    "LossConfig",
    "CalibrationError",
    "encode_deltas",
    "decode_deltas",
    "smooth_l1",
    "smooth_l1_grad",
    "balanced_weights",
    "localization_loss",
    "localization_loss_grad",
    "per_sample_loss",
    "calibrate_w_loc",
]


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class DeltaEncoding:
    means: tuple = (0.0, 0.0, 0.0, 0.0)
    stds: tuple = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        if len(self.means) != 4 or len(self.stds) != 4:
            raise ValueError("means and stds need four entries each")
        if any(not s > 0 for s in self.stds):
            raise ValueError(f"stds must be positive, got {self.stds}")


@dataclass(frozen=True)
class LossConfig:
    """Weighting of the localization loss.

    ``w_loc=2.8`` and ``lam=1.4`` are the best GGIoU-weighted setting
    reported for RetinaNet; ``tau`` is the smooth-L1 knee.
    """

    w_loc: float = 2.8
    lam: float = 1.4
    tau: float = 1.0

    def __post_init__(self):
        if not self.w_loc > 0:
            raise ValueError(f"w_loc must be positive, got {self.w_loc}")
        if not self.lam >= 0:
            raise ValueError(f"lam must be non-negative, got {self.lam}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")

    @classmethod
    def from_dict(cls, d: dict) -> "LossConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        if "smooth_l1_tau" in d:
            d["tau"] = d.pop("smooth_l1_tau")
        return cls(**d)

    def to_dict(self) -> dict:
        return {"w_loc": self.w_loc, "lambda": self.lam, "smooth_l1_tau": self.tau}


def _center_size(b: np.ndarray):
    w = b[..., 2] - b[..., 0]
    h = b[..., 3] - b[..., 1]
    return b[..., 0] + 0.5 * w, b[..., 1] + 0.5 * h, w, h


def encode_deltas(anchors, gts, enc: DeltaEncoding = DeltaEncoding()) -> np.ndarray:
    """Encode ``gts`` relative to ``anchors`` as ``(dx, dy, log dw, log dh)``.

    Accepts single boxes or ``(K, 4)`` arrays; the output has matching shape.

    Raises:
        InvalidBoxError: on non-finite input or a box without positive extent.
    """
    single = np.ndim(anchors) == 1 or hasattr(anchors, "x1")
    a = as_boxes([anchors] if single else anchors, "anchors")
    g = as_boxes([gts] if single else gts, "gts")
    ax, ay, aw, ah = _center_size(a)
    gx, gy, gw, gh = _center_size(g)
    if not ((aw > 0) & (ah > 0)).all() or not ((gw > 0) & (gh > 0)).all():
        raise InvalidBoxError("delta encoding needs boxes with positive width and height")
    t = np.stack([(gx - ax) / aw, (gy - ay) / ah, np.log(gw / aw), np.log(gh / ah)], axis=-1)
    t = (t - np.asarray(enc.means)) / np.asarray(enc.stds)
    return t[0] if single else t


def decode_deltas(anchors, deltas, enc: DeltaEncoding = DeltaEncoding()) -> np.ndarray:
    """Inverse of :func:`encode_deltas`."""
    single = np.ndim(anchors) == 1 or hasattr(anchors, "x1")
    a = as_boxes([anchors] if single else anchors, "anchors")
    d = np.asarray(deltas, dtype=np.float64).reshape(-1, 4)
    if not np.isfinite(d).all():
        raise InvalidBoxError("deltas contain non-finite values")
    d = d * np.asarray(enc.stds) + np.asarray(enc.means)
    ax, ay, aw, ah = _center_size(a)
    cx = ax + d[:, 0] * aw
    cy = ay + d[:, 1] * ah
    w = aw * np.exp(d[:, 2])
    h = ah * np.exp(d[:, 3])
    out = np.stack([cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h], axis=-1)
    return out[0] if single else out


def smooth_l1(x, tau: float = 1.0):
    """``0.5 x²/tau`` inside ``|x| < tau``, ``|x| - tau/2`` outside."""
    ax = np.abs(x)
    return np.where(ax < tau, 0.5 * ax * ax / tau, ax - 0.5 * tau)


def smooth_l1_grad(x, tau: float = 1.0):
    x = np.asarray(x, dtype=np.float64)
    return np.where(np.abs(x) < tau, x / tau, np.sign(x))


def balanced_weights(values, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """Per-sample weights ``w_loc * v ** lam``.

    Raises:
        ValueError: if any value is outside ``[0, 1]``.
    """
    v = np.asarray(values, dtype=np.float64)
    if not ((v >= 0) & (v <= 1)).all():
        raise ValueError("metric values for weighting must lie in [0, 1]")
    return cfg.w_loc * v ** cfg.lam


def _residuals(pred, target, weights):
    p = np.asarray(pred, dtype=np.float64).reshape(-1, 4)
    t = np.asarray(target, dtype=np.float64).reshape(-1, 4)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if not (len(p) == len(t) == len(w)):
        raise ValueError(
            f"length mismatch: {len(p)} predictions, {len(t)} targets, {len(w)} weights"
        )
    return p - t, w


def per_sample_loss(pred, target, tau: float = 1.0) -> np.ndarray:
    """Unweighted smooth-L1 summed over the four coordinates of each sample."""
    r, _ = _residuals(pred, target, np.zeros(len(np.asarray(pred).reshape(-1, 4))))
    return smooth_l1(r, tau).sum(axis=1)


def localization_loss(pred, target, weights, cfg: LossConfig = LossConfig()) -> float:
    """Weighted smooth-L1 over positives: ``sum_i w_i * sum_m smooth_l1(p - t)``."""
    r, w = _residuals(pred, target, weights)
    return float(np.dot(w, smooth_l1(r, cfg.tau).sum(axis=1)))


def localization_loss_grad(pred, target, weights, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """Gradient of :func:`localization_loss` with respect to ``pred``."""
    r, w = _residuals(pred, target, weights)
    return w[:, None] * smooth_l1_grad(r, cfg.tau)


def calibrate_w_loc(values, per_sample_losses, lam: float, baseline_w: float = 1.0) -> float:
    """Global weight that makes the weighted loss equal the unweighted baseline.

    Solves ``w * sum(v_i**lam * loss_i) = baseline_w * sum(loss_i)`` for ``w``,
    which matches the two losses at the first iteration.

    Raises:
        CalibrationError: if the weighted loss sum is zero.
    """
    v = np.asarray(values, dtype=np.float64)
    losses = np.asarray(per_sample_losses, dtype=np.float64)
    if v.shape != losses.shape:
        raise ValueError("values and losses must have equal length")
    if (losses < 0).any():
        raise ValueError("per-sample losses must be non-negative")
    weighted = float(np.sum(v ** lam * losses))
    if not weighted > 0:
        raise CalibrationError("weighted loss is zero; w_loc is undefined")
    return baseline_w * float(np.sum(losses)) / weighted
