"""Synthetic assignment scenarios: slender objects and equal-IoU alignment sets."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .anchors import AnchorGridSpec, generate_anchors
from .assigner import AssignmentConfig
from .config import default_assigners
from .geometry import GGIoUParams, as_boxes, paired_gaussian_distance, paired_ggiou, paired_iou

__all__ = [
    "Scenario",
    "ScenarioError",
    "gen_slender_scenario",
    "gen_alignment_scenario",
    "anchor_metric_table",
    "load_scenario",
    "save_scenario",
]


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    """Truth boxes plus either an anchor grid or explicit anchors.

    ``tags`` holds one aspect ratio ``max(w/h, h/w)`` per truth box.
    """

    name: str
    image_size: tuple
    gts: np.ndarray
    configs: list = field(default_factory=default_assigners)
    anchor_spec: AnchorGridSpec | None = None
    anchors: np.ndarray | None = None
    tags: list = field(default_factory=list)

    def __post_init__(self):
        self.gts = as_boxes(self.gts, "gts")
        if self.anchors is not None:
            self.anchors = as_boxes(self.anchors, "anchors")
        if not self.configs:
            raise ScenarioError(f"scenario {self.name!r} needs at least one assigner config")
        w, h = self.image_size
        if len(self.gts) and ((self.gts[:, :2] < 0).any() or (self.gts[:, 2] > w).any()
                              or (self.gts[:, 3] > h).any()):
            raise ScenarioError(f"scenario {self.name!r}: truth boxes must lie inside the {w}x{h} image")
        if not self.tags:
            self.tags = [_aspect(b) for b in self.gts]
        if len(self.tags) != len(self.gts):
            raise ScenarioError(f"scenario {self.name!r}: {len(self.tags)} tags for {len(self.gts)} boxes")

    def anchor_boxes(self, spec: AnchorGridSpec | None = None) -> np.ndarray:
        """Explicit anchors if present, otherwise a tiling of the image."""
        if self.anchors is not None:
            return self.anchors
        spec = spec or self.anchor_spec or AnchorGridSpec()
        return generate_anchors(spec.with_image(*self.image_size))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "image_size": list(self.image_size),
            "gts": self.gts.tolist(),
            "tags": [float(t) for t in self.tags],
            "anchor_spec": None if self.anchor_spec is None else self.anchor_spec.to_dict(),
            "anchors": None if self.anchors is None else self.anchors.tolist(),
            "configs": [c.to_dict() for c in self.configs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            return cls(
                name=d["name"],
                image_size=tuple(d["image_size"]),
                gts=np.asarray(d["gts"], dtype=np.float64).reshape(-1, 4),
                configs=[AssignmentConfig.from_dict(c) for c in d["configs"]],
                anchor_spec=None if d.get("anchor_spec") is None else AnchorGridSpec.from_dict(d["anchor_spec"]),
                anchors=None if d.get("anchors") is None else np.asarray(d["anchors"], dtype=np.float64),
                tags=list(d.get("tags") or []),
            )
        except KeyError as exc:
            raise ScenarioError(f"scenario is missing key {exc}") from exc


def _aspect(b) -> float:
    w, h = b[2] - b[0], b[3] - b[1]
    if w <= 0 or h <= 0:
        return math.inf
    return float(max(w / h, h / w))


def _snap(c: float, stride: float, offset: float) -> float:
    # nearest anchor center (k + offset) * stride
    k = math.floor(c / stride - offset + 0.5)
    return (k + offset) * stride


def gen_slender_scenario(aspect_ratio: float, size: int = 512, long_side: float | None = None,
                         vertical: bool = False, params: GGIoUParams | None = None,
                         spec: AnchorGridSpec | None = None) -> Scenario:
    """One slender truth box near the image center on the default grid.

    The box's long side defaults to half the image and its short side is
    ``long_side / aspect_ratio``. Its center is snapped to the finest-level
    anchor center nearest the image center so an anchor sits on the object
    center. Compared configs are IoU and GGIoU, both with thresholds
    (0.4, 0.5).

    Raises:
        ScenarioError: if the ratio is below 1 or the box does not fit.
    """
    if not aspect_ratio >= 1:
        raise ScenarioError(f"aspect ratio must be >= 1, got {aspect_ratio}")
    spec = (spec or AnchorGridSpec()).with_image(size, size)
    long_side = size / 2 if long_side is None else float(long_side)
    w, h = long_side, long_side / aspect_ratio
    if vertical:
        w, h = h, w
    stride = spec.levels[0][0]
    cx = _snap(size / 2, stride, spec.center_offset)
    cy = _snap(size / 2, stride, spec.center_offset)
    gt = [cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2]
    if gt[0] < 0 or gt[1] < 0 or gt[2] > size or gt[3] > size:
        raise ScenarioError(f"a {w:g}x{h:g} box does not fit in a {size}px image")
    return Scenario(
        name=f"slender_r{aspect_ratio:g}",
        image_size=(size, size),
        gts=np.array([gt]),
        configs=default_assigners(params),
        anchor_spec=spec,
        tags=[float(aspect_ratio)],
    )


def gen_alignment_scenario(offset_fraction: float = 0.0, size: int = 512, n_anchors: int = 3,
                           params: GGIoUParams | None = None) -> Scenario:
    """A truth box with equal-IoU anchors at increasing center offsets.

    The truth box is the central half of the image; anchors are half its
    size and slide horizontally inside it, so every anchor has IoU 0.25. The
    first anchor sits ``offset_fraction`` of the way from the center to the
    edge and the rest are spread evenly up to the edge. Offsets are rounded
    to a 1/1024 pixel grid so the equal IoUs are exact in floating point.
    """
    if not 0.0 <= offset_fraction < 1.0:
        raise ScenarioError(f"offset_fraction must lie in [0, 1), got {offset_fraction}")
    if n_anchors < 1:
        raise ScenarioError("need at least one anchor")
    g = size / 4
    gt = np.array([[g, g, 3 * g, 3 * g]])
    side = g
    slack = (2 * g - side) / 2
    first = offset_fraction * slack
    step = (slack - first) / (n_anchors - 1) if n_anchors > 1 else 0.0
    offsets = [round((first + k * step) * 1024) / 1024 for k in range(n_anchors)]
    c = 2 * g
    anchors = np.array([[c + d - side / 2, c - side / 2, c + d + side / 2, c + side / 2]
                        for d in offsets])
    return Scenario(
        name=f"alignment_f{offset_fraction:g}",
        image_size=(size, size),
        gts=gt,
        configs=default_assigners(params),
        anchors=anchors,
    )


def anchor_metric_table(scenario: Scenario, params: GGIoUParams | None = None,
                        gt_index: int = 0) -> list[dict]:
    """IoU, Gaussian distance, GGIoU and center offset of each anchor vs one truth box."""
    params = params or GGIoUParams()
    anchors = scenario.anchor_boxes()
    gt = scenario.gts[gt_index][None, :]
    centers = (anchors[:, :2] + anchors[:, 2:]) / 2
    gc = (gt[0, :2] + gt[0, 2:]) / 2
    dist = np.hypot(*(centers - gc).T)
    ious = paired_iou(anchors, gt)
    dcs = paired_gaussian_distance(anchors, gt, params)
    ggs = paired_ggiou(anchors, gt, params)
    return [
        {"anchor": anchors[j].tolist(), "center_distance": float(dist[j]),
         "iou": float(ious[j]), "gaussian_distance": float(dcs[j]), "ggiou": float(ggs[j])}
        for j in range(len(anchors))
    ]


def save_scenario(scenario: Scenario, path, extra: dict | None = None) -> None:
    d = scenario.to_dict()
    if extra:
        d.update(extra)
    try:
        Path(path).write_text(json.dumps(d, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"{path}: cannot write scenario: {exc}") from exc


def load_scenario(path) -> Scenario:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    try:
        return Scenario.from_dict(raw)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
