"""Study configuration files.

A config is a JSON object with these keys, all optional::

    {
      "anchors": {"levels": [[8, 32], ...], "scales": [...], "ratios": [...],
                  "center_offset": 0.5, "clip": false},
      "assigners": [
        {"name": "iou", "metric": "iou", "pos_threshold": 0.5,
         "neg_threshold": 0.4, "force_match": true},
        {"name": "ggiou", "metric": {"ggiou": {"alpha": 0.3, "beta": 0.1667,
                                               "sigma_source": "overlap"}}}
      ],
      "loss": {"w_loc": 2.8, "lambda": 1.4, "smooth_l1_tau": 1.0},
      "bucket_edges": [1, 2, 3, 5]
    }

Image size is taken from each image or scenario, so ``image_width`` and
``image_height`` may be left out of ``anchors``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .anchors import AnchorGridSpec
from .assigner import AssignmentConfig
from .geometry import GGIoUParams
from .loss import LossConfig

__all__ = ["StudyConfig", "ConfigError", "load_config", "default_assigners", "DEFAULT_BUCKET_EDGES"]

DEFAULT_BUCKET_EDGES = (1.0, 2.0, 3.0, 5.0, math.inf)


class ConfigError(ValueError):
    pass


def default_assigners(params: GGIoUParams | None = None) -> list[AssignmentConfig]:
    """IoU and GGIoU assigners with thresholds (0.4, 0.5)."""
    return [
        AssignmentConfig(metric="iou", name="iou"),
        AssignmentConfig(metric=params or GGIoUParams(), name="ggiou"),
    ]


@dataclass
class StudyConfig:
    anchors: AnchorGridSpec = field(default_factory=AnchorGridSpec)
    assigners: list = field(default_factory=default_assigners)
    loss: LossConfig = field(default_factory=LossConfig)
    bucket_edges: tuple = DEFAULT_BUCKET_EDGES

    def __post_init__(self):
        names = [a.name for a in self.assigners]
        if not names:
            raise ConfigError("at least one assigner is required")
        if len(set(names)) != len(names):
            raise ConfigError(f"assigner names must be unique, got {names}")
        edges = tuple(float(e) for e in self.bucket_edges)
        if edges and edges[-1] != math.inf:
            edges = edges + (math.inf,)
        if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])) or edges[0] > 1:
            raise ConfigError(f"bucket edges must increase from at most 1, got {self.bucket_edges}")
        self.bucket_edges = edges

    @classmethod
    def from_dict(cls, d: dict) -> "StudyConfig":
        unknown = set(d) - {"anchors", "assigners", "loss", "bucket_edges"}
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        kw = {}
        try:
            if "anchors" in d:
                kw["anchors"] = AnchorGridSpec.from_dict(d["anchors"])
            if "assigners" in d:
                kw["assigners"] = [AssignmentConfig.from_dict(a) for a in d["assigners"]]
            if "loss" in d:
                kw["loss"] = LossConfig.from_dict(d["loss"])
            if "bucket_edges" in d:
                kw["bucket_edges"] = tuple(d["bucket_edges"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cls(**kw)

    def to_dict(self) -> dict:
        anchors = self.anchors.to_dict()
        anchors.pop("image_width")
        anchors.pop("image_height")
        return {
            "anchors": anchors,
            "assigners": [a.to_dict() for a in self.assigners],
            "loss": self.loss.to_dict(),
            "bucket_edges": [e for e in self.bucket_edges if e != math.inf],
        }


def load_config(path) -> StudyConfig:
    path = Path(path)
    try:
        with open(path) as f:
            raw = json.load(f)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    try:
        return StudyConfig.from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
