"""Dense RetinaNet-style anchor tiling over a feature pyramid."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

__all__ = ["AnchorGridSpec", "generate_anchors", "anchor_count"]

RETINANET_LEVELS = ((8, 32.0), (16, 64.0), (32, 128.0), (64, 256.0), (128, 512.0))
RETINANET_SCALES = (1.0, 2.0 ** (1.0 / 3.0), 2.0 ** (2.0 / 3.0))
RETINANET_RATIOS = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class AnchorGridSpec:
    """Anchor layout for one image.

    Attributes:
        image_width: image width in pixels.
        image_height: image height in pixels.
        levels: ``(stride, base_size)`` per pyramid level, strides increasing.
        scales: multipliers applied to ``base_size``.
        ratios: aspect ratios defined as height / width.
        center_offset: cell-relative anchor center, 0.5 is the cell middle.
        clip: clip anchors to the image; off by default so counts stay closed-form.
    """

    image_width: float = 512
    image_height: float = 512
    levels: tuple = RETINANET_LEVELS
    scales: tuple = RETINANET_SCALES
    ratios: tuple = RETINANET_RATIOS
    center_offset: float = 0.5
    clip: bool = False

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple((float(s), float(b)) for s, b in self.levels))
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        if not (self.image_width > 0 and self.image_height > 0):
            raise ValueError(f"image size must be positive, got {self.image_width}x{self.image_height}")
        if not self.levels:
            raise ValueError("at least one pyramid level is required")
        strides = [s for s, _ in self.levels]
        if any(s < 1 for s in strides) or any(b <= 0 for _, b in self.levels):
            raise ValueError("strides must be >= 1 and base sizes positive")
        if any(s2 <= s1 for s1, s2 in zip(strides, strides[1:])):
            raise ValueError(f"strides must be strictly increasing, got {strides}")
        if not self.scales or not self.ratios:
            raise ValueError("scales and ratios must be non-empty")
        if any(v <= 0 for v in self.scales + self.ratios):
            raise ValueError("scales and ratios must be positive")
        if not 0.0 <= self.center_offset <= 1.0:
            raise ValueError("center_offset must lie in [0, 1]")

    def with_image(self, width: float, height: float) -> "AnchorGridSpec":
        return replace(self, image_width=width, image_height=height)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["levels"] = [list(lv) for lv in self.levels]
        d["scales"] = list(self.scales)
        d["ratios"] = list(self.ratios)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AnchorGridSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown anchor spec field(s): {sorted(unknown)}")
        return cls(**d)


def _grid(spec: AnchorGridSpec, stride: float) -> tuple[int, int]:
    return math.ceil(spec.image_width / stride), math.ceil(spec.image_height / stride)


def anchor_count(spec: AnchorGridSpec) -> int:
    per_cell = len(spec.scales) * len(spec.ratios)
    return sum(nx * ny * per_cell for nx, ny in (_grid(spec, s) for s, _ in spec.levels))


def generate_anchors(spec: AnchorGridSpec) -> np.ndarray:
    """Tile anchors for every level, position, scale and ratio.

    Ordering is level-major, then row-major over positions (y outer, x
    inner), then scale-major over ``scales x ratios``. An anchor with scale
    ``s`` and ratio ``r`` is ``base*s/sqrt(r)`` wide and ``base*s*sqrt(r)``
    tall, so its area is ``(base*s)**2`` for every ratio.

    Returns:
        ``(K, 4)`` float64 array of corner boxes.
    """
    out = []
    sr = np.sqrt(np.asarray(spec.ratios))
    for stride, base in spec.levels:
        sizes = base * np.asarray(spec.scales)[:, None]
        ws = (sizes / sr[None, :]).ravel()
        hs = (sizes * sr[None, :]).ravel()
        nx, ny = _grid(spec, stride)
        cx = (np.arange(nx) + spec.center_offset) * stride
        cy = (np.arange(ny) + spec.center_offset) * stride
        cyy, cxx = np.meshgrid(cy, cx, indexing="ij")
        cxx = cxx.reshape(-1, 1)
        cyy = cyy.reshape(-1, 1)
        level = np.stack(
            [cxx - ws / 2, cyy - hs / 2, cxx + ws / 2, cyy + hs / 2], axis=-1
        ).reshape(-1, 4)
        out.append(level)
    anchors = np.concatenate(out, axis=0)
    if spec.clip:
        anchors[:, 0::2] = np.clip(anchors[:, 0::2], 0, spec.image_width)
        anchors[:, 1::2] = np.clip(anchors[:, 1::2], 0, spec.image_height)
    return anchors
