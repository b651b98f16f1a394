"""Minimal COCO-format annotation reader (boxes and categories only)."""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import Box

__all__ = ["Annotation", "AnnotationSet", "AnnotationError", "DegenerateBoxWarning", "load_coco_annotations"]

log = logging.getLogger(__name__)


class AnnotationError(ValueError):
    pass


class DegenerateBoxWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Annotation:
    image_id: int
    category_id: int
    box: Box
    ann_id: int | None = None


@dataclass
class AnnotationSet:
    images: dict = field(default_factory=dict)  # id -> (width, height)
    annotations: list = field(default_factory=list)
    categories: dict = field(default_factory=dict)  # id -> name
    n_dropped: int = 0

    def by_image(self) -> dict:
        """Annotations grouped per image, images in ascending id order."""
        out = {i: [] for i in sorted(self.images)}
        for ann in self.annotations:
            out[ann.image_id].append(ann)
        return out

    def category_name(self, cid) -> str:
        return self.categories.get(cid, str(cid))


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise AnnotationError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise AnnotationError(f"{where}: non-finite value {value!r}")
    return float(value)


def _require(obj, key: str, where: str):
    if not isinstance(obj, dict):
        raise AnnotationError(f"{where}: expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise AnnotationError(f"{where}: missing key {key!r}")
    return obj[key]


def load_coco_annotations(path) -> AnnotationSet:
    """Read images, categories and bounding boxes from a COCO JSON file.

    ``bbox`` entries ``[x, y, w, h]`` become corner boxes. Annotations with a
    non-positive width or height are dropped and reported with one
    :class:`DegenerateBoxWarning` each. ``iscrowd`` is ignored.

    Raises:
        AnnotationError: for unreadable files, invalid JSON, missing keys or
            references to unknown images, with the offending location.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise AnnotationError(f"{path}: cannot read annotations: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc

    where = str(path)
    data = AnnotationSet()
    for key in ("images", "annotations", "categories"):
        if not isinstance(_require(raw, key, where), list):
            raise AnnotationError(f"{where}: {key!r} must be an array")

    for i, img in enumerate(raw["images"]):
        loc = f"{where}: images[{i}]"
        iid = _require(img, "id", loc)
        w = _number(_require(img, "width", loc), f"{loc}.width")
        h = _number(_require(img, "height", loc), f"{loc}.height")
        if iid in data.images:
            raise AnnotationError(f"{loc}: duplicate image id {iid!r}")
        data.images[iid] = (w, h)

    for i, cat in enumerate(raw["categories"]):
        loc = f"{where}: categories[{i}]"
        data.categories[_require(cat, "id", loc)] = str(cat.get("name", _require(cat, "id", loc)))

    for i, ann in enumerate(raw["annotations"]):
        loc = f"{where}: annotations[{i}]"
        iid = _require(ann, "image_id", loc)
        if iid not in data.images:
            raise AnnotationError(f"{loc}: image_id {iid!r} is not listed in 'images'")
        bbox = _require(ann, "bbox", loc)
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise AnnotationError(f"{loc}.bbox: expected [x, y, w, h], got {bbox!r}")
        x, y, w, h = (_number(v, f"{loc}.bbox[{k}]") for k, v in enumerate(bbox))
        if not (w > 0 and h > 0):
            data.n_dropped += 1
            warnings.warn(f"{loc}: dropped bbox with non-positive size {bbox}", DegenerateBoxWarning,
                          stacklevel=2)
            continue
        data.annotations.append(
            Annotation(iid, ann.get("category_id", 0), Box(x, y, x + w, y + h), ann.get("id"))
        )
    log.info("loaded %d annotations on %d images from %s (%d dropped)",
             len(data.annotations), len(data.images), path, data.n_dropped)
    return data
