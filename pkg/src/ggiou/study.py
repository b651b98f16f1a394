"""Assignment studies over scenarios or annotation sets, and their reports."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .anchors import AnchorGridSpec, generate_anchors
from .assigner import assign, positives_per_gt
from .coco import AnnotationSet
from .config import DEFAULT_BUCKET_EDGES
from .pairwise import metric_matrix
from .scenarios import Scenario, _aspect

__all__ = [
    "StudyReport",
    "EmptyReportError",
    "run_assignment_study",
    "emit_report",
    "load_report",
    "report_schema",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("config", "bucket", "lo", "hi", "n_gts", "total_positives", "mean_positives", "n_single")


class EmptyReportError(ValueError):
    pass


def _r6(x) -> float | None:
    """Round to 6 significant digits; infinities become None."""
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.6g}")


@dataclass
class StudyReport:
    """JSON-native study results.

    ``configs`` lists the assigner configs, ``buckets`` has one row per
    (config, aspect-ratio bucket), ``per_gt`` one record per truth box and
    ``summary`` the per-config and per-category aggregates.
    """

    configs: list
    buckets: list
    per_gt: list
    summary: dict

    def to_dict(self) -> dict:
        return {"configs": self.configs, "buckets": self.buckets,
                "per_gt": self.per_gt, "summary": self.summary}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "StudyReport":
        return cls(d["configs"], d["buckets"], d["per_gt"], d["summary"])

    def positives(self, config: str) -> np.ndarray:
        return np.array([g["positives"][config] for g in self.per_gt], dtype=np.int64)


def _bucket_label(lo: float, hi: float) -> str:
    return f"[{lo:g},{'inf' if math.isinf(hi) else format(hi, 'g')})"


def _bucket_of(ratio: float, edges) -> int:
    for i in range(len(edges) - 1):
        if edges[i] <= ratio < edges[i + 1]:
            return i
    return len(edges) - 2 if ratio >= edges[-1] else 0


def _units(data, anchor_spec):
    """Yield ``(image_id, anchors, gts, categories, ratios)`` per image in input order.

    Scenario boxes use their declared aspect-ratio tags; annotation boxes
    get ``max(w/h, h/w)``.
    """
    if isinstance(data, Scenario):
        yield None, data.anchor_boxes(anchor_spec), data.gts, [None] * len(data.gts), list(data.tags)
        return
    if isinstance(data, (list, tuple)):
        for sc in data:
            yield sc.name, sc.anchor_boxes(anchor_spec), sc.gts, [None] * len(sc.gts), list(sc.tags)
        return
    spec = anchor_spec or AnchorGridSpec()
    for iid, anns in data.by_image().items():
        if not anns:
            continue
        w, h = data.images[iid]
        gts = np.array([tuple(a.box) for a in anns], dtype=np.float64)
        yield iid, generate_anchors(spec.with_image(w, h)), gts, [a.category_id for a in anns], \
            [_aspect(b) for b in gts]


def _count(anchors, gts, configs) -> dict:
    matrices = {}
    out = {}
    for cfg in configs:
        key = repr(cfg.metric)
        if key not in matrices:
            matrices[key] = metric_matrix(anchors, gts, cfg.metric)
        out[cfg.name] = positives_per_gt(assign(matrices[key], cfg), len(gts))
    return out


def run_assignment_study(data, anchor_spec: AnchorGridSpec | None = None,
                         configs: list | None = None, bucket_edges=DEFAULT_BUCKET_EDGES,
                         workers: int = 1) -> StudyReport:
    """Count positives per truth box under each assigner config.

    Args:
        data: a :class:`Scenario`, a list of scenarios (one "image" each,
            identified by name) or an :class:`AnnotationSet`.
        anchor_spec: anchor layout; its image size is replaced per image.
            Scenarios with explicit anchors ignore it.
        configs: assigner configs with unique names; scenarios fall back to
            their own.
        bucket_edges: increasing aspect-ratio edges ending in ``inf``.
        workers: images are processed on this many threads and merged in
            input order.

    Raises:
        EmptyReportError: if there are no truth boxes.
    """
    if configs is None:
        if isinstance(data, Scenario):
            configs = data.configs
        elif isinstance(data, (list, tuple)) and data:
            configs = data[0].configs
        else:
            raise ValueError("configs are required for annotation sets")
    configs = list(configs)
    if not configs:
        raise ValueError("at least one assigner config is required")
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ValueError(f"config names must be unique, got {names}")
    edges = [float(e) for e in bucket_edges]
    if not math.isinf(edges[-1]):
        edges.append(math.inf)

    units = list(_units(data, anchor_spec))
    if not units:
        raise EmptyReportError("no truth boxes to study")
    jobs = [(u[1], u[2]) for u in units]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda job: _count(job[0], job[1], configs), jobs))
    else:
        counts = [_count(a, g, configs) for a, g in jobs]

    cat_name = data.category_name if isinstance(data, AnnotationSet) else (lambda c: None)
    per_gt = []
    for (iid, _, gts, cats, ratios), cnt in zip(units, counts):
        for k, box in enumerate(gts):
            ratio = ratios[k]
            b = _bucket_of(ratio, edges)
            per_gt.append({
                "image_id": iid,
                "gt_index": len(per_gt),
                "category": cat_name(cats[k]),
                "box": [_r6(v) for v in box],
                "aspect_ratio": _r6(ratio),
                "bucket": _bucket_label(edges[b], edges[b + 1]),
                "positives": {c.name: int(cnt[c.name][k]) for c in configs},
                "_bucket_index": b,
            })
    if not per_gt:
        raise EmptyReportError("no truth boxes to study")

    bucket_idx = np.array([g.pop("_bucket_index") for g in per_gt])
    buckets = []
    per_config = {}
    for cfg in configs:
        pos = np.array([g["positives"][cfg.name] for g in per_gt])
        for b in range(len(edges) - 1):
            sel = pos[bucket_idx == b]
            buckets.append({
                "config": cfg.name,
                "bucket": _bucket_label(edges[b], edges[b + 1]),
                "lo": _r6(edges[b]),
                "hi": _r6(edges[b + 1]),
                "n_gts": int(sel.size),
                "total_positives": int(sel.sum()),
                "mean_positives": _r6(sel.mean()) if sel.size else None,
                "n_single": int((sel == 1).sum()),
            })
        per_config[cfg.name] = {
            "mean_positives": _r6(pos.mean()),
            "median_positives": _r6(np.median(pos)),
            "min_positives": int(pos.min()),
            "n_single": int((pos == 1).sum()),
            "frac_single": _r6((pos == 1).mean()),
        }

    per_category = {}
    if isinstance(data, AnnotationSet):
        cats = sorted({g["category"] for g in per_gt})
        for c in cats:
            rows = [g for g in per_gt if g["category"] == c]
            per_category[c] = {
                "n_gts": len(rows),
                "mean_positives": {cfg.name: _r6(np.mean([g["positives"][cfg.name] for g in rows]))
                                   for cfg in configs},
            }

    summary = {
        "n_gts": len(per_gt),
        "n_images": len(units),
        "per_config": per_config,
        "per_category": per_category,
    }
    cfg_dicts = [_round_config(c.to_dict()) for c in configs]
    return StudyReport(cfg_dicts, buckets, per_gt, summary)


def _round_config(d):
    if isinstance(d, dict):
        return {k: _round_config(v) for k, v in d.items()}
    if isinstance(d, float):
        return _r6(d)
    return d


def report_schema() -> dict:
    return json.loads(resources.files("ggiou").joinpath("schemas/report.schema.json").read_text())


def _csv_text(report: StudyReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.buckets:
        writer.writerow(["" if row[c] is None else row[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def emit_report(report: StudyReport, fmt: str = "json", path=None) -> str:
    """Serialize a report as JSON or CSV, writing it to ``path`` when given.

    CSV has one row per (config, bucket). Returns the serialized text.

    Raises:
        OSError: naming the path when the file cannot be written.
    """
    fmt = fmt.lower()
    if fmt == "json":
        text = report.to_json()
    elif fmt == "csv":
        text = _csv_text(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"{path}: cannot write report: {exc}") from exc
    return text


def load_report(path) -> StudyReport:
    return StudyReport.from_dict(json.loads(Path(path).read_text()))
