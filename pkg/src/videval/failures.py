"""False-negative taxonomy: object cut off by the frame border, occluded, both, or other."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .geometry import Box, iou
from .ingest import GroundTruthFrame
from .matching import FrameMatchResult

CATEGORIES = ("edge_of_frame", "occluded", "both", "other")


def is_edge_of_frame(box: Box, eps: float = 1e-6) -> bool:
    return (min(box.x_min, box.y_min) <= eps
            or box.x_max >= 1.0 - eps
            or box.y_max >= 1.0 - eps)


def is_occluded(box: Box, others: Iterable[Box]) -> bool:
    """True if any other GT box in the frame overlaps with positive IOU."""
    return any(iou(box, o) > 0.0 for o in others)


def categorize(edge: bool, occluded: bool) -> str:
    if edge and occluded:
        return "both"
    if edge:
        return "edge_of_frame"
    if occluded:
        return "occluded"
    return "other"


@dataclass(frozen=True)
class FalseNegative:
    video_id: str
    frame_index: int
    object_index: int
    object_class: str
    box: Box
    category: str


@dataclass(frozen=True)
class FailureBreakdown:
    counts: dict
    marginal: dict  # non-exclusive: edge includes "both", occluded includes "both"
    per_video: dict
    items: tuple[FalseNegative, ...]
    eps: float

    @property
    def total(self) -> int:
        return len(self.items)

    @property
    def fractions(self) -> dict:
        n = self.total
        return {c: (self.counts[c] / n if n else 0.0) for c in CATEGORIES}

    def to_dict(self, include_items: bool = True) -> dict:
        d = {
            "total_fn": self.total,
            "counts": dict(self.counts),
            "fractions": self.fractions,
            "marginal_counts": dict(self.marginal),
            "per_video": {v: dict(c) for v, c in sorted(self.per_video.items())},
            "config": {"edge_eps": self.eps, "occlusion": "iou > 0 with any other GT box in frame",
                       "categories": "exclusive; 'both' is its own category"},
        }
        if include_items:
            d["items"] = [{"video_id": f.video_id, "frame_index": f.frame_index,
                           "object_index": f.object_index, "class": f.object_class,
                           "box": list(f.box.as_tuple()), "category": f.category} for f in self.items]
        return d

    def to_csv(self) -> str:
        """Bar-chart-ready table: category, count, fraction, marginal count."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["category", "count", "fraction", "marginal_count"])
        fr = self.fractions
        for c in CATEGORIES:
            w.writerow([c, self.counts[c], repr(fr[c]), self.marginal.get(c, "")])
        return buf.getvalue()


def classify_false_negatives(frame_matches: Sequence[FrameMatchResult], frames: Sequence[GroundTruthFrame],
                             eps: float = 1e-6) -> FailureBreakdown:
    gt = {f.key: f for f in frames}
    counts = dict.fromkeys(CATEGORIES, 0)
    per_video: dict[str, dict] = {}
    items = []
    for fm in frame_matches:
        if not fm.fn_indices:
            continue
        frame = gt[fm.key]
        for k in fm.fn_indices:
            box = frame.objects[k].box
            others = [o.box for j, o in enumerate(frame.objects) if j != k]
            cat = categorize(is_edge_of_frame(box, eps), is_occluded(box, others))
            counts[cat] += 1
            per_video.setdefault(fm.video_id, dict.fromkeys(CATEGORIES, 0))[cat] += 1
            items.append(FalseNegative(fm.video_id, fm.frame_index, k, frame.objects[k].object_class, box, cat))
    marginal = {"edge_of_frame": counts["edge_of_frame"] + counts["both"],
                "occluded": counts["occluded"] + counts["both"]}
    return FailureBreakdown(counts, marginal, per_video, tuple(items), eps)
