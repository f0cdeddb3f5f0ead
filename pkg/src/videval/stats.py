"""Dataset distribution statistics: box-center heatmap, box-area histogram, split tables."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geometry import Box, center
from .ingest import GroundTruthFrame, VideoManifest

UNTAGGED = "untagged"


def _boxes(annotations) -> list[Box]:
    out = []
    for item in annotations:
        if isinstance(item, GroundTruthFrame):
            out.extend(o.box for o in item.objects)
        else:
            out.append(item)
    return out


@dataclass(frozen=True)
class Histogram2D:
    """Counts indexed ``[x_bin, y_bin]`` over a ``grid x grid`` partition of the unit square."""

    counts: np.ndarray
    grid: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merge(self, other: "Histogram2D") -> "Histogram2D":
        if other.grid != self.grid:
            raise ValueError("cannot merge histograms with different grids")
        return Histogram2D(self.counts + other.counts, self.grid)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x_bin", "y_bin", "x_lo", "y_lo", "count"])
        for i in range(self.grid):
            for j in range(self.grid):
                w.writerow([i, j, repr(i / self.grid), repr(j / self.grid), int(self.counts[i, j])])
        return buf.getvalue()


@dataclass(frozen=True)
class Histogram1D:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merge(self, other: "Histogram1D") -> "Histogram1D":
        if not np.array_equal(self.edges, other.edges):
            raise ValueError("cannot merge histograms with different edges")
        return Histogram1D(self.edges, self.counts + other.counts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lo", "hi", "count"])
        for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c)])
        return buf.getvalue()


def _bin_index(v: float, g: int) -> int:
    # boundary values go to the higher bin; 1.0 folds into the last bin
    return min(int(np.floor(v * g)), g - 1)


def centroid_distribution(annotations: Iterable, grid: int = 50) -> Histogram2D:
    """Count box centers on a grid; accepts frames or bare boxes."""
    if grid < 1:
        raise ValueError("grid must be >= 1")
    counts = np.zeros((grid, grid), dtype=np.int64)
    for b in _boxes(annotations):
        cx, cy = center(b)
        counts[_bin_index(cx, grid), _bin_index(cy, grid)] += 1
    return Histogram2D(counts, grid)


def area_distribution(annotations: Iterable, edges: Sequence[float] | None = None) -> Histogram1D:
    """Histogram of normalized box area ``w*h``; 50 equal bins over [0, 1] by default."""
    edges = np.linspace(0.0, 1.0, 51) if edges is None else np.asarray(edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be strictly increasing with at least two values")
    areas = np.array([b.area for b in _boxes(annotations)], dtype=float)
    counts, _ = np.histogram(areas, bins=edges)
    return Histogram1D(edges, counts.astype(np.int64))


@dataclass(frozen=True)
class SplitRow:
    dimension: str  # "split" or "environment"
    tag: str
    videos: int
    frames: int
    boxes: int
    pct_videos: float
    pct_frames: float
    pct_boxes: float


def split_summary(manifests: Mapping[str, VideoManifest] | Sequence[VideoManifest],
                  annotations: Sequence[GroundTruthFrame] = ()) -> list[SplitRow]:
    """Per-tag video, frame and box counts with percentages.

    Frame counts come from the manifests' ``frame_count``; box counts from the
    annotations. Percentages are given weighted by videos, by frames and by
    boxes. Videos without a tag are grouped under ``"untagged"``.
    """
    if not isinstance(manifests, Mapping):
        manifests = {m.video_id: m for m in manifests}
    missing = sorted({f.video_id for f in annotations} - set(manifests))
    if missing:
        raise KeyError(f"videos missing from manifest: {', '.join(missing)}")
    boxes_per_video = dict.fromkeys(manifests, 0)
    for f in annotations:
        boxes_per_video[f.video_id] += len(f.objects)

    tot_v = len(manifests)
    tot_f = sum(m.frame_count for m in manifests.values())
    tot_b = sum(boxes_per_video.values())
    pct = lambda a, b: 100.0 * a / b if b else 0.0

    rows = []
    for dim, attr in (("split", "split_tag"), ("environment", "environment_tag")):
        groups: dict[str, list[VideoManifest]] = {}
        for m in manifests.values():
            groups.setdefault(getattr(m, attr) or UNTAGGED, []).append(m)
        for tag in sorted(groups):
            ms = groups[tag]
            v, fr = len(ms), sum(m.frame_count for m in ms)
            b = sum(boxes_per_video[m.video_id] for m in ms)
            rows.append(SplitRow(dim, tag, v, fr, b, pct(v, tot_v), pct(fr, tot_f), pct(b, tot_b)))
    return rows


def split_summary_to_json(rows: Sequence[SplitRow]) -> str:
    return json.dumps({"rows": [vars(r) for r in rows],
                       "weighting": ["videos", "frames", "boxes"]}, indent=2, sort_keys=True)
