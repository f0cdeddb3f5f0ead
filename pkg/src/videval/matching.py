"""Per-frame greedy assignment of detections to ground truth."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .geometry import iou
from .ingest import Detection, GroundTruthFrame, canonical_class


@dataclass(frozen=True)
class MatchPair:
    detection: Detection
    gt_index: int  # index into GroundTruthFrame.objects
    iou: float


@dataclass(frozen=True)
class FrameMatchResult:
    video_id: str
    frame_index: int
    tp_pairs: tuple[MatchPair, ...]
    fp_detections: tuple[Detection, ...]
    fn_indices: tuple[int, ...]
    match_iou: float
    conf_threshold: float

    @property
    def key(self) -> tuple[str, int]:
        return (self.video_id, self.frame_index)


def match_frame(dets: Sequence[Detection], frame: GroundTruthFrame, match_iou: float = 0.5,
                conf_threshold: float = 0.0) -> FrameMatchResult:
    """Greedy confidence-ordered matching within a single frame.

    Detections below ``conf_threshold`` are discarded. The rest are visited
    by descending confidence (ties: higher best-IOU first, then input order);
    each takes the unclaimed same-class GT box with the highest IOU, provided
    that IOU is at least ``match_iou``. Leftover GT boxes are false negatives.
    """
    if not (0.0 <= match_iou <= 1.0 and 0.0 <= conf_threshold <= 1.0):
        raise ValueError("thresholds must lie in [0, 1]")
    for d in dets:
        if d.key != frame.key:
            raise ValueError(f"detection for {d.key} passed with frame {frame.key}")

    gt_cls = [canonical_class(o.object_class) for o in frame.objects]
    kept = [d for d in dets if d.confidence >= conf_threshold]
    ious = [[iou(d.box, o.box) if canonical_class(d.object_class) == c else -1.0
             for o, c in zip(frame.objects, gt_cls)] for d in kept]
    best = [max(row, default=-1.0) for row in ious]
    order = sorted(range(len(kept)), key=lambda i: (-kept[i].confidence, -best[i], i))

    claimed: set[int] = set()
    tp, fp = [], []
    for i in order:
        pick, pick_iou = -1, -1.0
        for j, v in enumerate(ious[i]):
            if j not in claimed and v > pick_iou:
                pick, pick_iou = j, v
        if pick >= 0 and pick_iou >= match_iou:
            claimed.add(pick)
            tp.append(MatchPair(kept[i], pick, pick_iou))
        else:
            fp.append(kept[i])
    fn = tuple(j for j in range(len(frame.objects)) if j not in claimed)
    return FrameMatchResult(frame.video_id, frame.frame_index, tuple(tp), tuple(fp), fn,
                            match_iou, conf_threshold)


def group_detections(dets: Iterable[Detection]) -> dict[tuple[str, int], list[Detection]]:
    out: dict[tuple[str, int], list[Detection]] = {}
    for d in dets:
        out.setdefault(d.key, []).append(d)
    return out


def match_all(dets: Sequence[Detection], frames: Sequence[GroundTruthFrame], match_iou: float = 0.5,
              conf_threshold: float = 0.0) -> list[FrameMatchResult]:
    """Match every frame of a dataset.

    Detections on frames that have no annotation file are matched against an
    empty frame, so they count as false positives. Results are ordered by
    (video_id, frame_index).
    """
    by_frame = group_detections(dets)
    gt = {f.key: f for f in frames}
    if len(gt) != len(frames):
        raise ValueError("duplicate (video_id, frame_index) among ground-truth frames")
    keys = sorted(set(gt) | set(by_frame))
    return [match_frame(by_frame.get(k, []), gt.get(k) or GroundTruthFrame(*k), match_iou, conf_threshold)
            for k in keys]
