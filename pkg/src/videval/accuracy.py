"""Precision/recall curves, the AP family, mean IOU and operating-point selection."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import iou
from .ingest import Detection, GroundTruthFrame, canonical_class
from .matching import FrameMatchResult, match_all

logger = logging.getLogger(__name__)

AP_IOU_GRID = tuple(round(0.5 + 0.05 * k, 2) for k in range(10))
INTERPOLATIONS = ("none", "all-point", "voc11", "coco101")


class PRPoint(NamedTuple):
    confidence: float
    precision: float
    recall: float
    tp: int
    fp: int


@dataclass(frozen=True)
class PRCurve:
    """Cumulative precision/recall, one point per distinct confidence.

    Each point is the operating point of the cut ``confidence >= c``;
    detections sharing a confidence enter together.
    """

    points: tuple[PRPoint, ...]
    num_gt: int
    match_iou: float

    def __len__(self):
        return len(self.points)

    @property
    def confidences(self) -> np.ndarray:
        return np.array([p.confidence for p in self.points])

    @property
    def precisions(self) -> np.ndarray:
        return np.array([p.precision for p in self.points])

    @property
    def recalls(self) -> np.ndarray:
        return np.array([p.recall for p in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["confidence", "precision", "recall"])
        for p in self.points:
            w.writerow([repr(p.confidence), repr(p.precision), repr(p.recall)])
        return buf.getvalue()


def _count_gt(frames: Sequence[GroundTruthFrame]) -> int:
    return sum(len(f.objects) for f in frames)


def curve_from_matches(matches: Sequence[FrameMatchResult], num_gt: int, match_iou: float) -> PRCurve:
    """Accumulate a PR curve from matches made with no confidence cut."""
    if num_gt < 1:
        raise ValueError("recall is undefined without ground-truth boxes")
    scored = [(p.detection.confidence, 1) for m in matches for p in m.tp_pairs]
    scored += [(d.confidence, 0) for m in matches for d in m.fp_detections]
    scored.sort(key=lambda s: -s[0])
    points, tp, fp = [], 0, 0
    for k, (conf, is_tp) in enumerate(scored):
        tp += is_tp
        fp += 1 - is_tp
        if k + 1 < len(scored) and scored[k + 1][0] == conf:
            continue
        points.append(PRPoint(conf, tp / (tp + fp), tp / num_gt, tp, fp))
    return PRCurve(tuple(points), num_gt, match_iou)


def pr_curve(dets: Sequence[Detection], frames: Sequence[GroundTruthFrame], match_iou: float = 0.5) -> PRCurve:
    """Rank all detections by confidence and sweep the cut downwards.

    Matching is greedy within each frame in rank order, so a detection's
    TP/FP label does not depend on where the cut falls.
    """
    num_gt = _count_gt(frames)
    if num_gt < 1:
        raise ValueError("recall is undefined without ground-truth boxes")
    return curve_from_matches(match_all(dets, frames, match_iou, 0.0), num_gt, match_iou)


def average_precision(curve: PRCurve, interpolation: str = "none") -> float:
    """Recall-increase-weighted mean of precision along the curve.

    ``"none"`` is the uninterpolated sum of ``(r_i - r_{i-1}) * p_i`` with
    ``r_0 = 0``. The other modes exist for comparison with other toolkits:
    ``"all-point"`` uses the monotone precision envelope, ``"voc11"`` and
    ``"coco101"`` sample that envelope at 11 / 101 recall levels.
    """
    if interpolation not in INTERPOLATIONS:
        raise ValueError(f"unknown interpolation {interpolation!r}")
    if not curve.points:
        return 0.0
    if interpolation == "none":
        ap, prev_r = 0.0, 0.0
        for p in curve.points:
            ap += (p.recall - prev_r) * p.precision
            prev_r = p.recall
        return ap

    rec = curve.recalls
    envelope = np.maximum.accumulate(curve.precisions[::-1])[::-1]
    if interpolation == "all-point":
        steps = np.diff(np.concatenate([[0.0], rec]))
        return float(np.sum(steps * envelope))
    levels = np.linspace(0.0, 1.0, 11 if interpolation == "voc11" else 101)
    idx = np.searchsorted(rec, levels, side="left")
    sampled = np.where(idx < len(rec), envelope[np.minimum(idx, len(rec) - 1)], 0.0)
    return float(np.mean(sampled))


class APSuite(NamedTuple):
    ap50: float
    ap75: float
    ap_range: float


def ap_suite(dets: Sequence[Detection], frames: Sequence[GroundTruthFrame],
             interpolation: str = "none") -> APSuite:
    """AP at IOU 0.50 and 0.75, and the mean over 0.50:0.95 in steps of 0.05."""
    aps = {t: average_precision(pr_curve(dets, frames, t), interpolation) for t in AP_IOU_GRID}
    return APSuite(aps[0.5], aps[0.75], float(np.mean([aps[t] for t in AP_IOU_GRID])))


class ThresholdChoice(NamedTuple):
    confidence: float
    f1: float
    precision: float
    recall: float
    degenerate: bool


def select_confidence_threshold(curve: PRCurve) -> ThresholdChoice:
    """Operating confidence that maximizes F1; ties go to the higher confidence.

    When F1 is zero everywhere (no true positives) the highest confidence is
    returned and the choice is flagged ``degenerate``.
    """
    if not curve.points:
        raise ValueError("cannot select a threshold from an empty curve")
    best, best_f1 = curve.points[0], -1.0
    for p in curve.points:  # descending confidence: strict '>' keeps the higher one on ties
        denom = p.precision + p.recall
        f1 = 2 * p.precision * p.recall / denom if denom > 0 else 0.0
        if f1 > best_f1:
            best, best_f1 = p, f1
    degenerate = best_f1 <= 0.0
    if degenerate:
        logger.warning("no true positives at any threshold; operating point is degenerate")
    return ThresholdChoice(best.confidence, best_f1, best.precision, best.recall, degenerate)


class MeanIOU(NamedTuple):
    value: float
    defined: bool
    mode: str


def mean_iou(matches: Sequence[FrameMatchResult], frames: Sequence[GroundTruthFrame] = (),
             mode: str = "tp") -> MeanIOU:
    """Average IOU at an operating point.

    ``"tp"`` averages over true-positive pairs. ``"best-per-gt"`` averages,
    over every GT box, its best IOU with any same-frame detection that passed
    the confidence cut (0 when there is none); it needs ``frames``.
    """
    if mode == "tp":
        vals = [p.iou for m in matches for p in m.tp_pairs]
    elif mode == "best-per-gt":
        kept: dict[tuple[str, int], list[Detection]] = {}
        for m in matches:
            kept[m.key] = [p.detection for p in m.tp_pairs] + list(m.fp_detections)
        vals = []
        for f in frames:
            for o in f.objects:
                c = canonical_class(o.object_class)
                vals.append(max((iou(d.box, o.box) for d in kept.get(f.key, [])
                                 if canonical_class(d.object_class) == c), default=0.0))
    else:
        raise ValueError(f"unknown mean-IOU mode {mode!r}")
    if not vals:
        return MeanIOU(0.0, False, mode)
    return MeanIOU(float(np.mean(vals)), True, mode)


@dataclass(frozen=True)
class EvaluationReport:
    ap50: float
    ap75: float
    ap_range: float
    mean_iou: float
    mean_iou_defined: bool
    confidence_threshold: float
    threshold_degenerate: bool
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    config: dict = field(default_factory=dict)
    per_class_ap: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ap50": self.ap50, "ap75": self.ap75, "ap_range": self.ap_range,
            "mean_iou": self.mean_iou if self.mean_iou_defined else None,
            "mean_iou_defined": self.mean_iou_defined,
            "confidence_threshold": self.confidence_threshold,
            "threshold_degenerate": self.threshold_degenerate,
            "precision": self.precision, "recall": self.recall,
            "counts": {"tp": self.tp, "fp": self.fp, "fn": self.fn},
            "per_class_ap": dict(sorted(self.per_class_ap.items())),
            "config": self.config,
        }


def evaluate_accuracy(dets: Sequence[Detection], frames: Sequence[GroundTruthFrame], *,
                      conf_threshold: float | str = "auto", match_iou: float = 0.5,
                      interpolation: str = "none", mean_iou_mode: str = "tp"
                      ) -> tuple[EvaluationReport, PRCurve, list[FrameMatchResult]]:
    """Full accuracy evaluation; also returns the curve and the operating-point matches."""
    curve = pr_curve(dets, frames, match_iou)
    suite = ap_suite(dets, frames, interpolation)
    degenerate = False
    if conf_threshold == "auto":
        if curve.points:
            choice = select_confidence_threshold(curve)
            threshold, degenerate = choice.confidence, choice.degenerate
        else:
            threshold, degenerate = 1.0, True
    else:
        threshold = float(conf_threshold)
        if not 0.0 <= threshold <= 1.0:
            raise ValueError("confidence threshold must lie in [0, 1]")

    matches = match_all(dets, frames, match_iou, threshold)
    tp = sum(len(m.tp_pairs) for m in matches)
    fp = sum(len(m.fp_detections) for m in matches)
    fn = sum(len(m.fn_indices) for m in matches)
    miou = mean_iou(matches, frames, mean_iou_mode)

    per_class = {}
    classes = sorted({canonical_class(o.object_class) for f in frames for o in f.objects})
    if len(classes) > 1:
        for c in classes:
            cf = [GroundTruthFrame(f.video_id, f.frame_index,
                                   tuple(o for o in f.objects if canonical_class(o.object_class) == c))
                  for f in frames]
            cd = [d for d in dets if canonical_class(d.object_class) == c]
            per_class[c] = average_precision(pr_curve(cd, cf, match_iou), interpolation)

    report = EvaluationReport(
        ap50=suite.ap50, ap75=suite.ap75, ap_range=suite.ap_range,
        mean_iou=miou.value, mean_iou_defined=miou.defined,
        confidence_threshold=threshold, threshold_degenerate=degenerate,
        precision=tp / (tp + fp) if tp + fp else 0.0,
        recall=tp / (tp + fn) if tp + fn else 0.0,
        tp=tp, fp=fp, fn=fn,
        config={
            "ap_interpolation": interpolation,
            "ap_iou_grid": list(AP_IOU_GRID),
            "iou_comparison": ">=",
            "matcher": "greedy, descending confidence; ties by best IOU then input order",
            "match_iou": match_iou,
            "threshold_mode": "auto-f1" if conf_threshold == "auto" else "fixed",
            "threshold_tie_break": "higher confidence",
            "mean_iou_mode": mean_iou_mode,
        },
        per_class_ap=per_class,
    )
    return report, curve, matches
