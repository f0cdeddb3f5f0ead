"""Temporal stability of detections along GT tracklets: translation, scale/aspect, fragmentation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .geometry import center
from .matching import FrameMatchResult
from .tracklets import Tracklet, attach_detections

MIN_MATCHED = 2


def _pstd(values: Sequence[float]) -> float:
    # population standard deviation (divide by n)
    return float(np.std(np.asarray(values, dtype=float)))


def _matched(t: Tracklet):
    return [(g, d) for g, d in zip(t.boxes, t.detections) if d is not None]


def center_offsets(t: Tracklet) -> tuple[np.ndarray, np.ndarray]:
    """Per matched frame, detection center minus GT center along x and y."""
    dx, dy = [], []
    for g, d in _matched(t):
        (xg, yg), (xd, yd) = center(g), center(d.box)
        dx.append(xd - xg)
        dy.append(yd - yg)
    return np.array(dx), np.array(dy)


def translation_error(t: Tracklet) -> float | None:
    """e_c = pstd(x_d - x_g) + pstd(y_d - y_g) over matched frames.

    Returns None when fewer than two frames carry a matched detection.
    """
    if t.matched_count < MIN_MATCHED:
        return None
    dx, dy = center_offsets(t)
    return _pstd(dx) + _pstd(dy)


def scale_ratios(t: Tracklet) -> np.ndarray:
    return np.array([math.sqrt(d.box.area / g.area) for g, d in _matched(t)])


def aspect_ratios(t: Tracklet) -> np.ndarray:
    return np.array([d.box.aspect_ratio / g.aspect_ratio for g, d in _matched(t)])


def scale_error(t: Tracklet) -> float | None:
    if t.matched_count < MIN_MATCHED:
        return None
    return _pstd(scale_ratios(t))


def aspect_error(t: Tracklet) -> float | None:
    if t.matched_count < MIN_MATCHED:
        return None
    return _pstd(aspect_ratios(t))


def scale_aspect_error(t: Tracklet) -> float | None:
    """e_sr = e_s + e_r; None below two matched detections."""
    if t.matched_count < MIN_MATCHED:
        return None
    return scale_error(t) + aspect_error(t)


def fragment_count(t: Tracklet) -> int:
    """Detected/undetected status changes between adjacent frames."""
    s = t.detected
    return sum(a != b for a, b in zip(s, s[1:]))


def fragmentation_ratio(t: Tracklet) -> float | None:
    if t.length < 2:
        return None
    return fragment_count(t) / (t.length - 1)


def fragmentation_error(tracklets: Iterable[Tracklet]) -> float | None:
    """Mean of f_t / (l_t - 1) over tracklets of length >= 2 (None if there are none)."""
    vals = [r for r in (fragmentation_ratio(t) for t in tracklets) if r is not None]
    return float(np.mean(vals)) if vals else None


@dataclass(frozen=True)
class TrackletStability:
    video_id: str
    tracklet_id: int
    length: int
    matched_count: int
    translation: float | None
    scale: float | None
    aspect: float | None
    scale_aspect: float | None
    fragments: int
    fragmentation: float | None


@dataclass(frozen=True)
class StabilityReport:
    translation_error: float | None
    scale_aspect_error: float | None
    fragmentation_error: float | None
    n_translation: int
    n_scale_aspect: int
    n_fragmentation: int
    excluded_few_matches: int  # fewer than two matched detections
    excluded_single_frame: int  # l_t = 1
    per_tracklet: tuple[TrackletStability, ...] = ()
    config: dict = field(default_factory=dict)

    def to_dict(self, include_tracklets: bool = False) -> dict:
        d = {
            "translation_error": self.translation_error,
            "scale_aspect_error": self.scale_aspect_error,
            "fragmentation_error": self.fragmentation_error,
            "defined": {
                "translation_error": self.translation_error is not None,
                "scale_aspect_error": self.scale_aspect_error is not None,
                "fragmentation_error": self.fragmentation_error is not None,
            },
            "n": {"translation_error": self.n_translation,
                  "scale_aspect_error": self.n_scale_aspect,
                  "fragmentation_error": self.n_fragmentation},
            "excluded": {"fewer_than_two_matched": self.excluded_few_matches,
                         "single_frame": self.excluded_single_frame},
            "config": self.config,
        }
        if include_tracklets:
            d["tracklets"] = [vars(t) for t in self.per_tracklet]
        return d

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["video_id", "tracklet_id", "l_t", "matched_count", "e_c", "e_s", "e_r", "e_sr", "f_t"])
        fmt = lambda v: "" if v is None else repr(v)
        for t in self.per_tracklet:
            w.writerow([t.video_id, t.tracklet_id, t.length, t.matched_count, fmt(t.translation),
                        fmt(t.scale), fmt(t.aspect), fmt(t.scale_aspect), t.fragments])
        return buf.getvalue()


def _mean(vals):
    return float(np.mean(vals)) if vals else None


def stability_report(tracklets: Sequence[Tracklet], matches: Sequence[FrameMatchResult] | None = None,
                     *, conf_threshold: float | None = None) -> StabilityReport:
    """Aggregate the three stability errors over a set of tracklets.

    If ``matches`` is given the detections are attached first; otherwise the
    tracklets must already carry them. A metric with no eligible tracklet is
    reported as None.
    """
    if matches is not None:
        tracklets = attach_detections(tracklets, matches)
    rows = []
    for t in tracklets:
        rows.append(TrackletStability(
            video_id=t.video_id, tracklet_id=t.tracklet_id, length=t.length,
            matched_count=t.matched_count, translation=translation_error(t),
            scale=scale_error(t), aspect=aspect_error(t), scale_aspect=scale_aspect_error(t),
            fragments=fragment_count(t), fragmentation=fragmentation_ratio(t)))
    ec = [r.translation for r in rows if r.translation is not None]
    esr = [r.scale_aspect for r in rows if r.scale_aspect is not None]
    fr = [r.fragmentation for r in rows if r.fragmentation is not None]
    return StabilityReport(
        translation_error=_mean(ec),
        scale_aspect_error=_mean(esr),
        fragmentation_error=_mean(fr),
        n_translation=len(ec), n_scale_aspect=len(esr), n_fragmentation=len(fr),
        excluded_few_matches=sum(r.matched_count < MIN_MATCHED for r in rows),
        excluded_single_frame=sum(r.length < 2 for r in rows),
        per_tracklet=tuple(rows),
        config={
            "sigma": "population (ddof=0)",
            "min_matched_detections": MIN_MATCHED,
            "fragmentation_initial_status_counts": False,
            "fragmentation_includes_unmatched_tracklets": True,
            "operating_confidence_threshold": conf_threshold,
        },
    )
