"""Synthetic videos and detector streams for demos and property tests."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .geometry import Box
from .ingest import Detection, GroundTruthFrame, GroundTruthObject


def _clip_box(cx, cy, w, h) -> Box | None:
    b = Box(max(0.0, cx - w / 2), max(0.0, cy - h / 2), min(1.0, cx + w / 2), min(1.0, cy + h / 2))
    return b if b.is_valid() else None


def random_box(rng: np.random.Generator, min_size: float = 0.05, max_size: float = 0.4) -> Box:
    w, h = rng.uniform(min_size, max_size, 2)
    x0 = rng.uniform(0.0, 1.0 - w)
    y0 = rng.uniform(0.0, 1.0 - h)
    return Box(x0, y0, x0 + w, y0 + h)


def random_video(rng: np.random.Generator, video_id: str = "synth", n_frames: int = 20,
                 n_objects: int = 2, step: float = 0.01, appear_prob: float = 0.9,
                 object_class: str = "diver") -> list[GroundTruthFrame]:
    """Objects random-walk across the frame; each is visible with ``appear_prob`` per frame.

    Objects may overlap each other and touch the border (boxes are clipped
    to the frame), so the result exercises occlusion and edge cases.
    """
    state = [[*rng.uniform(0.1, 0.9, 2), *rng.uniform(0.05, 0.35, 2)] for _ in range(n_objects)]
    frames = []
    for fi in range(n_frames):
        objs = []
        for s in state:
            s[0] = float(np.clip(s[0] + rng.normal(0, step), 0.0, 1.0))
            s[1] = float(np.clip(s[1] + rng.normal(0, step), 0.0, 1.0))
            s[2] = float(np.clip(s[2] * np.exp(rng.normal(0, step)), 0.02, 0.6))
            s[3] = float(np.clip(s[3] * np.exp(rng.normal(0, step)), 0.02, 0.6))
            if rng.random() < appear_prob:
                b = _clip_box(*s)
                if b is not None:
                    objs.append(GroundTruthObject(object_class, b))
        frames.append(GroundTruthFrame(video_id, fi, tuple(objs)))
    return frames


def perfect_detections(frames: Sequence[GroundTruthFrame], confidence: float = 1.0) -> list[Detection]:
    return [Detection(f.video_id, f.frame_index, o.object_class, confidence, o.box)
            for f in frames for o in f.objects]


def noisy_detections(rng: np.random.Generator, frames: Sequence[GroundTruthFrame], *,
                     center_sigma: float = 0.01, scale_sigma: float = 0.05, miss_prob: float = 0.1,
                     fp_per_frame: float = 0.2, fp_class: str = "diver") -> list[Detection]:
    """Jittered copies of GT boxes plus Poisson false positives, with random confidences.

    True detections draw confidences from Beta(5, 2), false positives from
    Beta(2, 5), so the ranking carries signal.
    """
    out = []
    for f in frames:
        for o in f.objects:
            if rng.random() < miss_prob:
                continue
            b = o.box
            cx = (b.x_min + b.x_max) / 2 + rng.normal(0, center_sigma)
            cy = (b.y_min + b.y_max) / 2 + rng.normal(0, center_sigma)
            w = b.width * np.exp(rng.normal(0, scale_sigma))
            h = b.height * np.exp(rng.normal(0, scale_sigma))
            jb = _clip_box(cx, cy, w, h)
            if jb is not None:
                out.append(Detection(f.video_id, f.frame_index, o.object_class, float(rng.beta(5, 2)), jb))
        for _ in range(rng.poisson(fp_per_frame)):
            out.append(Detection(f.video_id, f.frame_index, fp_class, float(rng.beta(2, 5)), random_box(rng)))
    return out
