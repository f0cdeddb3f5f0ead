"""Normalized bounding boxes and the geometric primitives built on them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class DegenerateBoxError(ValueError):
    """A rectangle collapsed to zero width or height."""

    def __init__(self, message: str, video_id: str | None = None,
                 frame_index: int | None = None, object_index: int | None = None):
        where = []
        if video_id is not None:
            where.append(f"video={video_id}")
        if frame_index is not None:
            where.append(f"frame={frame_index}")
        if object_index is not None:
            where.append(f"object={object_index}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.video_id = video_id
        self.frame_index = frame_index
        self.object_index = object_index


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in normalized image coordinates.

    Construction does not validate, so that raw parser output can carry
    out-of-range coordinates until the ingest filter deals with them.
    Use :meth:`is_valid` / :meth:`validate` to check the invariants.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def aspect_ratio(self) -> float:
        return self.width / self.height

    def is_valid(self) -> bool:
        return (0.0 <= self.x_min < self.x_max <= 1.0
                and 0.0 <= self.y_min < self.y_max <= 1.0)

    def validate(self) -> "Box":
        if not self.is_valid():
            raise ValueError(f"invalid normalized box {self.as_tuple()}")
        return self

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "Box":
        return cls(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)


@dataclass(frozen=True)
class FrameSize:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame size must be positive, got {self.width}x{self.height}")


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes.

    Rectangles are closed, but a shared edge has zero area and so gives 0.
    """
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return min(1.0, inter / union)


def iou_matrix(boxes_a: Sequence[Box], boxes_b: Sequence[Box]) -> np.ndarray:
    """Pairwise IOU, shape (len(boxes_a), len(boxes_b)).

    Each entry equals ``iou(a, b)`` bit for bit; the scalar routine is the
    reference, this is the batch path used by the matchers.
    """
    out = np.zeros((len(boxes_a), len(boxes_b)), dtype=float)
    for i, a in enumerate(boxes_a):
        for j, b in enumerate(boxes_b):
            out[i, j] = iou(a, b)
    return out


def center(b: Box) -> tuple[float, float]:
    return ((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)


def normalize(px_box: Iterable[float], size: FrameSize, *, video_id: str | None = None,
              frame_index: int | None = None, object_index: int | None = None) -> Box:
    """Convert a pixel rectangle ``(x_min, y_min, x_max, y_max)`` to a normalized Box.

    No clamping happens here; out-of-range coordinates survive so the ingest
    filter can apply its policy. Zero width or height is rejected.
    """
    x0, y0, x1, y1 = (float(v) for v in px_box)
    box = Box(x0 / size.width, y0 / size.height, x1 / size.width, y1 / size.height)
    if box.width == 0.0 or box.height == 0.0:
        raise DegenerateBoxError(f"degenerate box {(x0, y0, x1, y1)} in {size.width}x{size.height} frame",
                                 video_id, frame_index, object_index)
    return box
