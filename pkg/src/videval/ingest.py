"""Annotation and detection-stream parsers, the coordinate filter, and YOLO export.

Supported inputs:

* Pascal VOC XML, one file per frame, pixel coordinates.
* YOLO label text, ``class_idx cx cy w h`` normalized, one line per object.
* Detection JSON-lines, one detection per line with a normalized corner box.
* A dataset manifest (JSON) listing per-video metadata.
"""

from __future__ import annotations

import json
import logging
import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .geometry import Box, DegenerateBoxError, FrameSize, normalize

logger = logging.getLogger(__name__)

DEFAULT_FPS = 20.0
FILTER_POLICIES = ("reject", "clamp")


class AnnotationError(ValueError):
    """Malformed annotation or detection input.

    ``line`` is 1-based for line-oriented formats; ``offset`` is a byte offset
    into the document for XML.
    """

    def __init__(self, message: str, *, source: str | None = None,
                 line: int | None = None, offset: int | None = None):
        parts = [p for p in (source, f"line {line}" if line is not None else None,
                             f"byte {offset}" if offset is not None else None) if p]
        super().__init__(f"{': '.join([', '.join(parts), message]) if parts else message}")
        self.source = source
        self.line = line
        self.offset = offset


def canonical_class(label: str) -> str:
    """Comparison key for class labels: trimmed, case-folded."""
    return label.strip().casefold()


@dataclass(frozen=True)
class GroundTruthObject:
    object_class: str
    box: Box


@dataclass(frozen=True)
class GroundTruthFrame:
    video_id: str
    frame_index: int
    objects: tuple[GroundTruthObject, ...] = ()

    @property
    def key(self) -> tuple[str, int]:
        return (self.video_id, self.frame_index)


@dataclass(frozen=True)
class Detection:
    video_id: str
    frame_index: int
    object_class: str
    confidence: float
    box: Box

    @property
    def key(self) -> tuple[str, int]:
        return (self.video_id, self.frame_index)


@dataclass(frozen=True)
class VideoManifest:
    video_id: str
    frame_count: int
    frame_size: FrameSize
    fps: float = DEFAULT_FPS
    environment_tag: str | None = None
    split_tag: str | None = None
    # Annotation file stems in temporal order; overrides the filename convention.
    files: tuple[str, ...] = ()

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError(f"{self.video_id}: frame_count must be >= 1")
        if not self.fps > 0:
            raise ValueError(f"{self.video_id}: fps must be positive")


@dataclass(frozen=True)
class FilterDiagnostic:
    video_id: str
    frame_index: int
    object_index: int
    action: str  # "dropped" or "clamped"
    reason: str
    original: tuple[float, float, float, float]
    result: tuple[float, float, float, float] | None = None


# --------------------------------------------------------------------------
# frame identity

_STEM_RE = re.compile(r"^(?P<video>.+)_(?P<index>\d+)$")


def frame_identity(name: str) -> tuple[str, int]:
    """Split ``<video_id>_<frame_index>`` (extension ignored) into its parts."""
    stem = Path(name).stem if "." in Path(name).name else Path(name).name
    m = _STEM_RE.match(stem)
    if m is None:
        raise AnnotationError(f"cannot derive frame identity from {name!r}; "
                              "expected <video_id>_<frame_index>")
    return m.group("video"), int(m.group("index"))


# --------------------------------------------------------------------------
# Pascal VOC

def _byte_offset(text: str, line: int, column: int) -> int:
    lines = text.splitlines(keepends=True)
    prefix = "".join(lines[: max(line - 1, 0)])
    tail = lines[line - 1][:column] if 0 < line <= len(lines) else ""
    return len((prefix + tail).encode("utf-8"))


def _child_text(elem: ET.Element, tag: str) -> str | None:
    child = elem.find(tag)
    if child is None or child.text is None:
        return None
    return child.text.strip()


def parse_voc(document: str, size_fallback: FrameSize | None = None, *,
              identity: tuple[str, int] | None = None,
              source: str | None = None) -> GroundTruthFrame:
    """Parse one Pascal VOC annotation into a frame of normalized boxes.

    Frame identity comes from ``identity`` when given, otherwise from the
    ``<filename>`` element (or ``source``) via :func:`frame_identity`.
    Boxes are normalized but not range-checked; see :func:`filter_boxes`.
    """
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        line, col = exc.position
        raise AnnotationError(f"malformed XML: {exc}", source=source,
                              offset=_byte_offset(document, line, col)) from None
    if root.tag != "annotation":
        raise AnnotationError(f"root element is <{root.tag}>, expected <annotation>", source=source)

    if identity is None:
        name = _child_text(root, "filename") or source
        if not name:
            raise AnnotationError("no <filename> and no source name to derive frame identity", source=source)
        identity = frame_identity(name)
    video_id, frame_index = identity

    size = None
    size_el = root.find("size")
    if size_el is not None:
        try:
            size = FrameSize(int(float(_child_text(size_el, "width"))),
                             int(float(_child_text(size_el, "height"))))
        except (TypeError, ValueError) as exc:
            raise AnnotationError(f"bad <size>: {exc}", source=source) from None
    if size is None:
        if size_fallback is None:
            raise AnnotationError("missing <size> and no fallback frame size", source=source)
        size = size_fallback

    objects = []
    for k, obj in enumerate(root.findall("object")):
        name = _child_text(obj, "name")
        if not name:
            raise AnnotationError(f"object {k} has no <name>", source=source)
        bnd = obj.find("bndbox")
        if bnd is None:
            raise AnnotationError(f"object {k} has no <bndbox>", source=source)
        try:
            px = [float(_child_text(bnd, tag)) for tag in ("xmin", "ymin", "xmax", "ymax")]
        except (TypeError, ValueError):
            raise AnnotationError(f"object {k} has a missing or non-numeric bndbox coordinate",
                                  source=source) from None
        box = normalize(px, size, video_id=video_id, frame_index=frame_index, object_index=k)
        objects.append(GroundTruthObject(name.strip(), box))
    return GroundTruthFrame(video_id, frame_index, tuple(objects))


# --------------------------------------------------------------------------
# YOLO labels

def parse_yolo_labels(text: str, video_id: str, frame_index: int,
                      class_names: Sequence[str], *, source: str | None = None) -> GroundTruthFrame:
    objects = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 5:
            raise AnnotationError(f"expected 5 fields, got {len(fields)}", source=source, line=lineno)
        try:
            cls_idx = int(fields[0])
            cx, cy, w, h = (float(v) for v in fields[1:])
        except ValueError:
            raise AnnotationError(f"non-numeric field in {line!r}", source=source, line=lineno) from None
        if not 0 <= cls_idx < len(class_names):
            raise AnnotationError(f"class index {cls_idx} not in class table of size {len(class_names)}",
                                  source=source, line=lineno)
        if not all(0.0 <= v <= 1.0 for v in (cx, cy, w, h)):
            raise AnnotationError(f"value outside [0,1] in {line!r}", source=source, line=lineno)
        if w == 0.0 or h == 0.0:
            raise AnnotationError(f"zero-size box in {line!r}", source=source, line=lineno)
        objects.append(GroundTruthObject(class_names[cls_idx], Box.from_center(cx, cy, w, h)))
    return GroundTruthFrame(video_id, frame_index, tuple(objects))


def write_yolo_labels(frame: GroundTruthFrame, class_names: Sequence[str]) -> str:
    index = {canonical_class(name): i for i, name in enumerate(class_names)}
    lines = []
    for obj in frame.objects:
        key = canonical_class(obj.object_class)
        if key not in index:
            raise KeyError(f"class {obj.object_class!r} not in class table")
        b = obj.box
        cx, cy = (b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0
        lines.append(f"{index[key]} {cx:.6f} {cy:.6f} {b.width:.6f} {b.height:.6f}")
    return "".join(line + "\n" for line in lines)


# --------------------------------------------------------------------------
# detection stream

def _detection_from_record(rec: dict) -> Detection:
    missing = [k for k in ("video_id", "frame_index", "class", "confidence", "box") if k not in rec]
    if missing:
        raise ValueError(f"missing keys {missing}")
    frame_index = rec["frame_index"]
    if isinstance(frame_index, bool) or not isinstance(frame_index, int) or frame_index < 0:
        raise ValueError(f"frame_index must be a non-negative integer, got {frame_index!r}")
    conf = rec["confidence"]
    if isinstance(conf, bool) or not isinstance(conf, (int, float)) or not 0.0 <= conf <= 1.0:
        raise ValueError(f"confidence {conf!r} outside [0,1]")
    coords = rec["box"]
    if (not isinstance(coords, list) or len(coords) != 4
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in coords)):
        raise ValueError(f"box must be a list of 4 numbers, got {coords!r}")
    box = Box(*(float(v) for v in coords))
    if not box.is_valid():
        raise ValueError(f"invalid box {coords}")
    label = rec["class"]
    if not isinstance(label, str) or not label.strip():
        raise ValueError("class must be a non-empty string")
    return Detection(str(rec["video_id"]), frame_index, label.strip(), float(conf), box)


def parse_detections(stream: str | Iterable[str], on_error: str = "raise", *,
                     diagnostics: list[str] | None = None,
                     source: str | None = None) -> list[Detection]:
    """Parse detector output in JSON-lines form.

    Each line: ``{"video_id", "frame_index", "class", "confidence", "box": [x0, y0, x1, y1]}``
    with normalized coordinates. With ``on_error="skip"`` bad lines are
    logged (and appended to ``diagnostics`` if given) instead of raising.
    """
    if on_error not in ("raise", "skip"):
        raise ValueError(f"on_error must be 'raise' or 'skip', got {on_error!r}")
    lines = stream.splitlines() if isinstance(stream, str) else stream
    out = []
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
            if not isinstance(rec, dict):
                raise ValueError("line is not a JSON object")
            out.append(_detection_from_record(rec))
        except ValueError as exc:  # json.JSONDecodeError is a ValueError
            err = AnnotationError(str(exc), source=source, line=lineno)
            if on_error == "raise":
                raise err from None
            logger.warning("skipping detection: %s", err)
            if diagnostics is not None:
                diagnostics.append(str(err))
    return out


def detection_to_json(det: Detection) -> str:
    return json.dumps({"video_id": det.video_id, "frame_index": det.frame_index,
                       "class": det.object_class, "confidence": det.confidence,
                       "box": list(det.box.as_tuple())})


# --------------------------------------------------------------------------
# coordinate filter

def _clip01(v: float) -> float:
    return min(1.0, max(0.0, v))


def filter_boxes(frames: Iterable[GroundTruthFrame], policy: str = "reject"
                 ) -> tuple[list[GroundTruthFrame], list[FilterDiagnostic]]:
    """Remove or repair boxes whose coordinates leave the frame.

    ``reject`` drops any object whose box violates the normalized-box
    invariants. ``clamp`` clips coordinates into [0, 1] and drops the object
    only if clipping leaves it with no area. Inverted corners cannot be
    repaired by clipping and are dropped under both policies.
    """
    if policy not in FILTER_POLICIES:
        raise ValueError(f"unknown filter policy {policy!r}")
    out, diags = [], []
    for frame in frames:
        kept = []
        for k, obj in enumerate(frame.objects):
            b = obj.box
            coords = b.as_tuple()
            if b.is_valid():
                kept.append(obj)
                continue
            if not all(math.isfinite(v) for v in coords):
                diags.append(FilterDiagnostic(frame.video_id, frame.frame_index, k, "dropped",
                                              "non-finite coordinate", coords))
                continue
            if policy == "reject":
                diags.append(FilterDiagnostic(frame.video_id, frame.frame_index, k, "dropped",
                                              "coordinates out of range", coords))
                continue
            clipped = Box(*(_clip01(v) for v in coords))
            if clipped.is_valid():
                kept.append(replace(obj, box=clipped))
                diags.append(FilterDiagnostic(frame.video_id, frame.frame_index, k, "clamped",
                                              "coordinates clipped to [0,1]", coords, clipped.as_tuple()))
            else:
                diags.append(FilterDiagnostic(frame.video_id, frame.frame_index, k, "dropped",
                                              "degenerate after clipping", coords, clipped.as_tuple()))
        out.append(replace(frame, objects=tuple(kept)))
    return out, diags


# --------------------------------------------------------------------------
# manifest

def _manifest_entry(rec: dict) -> VideoManifest:
    size = rec.get("frame_size")
    if isinstance(size, dict):
        size = FrameSize(int(size["width"]), int(size["height"]))
    elif isinstance(size, (list, tuple)):
        size = FrameSize(int(size[0]), int(size[1]))
    else:
        size = FrameSize(int(rec["width"]), int(rec["height"]))
    return VideoManifest(
        video_id=str(rec["video_id"]),
        frame_count=int(rec["frame_count"]),
        frame_size=size,
        fps=float(rec.get("fps", DEFAULT_FPS)),
        environment_tag=rec.get("environment_tag"),
        split_tag=rec.get("split_tag"),
        files=tuple(rec.get("files", ())),
    )


def parse_manifest(document: str, *, source: str | None = None) -> dict[str, VideoManifest]:
    """Parse ``{"videos": [...]}`` (or a bare list) into manifests keyed by video id."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"malformed manifest JSON: {exc.msg}", source=source,
                              line=exc.lineno) from None
    entries = data.get("videos") if isinstance(data, dict) else data
    if not isinstance(entries, list):
        raise AnnotationError("manifest must be a list or an object with a 'videos' list", source=source)
    out = {}
    for i, rec in enumerate(entries):
        try:
            m = _manifest_entry(rec)
        except (KeyError, TypeError, ValueError) as exc:
            raise AnnotationError(f"manifest entry {i}: {exc!r}", source=source) from None
        if m.video_id in out:
            raise AnnotationError(f"duplicate video_id {m.video_id!r} in manifest", source=source)
        out[m.video_id] = m
    return out


def manifest_to_json(manifests: Iterable[VideoManifest]) -> str:
    videos = []
    for m in manifests:
        rec = {"video_id": m.video_id, "frame_count": m.frame_count,
               "frame_size": [m.frame_size.width, m.frame_size.height], "fps": m.fps}
        if m.environment_tag is not None:
            rec["environment_tag"] = m.environment_tag
        if m.split_tag is not None:
            rec["split_tag"] = m.split_tag
        if m.files:
            rec["files"] = list(m.files)
        videos.append(rec)
    return json.dumps({"videos": videos}, indent=2, sort_keys=True)


# --------------------------------------------------------------------------
# directory loaders

def _file_identities(paths: list[Path], manifests: dict[str, VideoManifest] | None
                     ) -> dict[Path, tuple[str, int]]:
    by_stem = {}
    if manifests:
        for m in manifests.values():
            for i, stem in enumerate(m.files):
                by_stem[Path(stem).stem] = (m.video_id, i)
    return {p: by_stem.get(p.stem) or frame_identity(p.name) for p in paths}


def group_by_video(frames: Iterable[GroundTruthFrame]) -> dict[str, list[GroundTruthFrame]]:
    """Group frames per video, sorted by frame index; duplicates are an error."""
    videos: dict[str, list[GroundTruthFrame]] = {}
    for f in frames:
        videos.setdefault(f.video_id, []).append(f)
    for vid, seq in videos.items():
        seq.sort(key=lambda f: f.frame_index)
        for a, b in zip(seq, seq[1:]):
            if a.frame_index == b.frame_index:
                raise AnnotationError(f"duplicate frame index {a.frame_index} in video {vid!r}")
    return dict(sorted(videos.items()))


def load_voc_dir(root: str | Path, manifests: dict[str, VideoManifest] | None = None
                 ) -> list[GroundTruthFrame]:
    """Parse every ``*.xml`` under ``root``; order is (video_id, frame_index)."""
    paths = sorted(Path(root).rglob("*.xml"))
    ids = _file_identities(paths, manifests)
    frames = []
    for p in paths:
        vid, idx = ids[p]
        fallback = manifests[vid].frame_size if manifests and vid in manifests else None
        frames.append(parse_voc(p.read_text(encoding="utf-8"), fallback, identity=(vid, idx),
                                source=str(p)))
    return sorted(frames, key=lambda f: f.key)


def load_yolo_dir(root: str | Path, class_names: Sequence[str],
                  manifests: dict[str, VideoManifest] | None = None) -> list[GroundTruthFrame]:
    paths = sorted(p for p in Path(root).rglob("*.txt") if p.name != "classes.txt")
    ids = _file_identities(paths, manifests)
    frames = [parse_yolo_labels(p.read_text(encoding="utf-8"), *ids[p], class_names, source=str(p))
              for p in paths]
    return sorted(frames, key=lambda f: f.key)


def read_class_names(path: str | Path) -> list[str]:
    return [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
