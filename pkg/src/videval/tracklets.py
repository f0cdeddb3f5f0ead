"""Ad-hoc ground-truth tracklets built by frame-to-frame IOU linking."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .geometry import Box, iou
from .ingest import Detection, GroundTruthFrame, canonical_class
from .matching import FrameMatchResult


@dataclass(frozen=True)
class Tracklet:
    """One object's GT boxes over strictly consecutive frames.

    ``object_indices[k]`` locates the box inside the GroundTruthFrame at
    ``frame_indices[k]``. ``detections`` holds the matched detection per frame
    (``None`` = undetected); it is all-``None`` until detections are attached.
    """

    tracklet_id: int
    video_id: str
    object_class: str
    frame_indices: tuple[int, ...]
    object_indices: tuple[int, ...]
    boxes: tuple[Box, ...]
    detections: tuple[Detection | None, ...]

    @property
    def start_frame(self) -> int:
        return self.frame_indices[0]

    @property
    def length(self) -> int:
        return len(self.frame_indices)

    @property
    def matched_count(self) -> int:
        return sum(d is not None for d in self.detections)

    @property
    def detected(self) -> tuple[bool, ...]:
        return tuple(d is not None for d in self.detections)


def link_frames(prev: Sequence[tuple[str, Box]], nxt: Sequence[tuple[str, Box]],
                link_iou: float) -> list[tuple[int, int, float]]:
    """Greedy one-to-one links between two frames' (class, box) lists.

    Candidates are same-class pairs with IOU >= ``link_iou``; they are taken
    in order of descending IOU, ties by earlier-frame index then later-frame
    index.
    """
    cands = []
    for i, (ci, bi) in enumerate(prev):
        for j, (cj, bj) in enumerate(nxt):
            if ci != cj:
                continue
            v = iou(bi, bj)
            if v >= link_iou:
                cands.append((-v, i, j))
    cands.sort()
    used_i, used_j, links = set(), set(), []
    for neg_v, i, j in cands:
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        links.append((i, j, -neg_v))
    return links


def build_tracklets(frames: Sequence[GroundTruthFrame], link_iou: float = 0.5) -> list[Tracklet]:
    """Chain one video's GT boxes into tracklets.

    ``frames`` must be sorted by frame index without duplicates. A gap in
    frame indices ends every open tracklet. Tracklet ids are assigned in
    creation order (start frame, then object index).
    """
    if not 0.0 <= link_iou <= 1.0:
        raise ValueError("link_iou must lie in [0, 1]")
    if len({f.video_id for f in frames}) > 1:
        raise ValueError("build_tracklets expects frames from a single video")
    for a, b in zip(frames, frames[1:]):
        if b.frame_index == a.frame_index:
            raise ValueError(f"duplicate frame index {a.frame_index}")
        if b.frame_index < a.frame_index:
            raise ValueError(f"frames not sorted: {a.frame_index} before {b.frame_index}")

    chains: list[list[tuple[int, int]]] = []  # (frame_index, object_index)
    owner: dict[int, int] = {}  # object index in previous frame -> chain id
    prev: GroundTruthFrame | None = None
    for frame in frames:
        cur = [(canonical_class(o.object_class), o.box) for o in frame.objects]
        links = []
        if prev is not None and frame.frame_index == prev.frame_index + 1:
            prev_objs = [(canonical_class(o.object_class), o.box) for o in prev.objects]
            links = link_frames(prev_objs, cur, link_iou)
        successor = {j: owner[i] for i, j, _ in links}
        owner = {}
        for j in range(len(cur)):
            if j in successor:
                cid = successor[j]
            else:
                cid = len(chains)
                chains.append([])
            chains[cid].append((frame.frame_index, j))
            owner[j] = cid
        prev = frame

    by_index = {f.frame_index: f for f in frames}
    out = []
    for cid, chain in enumerate(chains):
        objs = [by_index[fi].objects[oi] for fi, oi in chain]
        out.append(Tracklet(
            tracklet_id=cid,
            video_id=frames[0].video_id,
            object_class=objs[0].object_class,
            frame_indices=tuple(fi for fi, _ in chain),
            object_indices=tuple(oi for _, oi in chain),
            boxes=tuple(o.box for o in objs),
            detections=(None,) * len(chain),
        ))
    return out


def attach_detections(tracklets: Iterable[Tracklet], frame_matches: Iterable[FrameMatchResult]
                      ) -> list[Tracklet]:
    """Fill each tracklet frame with the detection matched to its GT box, if any."""
    tracklets = list(tracklets)
    slots = {}
    for t in tracklets:
        for k, (fi, oi) in enumerate(zip(t.frame_indices, t.object_indices)):
            slots[(t.video_id, fi, oi)] = (t.tracklet_id, k)
    filled: dict[tuple[str, int], list[Detection | None]] = {
        (t.video_id, t.tracklet_id): [None] * t.length for t in tracklets}
    for fm in frame_matches:
        for pair in fm.tp_pairs:
            key = (fm.video_id, fm.frame_index, pair.gt_index)
            if key not in slots:
                raise KeyError(f"match refers to unknown GT box {key}")
            tid, k = slots[key]
            filled[(fm.video_id, tid)][k] = pair.detection
    return [replace(t, detections=tuple(filled[(t.video_id, t.tracklet_id)])) for t in tracklets]


def tracklets_to_json(tracklets: Sequence[Tracklet], link_iou: float) -> str:
    """Debug dump: one document grouping tracklets per video."""
    videos: dict[str, list[dict]] = {}
    for t in tracklets:
        videos.setdefault(t.video_id, []).append({
            "tracklet_id": t.tracklet_id,
            "class": t.object_class,
            "frames": list(t.frame_indices),
            "boxes": [list(b.as_tuple()) for b in t.boxes],
            "matched": [d is not None for d in t.detections],
        })
    doc = {"link_iou": link_iou, "tie_break": "earlier-frame index, then later-frame index",
           "videos": videos}
    return json.dumps(doc, indent=2, sort_keys=True)
