"""Batch runs: load inputs, run every metric module, serialize reports deterministically."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .accuracy import EvaluationReport, PRCurve, evaluate_accuracy
from .failures import FailureBreakdown, classify_false_negatives
from .ingest import (FILTER_POLICIES, AnnotationError, Detection, GroundTruthFrame, VideoManifest,
                     filter_boxes, group_by_video, load_voc_dir, load_yolo_dir, parse_detections,
                     parse_manifest, read_class_names)
from .stability import StabilityReport, stability_report
from .tracklets import Tracklet, attach_detections, build_tracklets

TIMESTAMP_FIELD = "generated_at"


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the timestamp for fully byte-identical reports
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
           else _dt.datetime.now(_dt.timezone.utc))
    return now.isoformat()


class EmptyGroundTruthError(ValueError):
    """No ground-truth boxes survived loading and filtering."""


@dataclass
class RunConfig:
    gt_path: str
    detections_path: str | None = None
    manifest_path: str | None = None
    gt_format: str = "auto"  # voc | yolo | auto
    classes_path: str | None = None
    match_iou: float = 0.5
    link_iou: float = 0.5
    conf: float | str = "auto"
    filter_policy: str = "reject"
    on_bad_detection: str = "raise"
    interpolation: str = "none"
    mean_iou_mode: str = "tp"
    edge_eps: float = 1e-6
    out_dir: str | None = None
    formats: tuple[str, ...] = ("json", "csv")

    def validate(self) -> "RunConfig":
        if not self.gt_path:
            raise ValueError("ground-truth path is required")
        for name in ("match_iou", "link_iou", "edge_eps"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.conf != "auto" and not 0.0 <= float(self.conf) <= 1.0:
            raise ValueError(f"confidence threshold must be 'auto' or in [0, 1], got {self.conf}")
        if self.filter_policy not in FILTER_POLICIES:
            raise ValueError(f"filter policy must be one of {FILTER_POLICIES}")
        if self.gt_format not in ("auto", "voc", "yolo"):
            raise ValueError(f"unknown ground-truth format {self.gt_format!r}")
        return self

    def stamp(self) -> dict:
        return {
            "match_iou": self.match_iou,
            "link_iou": self.link_iou,
            "conf": self.conf,
            "filter_policy": self.filter_policy,
            "on_bad_detection": self.on_bad_detection,
            "ap_interpolation": self.interpolation,
            "mean_iou_mode": self.mean_iou_mode,
            "edge_eps": self.edge_eps,
            "gt_format": self.gt_format,
        }


@dataclass
class Inputs:
    frames: list[GroundTruthFrame]
    detections: list[Detection]
    manifests: dict[str, VideoManifest]
    filter_diagnostics: list
    detection_diagnostics: list[str]
    digests: dict[str, str]


def _digest_path(path: str | Path) -> str:
    h = hashlib.sha256()
    p = Path(path)
    files = sorted(q for q in p.rglob("*") if q.is_file()) if p.is_dir() else [p]
    for q in files:
        h.update(str(q.relative_to(p) if p.is_dir() else q.name).encode())
        h.update(b"\0")
        h.update(q.read_bytes())
        h.update(b"\0")
    return h.hexdigest()


def _detect_format(root: Path) -> str:
    if root.is_dir() and any(root.rglob("*.xml")):
        return "voc"
    if root.is_dir() and any(root.rglob("*.txt")):
        return "yolo"
    raise AnnotationError(f"no VOC (.xml) or YOLO (.txt) annotations under {root}")


def load_ground_truth(cfg: RunConfig, manifests: dict[str, VideoManifest] | None = None
                      ) -> list[GroundTruthFrame]:
    root = Path(cfg.gt_path)
    if not root.exists():
        raise FileNotFoundError(f"ground-truth path not found: {root}")
    fmt = _detect_format(root) if cfg.gt_format == "auto" else cfg.gt_format
    if fmt == "voc":
        return load_voc_dir(root, manifests)
    classes_path = cfg.classes_path or root / "classes.txt"
    return load_yolo_dir(root, read_class_names(classes_path), manifests)


def load_inputs(cfg: RunConfig, need_detections: bool = True) -> Inputs:
    """Read and validate everything a run needs. Raises before any output is written."""
    digests = {"ground_truth": None}
    manifests = {}
    if cfg.manifest_path:
        manifests = parse_manifest(Path(cfg.manifest_path).read_text(encoding="utf-8"),
                                   source=cfg.manifest_path)
        digests["manifest"] = _digest_path(cfg.manifest_path)
    raw = load_ground_truth(cfg, manifests)
    group_by_video(raw)  # duplicate-frame check
    frames, fdiag = filter_boxes(raw, cfg.filter_policy)
    digests["ground_truth"] = _digest_path(cfg.gt_path)

    dets, ddiag = [], []
    if need_detections:
        if not cfg.detections_path:
            raise ValueError("a detection stream is required for this command")
        text = Path(cfg.detections_path).read_text(encoding="utf-8")
        dets = parse_detections(text, cfg.on_bad_detection, diagnostics=ddiag, source=cfg.detections_path)
        digests["detections"] = _digest_path(cfg.detections_path)
    if sum(len(f.objects) for f in frames) == 0:
        raise EmptyGroundTruthError("no ground-truth boxes after loading and filtering")
    return Inputs(frames, dets, manifests, fdiag, ddiag, digests)


def build_all_tracklets(frames: Sequence[GroundTruthFrame], link_iou: float) -> list[Tracklet]:
    out = []
    for seq in group_by_video(frames).values():
        out.extend(build_tracklets(seq, link_iou))
    return out


@dataclass
class RunReport:
    evaluation: EvaluationReport | None
    stability: StabilityReport | None
    failures: FailureBreakdown | None
    config: dict
    digests: dict
    diagnostics: dict
    curve: PRCurve | None = None
    generated_at: str = field(default_factory=lambda: _timestamp())

    def to_dict(self) -> dict:
        d = {
            "tool": {"name": "videval", "version": __version__},
            "config": self.config,
            "inputs": self.digests,
            "diagnostics": self.diagnostics,
            TIMESTAMP_FIELD: self.generated_at,
        }
        if self.evaluation is not None:
            d["evaluation"] = self.evaluation.to_dict()
        if self.stability is not None:
            d["stability"] = self.stability.to_dict()
        if self.failures is not None:
            d["failures"] = self.failures.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def run(cfg: RunConfig, sections: Sequence[str] = ("evaluation", "stability", "failures")) -> RunReport:
    """Run the evaluation pipeline: ingest, filter, tracklets, matching, metrics."""
    cfg.validate()
    inp = load_inputs(cfg)
    evaluation, curve, matches = evaluate_accuracy(
        inp.detections, inp.frames, conf_threshold=cfg.conf, match_iou=cfg.match_iou,
        interpolation=cfg.interpolation, mean_iou_mode=cfg.mean_iou_mode)
    threshold = evaluation.confidence_threshold

    stab = fails = None
    if "stability" in sections:
        tracklets = attach_detections(build_all_tracklets(inp.frames, cfg.link_iou), matches)
        stab = stability_report(tracklets, conf_threshold=threshold)
        stab.config["link_iou"] = cfg.link_iou
        stab.config["link_tie_break"] = "earlier-frame index, then later-frame index"
    if "failures" in sections:
        fails = classify_false_negatives(matches, inp.frames, cfg.edge_eps)

    diagnostics = {
        "filtered_boxes": [vars(d) | {"original": list(d.original),
                                      "result": list(d.result) if d.result else None}
                           for d in inp.filter_diagnostics],
        "skipped_detections": inp.detection_diagnostics,
    }
    return RunReport(evaluation if "evaluation" in sections else None, stab, fails,
                     cfg.stamp() | {"operating_confidence_threshold": threshold},
                     inp.digests, diagnostics, curve)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_outputs(out_dir: str | Path, files: dict[str, str]) -> list[Path]:
    """Write all rendered outputs; nothing is written until every file is rendered."""
    out_dir = Path(out_dir)
    written = []
    for name, text in files.items():
        p = out_dir / name
        _atomic_write(p, text)
        written.append(p)
    return written


def render_run(report: RunReport, formats: Sequence[str] = ("json", "csv"), name: str = "report") -> dict[str, str]:
    files = {}
    if "json" in formats:
        files[f"{name}.json"] = report.to_json()
    if "csv" in formats:
        if report.curve is not None and report.evaluation is not None:
            files["pr_curve.csv"] = report.curve.to_csv()
        if report.stability is not None:
            files["tracklets.csv"] = report.stability.to_csv()
        if report.failures is not None:
            files["failures.csv"] = report.failures.to_csv()
    return files


def strip_timestamp(report_json: str) -> dict:
    d = json.loads(report_json)
    d.pop(TIMESTAMP_FIELD, None)
    return d
