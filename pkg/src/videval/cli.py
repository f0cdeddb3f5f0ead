"""Command-line entry point.

Exit codes: 0 success, 2 input validation failure, 3 I/O failure,
4 no ground-truth boxes.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .geometry import DegenerateBoxError
from .ingest import (AnnotationError, canonical_class, filter_boxes, load_voc_dir, manifest_to_json,
                     parse_detections, parse_manifest, write_yolo_labels)
from .matching import match_all
from .report import (EmptyGroundTruthError, RunConfig, build_all_tracklets, load_inputs, render_run, run,
                     write_outputs)
from .stats import area_distribution, centroid_distribution, split_summary, split_summary_to_json
from .tracklets import attach_detections, tracklets_to_json

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_EMPTY_GT = 0, 2, 3, 4

log = logging.getLogger("videval")


def _conf(value: str):
    if value == "auto":
        return value
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--conf must be 'auto' or a number, got {value!r}")
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError("--conf must lie in [0, 1]")
    return v


def _formats(value: str):
    fmts = tuple(v.strip() for v in value.split(",") if v.strip())
    if not fmts or any(f not in ("json", "csv") for f in fmts):
        raise argparse.ArgumentTypeError("--format takes json, csv or json,csv")
    return fmts


def _common(p: argparse.ArgumentParser, detections: bool = True) -> None:
    p.add_argument("--gt", required=True, help="directory of VOC .xml or YOLO .txt annotations")
    p.add_argument("--gt-format", choices=("auto", "voc", "yolo"), default="auto")
    p.add_argument("--classes", help="class-name file for YOLO labels (default: <gt>/classes.txt)")
    p.add_argument("--manifest", help="dataset manifest JSON")
    if detections:
        p.add_argument("--detections", required=True, help="detection stream, JSON lines")
        p.add_argument("--skip-bad-detections", action="store_true",
                       help="log and skip malformed detection lines instead of failing")
    p.add_argument("--filter-policy", choices=("reject", "clamp"), default="reject")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", type=_formats, default=("json", "csv"), dest="formats")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="videval", description="Evaluate object detectors on video.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("evaluate", "accuracy, stability and failure report"),
                        ("stability", "temporal stability report only"),
                        ("failures", "false-negative breakdown only")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--match-iou", type=float, default=0.5)
        p.add_argument("--link-iou", type=float, default=0.5)
        p.add_argument("--conf", type=_conf, default="auto", help="confidence threshold or 'auto' (max F1)")
        p.add_argument("--interpolation", choices=("none", "all-point", "voc11", "coco101"), default="none")
        p.add_argument("--mean-iou-mode", choices=("tp", "best-per-gt"), default="tp")
        p.add_argument("--edge-eps", type=float, default=1e-6)

    p = sub.add_parser("convert", help="convert VOC annotations to YOLO labels")
    p.add_argument("--gt", required=True)
    p.add_argument("--manifest")
    p.add_argument("--classes", help="class-name file fixing the index order (default: sorted names)")
    p.add_argument("--filter-policy", choices=("reject", "clamp"), default="reject")
    p.add_argument("--out", required=True)

    p = sub.add_parser("stats", help="dataset distribution statistics")
    _common(p, detections=False)
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--area-bins", type=int, default=50)

    p = sub.add_parser("tracklets", help="dump ground-truth tracklets")
    _common(p, detections=False)
    p.add_argument("--detections", help="optional detection stream to mark matched frames")
    p.add_argument("--link-iou", type=float, default=0.5)
    p.add_argument("--match-iou", type=float, default=0.5)
    p.add_argument("--conf", type=float, default=0.0)
    return parser


def _config(args) -> RunConfig:
    return RunConfig(
        gt_path=args.gt,
        detections_path=getattr(args, "detections", None),
        manifest_path=args.manifest,
        gt_format=getattr(args, "gt_format", "auto"),
        classes_path=getattr(args, "classes", None),
        match_iou=getattr(args, "match_iou", 0.5),
        link_iou=getattr(args, "link_iou", 0.5),
        conf=getattr(args, "conf", "auto"),
        filter_policy=args.filter_policy,
        on_bad_detection="skip" if getattr(args, "skip_bad_detections", False) else "raise",
        interpolation=getattr(args, "interpolation", "none"),
        mean_iou_mode=getattr(args, "mean_iou_mode", "tp"),
        edge_eps=getattr(args, "edge_eps", 1e-6),
        out_dir=args.out,
        formats=getattr(args, "formats", ("json", "csv")),
    ).validate()


def cmd_evaluate(args, sections=("evaluation", "stability", "failures"), name="report") -> int:
    cfg = _config(args)
    report = run(cfg, sections)
    for p in write_outputs(cfg.out_dir, render_run(report, cfg.formats, name)):
        log.info("wrote %s", p)
    return EXIT_OK


def cmd_convert(args) -> int:
    manifests = parse_manifest(Path(args.manifest).read_text(encoding="utf-8")) if args.manifest else None
    frames, diags = filter_boxes(load_voc_dir(args.gt, manifests), args.filter_policy)
    for d in diags:
        log.warning("%s %s/%d object %d: %s", d.action, d.video_id, d.frame_index, d.object_index, d.reason)
    if args.classes:
        classes = [ln.strip() for ln in Path(args.classes).read_text(encoding="utf-8").splitlines() if ln.strip()]
    else:
        seen = {}
        for f in frames:
            for o in f.objects:
                seen.setdefault(canonical_class(o.object_class), o.object_class.strip())
        classes = [seen[k] for k in sorted(seen)]
    files = {"classes.txt": "".join(c + "\n" for c in classes)}
    for f in frames:
        files[f"{f.video_id}_{f.frame_index:06d}.txt"] = write_yolo_labels(f, classes)
    write_outputs(args.out, files)
    return EXIT_OK


def cmd_stats(args) -> int:
    cfg = _config(args)
    inp = load_inputs(cfg, need_detections=False)
    cent = centroid_distribution(inp.frames, args.grid)
    edges = [k / args.area_bins for k in range(args.area_bins + 1)]
    area = area_distribution(inp.frames, edges)
    doc = {"config": {"centroid_grid": args.grid, "area_bins": args.area_bins,
                      "centroid_boundary": "higher bin; 1.0 in last bin",
                      "filter_policy": cfg.filter_policy},
           "inputs": inp.digests,
           "total_boxes": cent.total}
    files = {}
    if inp.manifests:
        rows = split_summary(inp.manifests, inp.frames)
        doc["splits"] = json.loads(split_summary_to_json(rows))["rows"]
        if "csv" in cfg.formats:
            header = "dimension,tag,videos,frames,boxes,pct_videos,pct_frames,pct_boxes\n"
            files["splits.csv"] = header + "".join(
                f"{r.dimension},{r.tag},{r.videos},{r.frames},{r.boxes},"
                f"{r.pct_videos!r},{r.pct_frames!r},{r.pct_boxes!r}\n" for r in rows)
    if "json" in cfg.formats:
        files["stats.json"] = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if "csv" in cfg.formats:
        files["centroids.csv"] = cent.to_csv()
        files["areas.csv"] = area.to_csv()
    write_outputs(cfg.out_dir, files)
    return EXIT_OK


def cmd_tracklets(args) -> int:
    cfg = _config(args)
    inp = load_inputs(cfg, need_detections=False)
    tracklets = build_all_tracklets(inp.frames, cfg.link_iou)
    if args.detections:
        dets = parse_detections(Path(args.detections).read_text(encoding="utf-8"), source=args.detections)
        tracklets = attach_detections(tracklets, match_all(dets, inp.frames, cfg.match_iou, args.conf))
    write_outputs(cfg.out_dir, {"tracklets.json": tracklets_to_json(tracklets, cfg.link_iou) + "\n"})
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {
        "evaluate": cmd_evaluate,
        "stability": lambda a: cmd_evaluate(a, ("stability",), "stability"),
        "failures": lambda a: cmd_evaluate(a, ("failures",), "failures"),
        "convert": cmd_convert,
        "stats": cmd_stats,
        "tracklets": cmd_tracklets,
    }
    try:
        return handlers[args.command](args)
    except EmptyGroundTruthError as exc:
        log.error("%s", exc)
        return EXIT_EMPTY_GT
    except (AnnotationError, DegenerateBoxError, ValueError, KeyError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
