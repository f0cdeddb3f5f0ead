"""
A full evaluation run from files
================================

The same pipeline the command line uses: load a VOC ground-truth folder,
a JSON-lines detection stream and a manifest, then write the reports.
"""

import json
import tempfile
from pathlib import Path

from videval.report import RunConfig, render_run, run, write_outputs

corpus = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "corpus"
cfg = RunConfig(gt_path=str(corpus / "gt"), detections_path=str(corpus / "detections.jsonl"),
                manifest_path=str(corpus / "manifest.json"))
report = run(cfg)

with tempfile.TemporaryDirectory() as out:
    for p in write_outputs(out, render_run(report)):
        print("wrote", Path(p).name)
    doc = json.loads((Path(out) / "report.json").read_text())

ev = doc["evaluation"]
print(f"AP50={ev['ap50']:.4f} AP75={ev['ap75']:.4f} threshold={ev['confidence_threshold']}")
print("stability:", {k: doc["stability"][k] for k in ("translation_error", "scale_aspect_error",
                                                      "fragmentation_error")})
print("failures:", doc["failures"]["counts"])
print("config stamp:", doc["config"])
