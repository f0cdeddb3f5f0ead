"""Regenerate fixtures/corpus: three synthetic videos as VOC XML plus a detection stream.

Run from the repository root: ``python tests/fixtures/build_corpus.py``.
The committed files are the reference; rerunning with the same seed
reproduces them.
"""

import json
from pathlib import Path

import numpy as np

from videval.ingest import detection_to_json
from videval.synthetic import noisy_detections, random_video

W, H = 640, 480
OUT = Path(__file__).parent / "corpus"


def voc_xml(frame) -> str:
    objs = []
    for o in frame.objects:
        b = o.box
        x0, y0, x1, y1 = (round(b.x_min * W), round(b.y_min * H), round(b.x_max * W), round(b.y_max * H))
        if x1 <= x0 or y1 <= y0:
            continue
        objs.append(f"""  <object>
    <name>{o.object_class}</name>
    <bndbox>
      <xmin>{x0}</xmin>
      <ymin>{y0}</ymin>
      <xmax>{x1}</xmax>
      <ymax>{y1}</ymax>
    </bndbox>
  </object>
""")
    return (f"<annotation>\n  <filename>{frame.video_id}_{frame.frame_index:06d}.jpg</filename>\n"
            f"  <size>\n    <width>{W}</width>\n    <height>{H}</height>\n    <depth>3</depth>\n  </size>\n"
            + "".join(objs) + "</annotation>\n")


def main():
    rng = np.random.default_rng(20210611)
    (OUT / "gt").mkdir(parents=True, exist_ok=True)
    videos = [("pool01", "pool", "train"), ("pool02", "pool", "test"), ("ocean01", "ocean", "test")]
    all_frames, manifest = [], []
    for vid, env, split in videos:
        frames = random_video(rng, vid, n_frames=30, n_objects=2, step=0.01, appear_prob=0.95)
        for f in frames:
            (OUT / "gt" / f"{vid}_{f.frame_index:06d}.xml").write_text(voc_xml(f))
        all_frames.extend(frames)
        manifest.append({"video_id": vid, "frame_count": len(frames), "frame_size": [W, H], "fps": 20,
                         "environment_tag": env, "split_tag": split})
    dets = noisy_detections(rng, all_frames, center_sigma=0.01, scale_sigma=0.05, miss_prob=0.15,
                            fp_per_frame=0.3)
    (OUT / "detections.jsonl").write_text("".join(detection_to_json(d) + "\n" for d in dets))
    (OUT / "manifest.json").write_text(json.dumps({"videos": manifest}, indent=2) + "\n")


if __name__ == "__main__":
    main()
