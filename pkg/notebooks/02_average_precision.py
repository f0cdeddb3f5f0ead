"""
Precision-recall and average precision
======================================

A synthetic detector on random videos: PR curve, the AP suite, and the
F1-optimal operating threshold.
"""

import numpy as np

from videval.accuracy import ap_suite, average_precision, evaluate_accuracy, pr_curve
from videval.synthetic import noisy_detections, random_video

rng = np.random.default_rng(0)
frames = [f for k in range(5) for f in random_video(rng, f"v{k}", n_frames=40, n_objects=3)]
dets = noisy_detections(rng, frames, center_sigma=0.02, miss_prob=0.15, fp_per_frame=0.3)
print(len(frames), "frames,", sum(len(f.objects) for f in frames), "GT boxes,", len(dets), "detections")

curve = pr_curve(dets, frames, match_iou=0.5)
print("first PR points:")
print(curve.to_csv().splitlines()[:6])

for mode in ("none", "all-point", "voc11", "coco101"):
    print(f"AP50 ({mode}): {average_precision(curve, mode):.4f}")

s = ap_suite(dets, frames)
print(f"AP50={s.ap50:.4f} AP75={s.ap75:.4f} AP[.50:.95]={s.ap_range:.4f}")

report, _, _ = evaluate_accuracy(dets, frames)
print(f"operating threshold {report.confidence_threshold:.3f}: "
      f"P={report.precision:.3f} R={report.recall:.3f} mean IOU={report.mean_iou:.3f}")

# tighter localization helps AP75 far more than AP50
sharp = noisy_detections(np.random.default_rng(0), frames, center_sigma=0.002, miss_prob=0.15, fp_per_frame=0.3)
s2 = ap_suite(sharp, frames)
print(f"sharper boxes: AP50={s2.ap50:.4f} AP75={s2.ap75:.4f}")
