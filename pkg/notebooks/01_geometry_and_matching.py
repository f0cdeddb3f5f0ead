"""
Boxes, IOU and per-frame matching
=================================

Normalized boxes, the closed-rectangle IOU, and how detections are
matched to ground truth one frame at a time.
"""

from videval import Box, iou
from videval.ingest import Detection, GroundTruthFrame, GroundTruthObject
from videval.matching import match_frame

a = Box(0.1, 0.1, 0.3, 0.3)
b = Box(0.2, 0.2, 0.4, 0.4)
print("partial overlap:", iou(a, b))
print("shared edge only:", iou(a, Box(0.3, 0.1, 0.5, 0.3)))

# two divers, three detections; the last one is a duplicate
gt = GroundTruthFrame("clip", 0, (GroundTruthObject("diver", a), GroundTruthObject("diver", Box(0.6, 0.6, 0.8, 0.8))))
dets = [
    Detection("clip", 0, "diver", 0.9, Box(0.11, 0.1, 0.31, 0.3)),
    Detection("clip", 0, "diver", 0.8, Box(0.1, 0.12, 0.3, 0.32)),
    Detection("clip", 0, "diver", 0.7, Box(0.6, 0.62, 0.8, 0.82)),
]
r = match_frame(dets, gt, match_iou=0.5)
for p in r.tp_pairs:
    print(f"TP conf={p.detection.confidence} -> gt {p.gt_index}, iou={p.iou:.3f}")
print("FP confidences:", [d.confidence for d in r.fp_detections])
print("missed GT:", r.fn_indices)

# greedy is confidence-first, not a maximum matching
g1, g2 = Box(0.30, 0.2, 0.50, 0.4), Box(0.24, 0.2, 0.44, 0.4)
hard = GroundTruthFrame("clip", 1, (GroundTruthObject("diver", g1), GroundTruthObject("diver", g2)))
r = match_frame([Detection("clip", 1, "diver", 0.9, g1),
                 Detection("clip", 1, "diver", 0.8, Box(0.36, 0.2, 0.56, 0.4))], hard)
print("greedy TPs on the hard frame:", len(r.tp_pairs), "(an exhaustive assignment finds 2)")
