"""
Where detections fail, and what the data looks like
===================================================

Missed boxes are sorted into edge-of-frame, occluded, both, or other.
Dataset statistics summarize box positions, sizes and split composition.
"""

import numpy as np

from videval.failures import classify_false_negatives
from videval.geometry import FrameSize
from videval.ingest import VideoManifest
from videval.matching import match_all
from videval.stats import area_distribution, centroid_distribution, split_summary
from videval.synthetic import noisy_detections, random_video

rng = np.random.default_rng(3)
videos = {f"v{k}": random_video(rng, f"v{k}", n_frames=50, n_objects=4, step=0.03) for k in range(4)}
frames = [f for fs in videos.values() for f in fs]
dets = noisy_detections(rng, frames, miss_prob=0.3)
fb = classify_false_negatives(match_all(dets, frames, 0.5, 0.3), frames)
print("FN total:", fb.total)
for cat, n in fb.counts.items():
    print(f"  {cat:<14} {n:4d}  {fb.fractions[cat]:.2%}")
print("marginal:", fb.marginal)

cent = centroid_distribution(frames, grid=10)
print("centroid heatmap (10x10, rows = y):")
print(cent.counts.T)
areas = area_distribution(frames)
print("area histogram, first bins:", areas.counts[:8])

manifests = [VideoManifest(vid, len(fs), FrameSize(640, 480), environment_tag=env, split_tag=split)
             for (vid, fs), env, split in zip(videos.items(), ["pool", "pool", "ocean", "ocean"],
                                              ["train", "train", "train", "test"])]
for row in split_summary(manifests, frames):
    print(row)
