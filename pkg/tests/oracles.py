"""Brute-force reference computations used by the tests.

Nothing here calls into the code paths under test except for plain data
types (Box, Detection, GroundTruthFrame).
"""

import itertools

import numpy as np


def raster_iou(a, b, n=1000):
    """IOU by counting cell centers of an n x n grid over the unit square."""
    c = (np.arange(n) + 0.5) / n
    def mask(bx):
        mx = (c >= bx.x_min) & (c < bx.x_max)
        my = (c >= bx.y_min) & (c < bx.y_max)
        return np.outer(mx, my)
    ma, mb = mask(a), mask(b)
    union = np.count_nonzero(ma | mb)
    return np.count_nonzero(ma & mb) / union if union else 0.0


def exact_iou(a, b):
    # independent closed form: overlap lengths via np.clip
    ix = np.clip(min(a.x_max, b.x_max) - max(a.x_min, b.x_min), 0, None)
    iy = np.clip(min(a.y_max, b.y_max) - max(a.y_min, b.y_min), 0, None)
    inter = ix * iy
    ua = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter
    return float(inter / ua)


def _norm(label):
    return label.strip().lower()


def greedy_tp_labels(dets, gts, match_iou):
    """Greedy matcher written directly from the protocol description.

    ``dets`` and ``gts`` belong to one frame; returns (tp flag per det, iou per det).
    """
    best = []
    for d in dets:
        vals = [exact_iou(d.box, g.box) for g in gts if _norm(g.object_class) == _norm(d.object_class)]
        best.append(max(vals, default=-1.0))
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, -best[i], i))
    taken = set()
    flags = [False] * len(dets)
    ious = [0.0] * len(dets)
    for i in order:
        cand = [(exact_iou(dets[i].box, g.box), j) for j, g in enumerate(gts)
                if j not in taken and _norm(g.object_class) == _norm(dets[i].object_class)]
        if not cand:
            continue
        v = max(c[0] for c in cand)
        j = min(jj for vv, jj in cand if vv == v)
        if v >= match_iou:
            taken.add(j)
            flags[i] = True
            ious[i] = v
    return flags, ious


def brute_force_ap(dets, frames, match_iou):
    """Enumerate every confidence cut; at each, re-match from scratch.

    AP = sum over cuts (descending) of (recall increase) * precision.
    """
    n_gt = sum(len(f.objects) for f in frames)
    gt_by_frame = {(f.video_id, f.frame_index): list(f.objects) for f in frames}
    cuts = sorted({d.confidence for d in dets}, reverse=True)
    ap, prev_recall = 0.0, 0.0
    for c in cuts:
        kept = [d for d in dets if d.confidence >= c]
        tp = 0
        keys = {(d.video_id, d.frame_index) for d in kept}
        for k in keys:
            fd = [d for d in kept if (d.video_id, d.frame_index) == k]
            flags, _ = greedy_tp_labels(fd, gt_by_frame.get(k, []), match_iou)
            tp += sum(flags)
        precision = tp / len(kept)
        recall = tp / n_gt
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def optimal_assignment(n_left, n_right, weight, threshold):
    """Exhaustive one-to-one assignment maximizing (#pairs >= threshold, total weight).

    ``weight(i, j)`` may return None for forbidden pairs. Returns (count, total, pairs).
    """
    best = (0, 0.0, ())
    rights = list(range(n_right)) + [None] * n_left
    for perm in set(itertools.permutations(rights, n_left)):
        pairs = []
        for i, j in enumerate(perm):
            if j is None:
                continue
            w = weight(i, j)
            if w is not None and w >= threshold:
                pairs.append((i, j, w))
        score = (len(pairs), sum(p[2] for p in pairs))
        if score > best[:2]:
            best = (score[0], score[1], tuple(sorted(pairs)))
    return best


def brute_flips(status):
    n = 0
    for k in range(1, len(status)):
        if status[k] != status[k - 1]:
            n += 1
    return n


def pop_std(values):
    values = list(values)
    m = sum(values) / len(values)
    return (sum((v - m) ** 2 for v in values) / len(values)) ** 0.5
