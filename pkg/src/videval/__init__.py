"""Evaluation toolkit for object detectors running on video.

Accuracy (AP family, mean IOU), temporal stability along ground-truth
tracklets (translation, scale/aspect ratio, fragmentation), a false-negative
taxonomy and dataset distribution statistics.
"""

__version__ = "0.1.0"

from .geometry import Box, DegenerateBoxError, FrameSize, center, iou, normalize
from .ingest import (AnnotationError, Detection, GroundTruthFrame, GroundTruthObject, VideoManifest,
                     filter_boxes, parse_detections, parse_manifest, parse_voc, parse_yolo_labels,
                     write_yolo_labels)
from .matching import FrameMatchResult, MatchPair, match_all, match_frame
from .tracklets import Tracklet, attach_detections, build_tracklets
from .accuracy import (EvaluationReport, PRCurve, ap_suite, average_precision, evaluate_accuracy, mean_iou,
                       pr_curve, select_confidence_threshold)
from .stability import (StabilityReport, fragmentation_error, scale_aspect_error, stability_report,
                        translation_error)
from .failures import FailureBreakdown, classify_false_negatives, is_edge_of_frame, is_occluded
from .stats import Histogram1D, Histogram2D, area_distribution, centroid_distribution, split_summary
