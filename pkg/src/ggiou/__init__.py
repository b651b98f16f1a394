"""Gaussian-guided IoU: metric, anchor assignment, balanced localization loss."""
from .anchors import AnchorGridSpec, anchor_count, generate_anchors
from .assigner import (
    IGNORE,
    NEGATIVE,
    AssignmentConfig,
    AssignmentResult,
    assign,
    matched_metric,
    positives_per_gt,
)
from .geometry import (
    Box,
    GGIoUParams,
    Intersection,
    InvalidBoxError,
    SigmaSource,
    area,
    gaussian_distance,
    ggiou,
    intersect,
    iou,
    normalize,
    paired_gaussian_distance,
    paired_ggiou,
    paired_iou,
)
from .loss import (
    DeltaEncoding,
    LossConfig,
    balanced_weights,
    calibrate_w_loc,
    decode_deltas,
    encode_deltas,
    localization_loss,
    localization_loss_grad,
    smooth_l1,
)
from .pairwise import MetricMatrix, argmax_per_anchor, argmax_per_gt, metric_matrix

__version__ = "0.1.0"
