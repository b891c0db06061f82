"""Oriented objects as 2D Gaussians with a Cholesky parametrization.

Boxes, ellipses, covariances, and Cholesky factors convert into one another;
losses compare them, heads decode network offsets into them, and the overlap
and evaluation modules score them.
"""

from .core import (
    DEFAULT_CONFIG,
    HALF_PI,
    ISO_TOL,
    CholeskyBounds,
    ConversionConfig,
    DomainError,
    Gaussian2,
    GauchoParams,
    InvalidInputError,
    ObbLe,
    OrientedEllipse,
    cholesky_bounds,
    cholesky_to_gaussian,
    cholesky_to_obb,
    ellipse_to_gaussian,
    ellipse_to_obb,
    gaussian_to_cholesky,
    gaussian_to_ellipse,
    gaussian_to_obb,
    obb_to_cholesky,
    obb_to_ellipse,
    obb_to_gaussian,
    rotate_gaussian,
    rotate_obb,
    rotate_point,
    wrap_angle,
)
from .heads import (
    MAX_EXP_OFFSET,
    AnchorBox,
    AnchorFreeContext,
    HeadOffsets,
    OffsetOverflowError,
    OrientedAnchor,
    decode_anchor_based,
    decode_anchor_free,
    encode_anchor_based,
    encode_anchor_free,
    refine_oriented_anchor,
)
from .losses import (
    KLD_DIRECTIONS,
    LOSS_KINDS,
    TRANSFORMS,
    LossConfig,
    LossLandscape,
    SweepMinimum,
    TraceRow,
    loss,
    loss_grad,
    parametrization_trace,
    sweep_landscape,
)
from .overlap import (
    ConvexPoly,
    RasterGrid,
    ellipse_iou,
    min_area_rect,
    obb_iou,
    raster_iou,
    shape_mask_iou,
)
from .evaluation import (
    ApResult,
    BinStats,
    DetectionRecord,
    GroundTruthRecord,
    HarnessResult,
    MatchResult,
    MatchedPair,
    OrientationReport,
    angular_error_deg,
    average_precision,
    match_detections,
    orientation_error,
    rotation_harness,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CONFIG",
    "HALF_PI",
    "ISO_TOL",
    "MAX_EXP_OFFSET",
    "KLD_DIRECTIONS",
    "LOSS_KINDS",
    "TRANSFORMS",
    "AnchorBox",
    "AnchorFreeContext",
    "ApResult",
    "BinStats",
    "CholeskyBounds",
    "ConversionConfig",
    "ConvexPoly",
    "DetectionRecord",
    "DomainError",
    "Gaussian2",
    "GauchoParams",
    "GroundTruthRecord",
    "HarnessResult",
    "HeadOffsets",
    "InvalidInputError",
    "LossConfig",
    "LossLandscape",
    "MatchResult",
    "MatchedPair",
    "ObbLe",
    "OffsetOverflowError",
    "OrientationReport",
    "OrientedAnchor",
    "OrientedEllipse",
    "RasterGrid",
    "SweepMinimum",
    "TraceRow",
    "angular_error_deg",
    "average_precision",
    "cholesky_bounds",
    "cholesky_to_gaussian",
    "cholesky_to_obb",
    "decode_anchor_based",
    "decode_anchor_free",
    "ellipse_iou",
    "ellipse_to_gaussian",
    "ellipse_to_obb",
    "encode_anchor_based",
    "encode_anchor_free",
    "gaussian_to_cholesky",
    "gaussian_to_ellipse",
    "gaussian_to_obb",
    "loss",
    "loss_grad",
    "match_detections",
    "min_area_rect",
    "obb_iou",
    "obb_to_cholesky",
    "obb_to_ellipse",
    "obb_to_gaussian",
    "orientation_error",
    "parametrization_trace",
    "raster_iou",
    "refine_oriented_anchor",
    "rotate_gaussian",
    "rotate_obb",
    "rotate_point",
    "rotation_harness",
    "shape_mask_iou",
    "sweep_landscape",
    "wrap_angle",
]
