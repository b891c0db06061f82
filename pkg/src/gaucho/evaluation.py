"""Matching, average precision, and orientation-error statistics for rotated
object detection.

Matching is the usual greedy protocol: detections in descending score order
each claim the highest-IoU unmatched ground truth at or above the IoU
threshold, independently per (image_id, category) group.  AP uses all-points
interpolation by default with an optional 11-point mode.  Orientation errors
fold the angle difference into [0, 90] degrees, excluding ground truths whose
angle is ambiguous (squares).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from statistics import median, quantiles

from .core import (
    DEFAULT_CONFIG,
    ConversionConfig,
    DomainError,
    InvalidInputError,
    ObbLe,
    obb_to_ellipse,
    rotate_obb,
)
from .overlap import ellipse_iou, obb_iou


@dataclass(frozen=True)
class GroundTruthRecord:
    image_id: str
    category: str
    shape: ObbLe
    difficult: bool = False


@dataclass(frozen=True)
class DetectionRecord:
    image_id: str
    category: str
    shape: ObbLe
    score: float

    def __post_init__(self):
        if not (math.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise InvalidInputError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class MatchedPair:
    det_index: int
    gt_index: int
    iou: float


@dataclass
class MatchResult:
    pairs: list[MatchedPair]
    unmatched_dets: list[int]
    unmatched_gts: list[int]

    def gt_of(self) -> dict[int, int]:
        return {p.det_index: p.gt_index for p in self.pairs}


def _det_sort_key(d: DetectionRecord):
    # intrinsic tie-break so shuffled inputs match identically
    s = d.shape
    return (-d.score, d.image_id, d.category, s.cx, s.cy, s.w, s.h, s.theta)


def match_detections(dets: list[DetectionRecord], gts: list[GroundTruthRecord],
                     iou_fn=obb_iou, threshold: float = 0.5) -> MatchResult:
    """Greedy score-descending matching within (image_id, category) groups."""
    if not (0.0 < threshold <= 1.0):
        raise InvalidInputError(f"threshold must be in (0, 1], got {threshold}")
    gt_groups: dict[tuple[str, str], list[int]] = {}
    for j, gt in enumerate(gts):
        gt_groups.setdefault((gt.image_id, gt.category), []).append(j)
    order = sorted(range(len(dets)), key=lambda i: _det_sort_key(dets[i]))
    taken: set[int] = set()
    pairs = []
    unmatched_dets = []
    for i in order:
        det = dets[i]
        best_j = -1
        best_iou = 0.0
        for j in gt_groups.get((det.image_id, det.category), ()):
            if j in taken:
                continue
            iou = iou_fn(det.shape, gts[j].shape)
            # strict > keeps the earliest gt on ties
            if iou >= threshold and iou > best_iou:
                best_j = j
                best_iou = iou
        if best_j >= 0:
            taken.add(best_j)
            pairs.append(MatchedPair(i, best_j, best_iou))
        else:
            unmatched_dets.append(i)
    unmatched_gts = [j for j in range(len(gts)) if j not in taken]
    return MatchResult(pairs, unmatched_dets, unmatched_gts)


def _iou_fn_for_mode(mode: str, conv: ConversionConfig):
    if mode == "obb":
        return obb_iou, lambda s: s
    if mode == "oe":
        cache: dict[int, object] = {}

        def to_ellipse(s):
            key = id(s)
            if key not in cache:
                cache[key] = obb_to_ellipse(s, conv)
            return cache[key]

        return ellipse_iou, to_ellipse
    raise InvalidInputError(f"unknown mode {mode!r}")


@dataclass
class ApResult:
    per_category: dict[str, dict[float, float]]
    per_threshold: dict[float, float]
    mean_ap: float


def _pr_ap(tp_flags: list[bool], n_gt: int, interpolation: str) -> float:
    """Area under the precision envelope for score-ordered TP/FP flags."""
    if n_gt == 0:
        return math.nan
    recalls = []
    precisions = []
    tp = fp = 0
    for flag in tp_flags:
        if flag:
            tp += 1
        else:
            fp += 1
        recalls.append(tp / n_gt)
        precisions.append(tp / (tp + fp))
    if interpolation == "voc07":
        ap = 0.0
        for r in [i / 10.0 for i in range(11)]:
            best = max((p for p, rr in zip(precisions, recalls) if rr >= r),
                       default=0.0)
            ap += best / 11.0
        return ap
    # all-points: integrate the monotone precision envelope over recall
    mrec = [0.0] + recalls + [1.0]
    mpre = [0.0] + precisions + [0.0]
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    ap = 0.0
    for i in range(1, len(mrec)):
        ap += (mrec[i] - mrec[i - 1]) * mpre[i]
    return ap


def average_precision(dets: list[DetectionRecord], gts: list[GroundTruthRecord],
                      thresholds: list[float], mode: str = "obb",
                      iou_fn=None, conv: ConversionConfig = DEFAULT_CONFIG,
                      interpolation: str = "all_points",
                      include_difficult: bool = False) -> ApResult:
    """Per-category, per-threshold AP plus the grand mean.

    Difficult ground truths neither count toward recall nor turn their
    detections into false positives unless ``include_difficult`` is set.
    """
    if not gts:
        raise DomainError("empty ground-truth set")
    if interpolation not in ("all_points", "voc07"):
        raise InvalidInputError(f"unknown interpolation {interpolation!r}")
    if iou_fn is None:
        iou_fn, conv_shape = _iou_fn_for_mode(mode, conv)
    else:
        conv_shape = lambda s: s  # noqa: E731

    categories = sorted({g.category for g in gts})
    per_category: dict[str, dict[float, float]] = {c: {} for c in categories}
    for cat in categories:
        cat_gts = [g for g in gts if g.category == cat]
        cat_dets = [d for d in dets if d.category == cat]
        n_gt = sum(1 for g in cat_gts
                   if include_difficult or not g.difficult)

        def iou_shaped(a, b):
            return iou_fn(conv_shape(a), conv_shape(b))

        for thr in thresholds:
            res = match_detections(cat_dets, cat_gts, iou_shaped, thr)
            gt_for = res.gt_of()
            order = sorted(range(len(cat_dets)),
                           key=lambda i: _det_sort_key(cat_dets[i]))
            flags = []
            for i in order:
                j = gt_for.get(i)
                if j is None:
                    flags.append(False)
                elif cat_gts[j].difficult and not include_difficult:
                    continue  # ignored: neither TP nor FP
                else:
                    flags.append(True)
            per_category[cat][thr] = _pr_ap(flags, n_gt, interpolation)

    per_threshold = {}
    for thr in thresholds:
        vals = [per_category[c][thr] for c in categories
                if not math.isnan(per_category[c][thr])]
        per_threshold[thr] = sum(vals) / len(vals) if vals else math.nan
    finite = [v for v in per_threshold.values() if not math.isnan(v)]
    mean_ap = sum(finite) / len(finite) if finite else math.nan
    return ApResult(per_category, per_threshold, mean_ap)


def angular_error_deg(theta_pred: float, theta_gt: float) -> float:
    """Angle difference folded into [0, 90] degrees, radians in."""
    d = abs(math.degrees(theta_pred) - math.degrees(theta_gt)) % 180.0
    return min(d, 180.0 - d)


N_BINS = 10


@dataclass
class BinStats:
    lo_deg: float
    hi_deg: float
    count: int
    mean: float | None = None
    med: float | None = None
    q1: float | None = None
    q3: float | None = None


@dataclass
class OrientationReport:
    bins: list[BinStats]
    aoe: float | None
    moe: float | None
    matched: int
    used: int
    empty: bool


def _orientation_stats(samples: list[tuple[float, float]], matched: int) -> OrientationReport:
    """samples: (gt_theta_deg, error_deg) pairs already filtered."""
    edges = [-90.0 + 180.0 * i / N_BINS for i in range(N_BINS + 1)]
    bins = []
    for k in range(N_BINS):
        errs = [e for t, e in samples if edges[k] <= t < edges[k + 1]]
        st = BinStats(edges[k], edges[k + 1], len(errs))
        if errs:
            st.mean = sum(errs) / len(errs)
            st.med = median(errs)
            if len(errs) >= 2:
                qs = quantiles(errs, n=4)
                st.q1, st.q3 = qs[0], qs[2]
            else:
                st.q1 = st.q3 = errs[0]
        bins.append(st)
    if not samples:
        return OrientationReport(bins, None, None, matched, 0, True)
    errs = [e for _, e in samples]
    return OrientationReport(bins, sum(errs) / len(errs), median(errs),
                             matched, len(samples), False)


def orientation_error(dets: list[DetectionRecord], gts: list[GroundTruthRecord],
                      iou_fn=obb_iou, iou_threshold: float = 0.5) -> OrientationReport:
    """Binned angular errors over matched pairs.

    Ambiguous-angle ground truths (squares) take part in matching but are
    excluded from the statistics, as are difficult ones.
    """
    res = match_detections(dets, gts, iou_fn, iou_threshold)
    samples = []
    for p in res.pairs:
        gt = gts[p.gt_index]
        if gt.difficult or gt.shape.ambiguous_angle:
            continue
        err = angular_error_deg(dets[p.det_index].shape.theta, gt.shape.theta)
        samples.append((math.degrees(gt.shape.theta), err))
    return _orientation_stats(samples, len(res.pairs))


@dataclass
class HarnessResult:
    report: OrientationReport
    residuals_deg: dict[float, float]
    skipped: list[tuple[float, str]]


def rotation_harness(gts: list[GroundTruthRecord], angles_deg: list[float],
                     predictor, pivot: tuple[float, float] = (0.0, 0.0),
                     iou_fn=obb_iou, iou_threshold: float = 0.5) -> HarnessResult:
    """Run a predictor against rotated copies of the ground truth.

    For every angle the ground-truth shapes are rotated about ``pivot`` and
    handed to ``predictor``, which returns detections in the rotated frame.
    Per-angle worst-case angular residuals come back alongside the pooled
    orientation report; a predictor that raises skips that angle.
    """
    samples: list[tuple[float, float]] = []
    matched = 0
    residuals: dict[float, float] = {}
    skipped: list[tuple[float, str]] = []
    for ang in angles_deg:
        phi = math.radians(ang)
        rotated = [replace(g, shape=rotate_obb(g.shape, phi, pivot)) for g in gts]
        try:
            dets = list(predictor(rotated))
        except Exception as exc:  # noqa: BLE001 - plug-in boundary
            skipped.append((ang, f"{type(exc).__name__}: {exc}"))
            continue
        res = match_detections(dets, rotated, iou_fn, iou_threshold)
        matched += len(res.pairs)
        worst = 0.0
        for p in res.pairs:
            gt = rotated[p.gt_index]
            err = angular_error_deg(dets[p.det_index].shape.theta, gt.shape.theta)
            worst = max(worst, err)
            if gt.difficult or gt.shape.ambiguous_angle:
                continue
            samples.append((math.degrees(gt.shape.theta), err))
        residuals[ang] = worst
    report = _orientation_stats(samples, matched)
    return HarnessResult(report, residuals, skipped)
