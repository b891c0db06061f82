"""Command-line interface.

Subcommands convert between representation files, sweep loss landscapes,
evaluate detections, property-check the Cholesky bounds, and compare
annotations against segmentation masks.  Angles are degrees at this boundary.

Exit codes: 0 success, 1 unreadable input, 2 some lines were malformed,
3 a property check failed, 64 usage error, 65 no usable data.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import formats
from .core import (
    ConversionConfig,
    DomainError,
    Gaussian2,
    GauchoParams,
    InvalidInputError,
    ObbLe,
    cholesky_bounds,
    obb_to_cholesky,
    obb_to_gaussian,
)
from .evaluation import (
    DetectionRecord,
    GroundTruthRecord,
    average_precision,
    orientation_error,
)
from .heads import (
    AnchorBox,
    AnchorFreeContext,
    HeadOffsets,
    decode_anchor_based,
    decode_anchor_free,
)
from .losses import LossConfig, loss, loss_grad, parametrization_trace, sweep_landscape
from .overlap import RasterGrid, shape_mask_iou
from .core import obb_to_ellipse

EXIT_OK = 0
EXIT_IO = 1
EXIT_PARTIAL = 2
EXIT_PROPERTY = 3
EXIT_USAGE = 64
EXIT_EMPTY = 65

SEED_ENV = "GAUCHO_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_lines(path: str):
    if path == "-":
        return sys.stdin.read().splitlines()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise IOError(f"cannot read {path}: {exc}") from exc


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", encoding="utf-8", newline=""), True
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def _parse_floats(text: str, n: int, what: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != n:
        raise InvalidInputError(f"{what} needs {n} comma-separated numbers")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise InvalidInputError(f"{what} needs numbers, got {text!r}") from None


def _default_seed(args_seed) -> int:
    if args_seed is not None:
        return args_seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InvalidInputError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0


@dataclass
class LineReport:
    parsed: int = 0
    failures: list = None

    def __post_init__(self):
        self.failures = []

    def fail(self, lineno: int, msg: str):
        self.failures.append((lineno, msg))

    def flush(self, label: str):
        for lineno, msg in self.failures:
            print(f"{label}:{lineno}: {msg}", file=sys.stderr)

    def exit_code(self) -> int:
        if self.parsed == 0:
            return EXIT_EMPTY
        return EXIT_PARTIAL if self.failures else EXIT_OK


def _iter_records(path: str, report: LineReport):
    """Shape records from a JSONL file, tolerating bad lines."""
    for lineno, line in enumerate(_read_lines(path), 1):
        try:
            rec = formats.parse_record_line(line)
        except formats.RecordError as exc:
            report.fail(lineno, str(exc))
            continue
        if rec is None:
            continue
        report.parsed += 1
        yield rec


def _iter_dota(path: str, report: LineReport):
    image_id = os.path.splitext(os.path.basename(path))[0]
    for lineno, line in enumerate(_read_lines(path), 1):
        try:
            ann = formats.parse_dota_line(line)
        except formats.RecordError as exc:
            report.fail(lineno, str(exc))
            continue
        if ann is None:
            continue
        try:
            obb = formats.dota_to_obb(ann)
        except (DomainError, InvalidInputError) as exc:
            report.fail(lineno, str(exc))
            continue
        report.parsed += 1
        yield formats.Record(image_id, ann.category, "obb",
                             formats.obb_to_values(obb, "obb"),
                             None, ann.difficult)


def cmd_convert(args) -> int:
    conv = ConversionConfig(s=args.s)
    report = LineReport()
    if args.from_ == "dota":
        records = _iter_dota(args.input, report)
    else:
        records = _iter_records(args.input, report)
    out, close = _open_out(args.out)
    try:
        for rec in records:
            if args.from_ != "dota" and rec.kind != args.from_:
                report.parsed -= 1
                report.fail(0, f"record kind {rec.kind!r} does not match --from {args.from_}")
                continue
            obb = formats.record_to_obb(rec, conv)
            values = formats.obb_to_values(obb, args.to, conv)
            print(formats.dump_record_line(formats.record_dict(
                rec.image_id, rec.category, args.to, values,
                rec.score, rec.difficult)), file=out)
    finally:
        if close:
            out.close()
    report.flush(args.input)
    return report.exit_code()


def _write_csv(out, header, rows):
    writer = csv.writer(out)
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)


def cmd_landscape(args) -> int:
    conv = ConversionConfig(s=args.s)
    w, h, theta_deg = _parse_floats(args.gt, 3, "--gt")
    base = ObbLe.canonical(0.0, 0.0, w, h, math.radians(theta_deg))
    out, close = _open_out(args.out)
    try:
        if args.trace:
            rows = parametrization_trace(base, args.steps, conv)
            _write_csv(out, ["rotation_deg", "le_w", "le_theta_deg",
                             "a", "b", "c", "alpha", "beta", "gamma"],
                       [[repr(math.degrees(r.rotation)), repr(r.le_w),
                         repr(math.degrees(r.le_theta)), repr(r.a), repr(r.b),
                         repr(r.c), repr(r.alpha), repr(r.beta), repr(r.gamma)]
                        for r in rows])
            return EXIT_OK
        dims = (_parse_floats(args.dims, 2, "--dims")
                if args.dims else [base.w, base.h])
        if dims[0] < dims[1]:
            dims = [dims[1], dims[0]]
        cfg = LossConfig(kind=args.loss, transform=args.transform,
                         tau=args.tau, kld_direction=args.kld_direction)
        land = sweep_landscape(base, (dims[0], dims[1]), cfg, conv, args.steps)
        rows = [[repr(math.degrees(t)), repr(v), ""]
                for t, v in zip(land.thetas, land.losses)]
        for m in land.minima:
            rows.append([repr(math.degrees(m.theta)), repr(m.loss),
                         "global_min" if m.is_global else "local_min"])
        _write_csv(out, ["theta_deg", "loss", "tag"], rows)
    finally:
        if close:
            out.close()
    return EXIT_OK


def _load_eval_files(args, conv):
    gt_report = LineReport()
    gts = []
    for rec in _iter_records(args.gt, gt_report):
        gts.append(GroundTruthRecord(rec.image_id, rec.category,
                                     formats.record_to_obb(rec, conv),
                                     rec.difficult))
    pred_report = LineReport()
    dets = []
    for rec in _iter_records(args.pred, pred_report):
        score = 1.0 if rec.score is None else rec.score
        dets.append(DetectionRecord(rec.image_id, rec.category,
                                    formats.record_to_obb(rec, conv), score))
    gt_report.flush(args.gt)
    pred_report.flush(args.pred)
    failed = bool(gt_report.failures or pred_report.failures)
    return gts, dets, failed


def cmd_eval(args) -> int:
    conv = ConversionConfig(s=args.s)
    gts, dets, had_failures = _load_eval_files(args, conv)
    if not gts:
        print("error: no usable ground-truth records", file=sys.stderr)
        return EXIT_EMPTY
    if args.thresholds == "coco":
        thresholds = [0.5 + 0.05 * i for i in range(10)]
    else:
        parts = args.thresholds.split(",")
        thresholds = []
        for p in parts:
            try:
                t = float(p)
            except ValueError:
                raise InvalidInputError(f"bad threshold {p!r}") from None
            if not 0.0 < t <= 1.0:
                raise InvalidInputError(f"threshold must be in (0, 1], got {t}")
            thresholds.append(t)
    ap = average_precision(dets, gts, thresholds, mode=args.mode, conv=conv,
                           interpolation=args.interpolation,
                           include_difficult=args.include_difficult)
    print(f"evaluated {len(dets)} detections against {len(gts)} ground truths "
          f"({args.mode} IoU)")
    for cat in sorted(ap.per_category):
        cells = "  ".join(f"AP{int(round(t * 100)):02d}={ap.per_category[cat][t]:.4f}"
                          for t in thresholds)
        print(f"  {cat}: {cells}")
    for t in thresholds:
        print(f"AP@{t:.2f}: {ap.per_threshold[t]:.6f}")
    print(f"AP (mean over thresholds): {ap.mean_ap:.6f}")
    payload = {
        "mode": args.mode,
        "thresholds": thresholds,
        "per_category": {c: {f"{t:g}": ap.per_category[c][t] for t in thresholds}
                         for c in ap.per_category},
        "per_threshold": {f"{t:g}": ap.per_threshold[t] for t in thresholds},
        "mean_ap": ap.mean_ap,
    }
    if args.orientation:
        rep = orientation_error(dets, gts, iou_threshold=args.iou_threshold)
        if rep.empty:
            print("orientation: no matched pairs")
            payload["orientation"] = {"empty": True}
        else:
            print(f"orientation: AOE={rep.aoe:.4f} deg  MOE={rep.moe:.4f} deg  "
                  f"({rep.used} of {rep.matched} matches used)")
            for b in rep.bins:
                if b.count:
                    print(f"  [{b.lo_deg:+.0f}, {b.hi_deg:+.0f}): n={b.count} "
                          f"mean={b.mean:.4f} median={b.med:.4f}")
            payload["orientation"] = {
                "empty": False, "aoe": rep.aoe, "moe": rep.moe,
                "matched": rep.matched, "used": rep.used,
                "bins": [{"lo": b.lo_deg, "hi": b.hi_deg, "count": b.count,
                          "mean": b.mean, "median": b.med,
                          "q1": b.q1, "q3": b.q3} for b in rep.bins],
            }
    if args.json_out:
        out, close = _open_out(args.json_out)
        json.dump(payload, out, indent=2)
        out.write("\n")
        if close:
            out.close()
    return EXIT_PARTIAL if had_failures else EXIT_OK


def cmd_bounds_check(args) -> int:
    seed = _default_seed(args.seed)
    rng = np.random.default_rng(seed)
    n = args.samples
    if n < 1:
        raise InvalidInputError(f"--samples must be positive, got {n}")
    w = rng.uniform(0.5, 40.0, n)
    h = rng.uniform(0.5, 40.0, n)
    w, h = np.maximum(w, h), np.minimum(w, h)
    theta = rng.uniform(-math.pi / 2, math.pi / 2, n)
    s = np.exp(rng.uniform(math.log(1.0 / 16.0), math.log(0.5), n))
    tol = 1e-9
    failures = []

    lw = s * w * w
    lh = s * h * h
    ct, st = np.cos(theta), np.sin(theta)
    a = lw * ct * ct + lh * st * st
    b = lw * st * st + lh * ct * ct
    c = (lw - lh) * st * ct
    lmax, lmin = lw, lh  # w >= h
    alpha = np.sqrt(a)
    gamma = c / alpha
    beta = np.sqrt(b - gamma * gamma)
    rmax, rmin = np.sqrt(lmax), np.sqrt(lmin)

    def check(name, cond):
        bad = np.nonzero(~cond)[0]
        for i in bad[:10]:
            failures.append(
                f"{name}: sample {i} (w={w[i]!r}, h={h[i]!r}, "
                f"theta={theta[i]!r}, s={s[i]!r}, seed={seed})")
        return bad.size

    n_bad = 0
    scale = np.maximum(lmax, 1.0)
    n_bad += check("a within eigenvalue range",
                   (a >= lmin - tol * scale) & (a <= lmax + tol * scale))
    n_bad += check("b within eigenvalue range",
                   (b >= lmin - tol * scale) & (b <= lmax + tol * scale))
    n_bad += check("|c| within half eigengap",
                   np.abs(c) <= 0.5 * (lmax - lmin) + tol * scale)
    dscale = np.maximum(rmax, 1.0)
    n_bad += check("alpha within sqrt range",
                   (alpha >= rmin - tol * dscale) & (alpha <= rmax + tol * dscale))
    n_bad += check("beta within sqrt range",
                   (beta >= rmin - tol * dscale) & (beta <= rmax + tol * dscale))
    n_bad += check("|gamma| within diagonal gap",
                   np.abs(gamma) <= rmax - rmin + tol * dscale)

    # tightness: at theta_star the bound is met to 1e-9
    distinct = w > h
    ws, hs, ss = w[distinct], h[distinct], s[distinct]
    sw = np.sqrt(ss) * ws
    sh = np.sqrt(ss) * hs
    t_star = 0.5 * np.arccos((sh - sw) / (sh + sw))
    cts, sts = np.cos(t_star), np.sin(t_star)
    a_s = ss * ws * ws * cts * cts + ss * hs * hs * sts * sts
    c_s = (ss * ws * ws - ss * hs * hs) * sts * cts
    gamma_star = np.abs(c_s / np.sqrt(a_s))
    gap = sw - sh
    bad_tight = np.nonzero(gamma_star < gap - 1e-9)[0]
    for i in bad_tight[:10]:
        failures.append(
            f"gamma bound not attained: sample (w={ws[i]!r}, h={hs[i]!r}, "
            f"s={ss[i]!r}, seed={seed})")
    n_bad += bad_tight.size

    if failures:
        print(f"bounds check FAILED: {n_bad} violations over {n} samples "
              f"(seed={seed})", file=sys.stderr)
        for f in failures:
            print(f"  {f}", file=sys.stderr)
        return EXIT_PROPERTY
    print(f"bounds check passed: {n} samples, seed={seed}, "
          f"diagonal in [sqrt(lmin), sqrt(lmax)], |gamma| <= gap, "
          f"tightness within 1e-9")
    return EXIT_OK


def cmd_mask_iou(args) -> int:
    conv = ConversionConfig(s=args.s)
    ann_report = LineReport()
    anns = list(_iter_records(args.ann, ann_report))
    mask_report = LineReport()
    masks = []
    for lineno, line in enumerate(_read_lines(args.masks), 1):
        try:
            m = formats.parse_mask_line(line)
        except formats.RecordError as exc:
            mask_report.fail(lineno, str(exc))
            continue
        if m is None:
            continue
        mask_report.parsed += 1
        masks.append(m)
    ann_report.flush(args.ann)
    mask_report.flush(args.masks)
    if not anns or not masks:
        print("error: need at least one annotation and one mask", file=sys.stderr)
        return EXIT_EMPTY

    mask_groups: dict[tuple[str, str], list[formats.MaskRecord]] = {}
    for m in masks:
        mask_groups.setdefault((m.image_id, m.category), []).append(m)
    used: dict[tuple[str, str], int] = {}
    rows = []
    per_cat: dict[str, list[tuple[float, float]]] = {}
    for rec in anns:
        key = (rec.image_id, rec.category)
        idx = used.get(key, 0)
        group = mask_groups.get(key, [])
        if idx >= len(group):
            print(f"warning: no mask for {rec.image_id}/{rec.category} "
                  f"(annotation {idx + 1}), skipped", file=sys.stderr)
            continue
        used[key] = idx + 1
        mask = group[idx]
        obb = formats.record_to_obb(rec, conv)
        oe = obb_to_ellipse(obb, conv)
        polys = [list(p) for p in mask.polygons]
        flat = [pt for poly in polys for pt in poly]
        grid = RasterGrid.around([obb, oe, flat], args.resolution)
        iou_obb = shape_mask_iou(obb, polys, grid)
        iou_oe = shape_mask_iou(oe, polys, grid)
        rows.append([f"{rec.image_id}#{rec.category}#{idx}", rec.category,
                     repr(iou_obb), repr(iou_oe)])
        per_cat.setdefault(rec.category, []).append((iou_obb, iou_oe))
    for key, group in mask_groups.items():
        leftover = len(group) - used.get(key, 0)
        if leftover:
            print(f"warning: {leftover} unmatched masks for {key[0]}/{key[1]}",
                  file=sys.stderr)
    if not rows:
        print("error: no annotation/mask pairs", file=sys.stderr)
        return EXIT_EMPTY
    for cat in sorted(per_cat):
        obb_vals = sorted(v[0] for v in per_cat[cat])
        oe_vals = sorted(v[1] for v in per_cat[cat])

        def med(vals):
            k = len(vals)
            mid = k // 2
            return vals[mid] if k % 2 else 0.5 * (vals[mid - 1] + vals[mid])
        rows.append(["median", cat, repr(med(obb_vals)), repr(med(oe_vals))])
    out, close = _open_out(args.out)
    try:
        _write_csv(out, ["record_id", "category", "iou_obb", "iou_oe"], rows)
    finally:
        if close:
            out.close()
    if ann_report.failures or mask_report.failures:
        return EXIT_PARTIAL
    return EXIT_OK


def _jsonl_transform(path, out_path, fn):
    """Shared loop for the machine-facing line protocols."""
    report = LineReport()
    out, close = _open_out(out_path)
    try:
        for lineno, line in enumerate(_read_lines(path), 1):
            text = line.strip()
            if not text:
                continue
            try:
                obj = json.loads(text)
                if not isinstance(obj, dict):
                    raise formats.RecordError("row must be a JSON object")
                result = fn(obj)
            except (formats.RecordError, InvalidInputError, DomainError,
                    KeyError, TypeError, ValueError) as exc:
                report.fail(lineno, f"{type(exc).__name__}: {exc}")
                continue
            report.parsed += 1
            print(json.dumps(result), file=out)
    finally:
        if close:
            out.close()
    report.flush(path)
    return report.exit_code()


def _vec(obj, key, n):
    v = obj.get(key)
    if not (isinstance(v, list) and len(v) == n):
        raise formats.RecordError(f"{key} must be a {n}-element array")
    return [float(x) for x in v]


def cmd_loss_grad(args) -> int:
    cfg = LossConfig(kind=args.kind, transform=args.transform, tau=args.tau,
                     kld_direction=args.kld_direction)

    def run(obj):
        pv = _vec(obj, "pred", 5)
        gv = _vec(obj, "gt", 5)
        pred = GauchoParams(*pv)
        gt = Gaussian2((gv[0], gv[1]), gv[2], gv[3], gv[4])
        from .core import cholesky_to_gaussian
        value = loss(cholesky_to_gaussian(pred), gt, cfg)
        grad = loss_grad(pred, gt, cfg)
        return {"loss": value, "grad": [float(g) for g in grad]}

    return _jsonl_transform(args.input, args.out, run)


def cmd_decode_head(args) -> int:
    conv = ConversionConfig(s=args.s)

    def run(obj):
        off = HeadOffsets(*_vec(obj, "offsets", 5))
        if args.head == "anchor-free":
            px, py, t = _vec(obj, "ctx", 3)
            p = decode_anchor_free(AnchorFreeContext(px, py, t), off)
        else:
            ax, ay, aw, ah = _vec(obj, "anchor", 4)
            p = decode_anchor_based(AnchorBox(ax, ay, aw, ah), off, conv,
                                    args.delta)
        return {"gaucho": [p.cx, p.cy, p.alpha, p.beta, p.gamma]}

    return _jsonl_transform(args.input, args.out, run)


def build_parser() -> _Parser:
    parser = _Parser(prog="gaucho", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def add_s(p):
        p.add_argument("--s", type=float, default=0.25,
                       help="covariance scale (default 1/4)")

    p = sub.add_parser("convert", help="convert annotation files between representations")
    p.add_argument("input")
    p.add_argument("--from", dest="from_", required=True,
                   choices=["dota", "obb", "gaucho", "ellipse"])
    p.add_argument("--to", required=True,
                   choices=["obb", "gaucho", "ellipse", "gaussian"])
    add_s(p)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("landscape", help="angle sweep of a loss, or a rotation trace")
    p.add_argument("--gt", required=True, metavar="W,H,THETA_DEG")
    p.add_argument("--dims", default=None, metavar="W,H",
                   help="candidate dimensions (default: gt dims)")
    p.add_argument("--loss", default="kld", choices=["gwd", "kld", "probiou"])
    p.add_argument("--transform", default="raw_distance",
                   choices=["raw_distance", "log_saturating"])
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--kld-direction", default="pred_to_gt",
                   choices=["pred_to_gt", "gt_to_pred", "symmetric"])
    p.add_argument("--steps", type=int, default=360)
    p.add_argument("--trace", action="store_true",
                   help="emit the representation trace of a rotating box instead")
    add_s(p)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_landscape)

    p = sub.add_parser("eval", help="average precision and orientation error")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--mode", default="obb", choices=["obb", "oe"])
    p.add_argument("--thresholds", default="coco",
                   help='comma-separated IoU thresholds, or "coco" for 0.50:0.05:0.95')
    p.add_argument("--interpolation", default="all_points",
                   choices=["all_points", "voc07"])
    p.add_argument("--include-difficult", action="store_true",
                   help="score difficult ground truths like ordinary ones")
    p.add_argument("--orientation", action="store_true")
    p.add_argument("--iou-threshold", type=float, default=0.5,
                   help="matching threshold for the orientation report")
    add_s(p)
    p.add_argument("--json-out", default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("bounds-check",
                       help="property-check diagonal and gamma bounds on random boxes")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=None,
                   help=f"rng seed (default: ${SEED_ENV} or 0)")
    p.set_defaults(fn=cmd_bounds_check)

    p = sub.add_parser("mask-iou",
                       help="box and ellipse IoU against polygon masks")
    p.add_argument("--ann", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--resolution", type=int, default=256)
    add_s(p)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_mask_iou)

    p = sub.add_parser("loss-grad",
                       help="line protocol: loss and gradient per pred/gt row")
    p.add_argument("input")
    p.add_argument("--kind", default="kld", choices=["gwd", "kld", "probiou"])
    p.add_argument("--transform", default="raw_distance",
                   choices=["raw_distance", "log_saturating"])
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--kld-direction", default="pred_to_gt",
                   choices=["pred_to_gt", "gt_to_pred", "symmetric"])
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_loss_grad)

    p = sub.add_parser("decode-head",
                       help="line protocol: decode head offsets to parameters")
    p.add_argument("input")
    p.add_argument("--head", required=True, choices=["anchor-free", "anchor-based"])
    p.add_argument("--delta", type=float, default=None)
    add_s(p)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_decode_head)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except IOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidInputError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
