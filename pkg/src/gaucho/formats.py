"""Parsers and emitters for annotation files.

Three inputs are understood: the aerial-dataset text format (eight corner
coordinates, category, difficult flag per line, with optional metadata header
lines), one-record-per-line JSON with exactly one shape key among ``obb``,
``gaucho`` and ``ellipse``, and nothing else.  Angles are degrees on disk and
radians in memory.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .core import (
    DEFAULT_CONFIG,
    ConversionConfig,
    GauchoParams,
    ObbLe,
    cholesky_to_obb,
    obb_to_cholesky,
    obb_to_ellipse,
    obb_to_gaussian,
)
from .overlap import min_area_rect

SHAPE_KEYS = ("obb", "gaucho", "ellipse")


class RecordError(ValueError):
    """A single malformed input line; carries no position, the caller does."""


@dataclass(frozen=True)
class DotaLine:
    corners: tuple[float, ...]  # x1 y1 ... x4 y4
    category: str
    difficult: bool


def parse_dota_line(line: str) -> DotaLine | None:
    """One annotation line, or None for blanks and metadata headers."""
    text = line.strip()
    if not text:
        return None
    parts = text.split()
    try:
        float(parts[0])
    except ValueError:
        return None  # imagesource:/gsd: style header
    if len(parts) < 9:
        raise RecordError(f"expected 8 coordinates and a category, got {len(parts)} fields")
    try:
        coords = tuple(float(p) for p in parts[:8])
    except ValueError as exc:
        raise RecordError(f"bad coordinate: {exc}") from None
    if not all(math.isfinite(c) for c in coords):
        raise RecordError("coordinates must be finite")
    category = parts[8]
    difficult = False
    if len(parts) > 9:
        if parts[9] not in ("0", "1"):
            raise RecordError(f"difficult flag must be 0 or 1, got {parts[9]!r}")
        difficult = parts[9] == "1"
    return DotaLine(coords, category, difficult)


def dota_to_obb(ann: DotaLine) -> ObbLe:
    pts = [(ann.corners[2 * i], ann.corners[2 * i + 1]) for i in range(4)]
    return min_area_rect(pts)


@dataclass(frozen=True)
class Record:
    """One object annotation with a single shape representation."""

    image_id: str
    category: str
    kind: str  # one of SHAPE_KEYS
    values: tuple[float, ...]
    score: float | None = None
    difficult: bool = False


def parse_record(obj: dict) -> Record:
    if not isinstance(obj, dict):
        raise RecordError("record must be a JSON object")
    present = [k for k in SHAPE_KEYS if k in obj]
    if len(present) != 1:
        raise RecordError(
            f"record must contain exactly one of {SHAPE_KEYS}, found {present or 'none'}")
    kind = present[0]
    values = obj[kind]
    if not (isinstance(values, (list, tuple)) and len(values) == 5):
        raise RecordError(f"{kind} must be a 5-element array")
    try:
        values = tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise RecordError(f"{kind} entries must be numbers") from None
    if not all(math.isfinite(v) for v in values):
        raise RecordError(f"{kind} entries must be finite")
    if kind in ("obb", "ellipse"):
        if not -90.0 <= values[4] < 90.0:
            raise RecordError(f"theta_deg must lie in [-90, 90), got {values[4]}")
        if values[2] <= 0 or values[3] <= 0:
            raise RecordError(f"{kind} sizes must be positive")
    else:
        if values[2] <= 0 or values[3] <= 0:
            raise RecordError("gaucho alpha and beta must be positive")
    image_id = obj.get("image_id")
    category = obj.get("category")
    if not isinstance(image_id, str) or not image_id:
        raise RecordError("image_id must be a non-empty string")
    if not isinstance(category, str) or not category:
        raise RecordError("category must be a non-empty string")
    score = obj.get("score")
    if score is not None:
        try:
            score = float(score)
        except (TypeError, ValueError):
            raise RecordError("score must be a number") from None
        if not (math.isfinite(score) and 0.0 <= score <= 1.0):
            raise RecordError(f"score must be in [0, 1], got {score}")
    difficult = obj.get("difficult", False)
    if difficult in (0, 1):
        difficult = bool(difficult)
    if not isinstance(difficult, bool):
        raise RecordError("difficult must be boolean or 0/1")
    return Record(image_id, category, kind, values, score, difficult)


def parse_record_line(line: str) -> Record | None:
    text = line.strip()
    if not text:
        return None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecordError(f"invalid JSON: {exc}") from None
    return parse_record(obj)


def record_to_obb(rec: Record, conv: ConversionConfig = DEFAULT_CONFIG) -> ObbLe:
    v = rec.values
    if rec.kind == "obb":
        return ObbLe.canonical(v[0], v[1], v[2], v[3], math.radians(v[4]))
    if rec.kind == "ellipse":
        # doubling the semi-axes is the exact inverse of the ellipse decode
        return ObbLe.canonical(v[0], v[1], 2.0 * v[2], 2.0 * v[3],
                               math.radians(v[4]))
    return cholesky_to_obb(GauchoParams(*v), conv)


def obb_to_values(obb: ObbLe, kind: str,
                  conv: ConversionConfig = DEFAULT_CONFIG) -> tuple[float, ...]:
    """Serialize a box into the 5-tuple of the requested representation."""
    if kind == "obb":
        return (obb.cx, obb.cy, obb.w, obb.h, math.degrees(obb.theta))
    if kind == "gaucho":
        p = obb_to_cholesky(obb, conv)
        return (p.cx, p.cy, p.alpha, p.beta, p.gamma)
    if kind == "ellipse":
        e = obb_to_ellipse(obb, conv)
        return (e.cx, e.cy, e.r1, e.r2, math.degrees(e.theta))
    if kind == "gaussian":
        g = obb_to_gaussian(obb, conv)
        return (g.mu[0], g.mu[1], g.a, g.b, g.c)
    raise RecordError(f"unknown target kind {kind!r}")


def record_dict(image_id: str, category: str, kind: str,
                values: tuple[float, ...], score: float | None = None,
                difficult: bool = False) -> dict:
    out: dict = {"image_id": image_id, "category": category,
                 kind: [float(v) for v in values]}
    if score is not None:
        out["score"] = float(score)
    if difficult:
        out["difficult"] = True
    return out


def dump_record_line(obj: dict) -> str:
    return json.dumps(obj, separators=(", ", ": "))


@dataclass(frozen=True)
class MaskRecord:
    image_id: str
    category: str
    polygons: tuple[tuple[tuple[float, float], ...], ...]


def parse_mask_line(line: str) -> MaskRecord | None:
    text = line.strip()
    if not text:
        return None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecordError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise RecordError("mask record must be a JSON object")
    image_id = obj.get("image_id")
    category = obj.get("category")
    if not isinstance(image_id, str) or not isinstance(category, str):
        raise RecordError("mask record needs image_id and category strings")
    if "polygon" in obj:
        polys = [obj["polygon"]]
    elif "polygons" in obj:
        polys = obj["polygons"]
    else:
        raise RecordError("mask record needs a polygon or polygons key")
    if not isinstance(polys, list) or not polys:
        raise RecordError("polygons must be a non-empty list")
    parsed = []
    for poly in polys:
        if not isinstance(poly, list) or len(poly) < 3:
            raise RecordError("each polygon needs at least 3 [x, y] points")
        try:
            pts = tuple((float(x), float(y)) for x, y in poly)
        except (TypeError, ValueError):
            raise RecordError("polygon points must be [x, y] number pairs") from None
        if not all(math.isfinite(x) and math.isfinite(y) for x, y in pts):
            raise RecordError("polygon points must be finite")
        parsed.append(pts)
    return MaskRecord(image_id, category, tuple(parsed))
