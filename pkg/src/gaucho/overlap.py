"""Overlap measures between oriented shapes and polygon masks.

Box-box IoU is exact (convex polygon clipping plus the shoelace formula).
Ellipse-ellipse IoU integrates the vertical chord overlap across scanlines
with an adaptive quadrature.  Shape-mask IoU rasterizes both operands on a
shared grid, which also serves as the independent cross-check for the exact
paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .core import (
    HALF_PI,
    DomainError,
    InvalidInputError,
    ObbLe,
    OrientedEllipse,
    wrap_angle,
)

Point = tuple[float, float]


def _shoelace(poly: list[Point]) -> float:
    """Signed area, positive for counter-clockwise order."""
    area = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return 0.5 * area


def _ensure_ccw(poly: list[Point]) -> list[Point]:
    return poly if _shoelace(poly) >= 0 else poly[::-1]


@dataclass(frozen=True)
class ConvexPoly:
    """Convex polygon, stored counter-clockwise."""

    vertices: tuple[Point, ...]

    def __post_init__(self):
        verts = [(float(x), float(y)) for x, y in self.vertices]
        if len(verts) < 3:
            raise InvalidInputError(f"need at least 3 vertices, got {len(verts)}")
        for x, y in verts:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InvalidInputError("vertices must be finite")
        verts = _ensure_ccw(verts)
        n = len(verts)
        scale = max(max(abs(x), abs(y)) for x, y in verts) or 1.0
        for i in range(n):
            ax, ay = verts[i]
            bx, by = verts[(i + 1) % n]
            cx, cy = verts[(i + 2) % n]
            cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
            if cross <= 1e-9 * scale * scale:
                raise InvalidInputError("polygon must be strictly convex")
        object.__setattr__(self, "vertices", tuple(verts))

    def area(self) -> float:
        return _shoelace(list(self.vertices))


@dataclass(frozen=True)
class RasterGrid:
    """Sampling grid of resolution^2 cell centers over a window."""

    resolution: int
    window: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax

    def __post_init__(self):
        if self.resolution < 64:
            raise InvalidInputError(
                f"resolution must be >= 64, got {self.resolution}")
        xmin, ymin, xmax, ymax = self.window
        if not all(math.isfinite(v) for v in self.window):
            raise InvalidInputError("window must be finite")
        if xmax <= xmin or ymax <= ymin:
            raise DomainError(f"window must have positive extent, got {self.window}")

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """1-D x and y coordinates of the cell centers."""
        xmin, ymin, xmax, ymax = self.window
        n = self.resolution
        xs = xmin + (np.arange(n) + 0.5) * (xmax - xmin) / n
        ys = ymin + (np.arange(n) + 0.5) * (ymax - ymin) / n
        return xs, ys

    @classmethod
    def around(cls, shapes, resolution: int = 256, margin: float = 0.05) -> "RasterGrid":
        """Padded bounding window over a mix of shapes and polygons."""
        xs: list[float] = []
        ys: list[float] = []
        for sh in shapes:
            for x, y in _outline(sh):
                xs.append(x)
                ys.append(y)
        if not xs:
            raise DomainError("no geometry to bound")
        xmin, xmax = min(xs), max(xs)
        ymin, ymax = min(ys), max(ys)
        pad = margin * max(xmax - xmin, ymax - ymin, 1e-9)
        return cls(resolution, (xmin - pad, ymin - pad, xmax + pad, ymax + pad))


def _outline(shape) -> list[Point]:
    if isinstance(shape, ObbLe):
        return shape.corners()
    if isinstance(shape, OrientedEllipse):
        # bounding box of the rotated ellipse
        ct, st = math.cos(shape.theta), math.sin(shape.theta)
        ex = math.hypot(shape.r1 * ct, shape.r2 * st)
        ey = math.hypot(shape.r1 * st, shape.r2 * ct)
        return [(shape.cx - ex, shape.cy - ey), (shape.cx + ex, shape.cy + ey)]
    if isinstance(shape, ConvexPoly):
        return list(shape.vertices)
    return [(float(x), float(y)) for x, y in shape]


def _clip(subject: list[Point], clipper: list[Point]) -> list[Point]:
    """Sutherland-Hodgman clip of a polygon by a counter-clockwise convex one."""
    output = subject
    n = len(clipper)
    for i in range(n):
        if not output:
            return []
        cp1 = clipper[i]
        cp2 = clipper[(i + 1) % n]
        ex, ey = cp2[0] - cp1[0], cp2[1] - cp1[1]

        def inside(p):
            return ex * (p[1] - cp1[1]) - ey * (p[0] - cp1[0]) >= 0

        def intersect(a, b):
            dx, dy = b[0] - a[0], b[1] - a[1]
            denom = ex * dy - ey * dx
            t = (ex * (cp1[1] - a[1]) - ey * (cp1[0] - a[0])) / denom
            return (a[0] + t * dx, a[1] + t * dy)

        input_list = output
        output = []
        s = input_list[-1]
        for e in input_list:
            if inside(e):
                if not inside(s):
                    output.append(intersect(s, e))
                output.append(e)
            elif inside(s):
                output.append(intersect(s, e))
            s = e
    return output


def _corner_loop(x) -> list[Point]:
    if isinstance(x, ConvexPoly):
        return list(x.vertices)
    return _ensure_ccw(x.corners())


def obb_iou(x, y) -> float:
    """Exact IoU of two oriented boxes (or convex polygons)."""
    ax, ay = x.area(), y.area()
    if ax == 0.0 or ay == 0.0:
        raise DomainError("degenerate zero-area shape")
    inter_poly = _clip(_corner_loop(x), _corner_loop(y))
    inter = abs(_shoelace(inter_poly)) if len(inter_poly) >= 3 else 0.0
    union = ax + ay - inter
    return min(max(inter / union, 0.0), 1.0)


def _ellipse_quadratic(e: OrientedEllipse):
    """Coefficients (qa, qb, qc) of (p-mu)^T Q (p-mu) <= 1."""
    ct, st = math.cos(e.theta), math.sin(e.theta)
    i1 = 1.0 / (e.r1 * e.r1)
    i2 = 1.0 / (e.r2 * e.r2)
    qa = i1 * ct * ct + i2 * st * st
    qb = i1 * st * st + i2 * ct * ct
    qc = (i1 - i2) * st * ct
    return qa, qb, qc


def _chord(e, quad_coefs, x: float):
    """The y-interval of the ellipse at abscissa x, or None."""
    qa, qb, qc = quad_coefs
    dx = x - e.cx
    disc = qc * qc * dx * dx - qb * (qa * dx * dx - 1.0)
    if disc <= 0.0:
        return None
    root = math.sqrt(disc)
    mid = -qc * dx / qb
    return e.cy + mid - root / qb, e.cy + mid + root / qb


def ellipse_iou(x: OrientedEllipse, y: OrientedEllipse, tol: float = 1e-4) -> float:
    """IoU of two ellipses by adaptive scanline integration.

    The intersection area is the integral over x of the overlap between the
    two vertical chords; the union follows by inclusion-exclusion.
    """
    if tol <= 0:
        raise InvalidInputError(f"tol must be positive, got {tol}")
    qx = _ellipse_quadratic(x)
    qy = _ellipse_quadratic(y)
    ex = math.sqrt(qx[1] / (qx[0] * qx[1] - qx[2] * qx[2]))
    ey = math.sqrt(qy[1] / (qy[0] * qy[1] - qy[2] * qy[2]))
    lo = max(x.cx - ex, y.cx - ey)
    hi = min(x.cx + ex, y.cx + ey)
    ax, ay = x.area(), y.area()
    if hi <= lo:
        return 0.0

    def overlap(t):
        cx_ = _chord(x, qx, t)
        cy_ = _chord(y, qy, t)
        if cx_ is None or cy_ is None:
            return 0.0
        return max(0.0, min(cx_[1], cy_[1]) - max(cx_[0], cy_[0]))

    inter, _ = quad(overlap, lo, hi, epsrel=tol,
                    epsabs=tol * min(ax, ay) * 1e-2, limit=200)
    inter = min(max(inter, 0.0), min(ax, ay))
    return min(max(inter / (ax + ay - inter), 0.0), 1.0)


def _raster_shape(shape, grid: RasterGrid) -> np.ndarray:
    """Boolean occupancy of a shape over the grid's cell centers."""
    xs, ys = grid.centers()
    gx = xs[np.newaxis, :]
    gy = ys[:, np.newaxis]
    if isinstance(shape, ObbLe):
        ct, st = math.cos(shape.theta), math.sin(shape.theta)
        du = (gx - shape.cx) * ct + (gy - shape.cy) * st
        dv = -(gx - shape.cx) * st + (gy - shape.cy) * ct
        return (np.abs(du) <= 0.5 * shape.w) & (np.abs(dv) <= 0.5 * shape.h)
    if isinstance(shape, OrientedEllipse):
        qa, qb, qc = _ellipse_quadratic(shape)
        du = gx - shape.cx
        dv = gy - shape.cy
        return qa * du * du + 2.0 * qc * du * dv + qb * dv * dv <= 1.0
    raise InvalidInputError(f"cannot rasterize {type(shape).__name__}")


def _raster_polygons(polys, grid: RasterGrid) -> np.ndarray:
    """Even-odd rasterization of a union of simple polygons."""
    xs, ys = grid.centers()
    gx = xs[np.newaxis, :]
    gy = ys[:, np.newaxis]
    out = np.zeros((grid.resolution, grid.resolution), dtype=bool)
    for poly in polys:
        inside = np.zeros_like(out)
        n = len(poly)
        for i in range(n):
            x1, y1 = poly[i]
            x2, y2 = poly[(i + 1) % n]
            if y1 == y2:
                continue
            crosses = ((y1 > gy) != (y2 > gy)) & \
                (gx < (x2 - x1) * (gy - y1) / (y2 - y1) + x1)
            inside ^= crosses
        out |= inside
    return out


def _as_polygon_list(mask) -> list[list[Point]]:
    if isinstance(mask, ConvexPoly):
        return [list(mask.vertices)]
    mask = list(mask)
    if not mask:
        raise DomainError("empty mask")
    if mask and isinstance(mask[0], ConvexPoly):
        return [list(p.vertices) for p in mask]
    first = mask[0]
    if len(first) == 2 and all(isinstance(v, (int, float)) for v in first):
        mask = [mask]  # a single polygon given as a point list
    polys = []
    for poly in mask:
        pts = [(float(x), float(y)) for x, y in poly]
        if len(pts) < 3:
            raise DomainError(f"polygon needs >= 3 points, got {len(pts)}")
        polys.append(pts)
    if not polys:
        raise DomainError("empty mask")
    return polys


def raster_iou(a, b, grid: RasterGrid) -> float:
    """IoU of two rasterizable shapes on a shared grid."""
    ra = _raster_shape(a, grid)
    rb = _raster_shape(b, grid)
    union = np.count_nonzero(ra | rb)
    if union == 0:
        return 0.0
    return np.count_nonzero(ra & rb) / union


def shape_mask_iou(shape, mask, grid: RasterGrid) -> float:
    """IoU between an oriented shape and a polygonal mask, both rasterized."""
    polys = _as_polygon_list(mask)
    rs = _raster_shape(shape, grid)
    rm = _raster_polygons(polys, grid)
    union = np.count_nonzero(rs | rm)
    if union == 0:
        return 0.0
    return np.count_nonzero(rs & rm) / union


def _convex_hull(points: list[Point]) -> list[Point]:
    """Monotone-chain hull, counter-clockwise, no collinear points kept."""
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts

    def half(seq):
        out: list[Point] = []
        for p in seq:
            while len(out) >= 2:
                ox, oy = out[-2]
                px, py = out[-1]
                if (px - ox) * (p[1] - oy) - (py - oy) * (p[0] - ox) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return lower[:-1] + upper[:-1]


def min_area_rect(points) -> ObbLe:
    """Smallest enclosing oriented rectangle of a point set.

    Rotating calipers over the convex hull: the optimal rectangle shares a
    direction with some hull edge.
    """
    pts = [(float(x), float(y)) for x, y in points]
    for x, y in pts:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InvalidInputError("points must be finite")
    hull = _convex_hull(pts)
    if len(hull) < 3:
        raise DomainError("points are collinear or fewer than 3 distinct")
    hx = np.array([p[0] for p in hull])
    hy = np.array([p[1] for p in hull])
    best = None
    n = len(hull)
    for i in range(n):
        ex = hx[(i + 1) % n] - hx[i]
        ey = hy[(i + 1) % n] - hy[i]
        norm = math.hypot(ex, ey)
        ux, uy = ex / norm, ey / norm
        proj_u = hx * ux + hy * uy
        proj_v = -hx * uy + hy * ux
        ulo, uhi = proj_u.min(), proj_u.max()
        vlo, vhi = proj_v.min(), proj_v.max()
        area = (uhi - ulo) * (vhi - vlo)
        if best is None or area < best[0]:
            best = (area, ux, uy, ulo, uhi, vlo, vhi)
    _, ux, uy, ulo, uhi, vlo, vhi = best
    cu = 0.5 * (ulo + uhi)
    cv = 0.5 * (vlo + vhi)
    cx = cu * ux - cv * uy
    cy = cu * uy + cv * ux
    du, dv = uhi - ulo, vhi - vlo
    if du >= dv:
        return ObbLe(cx, cy, du, dv, wrap_angle(math.atan2(uy, ux)))
    return ObbLe(cx, cy, dv, du, wrap_angle(math.atan2(uy, ux) + HALF_PI))
