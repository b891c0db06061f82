"""Value types and conversions for oriented-object representations.

An oriented box is kept in long-edge (LE) form: ``w >= h`` and ``theta`` in
``[-pi/2, pi/2)`` measured against the longer side.  The Gaussian picture maps
the box to a mean at the box center and a covariance whose eigenvalues are
``s*w**2`` and ``s*h**2`` along the box axes; ``s`` is the single knob of
:class:`ConversionConfig`.  The Cholesky picture stores the lower-triangular
factor ``L = [[alpha, 0], [gamma, beta]]`` of that covariance, which is
constraint-free up to the positivity of the diagonal.

Angles are radians everywhere in this package; degrees appear only at the
command-line and file-format boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HALF_PI = math.pi / 2.0

# Relative eigenvalue gap below which the orientation of a decoded box is
# considered undefined.
ISO_TOL = 1e-9


class InvalidInputError(ValueError):
    """Raised for non-finite or structurally invalid inputs."""


class DomainError(ValueError):
    """Raised for values outside an operation's mathematical domain."""


def wrap_angle(theta: float) -> float:
    """Wrap an angle into ``[-pi/2, pi/2)`` modulo pi."""
    return (theta + HALF_PI) % math.pi - HALF_PI


def _check_finite(label: str, **values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise InvalidInputError(f"{label}: {name} must be finite, got {v!r}")


@dataclass(frozen=True)
class ConversionConfig:
    """Covariance scaling used by every box/Gaussian conversion.

    ``s = 1/4`` makes the ellipse at one standard deviation inscribe the box;
    ``s = 1/12`` matches the covariance of a uniform density over the box.
    """

    s: float = 0.25

    def __post_init__(self):
        _check_finite("ConversionConfig", s=self.s)
        if self.s <= 0:
            raise DomainError(f"scale s must be positive, got {self.s}")


DEFAULT_CONFIG = ConversionConfig()


@dataclass(frozen=True)
class ObbLe:
    """Oriented box in long-edge form.

    ``w`` is the longer side, ``theta`` the angle of that side in
    ``[-pi/2, pi/2)``.  Square boxes have no distinguished long edge; they are
    canonicalized to ``theta == 0`` and flagged ``ambiguous_angle``.
    """

    cx: float
    cy: float
    w: float
    h: float
    theta: float = 0.0
    ambiguous_angle: bool = False

    def __post_init__(self):
        _check_finite("ObbLe", cx=self.cx, cy=self.cy, w=self.w, h=self.h,
                      theta=self.theta)
        if self.w <= 0 or self.h <= 0:
            raise DomainError(f"box dimensions must be positive, got w={self.w} h={self.h}")
        if self.w < self.h:
            raise InvalidInputError(
                f"long-edge form requires w >= h, got w={self.w} h={self.h}; "
                "use ObbLe.canonical or ObbLe.from_oc")
        if self.w == self.h or self.ambiguous_angle:
            object.__setattr__(self, "theta", 0.0)
            object.__setattr__(self, "ambiguous_angle", True)
        else:
            object.__setattr__(self, "theta", wrap_angle(self.theta))

    @classmethod
    def canonical(cls, cx, cy, w, h, theta) -> "ObbLe":
        """Build from dimensions in either order, rotating by 90 deg on swap."""
        if w >= h:
            return cls(cx, cy, w, h, theta)
        return cls(cx, cy, h, w, theta + HALF_PI)

    @classmethod
    def from_oc(cls, cx, cy, w, h, theta) -> "ObbLe":
        """Build from the opencv-style parametrization, theta in [-pi/2, 0)."""
        if not -HALF_PI <= theta < 0:
            raise InvalidInputError(
                f"oc angle must lie in [-pi/2, 0), got {theta}")
        return cls.canonical(cx, cy, w, h, theta)

    def area(self) -> float:
        return self.w * self.h

    def corners(self) -> list[tuple[float, float]]:
        """Corner coordinates in counter-clockwise order."""
        ct, st = math.cos(self.theta), math.sin(self.theta)
        hw, hh = 0.5 * self.w, 0.5 * self.h
        out = []
        for dx, dy in ((hw, hh), (-hw, hh), (-hw, -hh), (hw, -hh)):
            out.append((self.cx + dx * ct - dy * st, self.cy + dx * st + dy * ct))
        return out


@dataclass(frozen=True)
class Gaussian2:
    """Bivariate Gaussian with mean ``mu`` and covariance [[a, c], [c, b]]."""

    mu: tuple[float, float]
    a: float
    b: float
    c: float

    def __post_init__(self):
        mx, my = self.mu
        _check_finite("Gaussian2", mux=mx, muy=my, a=self.a, b=self.b, c=self.c)
        object.__setattr__(self, "mu", (float(mx), float(my)))
        if self.a <= 0 or self.b <= 0 or self.a * self.b - self.c * self.c <= 0:
            raise DomainError(
                f"covariance must be positive definite, got a={self.a} "
                f"b={self.b} c={self.c}")

    def det(self) -> float:
        return self.a * self.b - self.c * self.c

    def trace(self) -> float:
        return self.a + self.b

    def cov(self) -> np.ndarray:
        return np.array([[self.a, self.c], [self.c, self.b]])

    def eigenvalues(self) -> tuple[float, float]:
        """(lmin, lmax) of the covariance, closed form."""
        mid = 0.5 * (self.a + self.b)
        d = math.hypot(0.5 * (self.a - self.b), self.c)
        return mid - d, mid + d


@dataclass(frozen=True)
class GauchoParams:
    """Center plus lower-Cholesky entries (alpha, beta, gamma) of a covariance.

    ``L = [[alpha, 0], [gamma, beta]]`` so any finite gamma and positive
    diagonal yield a valid positive-definite covariance.
    """

    cx: float
    cy: float
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        _check_finite("GauchoParams", cx=self.cx, cy=self.cy, alpha=self.alpha,
                      beta=self.beta, gamma=self.gamma)
        if self.alpha <= 0 or self.beta <= 0:
            raise DomainError(
                f"cholesky diagonal must be positive, got alpha={self.alpha} "
                f"beta={self.beta}")


@dataclass(frozen=True)
class OrientedEllipse:
    """Oriented ellipse with semi-axes ``r1 >= r2`` and angle of the r1 axis."""

    cx: float
    cy: float
    r1: float
    r2: float
    theta: float = 0.0
    ambiguous_angle: bool = False

    def __post_init__(self):
        _check_finite("OrientedEllipse", cx=self.cx, cy=self.cy, r1=self.r1,
                      r2=self.r2, theta=self.theta)
        if self.r1 <= 0 or self.r2 <= 0:
            raise DomainError(f"semi-axes must be positive, got r1={self.r1} r2={self.r2}")
        if self.r1 < self.r2:
            raise InvalidInputError(f"requires r1 >= r2, got r1={self.r1} r2={self.r2}")
        if self.r1 == self.r2 or self.ambiguous_angle:
            object.__setattr__(self, "theta", 0.0)
            object.__setattr__(self, "ambiguous_angle", True)
        else:
            object.__setattr__(self, "theta", wrap_angle(self.theta))

    def area(self) -> float:
        return math.pi * self.r1 * self.r2


@dataclass(frozen=True)
class CholeskyBounds:
    """Attainable ranges of the Cholesky entries over all rotations of a box.

    ``theta_star`` is an angle attaining ``|gamma| == gamma_max``; it is None
    for squares, where gamma is identically zero.
    """

    lo_diag: float
    hi_diag: float
    gamma_max: float
    theta_star: float | None


def obb_to_gaussian(obb: ObbLe, cfg: ConversionConfig = DEFAULT_CONFIG) -> Gaussian2:
    """Map a box to the Gaussian with eigenvalues ``s*w**2`` and ``s*h**2``.

    The covariance is the rotation of diag(s*w^2, s*h^2) by theta:
        a = lw*cos^2 + lh*sin^2
        b = lw*sin^2 + lh*cos^2
        c = (lw - lh)*sin(theta)*cos(theta)
    """
    lw = cfg.s * obb.w * obb.w
    lh = cfg.s * obb.h * obb.h
    ct, st = math.cos(obb.theta), math.sin(obb.theta)
    a = lw * ct * ct + lh * st * st
    b = lw * st * st + lh * ct * ct
    c = (lw - lh) * st * ct
    return Gaussian2((obb.cx, obb.cy), a, b, c)


def gaussian_to_cholesky(g: Gaussian2) -> GauchoParams:
    """Lower-Cholesky factor of the covariance: alpha=sqrt(a), gamma=c/alpha,
    beta=sqrt(b - gamma^2)."""
    alpha = math.sqrt(g.a)
    gamma = g.c / alpha
    rest = g.b - gamma * gamma
    if rest <= 0:
        raise DomainError(
            f"covariance not positive definite under factorization, "
            f"b - gamma^2 = {rest}")
    return GauchoParams(g.mu[0], g.mu[1], alpha, math.sqrt(rest), gamma)


def cholesky_to_gaussian(p: GauchoParams) -> Gaussian2:
    """Reassemble the covariance from its Cholesky entries: C = L L^T."""
    a = p.alpha * p.alpha
    c = p.alpha * p.gamma
    b = p.beta * p.beta + p.gamma * p.gamma
    return Gaussian2((p.cx, p.cy), a, b, c)


def gaussian_to_obb(g: Gaussian2, cfg: ConversionConfig = DEFAULT_CONFIG,
                    iso_tol: float = ISO_TOL) -> ObbLe:
    """Decode a Gaussian back to a long-edge box.

    Eigenvalues come from the 2x2 closed form, orientation from
    ``theta = atan2(2c, a - b) / 2``.  When the relative eigenvalue gap is
    below ``iso_tol`` the orientation is undefined; the box comes back with
    ``theta == 0`` and ``ambiguous_angle`` set.
    """
    lmin, lmax = g.eigenvalues()
    if lmin <= 0:
        raise DomainError(f"covariance eigenvalues must be positive, got {lmin}")
    ambiguous = (lmax - lmin) < iso_tol * lmax
    theta = 0.0 if ambiguous else wrap_angle(0.5 * math.atan2(2.0 * g.c, g.a - g.b))
    w = math.sqrt(lmax / cfg.s)
    h = math.sqrt(lmin / cfg.s)
    return ObbLe(g.mu[0], g.mu[1], w, h, theta, ambiguous_angle=ambiguous)


def gaussian_to_ellipse(g: Gaussian2, cfg: ConversionConfig = DEFAULT_CONFIG,
                        iso_tol: float = ISO_TOL) -> OrientedEllipse:
    """Decode a Gaussian to the oriented ellipse with semi-axes
    ``r_i = sqrt(lambda_i / s) / 2``."""
    lmin, lmax = g.eigenvalues()
    if lmin <= 0:
        raise DomainError(f"covariance eigenvalues must be positive, got {lmin}")
    ambiguous = (lmax - lmin) < iso_tol * lmax
    theta = 0.0 if ambiguous else wrap_angle(0.5 * math.atan2(2.0 * g.c, g.a - g.b))
    r1 = 0.5 * math.sqrt(lmax / cfg.s)
    r2 = 0.5 * math.sqrt(lmin / cfg.s)
    return OrientedEllipse(g.mu[0], g.mu[1], r1, r2, theta, ambiguous_angle=ambiguous)


def obb_to_cholesky(obb: ObbLe, cfg: ConversionConfig = DEFAULT_CONFIG) -> GauchoParams:
    return gaussian_to_cholesky(obb_to_gaussian(obb, cfg))


def cholesky_to_obb(p: GauchoParams, cfg: ConversionConfig = DEFAULT_CONFIG,
                    iso_tol: float = ISO_TOL) -> ObbLe:
    return gaussian_to_obb(cholesky_to_gaussian(p), cfg, iso_tol)


def obb_to_ellipse(obb: ObbLe, cfg: ConversionConfig = DEFAULT_CONFIG) -> OrientedEllipse:
    return gaussian_to_ellipse(obb_to_gaussian(obb, cfg), cfg)


def ellipse_to_obb(e: OrientedEllipse) -> ObbLe:
    # exact inverse of the semi-axis definition; s cancels
    return ObbLe(e.cx, e.cy, 2.0 * e.r1, 2.0 * e.r2, e.theta,
                 ambiguous_angle=e.ambiguous_angle)


def ellipse_to_gaussian(e: OrientedEllipse, cfg: ConversionConfig = DEFAULT_CONFIG) -> Gaussian2:
    return obb_to_gaussian(ellipse_to_obb(e), cfg)


def cholesky_bounds(w: float, h: float,
                    cfg: ConversionConfig = DEFAULT_CONFIG) -> CholeskyBounds:
    """Ranges of (alpha, beta, gamma) over all orientations of a w-by-h box.

    Both diagonal entries stay in [sqrt(lmin), sqrt(lmax)] and
    |gamma| <= sqrt(lmax) - sqrt(lmin), with equality at ``theta_star``.
    """
    _check_finite("cholesky_bounds", w=w, h=h)
    if w <= 0 or h <= 0:
        raise DomainError(f"dimensions must be positive, got w={w} h={h}")
    sw = math.sqrt(cfg.s) * w
    sh = math.sqrt(cfg.s) * h
    lo, hi = min(sw, sh), max(sw, sh)
    if w == h:
        return CholeskyBounds(lo, hi, 0.0, None)
    # |gamma(theta)|^2 is maximized at cos(2*theta) = (sh - sw) / (sh + sw)
    theta_star = 0.5 * math.acos((sh - sw) / (sh + sw))
    return CholeskyBounds(lo, hi, hi - lo, theta_star)


def rotate_point(x: float, y: float, phi: float,
                 pivot: tuple[float, float] = (0.0, 0.0)) -> tuple[float, float]:
    cp, sp = math.cos(phi), math.sin(phi)
    dx, dy = x - pivot[0], y - pivot[1]
    return pivot[0] + dx * cp - dy * sp, pivot[1] + dx * sp + dy * cp


def rotate_obb(obb: ObbLe, phi: float,
               pivot: tuple[float, float] = (0.0, 0.0)) -> ObbLe:
    """Rotate a box by phi about a pivot; the angle re-wraps into LE range."""
    _check_finite("rotate_obb", phi=phi)
    cx, cy = rotate_point(obb.cx, obb.cy, phi, pivot)
    return ObbLe(cx, cy, obb.w, obb.h, wrap_angle(obb.theta + phi),
                 ambiguous_angle=obb.ambiguous_angle)


def rotate_gaussian(g: Gaussian2, phi: float,
                    pivot: tuple[float, float] = (0.0, 0.0)) -> Gaussian2:
    """Rotate mean about the pivot and conjugate the covariance: R C R^T."""
    _check_finite("rotate_gaussian", phi=phi)
    mx, my = rotate_point(g.mu[0], g.mu[1], phi, pivot)
    cp, sp = math.cos(phi), math.sin(phi)
    cc, ss, sc = cp * cp, sp * sp, sp * cp
    a = g.a * cc - 2.0 * g.c * sc + g.b * ss
    b = g.a * ss + 2.0 * g.c * sc + g.b * cc
    c = (g.a - g.b) * sc + g.c * (cc - ss)
    return Gaussian2((mx, my), a, b, c)
