"""Detection-head transforms between network offsets and Cholesky parameters.

Three decoders are provided: anchor-free (offsets relative to a feature-map
point with stride ``t``), anchor-based (offsets relative to an axis-aligned
anchor box), and a refinement step on top of an oriented anchor.  The diagonal
channels use an exponential activation, the off-diagonal one is linear, so any
finite offset vector decodes to a valid positive-definite covariance.  Each
decoder with an encode counterpart is an exact inverse of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    DEFAULT_CONFIG,
    ConversionConfig,
    DomainError,
    GauchoParams,
    InvalidInputError,
    ObbLe,
    obb_to_cholesky,
)

# exp() of anything past this is treated as a runaway regression output
MAX_EXP_OFFSET = 40.0


class OffsetOverflowError(DomainError):
    """An exponential offset channel exceeded the overflow guard."""


def _check_finite(label, **values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise InvalidInputError(f"{label}: {name} must be finite, got {v!r}")


def _guard_exp(label: str, **channels: float) -> None:
    for name, v in channels.items():
        if abs(v) > MAX_EXP_OFFSET:
            raise OffsetOverflowError(
                f"{label}: |{name}| = {abs(v)} exceeds exp-channel guard "
                f"{MAX_EXP_OFFSET}")


@dataclass(frozen=True)
class AnchorFreeContext:
    """Feature-map location (px, py) with positive stride t."""

    px: float
    py: float
    t: float

    def __post_init__(self):
        _check_finite("AnchorFreeContext", px=self.px, py=self.py, t=self.t)
        if self.t <= 0:
            raise DomainError(f"stride must be positive, got {self.t}")


@dataclass(frozen=True)
class AnchorBox:
    """Axis-aligned anchor with center (ax, ay) and sides aw, ah."""

    ax: float
    ay: float
    aw: float
    ah: float

    def __post_init__(self):
        _check_finite("AnchorBox", ax=self.ax, ay=self.ay, aw=self.aw, ah=self.ah)
        if self.aw <= 0 or self.ah <= 0:
            raise DomainError(f"anchor sides must be positive, got aw={self.aw} ah={self.ah}")


@dataclass(frozen=True)
class OrientedAnchor:
    """Oriented anchor box; its own Cholesky parameters seed the refinement."""

    obb: ObbLe

    def gaucho(self, cfg: ConversionConfig = DEFAULT_CONFIG) -> GauchoParams:
        return obb_to_cholesky(self.obb, cfg)


@dataclass(frozen=True)
class HeadOffsets:
    """Raw regression outputs (dx, dy, d_alpha, d_beta, d_gamma)."""

    dx: float = 0.0
    dy: float = 0.0
    d_alpha: float = 0.0
    d_beta: float = 0.0
    d_gamma: float = 0.0

    def __post_init__(self):
        _check_finite("HeadOffsets", dx=self.dx, dy=self.dy,
                      d_alpha=self.d_alpha, d_beta=self.d_beta,
                      d_gamma=self.d_gamma)

    @classmethod
    def zero(cls) -> "HeadOffsets":
        return cls()


def _gamma_scale(aw: float, ah: float, cfg: ConversionConfig,
                 delta: float | None) -> float:
    """Scale of the off-diagonal channel: sqrt(s) * max(delta, |aw - ah|).

    ``delta`` defaults to sqrt(lambda_min) of the anchor, which keeps the
    channel usable on square anchors where |aw - ah| vanishes.
    """
    if delta is None:
        delta = math.sqrt(cfg.s) * min(aw, ah)
    elif delta < 0 or not math.isfinite(delta):
        raise InvalidInputError(f"delta must be finite and >= 0, got {delta}")
    return math.sqrt(cfg.s) * max(delta, abs(aw - ah))


def decode_anchor_free(ctx: AnchorFreeContext, off: HeadOffsets) -> GauchoParams:
    """cx = px + t*dx, cy = py + t*dy, alpha = t*e^da, beta = t*e^db,
    gamma = t*dg."""
    _guard_exp("decode_anchor_free", d_alpha=off.d_alpha, d_beta=off.d_beta)
    return GauchoParams(
        ctx.px + ctx.t * off.dx,
        ctx.py + ctx.t * off.dy,
        ctx.t * math.exp(off.d_alpha),
        ctx.t * math.exp(off.d_beta),
        ctx.t * off.d_gamma,
    )


def encode_anchor_free(ctx: AnchorFreeContext, target: GauchoParams) -> HeadOffsets:
    return HeadOffsets(
        (target.cx - ctx.px) / ctx.t,
        (target.cy - ctx.py) / ctx.t,
        math.log(target.alpha / ctx.t),
        math.log(target.beta / ctx.t),
        target.gamma / ctx.t,
    )


def decode_anchor_based(anchor: AnchorBox, off: HeadOffsets,
                        cfg: ConversionConfig = DEFAULT_CONFIG,
                        delta: float | None = None) -> GauchoParams:
    """Offsets scale with the anchor: centers by the sides, diagonal channels
    by sqrt(s)*side, gamma by the :func:`_gamma_scale` rule."""
    _guard_exp("decode_anchor_based", d_alpha=off.d_alpha, d_beta=off.d_beta)
    rs = math.sqrt(cfg.s)
    return GauchoParams(
        anchor.ax + anchor.aw * off.dx,
        anchor.ay + anchor.ah * off.dy,
        rs * anchor.aw * math.exp(off.d_alpha),
        rs * anchor.ah * math.exp(off.d_beta),
        _gamma_scale(anchor.aw, anchor.ah, cfg, delta) * off.d_gamma,
    )


def encode_anchor_based(anchor: AnchorBox, target: GauchoParams,
                        cfg: ConversionConfig = DEFAULT_CONFIG,
                        delta: float | None = None) -> HeadOffsets:
    rs = math.sqrt(cfg.s)
    scale = _gamma_scale(anchor.aw, anchor.ah, cfg, delta)
    if scale == 0.0:
        raise DomainError("gamma channel scale is zero; target gamma unreachable")
    return HeadOffsets(
        (target.cx - anchor.ax) / anchor.aw,
        (target.cy - anchor.ay) / anchor.ah,
        math.log(target.alpha / (rs * anchor.aw)),
        math.log(target.beta / (rs * anchor.ah)),
        target.gamma / scale,
    )


def refine_oriented_anchor(anchor: OrientedAnchor, off: HeadOffsets,
                           cfg: ConversionConfig = DEFAULT_CONFIG,
                           delta: float | None = None) -> GauchoParams:
    """Multiplicative update of the anchor's own Cholesky diagonal and an
    additive, scaled update of its gamma.  Zero offsets return the anchor."""
    _guard_exp("refine_oriented_anchor", d_alpha=off.d_alpha, d_beta=off.d_beta)
    base = anchor.gaucho(cfg)
    aw, ah = anchor.obb.w, anchor.obb.h
    return GauchoParams(
        anchor.obb.cx + aw * off.dx,
        anchor.obb.cy + ah * off.dy,
        base.alpha * math.exp(off.d_alpha),
        base.beta * math.exp(off.d_beta),
        base.gamma + _gamma_scale(aw, ah, cfg, delta) * off.d_gamma,
    )
