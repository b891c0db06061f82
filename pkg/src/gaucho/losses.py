"""Gaussian regression losses, their gradients, and angle-sweep diagnostics.

Three distance kinds between bivariate Gaussians are supported:

* ``gwd``: the 2-Wasserstein distance, closed form in means, traces and
  determinants.
* ``kld``: Kullback-Leibler divergence, directional; ``symmetric`` averages
  the two directions.
* ``probiou``: the Hellinger distance ``sqrt(1 - exp(-B))`` built on the
  Bhattacharyya coefficient, bounded in [0, 1].

``loss_grad`` returns the analytic gradient with respect to the prediction's
center and Cholesky entries (cx, cy, alpha, beta, gamma); correctness is
pinned to a central finite-difference oracle in the test-suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_CONFIG,
    HALF_PI,
    ConversionConfig,
    DomainError,
    Gaussian2,
    GauchoParams,
    InvalidInputError,
    ObbLe,
    cholesky_to_gaussian,
    gaussian_to_cholesky,
    obb_to_gaussian,
    rotate_obb,
)

LOSS_KINDS = ("gwd", "kld", "probiou")
TRANSFORMS = ("raw_distance", "log_saturating")
KLD_DIRECTIONS = ("pred_to_gt", "gt_to_pred", "symmetric")


@dataclass(frozen=True)
class LossConfig:
    kind: str = "kld"
    transform: str = "raw_distance"
    tau: float = 1.0
    kld_direction: str = "pred_to_gt"

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise InvalidInputError(f"unknown loss kind {self.kind!r}")
        if self.transform not in TRANSFORMS:
            raise InvalidInputError(f"unknown transform {self.transform!r}")
        if self.kld_direction not in KLD_DIRECTIONS:
            raise InvalidInputError(f"unknown kld direction {self.kld_direction!r}")
        if not math.isfinite(self.tau) or self.tau <= 0:
            # tau = 0 would divide by zero at a perfect match
            raise DomainError(f"tau must be finite and positive, got {self.tau}")


def _gwd_value(p: Gaussian2, g: Gaussian2) -> float:
    u = p.mu[0] - g.mu[0]
    v = p.mu[1] - g.mu[1]
    s = math.sqrt(p.det() * g.det())
    inner = p.a * g.a + 2.0 * p.c * g.c + p.b * g.b + 2.0 * s
    sq = u * u + v * v + p.trace() + g.trace() - 2.0 * math.sqrt(max(inner, 0.0))
    return math.sqrt(max(sq, 0.0))


def _kld_value(p: Gaussian2, g: Gaussian2) -> float:
    """KL(p || g)."""
    u = p.mu[0] - g.mu[0]
    v = p.mu[1] - g.mu[1]
    dg = g.det()
    iag, ibg, icg = g.b / dg, g.a / dg, -g.c / dg
    mean_term = iag * u * u + 2.0 * icg * u * v + ibg * v * v
    tr_term = iag * p.a + 2.0 * icg * p.c + ibg * p.b
    log_term = math.log(dg) - math.log(p.det())
    return max(0.5 * (mean_term + tr_term + log_term - 2.0), 0.0)


def _bhattacharyya(p: Gaussian2, g: Gaussian2) -> float:
    u = p.mu[0] - g.mu[0]
    v = p.mu[1] - g.mu[1]
    sa = 0.5 * (p.a + g.a)
    sb = 0.5 * (p.b + g.b)
    sc = 0.5 * (p.c + g.c)
    ds = sa * sb - sc * sc
    qm = (sb * u * u - 2.0 * sc * u * v + sa * v * v) / ds
    return max(qm / 8.0 + 0.5 * math.log(ds) - 0.25 * (math.log(p.det()) + math.log(g.det())), 0.0)


def _probiou_value(p: Gaussian2, g: Gaussian2) -> float:
    return math.sqrt(max(1.0 - math.exp(-_bhattacharyya(p, g)), 0.0))


def _raw_distance(pred: Gaussian2, gt: Gaussian2, cfg: LossConfig) -> float:
    if cfg.kind == "gwd":
        return _gwd_value(pred, gt)
    if cfg.kind == "probiou":
        return _probiou_value(pred, gt)
    if cfg.kld_direction == "pred_to_gt":
        return _kld_value(pred, gt)
    if cfg.kld_direction == "gt_to_pred":
        return _kld_value(gt, pred)
    return 0.5 * (_kld_value(pred, gt) + _kld_value(gt, pred))


def _saturate(d: float, tau: float) -> float:
    return 1.0 - 1.0 / (tau + math.log1p(d))


def loss(pred: Gaussian2, gt: Gaussian2, cfg: LossConfig = LossConfig()) -> float:
    """Configured distance between a predicted and a target Gaussian."""
    d = _raw_distance(pred, gt, cfg)
    if cfg.transform == "log_saturating":
        return _saturate(d, cfg.tau)
    return d


# gradient helpers: each returns (value, d/d[mux, muy, a, b, c]) of the raw
# distance with respect to the prediction's mean and covariance entries


def _gwd_grad(p: Gaussian2, g: Gaussian2):
    u = p.mu[0] - g.mu[0]
    v = p.mu[1] - g.mu[1]
    dp = p.det()
    dg = g.det()
    s = math.sqrt(dp * dg)
    inner = p.a * g.a + 2.0 * p.c * g.c + p.b * g.b + 2.0 * s
    root = math.sqrt(max(inner, 0.0))
    sq = u * u + v * v + p.trace() + g.trace() - 2.0 * root
    d = math.sqrt(max(sq, 0.0))
    if d == 0.0 or root == 0.0:
        return 0.0, np.zeros(5)
    # d(inner)/d(a,b,c); s contributes dg * dDp/dx / (2 s)
    di_da = g.a + dg * p.b / s
    di_db = g.b + dg * p.a / s
    di_dc = 2.0 * g.c - 2.0 * dg * p.c / s
    gsq = np.array([
        2.0 * u,
        2.0 * v,
        1.0 - di_da / root,
        1.0 - di_db / root,
        -di_dc / root,
    ])
    return d, gsq / (2.0 * d)


def _kld_pg_grad(p: Gaussian2, g: Gaussian2):
    """KL(p || g): gradient only touches p through the trace, log-det and
    mean terms."""
    u = p.mu[0] - g.mu[0]
    v = p.mu[1] - g.mu[1]
    dg = g.det()
    dp = p.det()
    iag, ibg, icg = g.b / dg, g.a / dg, -g.c / dg
    mean_term = iag * u * u + 2.0 * icg * u * v + ibg * v * v
    tr_term = iag * p.a + 2.0 * icg * p.c + ibg * p.b
    value = max(0.5 * (mean_term + tr_term + math.log(dg) - math.log(dp) - 2.0), 0.0)
    grad = np.array([
        iag * u + icg * v,
        icg * u + ibg * v,
        0.5 * (iag - p.b / dp),
        0.5 * (ibg - p.a / dp),
        icg + p.c / dp,
    ])
    return value, grad


def _kld_gp_grad(p: Gaussian2, g: Gaussian2):
    """KL(g || p): the prediction appears inverted, so quotient-rule terms."""
    u = p.mu[0] - g.mu[0]
    v = p.mu[1] - g.mu[1]
    dp = p.det()
    dg = g.det()
    mean_term = (p.b * u * u - 2.0 * p.c * u * v + p.a * v * v) / dp
    tr_term = (p.b * g.a - 2.0 * p.c * g.c + p.a * g.b) / dp
    value = max(0.5 * (mean_term + tr_term + math.log(dp) - math.log(dg) - 2.0), 0.0)
    ia, ib, ic = p.b / dp, p.a / dp, -p.c / dp
    grad = 0.5 * np.array([
        2.0 * (ia * u + ic * v),
        2.0 * (ic * u + ib * v),
        (v * v - mean_term * p.b) / dp + (g.b - tr_term * p.b) / dp + p.b / dp,
        (u * u - mean_term * p.a) / dp + (g.a - tr_term * p.a) / dp + p.a / dp,
        (-2.0 * u * v + 2.0 * p.c * mean_term) / dp
        + (-2.0 * g.c + 2.0 * p.c * tr_term) / dp
        - 2.0 * p.c / dp,
    ])
    return value, grad


def _probiou_grad(p: Gaussian2, g: Gaussian2):
    u = p.mu[0] - g.mu[0]
    v = p.mu[1] - g.mu[1]
    dp = p.det()
    sa = 0.5 * (p.a + g.a)
    sb = 0.5 * (p.b + g.b)
    sc = 0.5 * (p.c + g.c)
    ds = sa * sb - sc * sc
    qm = (sb * u * u - 2.0 * sc * u * v + sa * v * v) / ds
    bd = max(qm / 8.0 + 0.5 * math.log(ds)
             - 0.25 * (math.log(dp) + math.log(g.det())), 0.0)
    h = math.sqrt(max(1.0 - math.exp(-bd), 0.0))
    if h == 0.0:
        return 0.0, np.zeros(5)
    ia, ib, ic = sb / ds, sa / ds, -sc / ds
    dq_dsa = (v * v - qm * sb) / ds
    dq_dsb = (u * u - qm * sa) / ds
    dq_dsc = (-2.0 * u * v + 2.0 * sc * qm) / ds
    db = np.array([
        (ia * u + ic * v) / 4.0,
        (ic * u + ib * v) / 4.0,
        dq_dsa / 16.0 + sb / (4.0 * ds) - p.b / (4.0 * dp),
        dq_dsb / 16.0 + sa / (4.0 * ds) - p.a / (4.0 * dp),
        dq_dsc / 16.0 - sc / (2.0 * ds) + p.c / (2.0 * dp),
    ])
    return h, db * (math.exp(-bd) / (2.0 * h))


def _raw_grad(pred: Gaussian2, gt: Gaussian2, cfg: LossConfig):
    if cfg.kind == "gwd":
        return _gwd_grad(pred, gt)
    if cfg.kind == "probiou":
        return _probiou_grad(pred, gt)
    if cfg.kld_direction == "pred_to_gt":
        return _kld_pg_grad(pred, gt)
    if cfg.kld_direction == "gt_to_pred":
        return _kld_gp_grad(pred, gt)
    v1, g1 = _kld_pg_grad(pred, gt)
    v2, g2 = _kld_gp_grad(pred, gt)
    return 0.5 * (v1 + v2), 0.5 * (g1 + g2)


def loss_grad(pred: GauchoParams, gt: Gaussian2,
              cfg: LossConfig = LossConfig()) -> np.ndarray:
    """Gradient of the configured loss in (cx, cy, alpha, beta, gamma).

    The chain through C = L L^T is da/dalpha = 2 alpha, dc/dalpha = gamma,
    dc/dgamma = alpha, db/dbeta = 2 beta, db/dgamma = 2 gamma.
    """
    pg = cholesky_to_gaussian(pred)
    d, grad_cov = _raw_grad(pg, gt, cfg)
    if cfg.transform == "log_saturating":
        t = cfg.tau + math.log1p(d)
        grad_cov = grad_cov / (t * t * (1.0 + d))
    gm_x, gm_y, ga, gb, gc = grad_cov
    return np.array([
        gm_x,
        gm_y,
        2.0 * pred.alpha * ga + pred.gamma * gc,
        2.0 * pred.beta * gb,
        pred.alpha * gc + 2.0 * pred.gamma * gb,
    ])


@dataclass(frozen=True)
class SweepMinimum:
    theta: float
    loss: float
    is_global: bool


@dataclass
class LossLandscape:
    gt: ObbLe
    thetas: list[float]
    losses: list[float]
    minima: list[SweepMinimum]


def sweep_landscape(gt: ObbLe, candidate_dims: tuple[float, float],
                    cfg: LossConfig = LossConfig(),
                    conv: ConversionConfig = DEFAULT_CONFIG,
                    n_steps: int = 360) -> LossLandscape:
    """Loss of a fixed-size candidate against gt as its angle sweeps
    [-pi/2, pi/2).

    Minima are discrete strict local minima (one-sided at the two domain
    endpoints); the global argmin is always included and flagged.
    """
    if n_steps < 16:
        raise InvalidInputError(f"need at least 16 steps, got {n_steps}")
    w, h = candidate_dims
    gt_gauss = obb_to_gaussian(gt, conv)
    step = math.pi / n_steps
    thetas = [-HALF_PI + i * step for i in range(n_steps)]
    losses = []
    for th in thetas:
        cand = ObbLe(gt.cx, gt.cy, w, h, th)
        losses.append(loss(obb_to_gaussian(cand, conv), gt_gauss, cfg))
    minima = _find_minima(thetas, losses)
    return LossLandscape(gt, thetas, losses, minima)


def _find_minima(thetas, losses) -> list[SweepMinimum]:
    n = len(losses)
    best = min(range(n), key=lambda i: losses[i])
    out = []
    for i in range(n):
        left_ok = i == 0 or losses[i] < losses[i - 1]
        right_ok = i == n - 1 or losses[i] < losses[i + 1]
        if left_ok and right_ok:
            out.append(SweepMinimum(thetas[i], losses[i], i == best))
    if not any(m.is_global for m in out):
        out.append(SweepMinimum(thetas[best], losses[best], True))
        out.sort(key=lambda m: m.theta)
    return out


@dataclass(frozen=True)
class TraceRow:
    rotation: float
    le_w: float
    le_theta: float
    a: float
    b: float
    c: float
    alpha: float
    beta: float
    gamma: float


def parametrization_trace(base: ObbLe, n_steps: int = 360,
                          conv: ConversionConfig = DEFAULT_CONFIG) -> list[TraceRow]:
    """Rotate a base box through [-pi/2, pi/2) and tabulate every
    representation.

    The long-edge angle jumps by pi when the rotation pushes it across the
    domain boundary; the covariance and Cholesky columns stay continuous.
    """
    if n_steps < 2:
        raise InvalidInputError(f"need at least 2 steps, got {n_steps}")
    step = math.pi / n_steps
    rows = []
    for i in range(n_steps):
        rot = -HALF_PI + i * step
        obb = rotate_obb(base, rot)
        g = obb_to_gaussian(obb, conv)
        p = gaussian_to_cholesky(g)
        rows.append(TraceRow(rot, obb.w, obb.theta, g.a, g.b, g.c,
                             p.alpha, p.beta, p.gamma))
    return rows
