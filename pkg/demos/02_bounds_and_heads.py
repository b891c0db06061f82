"""
Cholesky bounds and detection-head decoding
===========================================

The off-diagonal Cholesky entry gamma is not free: for a box with sides
(w, h) it lives inside a band whose width is set by the eigenvalue gap,
and the band edge is actually reached at one specific angle. That bound
is what lets a regression head emit gamma through a plain linear layer
with a per-anchor scale and still land on a valid shape.
"""

import math

import numpy as np

from gaucho import (
    AnchorBox,
    AnchorFreeContext,
    ConversionConfig,
    HeadOffsets,
    ObbLe,
    OrientedAnchor,
    cholesky_bounds,
    decode_anchor_based,
    decode_anchor_free,
    encode_anchor_based,
    obb_to_cholesky,
    refine_oriented_anchor,
)

cfg = ConversionConfig(s=0.25)
bounds = cholesky_bounds(3.0, 1.0, cfg)
print("sides (3, 1):")
print(f"  diagonal range   [{bounds.lo_diag:.4f}, {bounds.hi_diag:.4f}]")
print(f"  |gamma| bound    {bounds.gamma_max:.6f}")
print(f"  attained at      +-{math.degrees(bounds.theta_star):.2f} deg")

# sweep the angle and watch gamma touch the bound exactly once per side
thetas = np.linspace(-math.pi / 2, math.pi / 2, 7201, endpoint=False)
gammas = np.array([obb_to_cholesky(ObbLe(0, 0, 3, 1, t), cfg).gamma
                   for t in thetas])
k = int(np.argmax(np.abs(gammas)))
print(f"  sweep maximum    {abs(gammas[k]):.6f} at "
      f"{math.degrees(thetas[k]):.2f} deg")

# %%
# Anchor-free head: each location carries a stride t, and zero offsets
# decode to the isotropic shape (t, t, gamma=0) at that location.

p = decode_anchor_free(AnchorFreeContext(px=12.0, py=19.0, t=8.0),
                       HeadOffsets.zero())
print()
print("anchor-free zero decode:", p)

# %%
# Anchor-based head: offsets are log-scale factors against the anchor
# sides. encode() inverts decode() so training targets are well defined.

anchor = AnchorBox(ax=0.0, ay=0.0, aw=16.0, ah=8.0)
target = obb_to_cholesky(ObbLe(1.0, -2.0, 14.0, 5.0, math.radians(40)), cfg)
off = encode_anchor_based(anchor, target, cfg)
print("encoded offsets:", [round(v, 6) for v in
                           (off.dx, off.dy, off.d_alpha, off.d_beta,
                            off.d_gamma)])
q = decode_anchor_based(anchor, off, cfg)
print("decode(encode(target)) == target:",
      max(abs(q.alpha - target.alpha), abs(q.beta - target.beta),
          abs(q.gamma - target.gamma)) < 1e-12)

# a square anchor can stretch to a 2:1 box with |d_gamma| <= 1
square = AnchorBox(0.0, 0.0, 8.0, 8.0)
wide = obb_to_cholesky(ObbLe(0, 0, 8.0, 4.0, math.radians(45)), cfg)
off = encode_anchor_based(square, wide, cfg)
print(f"square anchor to rotated 2:1 target: d_gamma = {off.d_gamma:+.4f}")

# %%
# Oriented anchors refine in place; zero offsets keep the anchor.

oa = OrientedAnchor(ObbLe(5.0, 5.0, 10.0, 4.0, math.radians(-20)))
r = refine_oriented_anchor(oa, HeadOffsets.zero())
base = oa.gaucho()
print()
print("refinement identity:", (r.alpha, r.beta, r.gamma) ==
      (base.alpha, base.beta, base.gamma))
