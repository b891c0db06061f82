import math

import numpy as np
import pytest

from gaucho import (
    AnchorBox,
    AnchorFreeContext,
    ConversionConfig,
    HeadOffsets,
    ObbLe,
    OffsetOverflowError,
    OrientedAnchor,
    cholesky_to_obb,
    decode_anchor_based,
    decode_anchor_free,
    encode_anchor_based,
    encode_anchor_free,
    obb_to_cholesky,
    refine_oriented_anchor,
    wrap_angle,
)
from gaucho.heads import MAX_EXP_OFFSET


def rand_params(rng):
    w = rng.uniform(1, 20)
    h = rng.uniform(1, 20)
    if w < h:
        w, h = h, w
    box = ObbLe(rng.uniform(-30, 30), rng.uniform(-30, 30), w, h,
                rng.uniform(-math.pi / 2, math.pi / 2))
    return obb_to_cholesky(box)


def test_zero_offsets_anchor_free():
    ctx = AnchorFreeContext(10.0, 20.0, 4.0)
    p = decode_anchor_free(ctx, HeadOffsets.zero())
    # identity on center, stride-sized isotropic shape, zero correlation
    assert (p.cx, p.cy) == (10.0, 20.0)
    assert (p.alpha, p.beta, p.gamma) == (4.0, 4.0, 0.0)


def test_anchor_free_roundtrip():
    rng = np.random.default_rng(10)
    for _ in range(1000):
        ctx = AnchorFreeContext(rng.uniform(-50, 50), rng.uniform(-50, 50),
                                rng.uniform(0.5, 32))
        target = rand_params(rng)
        off = encode_anchor_free(ctx, target)
        back = decode_anchor_free(ctx, off)
        np.testing.assert_allclose(
            [back.cx, back.cy, back.alpha, back.beta, back.gamma],
            [target.cx, target.cy, target.alpha, target.beta, target.gamma],
            rtol=1e-12, atol=1e-12)


def test_anchor_based_gamma_scale():
    # square anchor: the fallback scale is sqrt(s) * min side
    p = decode_anchor_based(AnchorBox(0, 0, 8, 8),
                            HeadOffsets(0, 0, 0, 0, 1.0))
    np.testing.assert_allclose(p.gamma, 2.0, rtol=1e-12)
    np.testing.assert_allclose([p.alpha, p.beta], [4.0, 4.0], rtol=1e-12)
    # elongated anchor: scale follows the side gap
    p = decode_anchor_based(AnchorBox(0, 0, 16, 8),
                            HeadOffsets(0, 0, 0, 0, 1.0))
    np.testing.assert_allclose(p.gamma, 4.0, rtol=1e-12)


def test_anchor_based_constant_delta():
    p = decode_anchor_based(AnchorBox(0, 0, 8, 8),
                            HeadOffsets(0, 0, 0, 0, 1.0), delta=10.0)
    np.testing.assert_allclose(p.gamma, 0.5 * 10.0, rtol=1e-12)


def test_anchor_based_roundtrip():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        anchor = AnchorBox(rng.uniform(-50, 50), rng.uniform(-50, 50),
                           rng.uniform(1, 32), rng.uniform(1, 32))
        target = rand_params(rng)
        off = encode_anchor_based(anchor, target)
        back = decode_anchor_based(anchor, off)
        np.testing.assert_allclose(
            [back.cx, back.cy, back.alpha, back.beta, back.gamma],
            [target.cx, target.cy, target.alpha, target.beta, target.gamma],
            rtol=1e-11, atol=1e-11)


def test_refine_zero_offsets_is_identity():
    rng = np.random.default_rng(12)
    for _ in range(200):
        w = rng.uniform(1, 10)
        h = rng.uniform(1, 10)
        if w < h:
            w, h = h, w
        anchor = OrientedAnchor(ObbLe(rng.uniform(-5, 5), rng.uniform(-5, 5),
                                      w, h, rng.uniform(-1.5, 1.5)))
        p = refine_oriented_anchor(anchor, HeadOffsets.zero())
        q = anchor.gaucho()
        np.testing.assert_allclose(
            [p.cx, p.cy, p.alpha, p.beta, p.gamma],
            [q.cx, q.cy, q.alpha, q.beta, q.gamma], rtol=1e-12, atol=1e-12)


def test_refine_known_gamma_step():
    anchor = OrientedAnchor(ObbLe(0, 0, 3, 1, math.pi / 4))
    p = refine_oriented_anchor(anchor, HeadOffsets(0, 0, 0, 0, 1.0))
    np.testing.assert_allclose(p.gamma, 1.894427190999916, rtol=1e-12)
    # diagonal untouched by a gamma-only offset
    q = anchor.gaucho()
    np.testing.assert_allclose([p.alpha, p.beta], [q.alpha, q.beta], rtol=1e-12)


def test_refine_recovers_rotated_target():
    # a refinement step can move a coarse anchor onto a nearby target
    anchor = OrientedAnchor(ObbLe(1, 2, 4, 2, 0.3))
    target = obb_to_cholesky(ObbLe(1.5, 1.75, 4.4, 1.9, 0.45))
    aq = anchor.gaucho()
    scale = 0.5 * abs(4.0 - 2.0)  # sqrt(s) * |aw - ah|
    off = HeadOffsets(
        (target.cx - 1.0) / 4.0, (target.cy - 2.0) / 2.0,
        math.log(target.alpha / aq.alpha), math.log(target.beta / aq.beta),
        (target.gamma - aq.gamma) / scale)
    p = refine_oriented_anchor(anchor, off)
    np.testing.assert_allclose(
        [p.cx, p.cy, p.alpha, p.beta, p.gamma],
        [target.cx, target.cy, target.alpha, target.beta, target.gamma],
        rtol=1e-12, atol=1e-12)


def test_decoded_params_convert_to_boxes():
    rng = np.random.default_rng(13)
    for _ in range(300):
        ctx = AnchorFreeContext(0, 0, rng.uniform(1, 16))
        off = HeadOffsets(*rng.uniform(-1.5, 1.5, 5))
        box = cholesky_to_obb(decode_anchor_free(ctx, off))
        assert box.w >= box.h > 0
        assert -math.pi / 2 <= box.theta < math.pi / 2


def test_exp_guard():
    ctx = AnchorFreeContext(0, 0, 4.0)
    with pytest.raises(OffsetOverflowError):
        decode_anchor_free(ctx, HeadOffsets(0, 0, MAX_EXP_OFFSET + 1, 0, 0))
    with pytest.raises(OffsetOverflowError):
        decode_anchor_free(ctx, HeadOffsets(0, 0, 0, -(MAX_EXP_OFFSET + 1), 0))
    with pytest.raises(OffsetOverflowError):
        decode_anchor_based(AnchorBox(0, 0, 4, 4),
                            HeadOffsets(0, 0, 41.0, 0, 0))
    # the boundary itself decodes
    decode_anchor_free(ctx, HeadOffsets(0, 0, MAX_EXP_OFFSET, 0, 0))


def test_other_scale_config():
    cfg = ConversionConfig(s=1.0 / 12.0)
    p = decode_anchor_based(AnchorBox(0, 0, 8, 8),
                            HeadOffsets(0, 0, 0, 0, 1.0), cfg)
    s = math.sqrt(1.0 / 12.0)
    np.testing.assert_allclose(p.gamma, s * (s * 8.0), rtol=1e-12)


def test_angles_survive_head_roundtrip():
    # encode/decode through a head preserves the recovered box angle
    rng = np.random.default_rng(14)
    ctx = AnchorFreeContext(0, 0, 8.0)
    for _ in range(300):
        box = ObbLe(0, 0, rng.uniform(2, 10) + 1.0, rng.uniform(1, 2),
                    rng.uniform(-math.pi / 2, math.pi / 2))
        back = cholesky_to_obb(
            decode_anchor_free(ctx, encode_anchor_free(ctx, obb_to_cholesky(box))))
        assert abs(wrap_angle(back.theta - box.theta)) < 1e-9
