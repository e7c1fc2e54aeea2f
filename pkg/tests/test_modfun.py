import random
from fractions import Fraction

import pytest
from mpmath import mp

from geodesicj.halfplane import HPoint, Mat2Z, Semicircle, Vertical, mobius_act
from geodesicj.modfun import (
    PrecisionCtx,
    PrecisionError,
    automorph_period_window,
    j,
    j_image_point,
    j_invert,
    j_tail_bound,
    klein_lambda,
    reduce_to_fund_domain,
    sample_geodesic,
)

from conftest import random_sl2


def random_hpoint(rng):
    return HPoint(rng.uniform(-1.8, 1.8), rng.uniform(0.25, 2.5))


def test_precision_ctx_defaults():
    ctx = PrecisionCtx(bits=256)
    assert ctx.qterms >= 16
    assert ctx.newton_tol > 0
    with pytest.raises(ValueError):
        PrecisionCtx(bits=32)
    with pytest.raises(ValueError):
        PrecisionCtx(bits=256, qterms=8)


def test_reduce_examples(ctx256):
    with ctx256.workprec():
        z0, m = reduce_to_fund_domain(HPoint(0, 1))
        assert m == Mat2Z(1, 0, 0, 1)
        assert abs(z0.to_mpc() - 1j) < 1e-30

        z0, m = reduce_to_fund_domain(HPoint(2, 1))
        assert abs(z0.to_mpc() - 1j) < 1e-60
        assert m == Mat2Z(1, -2, 0, 1)

        z0, m = reduce_to_fund_domain(HPoint(Fraction(3, 2), Fraction(1, 2)))
        assert abs(z0.to_mpc() - 1j) < 1e-60


def test_reduce_property_random(ctx256):
    rng = random.Random(20)
    with ctx256.workprec():
        for _ in range(100):
            z = random_hpoint(rng)
            z0, m = reduce_to_fund_domain(z)
            x, y = z0.x, z0.y
            assert abs(x) <= mp.mpf("0.5") + mp.mpf("1e-70")
            assert x * x + y * y >= 1 - mp.mpf("1e-70")
            w = mobius_act(m, z)
            assert abs(w.to_mpc() - z0.to_mpc()) < 1e-60


def test_j_special_values(ctx256):
    assert abs(j(HPoint(0, 1), ctx256) - 1728) < 1e-25
    with ctx256.workprec():
        rho = HPoint(Fraction(1, 2), mp.sqrt(3) / 2)
        assert abs(j(rho, ctx256)) < 1e-20
    assert abs(j(HPoint(0, 2), ctx256) - 287496) < 1e-25


def test_j_fold_identities(ctx256):
    assert abs(j(HPoint(2, 1), ctx256) - j(HPoint(0, 1), ctx256)) < 1e-20
    z = HPoint(Fraction(3, 2), Fraction(1, 2))
    assert abs(j(z, ctx256) - 1728) < 1e-20
    re, im = j_image_point(HPoint(2, 1), ctx256)
    assert abs(re - 1728) < 1e-20 and abs(im) < 1e-20


def test_j_real_on_imaginary_axis(ctx256):
    for k in range(19):
        y = 1 + 9 * k / 18
        re, im = j_image_point(HPoint(0, y), ctx256)
        assert abs(im) < 1e-40
        assert re - 1728 > -1e-20


def test_modular_invariance(ctx256):
    rng = random.Random(21)
    tol = mp.mpf(10) ** (-(ctx256.bits // 4))
    for _ in range(100):
        z = random_hpoint(rng)
        m = random_sl2(rng, size=5)
        with ctx256.workprec():
            zm = mobius_act(m, z)
        assert abs(j(zm, ctx256) - j(z, ctx256)) < tol


def test_conjugation_symmetry(ctx256):
    rng = random.Random(22)
    for _ in range(100):
        z = random_hpoint(rng)
        zr = HPoint(-z.x, z.y)
        with ctx256.workprec():
            lhs = mp.conj(j(z, ctx256))
            assert abs(lhs - j(zr, ctx256)) < 1e-20


def test_inversion_examples(ctx256):
    z = j_invert(1728, ctx256)
    assert abs(z.to_mpc() - 1j) < 1e-20
    z = j_invert(0, ctx256)
    with ctx256.workprec():
        rho = mp.mpc(mp.mpf(1) / 2, mp.sqrt(3) / 2)
        assert abs(z.to_mpc() - rho) < 1e-15
    z = j_invert(287496, ctx256)
    assert abs(z.to_mpc() - 2j) < 1e-30


def test_inversion_roundtrip_grid(ctx256):
    tol = 10 * mp.mpf(ctx256.newton_tol)
    for a in range(10):
        for b in range(10):
            w = mp.mpc(-3000 + 777.7 * a, -2500 + 551.3 * b)
            z = j_invert(w, ctx256)
            assert z.y > 0
            assert abs(j(z, ctx256) - w) <= tol * (1 + abs(w))
            with ctx256.workprec():
                x, y = mp.mpf(z.x), mp.mpf(z.y)
                assert abs(x) <= 0.5 + 1e-20 and x * x + y * y >= 1 - 1e-20


def test_tail_bound_shrinks_with_precision():
    z = HPoint(Fraction(1, 3), Fraction(5, 4))
    t128 = j_tail_bound(z, PrecisionCtx(bits=128))
    t256 = j_tail_bound(z, PrecisionCtx(bits=256))
    # qterms grow by ~16 with the doubling; each term is a factor e^{-pi sqrt 3}
    assert t256 < t128 * mp.mpf(10) ** -30


def test_precision_error_when_qterms_too_low():
    ctx = PrecisionCtx(bits=256, qterms=16)
    with pytest.raises(PrecisionError):
        j(HPoint(0, 1), ctx)


def test_lambda_values(ctx256):
    lam = klein_lambda(HPoint(0, 1), ctx256)
    assert abs(lam - mp.mpf(1) / 2) < 1e-20
    assert abs(klein_lambda(HPoint(0, 10), ctx256)) < 1e-10
    assert abs(klein_lambda(HPoint(1, 10), ctx256)) < 1e-10


def test_lambda_conformal_symmetry(ctx256):
    # lambda(-1/z) = 1 - lambda(z) pins lambda(i) = 1/2; spot-check the
    # identity off the fixed point
    z = HPoint(Fraction(1, 5), Fraction(7, 5))
    with ctx256.workprec():
        w = -1 / z.to_mpc()
        lam1 = klein_lambda(z, ctx256)
        lam2 = klein_lambda(HPoint(w.real, w.imag), ctx256)
        assert abs(lam2 - (1 - lam1)) < 1e-50


def test_sample_geodesic_examples(ctx256):
    pts = sample_geodesic(Vertical(0), 3, ctx=ctx256)
    with ctx256.workprec():
        assert abs(pts[0].y - mp.exp(-1)) < 1e-60
        assert abs(pts[1].y - 1) < 1e-60
        assert abs(pts[2].y - mp.e) < 1e-60
        assert all(p.x == 0 for p in pts)
    # window midpoint pi/2 is float-accurate; the point is exactly on the circle
    apex = sample_geodesic(Semicircle(0, 5), 1, ctx=ctx256)[0]
    with ctx256.workprec():
        assert abs(apex.x) < 1e-15
        assert abs(apex.x**2 + apex.y**2 - 5) < 1e-60


def test_one_period_window_identified(ctx256):
    g = Semicircle(Fraction(1), Fraction(2))
    pts = sample_geodesic(g, 9, window="one-period", ctx=ctx256)
    with ctx256.workprec():
        # window ends carry float accuracy; identification holds to that scale
        moved = mobius_act(Mat2Z(5, 2, 2, 1), pts[-1])
        assert abs(moved.to_mpc() - pts[0].to_mpc()) < 5e-13
    with pytest.raises(ValueError):
        automorph_period_window(Vertical(0))
    with pytest.raises(ValueError):
        sample_geodesic(Vertical(0), 4, window="one-period", ctx=ctx256)
