import random
from fractions import Fraction

import pytest
from mpmath import mp

from geodesicj.halfplane import (
    OO,
    HPoint,
    Irrational,
    Mat2Z,
    Semicircle,
    SpecialPoint,
    Vertical,
    endpoints,
    geodesic_from_endpoints,
    geodesic_from_matrix,
    geodesics_through_point,
    is_special_geodesic,
    matrix_from_geodesic,
    mobius_act,
    point_fixing_matrix,
    point_on_geodesic,
    special_points_on_geodesic,
    squarefree_part,
)

from conftest import random_geodesic_matrix, random_sl2


def test_geodesic_from_matrix_examples():
    assert geodesic_from_matrix(Mat2Z(-1, 0, 0, 1)) == Vertical(Fraction(0))
    assert geodesic_from_matrix(Mat2Z(1, 1, 1, -1)) == Semicircle(Fraction(1), Fraction(2))
    assert geodesic_from_matrix(Mat2Z(0, 5, 1, 0)) == Semicircle(Fraction(0), Fraction(5))


def test_geodesic_from_matrix_rejects():
    with pytest.raises(ValueError):
        geodesic_from_matrix(Mat2Z(1, 0, 0, 1))  # nonzero trace
    with pytest.raises(ValueError):
        geodesic_from_matrix(Mat2Z(0, -1, 1, 0))  # elliptic (det > 0)


def test_matrix_from_geodesic_examples():
    assert matrix_from_geodesic(Vertical(0)) == Mat2Z(1, 0, 0, -1)
    assert matrix_from_geodesic(Semicircle(1, 2)) == Mat2Z(1, 1, 1, -1)
    assert matrix_from_geodesic(Semicircle(0, Fraction(5, 2))) == Mat2Z(0, 5, 2, 0)


def test_matrix_from_geodesic_rejects_floats():
    with pytest.raises(TypeError):
        matrix_from_geodesic(Semicircle(0.5, 2.0))


def test_roundtrip_random():
    rng = random.Random(1)
    for _ in range(200):
        m = random_geodesic_matrix(rng)
        g = geodesic_from_matrix(m)
        assert geodesic_from_matrix(matrix_from_geodesic(g)) == g


def test_sign_and_scale_invariance():
    rng = random.Random(2)
    for _ in range(100):
        m = random_geodesic_matrix(rng)
        lam = rng.randint(2, 9)
        g = geodesic_from_matrix(m)
        assert geodesic_from_matrix(-m) == g
        scaled = Mat2Z(lam * m.a, lam * m.b, lam * m.c, lam * m.d)
        assert geodesic_from_matrix(scaled) == g


def test_endpoints_examples():
    e = endpoints(Vertical(0))
    assert e[0] == 0 and e[1] is OO
    with mp.workprec(80):
        lo, hi = endpoints(Semicircle(1, 2))
        assert abs(lo - (1 - mp.sqrt(2))) < 1e-20
        assert abs(hi - (1 + mp.sqrt(2))) < 1e-20
        lo, hi = endpoints(Semicircle(0, 5))
        assert abs(hi * hi - 5) < 1e-20 and abs(lo + hi) < 1e-20


def test_endpoints_are_matrix_fixed_points():
    rng = random.Random(3)
    with mp.workprec(120):
        for _ in range(50):
            m = random_geodesic_matrix(rng)
            g = geodesic_from_matrix(m)
            for t in endpoints(g):
                if t is OO:
                    assert m.c == 0
                    continue
                # roots of c t^2 - 2 a t - b
                res = m.c * t * t - 2 * m.a * t - m.b
                assert abs(res) < mp.mpf(2) ** -90 * (1 + abs(m.b) + abs(t) ** 2)


def test_mobius_examples():
    z = HPoint(0, 1)
    assert mobius_act(Mat2Z(1, 0, 0, 1), z) == HPoint(mp.mpf(0), mp.mpf(1))
    w = mobius_act(Mat2Z(0, -1, 1, 0), z)
    assert abs(w.x) < 1e-15 and abs(w.y - 1) < 1e-15
    w = mobius_act(Mat2Z(1, 1, 0, 1), z)
    assert abs(w.x - 1) < 1e-15 and abs(w.y - 1) < 1e-15
    with pytest.raises(ValueError):
        mobius_act(Mat2Z(1, 0, 0, -1), z)


def test_point_fixing_matrix():
    assert point_fixing_matrix(SpecialPoint(Fraction(0), Fraction(1))) == Mat2Z(0, -1, 1, 0)
    assert point_fixing_matrix(SpecialPoint(Fraction(0), Fraction(2))) == Mat2Z(0, -2, 1, 0)
    with mp.workprec(100):
        for x, d in [(Fraction(2), Fraction(1)), (Fraction(1, 2), Fraction(3, 4))]:
            p = SpecialPoint(x, d)
            m = point_fixing_matrix(p)
            assert m.trace == 0 and m.det > 0 and m.content == 1
            z = p.to_hpoint()
            w = mobius_act(m, z)
            assert abs(w.to_mpc() - z.to_mpc()) < 1e-25


def test_is_special_examples():
    v = is_special_geodesic(Vertical(0))
    assert v.special and v.split and v.level == 1
    v = is_special_geodesic(Semicircle(1, 2))
    assert v.special and not v.split and v.field_disc == 2 and v.level == 2
    v = is_special_geodesic(Semicircle(Irrational("pi", lambda: mp.pi), 1))
    assert not v.special


def test_is_special_rejects_floats():
    with pytest.raises(TypeError):
        is_special_geodesic(Semicircle(0.5, 1.0))


def test_squarefree_part():
    assert squarefree_part(1) == 1
    assert squarefree_part(12) == 3
    assert squarefree_part(49) == 1
    assert squarefree_part(82) == 82


def test_special_points_examples():
    pts = special_points_on_geodesic(Semicircle(0, 5), 1)
    assert pts[0] == SpecialPoint(Fraction(2), Fraction(1))
    pts = special_points_on_geodesic(Vertical(0), 3)
    assert [p.D for p in pts] == [1, 2, 3]
    pts = special_points_on_geodesic(Semicircle(0, 10), 1)
    assert pts[0] == SpecialPoint(Fraction(3), Fraction(1))


def test_special_points_exact_membership():
    rng = random.Random(4)
    for _ in range(40):
        m = random_geodesic_matrix(rng)
        g = geodesic_from_matrix(m)
        if isinstance(g, Vertical):
            continue
        for p in special_points_on_geodesic(g, 12):
            # zero residual in exact rational arithmetic
            assert (p.x - Fraction(g.x0)) ** 2 + p.D == Fraction(g.r)


def test_special_points_rejects_non_special():
    with pytest.raises(ValueError):
        special_points_on_geodesic(Semicircle(Irrational("pi", mp.pi), 1), 1)


def test_geodesics_through_point_examples():
    i_pt = SpecialPoint(Fraction(0), Fraction(1))
    gs = geodesics_through_point(i_pt, 2)
    assert gs == [Semicircle(Fraction(1), Fraction(2)), Semicircle(Fraction(-1), Fraction(2))]
    gs = geodesics_through_point(SpecialPoint(Fraction(2), Fraction(1)), 1)
    assert gs == [Semicircle(Fraction(0), Fraction(5))]
    gs = geodesics_through_point(i_pt, 1, x0s=[0])
    assert gs == [Semicircle(Fraction(0), Fraction(1))]
    assert is_special_geodesic(gs[0]).split


def test_geodesics_through_point_exact_and_special():
    rng = random.Random(5)
    for _ in range(40):
        p = SpecialPoint(
            Fraction(rng.randint(-9, 9), rng.randint(1, 9)),
            Fraction(rng.randint(1, 30), rng.randint(1, 9)),
        )
        for g in geodesics_through_point(p, 6):
            assert (p.x - g.x0) ** 2 + p.D == g.r
            assert is_special_geodesic(g).special


def test_point_on_geodesic():
    z = HPoint(2, 1)
    assert point_on_geodesic(Semicircle(0, 5), z, 1e-12)
    assert point_on_geodesic(Vertical(0), HPoint(0, 1), 1e-15)
    assert not point_on_geodesic(Semicircle(0, 5), HPoint(0, 1), 1e-12)
    with pytest.raises(ValueError):
        point_on_geodesic(Vertical(0), z, 0.0)


def test_geodesic_through_two_special_points_is_special():
    rng = random.Random(6)
    done = 0
    while done < 60:
        x1 = Fraction(rng.randint(-20, 20), rng.randint(1, 6))
        x2 = Fraction(rng.randint(-20, 20), rng.randint(1, 6))
        if x1 == x2:
            continue
        d1 = Fraction(rng.randint(1, 40), rng.randint(1, 6))
        d2 = Fraction(rng.randint(1, 40), rng.randint(1, 6))
        # centre forced by the two membership equations
        x0 = (x1 * x1 + d1 - x2 * x2 - d2) / (2 * (x1 - x2))
        r = (x1 - x0) ** 2 + d1
        g = Semicircle(x0, r)
        assert (x2 - x0) ** 2 + d2 == r
        assert is_special_geodesic(g).special
        done += 1


def test_geodesic_from_endpoints():
    assert geodesic_from_endpoints(Fraction(0), OO) == Vertical(Fraction(0))
    assert geodesic_from_endpoints(Fraction(-1), Fraction(3)) == Semicircle(
        Fraction(1), Fraction(4)
    )
    g = geodesic_from_endpoints((1, 1, 2), (1, -1, 2))  # 1 +- sqrt(2)
    assert g == Semicircle(Fraction(1), Fraction(2))
    assert is_special_geodesic(g).field_disc == 2
    with pytest.raises(ValueError):
        geodesic_from_endpoints((1, 1, 2), (2, -1, 2))


def test_mat2z_helpers():
    m = Mat2Z(2, 3, 1, 2)
    assert (m * m.inverse_unimodular()) == Mat2Z(1, 0, 0, 1)
    assert Mat2Z(-1, 0, 0, 1).canonical_sign() == Mat2Z(1, 0, 0, -1)
    assert Mat2Z(0, 5, 1, 0).is_geodesic_matrix()
    assert not Mat2Z(0, 4, 2, 0).is_geodesic_matrix()  # imprimitive
    assert not Mat2Z(-1, 0, 0, 1).is_geodesic_matrix()  # non-canonical sign
    rng = random.Random(7)
    for _ in range(50):
        m = random_sl2(rng)
        assert m.det == 1
