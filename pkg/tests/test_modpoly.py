import json
import random
from fractions import Fraction
from math import gcd

import pytest
from mpmath import mp

from geodesicj.halfplane import HPoint
from geodesicj.modfun import j
from geodesicj.modpoly import (
    BivarZPoly,
    divisor_systems,
    exact_phi_pair,
    load_phi,
    phi_compute,
    phi_eval,
    phi_tilde,
    phi_tilde_eval,
    psi_degree,
    save_phi,
)


def random_exact_point(rng):
    x = Fraction(rng.randint(-40, 40), 100)
    y = Fraction(rng.randint(90, 170), 100)
    return HPoint(x, y)


def test_divisor_systems_examples():
    assert divisor_systems(1) == [(1, 0, 1)]
    assert sorted(divisor_systems(2)) == [(1, 0, 2), (1, 1, 2), (2, 0, 1)]
    assert psi_degree(10) == 18


def test_psi_formula_brute():
    for n in range(1, 101):
        psi = n
        m = n
        p = 2
        seen = set()
        while p * p <= m:
            if m % p == 0:
                seen.add(p)
                while m % p == 0:
                    m //= p
            p += 1
        if m > 1:
            seen.add(m)
        for q in seen:
            psi = psi * (q + 1) // q
        # brute: triples with gcd filter
        brute = sum(
            1
            for a in range(1, n + 1)
            if n % a == 0
            for b in range(n // a)
            if gcd(gcd(a, b), n // a) == 1
        )
        assert psi_degree(n) == brute == psi


def test_phi_eval_vanishes_on_isogenous_pairs(ctx256):
    rng = random.Random(31)
    for n in (2, 3, 5, 7, 10):
        for _ in range(3):
            z = random_exact_point(rng)
            zn = HPoint(n * Fraction(z.x), n * Fraction(z.y))
            res = phi_eval(n, j(zn, ctx256), j(z, ctx256), ctx256)
            assert res.normalized < 1e-12


def test_phi_eval_level_one(ctx256):
    res = phi_eval(1, j(HPoint(0, 1), ctx256), j(HPoint(0, 1), ctx256), ctx256)
    assert res.normalized < 1e-40


def test_phi_eval_nonvanishing(ctx256):
    res = phi_eval(2, mp.mpf(1728 + 10**6), mp.mpf(1728), ctx256)
    assert res.normalized > 1e-3


def test_phi_eval_symmetric_on_vanishing_pairs(ctx256):
    rng = random.Random(32)
    for n in (2, 3):
        z = random_exact_point(rng)
        zn = HPoint(n * Fraction(z.x), n * Fraction(z.y))
        u, v = j(zn, ctx256), j(z, ctx256)
        assert phi_eval(n, u, v, ctx256).normalized < 1e-12
        assert phi_eval(n, v, u, ctx256).normalized < 1e-12


def test_phi_compute_level_one(ctx256):
    p1 = phi_compute(1, ctx256)
    assert p1.as_dict() == {(1, 0): 1, (0, 1): -1}


def test_phi_compute_level_two(ctx256):
    p2 = phi_compute(2, ctx256)
    assert p2.degree == 3
    assert p2.is_symmetric()
    assert p2.coeff(2, 2) == -1
    assert p2.coeff(0, 0) == -157464000000000
    assert p2.coeff(3, 0) == 1 and p2.coeff(0, 3) == 1


def test_phi_compute_level_three(ctx256):
    p3 = phi_compute(3, ctx256)
    assert p3.degree == 4
    assert p3.is_symmetric()
    z = HPoint(Fraction(1, 5), Fraction(11, 10))
    z3 = HPoint(Fraction(3, 5), Fraction(33, 10))
    val = p3.eval_mp(j(z3, ctx256), j(z, ctx256))
    scale = sum(abs(c) for _, _, c in p3.terms) * (1 + abs(j(z3, ctx256))) ** 8
    assert abs(val) / scale < 1e-30


def test_phi_compute_rejects_large(ctx256):
    with pytest.raises(ValueError):
        phi_compute(7, ctx256)


def test_phi_tilde_level_one(ctx256):
    p1 = phi_compute(1, ctx256)
    t1 = phi_tilde(p1)
    assert t1.as_dict() == {(0, 1): 1}
    assert t1.normalization == "divided_by_2i"


def test_phi_tilde_even_integer(ctx256):
    for n in (2, 3, 5):
        _, tilde = exact_phi_pair(n, ctx256)
        assert all(jj % 2 == 0 for _, jj, _ in tilde.terms)
        assert all(isinstance(c, int) for _, _, c in tilde.terms)


def test_phi_tilde_matches_complex_substitution(ctx256):
    p2, t2 = exact_phi_pair(2, ctx256)
    rng = random.Random(33)
    with ctx256.workprec():
        for _ in range(20):
            x = mp.mpf(rng.uniform(-3000, 3000))
            y = mp.mpf(rng.uniform(-3000, 3000))
            direct = p2.eval_mp(mp.mpc(x, y), mp.mpc(x, -y))
            tilde_val = t2.eval_mp(x, y)
            assert abs(direct.imag) < 1e-40 * (1 + abs(direct))
            assert abs(direct.real - tilde_val) < 1e-40 * (1 + abs(tilde_val))


def test_exact_vs_proxy_paths(ctx256):
    rng = random.Random(34)
    for n in (2, 3, 5):
        for _ in range(50):
            x = rng.uniform(-2500, 3500)
            y = rng.uniform(-2500, 2500)
            exact = phi_tilde_eval(n, x, y, ctx256)
            assert exact.path == "exact"
            proxy = phi_eval(n, mp.mpc(x, y), mp.mpc(x, -y), ctx256)
            rel = abs(abs(exact.value) - abs(proxy.value)) / (1 + abs(exact.value))
            assert rel < 1e-10


def test_phi_tilde_eval_examples(ctx256):
    assert phi_tilde_eval(1, 123.456, 0.0, ctx256).value == 0
    v = phi_tilde_eval(5, 1728.0, 0.0, ctx256)
    assert v.normalized < 1e-30
    v = phi_tilde_eval(10, 1728.0, 0.0, ctx256)
    assert v.path == "proxy" and v.normalized < 1e-30


def test_cache_roundtrip(tmp_path, ctx256):
    p2 = phi_compute(2, ctx256)
    path = save_phi(p2, str(tmp_path))
    assert load_phi(2, str(tmp_path)) == p2
    # checksum corruption invalidates the cache entry
    data = json.loads(open(path).read())
    data["coeffs"][0]["c"] = "12345"
    with open(path, "w") as fh:
        json.dump(data, fh)
    assert load_phi(2, str(tmp_path)) is None
    assert load_phi(3, str(tmp_path)) is None


def test_phi_compute_uses_cache(tmp_path, ctx256):
    fake = BivarZPoly.from_dict(2, {(1, 0): 1, (0, 1): -1})
    save_phi(fake, str(tmp_path))
    assert phi_compute(2, ctx256, cache_dir=str(tmp_path)) == fake
