import random

import pytest

from geodesicj.halfplane import MAT_S, MAT_T, Mat2Z
from geodesicj.modfun import PrecisionCtx


@pytest.fixture(scope="session")
def ctx256():
    return PrecisionCtx(bits=256)


@pytest.fixture(scope="session")
def ctx128():
    return PrecisionCtx(bits=128)


def random_sl2(rng: random.Random, size: int = 12) -> Mat2Z:
    """Random SL2(Z) element as a short word in the standard generators."""
    m = Mat2Z(1, 0, 0, 1)
    for _ in range(rng.randint(1, 4)):
        k = rng.randint(-size, size)
        m = m * Mat2Z(1, k, 0, 1)
        if rng.random() < 0.8:
            m = m * MAT_S
    return m


def random_geodesic_matrix(rng: random.Random, nmax: int = 60) -> Mat2Z:
    """Random primitive canonical trace-zero matrix with negative determinant."""
    while True:
        a = rng.randint(-9, 9)
        c = rng.randint(0, 9)
        b = rng.randint(-nmax, nmax)
        m = Mat2Z(a, b, c, -a)
        if m.det >= 0 or m.content == 0:
            continue
        m = m.primitive().canonical_sign()
        if m.det < 0:
            return m
