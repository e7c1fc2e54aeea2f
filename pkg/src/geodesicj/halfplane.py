"""Exact geometry of the upper half-plane.

A trace-zero integer matrix [[a, b], [c, -a]] with negative determinant
cuts out the geodesic c(x^2 + y^2) - 2ax - b = 0: a half-circle centred
on the real axis for c != 0, a vertical line for c = 0.  Geodesics whose
defining data is rational carry infinitely many points x + i*sqrt(D)
with x, D rational; those are the special points, and such geodesics are
the special ones.

All specialness decisions require exact data.  Rationality is not
decidable from a float, so floating inputs are rejected rather than
guessed; a value known to be irrational must be wrapped in Irrational.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt

from mpmath import mp

Rational = Fraction


class ProjectiveInfinity:
    """The boundary point at infinity of the upper half-plane."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "oo"


OO = ProjectiveInfinity()


@dataclass(frozen=True)
class Irrational:
    """Caller-asserted irrational scalar.

    `value` is a number, or a zero-argument callable evaluated at the
    working precision (e.g. ``lambda: mp.pi``).
    """

    label: str
    value: object

    def resolve(self):
        v = self.value
        return v() if callable(v) else v

    def __repr__(self):
        return f"Irrational({self.label!r})"


def is_exact(v) -> bool:
    """True if v is an exact rational quantity (int or Fraction)."""
    return isinstance(v, (int, Fraction))


def as_mpf(v):
    """Convert an exact, floating or Irrational scalar to mpf at mp.prec."""
    if isinstance(v, Irrational):
        v = v.resolve()
    if isinstance(v, Fraction):
        return mp.mpf(v.numerator) / mp.mpf(v.denominator)
    return mp.mpf(v)


# ---------------------------------------------------------------------------
# matrices


@dataclass(frozen=True)
class Mat2Z:
    """2x2 matrix with arbitrary-precision integer entries."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for v in (self.a, self.b, self.c, self.d):
            if not isinstance(v, int):
                raise TypeError(f"Mat2Z entries must be int, got {type(v).__name__}")

    @property
    def trace(self) -> int:
        return self.a + self.d

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    @property
    def content(self) -> int:
        return gcd(gcd(abs(self.a), abs(self.b)), gcd(abs(self.c), abs(self.d)))

    def __neg__(self) -> "Mat2Z":
        return Mat2Z(-self.a, -self.b, -self.c, -self.d)

    def __mul__(self, other: "Mat2Z") -> "Mat2Z":
        return Mat2Z(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse_unimodular(self) -> "Mat2Z":
        """Inverse, valid only when det = +-1."""
        det = self.det
        if det not in (1, -1):
            raise ValueError(f"matrix with det {det} has no integral inverse")
        return Mat2Z(det * self.d, -det * self.b, -det * self.c, det * self.a)

    def conjugate(self, m: "Mat2Z") -> "Mat2Z":
        """m * self * m^{-1} for unimodular m."""
        return m * self * m.inverse_unimodular()

    def rows(self):
        return [[self.a, self.b], [self.c, self.d]]

    def is_geodesic_matrix(self) -> bool:
        """Trace zero, negative determinant, primitive, canonical sign."""
        return (
            self.trace == 0
            and self.det < 0
            and self.content == 1
            and self.has_canonical_sign()
        )

    def has_canonical_sign(self) -> bool:
        return self.c > 0 or (self.c == 0 and self.a > 0)

    def canonical_sign(self) -> "Mat2Z":
        """The one of +-self with c > 0, or c = 0 and a > 0."""
        return self if self.has_canonical_sign() else -self

    def primitive(self) -> "Mat2Z":
        g = self.content
        if g == 0:
            raise ValueError("zero matrix has no primitive form")
        return Mat2Z(self.a // g, self.b // g, self.c // g, self.d // g)


IDENTITY = Mat2Z(1, 0, 0, 1)
MAT_S = Mat2Z(0, -1, 1, 0)
MAT_T = Mat2Z(1, 1, 0, 1)


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class HPoint:
    """Point x + iy of the upper half-plane; coordinates of any numeric type."""

    x: object
    y: object

    def __post_init__(self):
        if not _positive(self.y):
            raise ValueError(f"HPoint needs y > 0, got y = {self.y}")

    def to_mpc(self):
        return mp.mpc(as_mpf(self.x), as_mpf(self.y))


def _positive(v) -> bool:
    if isinstance(v, Irrational):
        v = v.resolve()
    if isinstance(v, Fraction):
        return v > 0
    return float(v) > 0


@dataclass(frozen=True)
class SpecialPoint:
    """The point x + i*sqrt(D) with x and D > 0 rational."""

    x: Fraction
    D: Fraction

    def __post_init__(self):
        if not is_exact(self.x) or not is_exact(self.D):
            raise TypeError("SpecialPoint requires exact rational x and D")
        object.__setattr__(self, "x", Fraction(self.x))
        object.__setattr__(self, "D", Fraction(self.D))
        if self.D <= 0:
            raise ValueError("SpecialPoint requires D > 0")

    def to_hpoint(self) -> HPoint:
        return HPoint(self.x, mp.sqrt(as_mpf(self.D)))


# ---------------------------------------------------------------------------
# geodesics


@dataclass(frozen=True)
class Vertical:
    """Vertical geodesic X = x0."""

    x0: object

    def has_exact_data(self) -> bool:
        return is_exact(self.x0)


@dataclass(frozen=True)
class Semicircle:
    """Half-circle geodesic (X - x0)^2 + Y^2 = r; r is the squared radius."""

    x0: object
    r: object

    def __post_init__(self):
        if not _positive(self.r):
            raise ValueError(f"Semicircle needs squared radius r > 0, got {self.r}")

    def has_exact_data(self) -> bool:
        return is_exact(self.x0) and is_exact(self.r)


Geodesic = Vertical | Semicircle


@dataclass(frozen=True)
class Specialness:
    """Verdict of is_special_geodesic.

    split       -- level N = |det| is a perfect square (split-torus case)
    field_disc  -- squarefree part d of N in the real-quadratic case
    level       -- N itself, from the primitive matrix of the geodesic
    """

    special: bool
    split: bool | None = None
    field_disc: int | None = None
    level: int | None = None


NOT_SPECIAL = Specialness(False)


def squarefree_part(n: int) -> int:
    """Largest squarefree divisor d with n = d * square, for n >= 1."""
    if n < 1:
        raise ValueError("squarefree_part needs n >= 1")
    d = 1
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            if e % 2:
                d *= p
        p += 1 if p == 2 else 2
    return d * n


def _contains_irrational(*values) -> bool:
    return any(isinstance(v, Irrational) for v in values)


def _require_exact(op: str, *values):
    for v in values:
        if not is_exact(v):
            raise TypeError(
                f"{op} needs exact rational data; got {v!r}. "
                "Wrap known-irrational values in Irrational."
            )


# ---------------------------------------------------------------------------
# operations


def geodesic_from_matrix(A: Mat2Z) -> Geodesic:
    """Geodesic c(x^2+y^2) - 2ax - b = 0 attached to a trace-zero hyperbolic A.

    A, -A and positive multiples of A all give the same geodesic.
    """
    if A.trace != 0:
        raise ValueError(f"matrix must have trace zero, got trace {A.trace}")
    if A.det >= 0:
        raise ValueError(f"matrix must be hyperbolic (det < 0), got det {A.det}")
    a, b, c = A.a, A.b, A.c
    if c == 0:
        return Vertical(Fraction(-b, 2 * a))
    return Semicircle(Fraction(a, c), Fraction(a * a + b * c, c * c))


def matrix_from_geodesic(g: Geodesic) -> Mat2Z:
    """Primitive canonical-sign integer matrix whose geodesic is g.

    The matrix is unique: trace-zero rational matrices with a given
    geodesic are scalar multiples of one another.
    """
    if isinstance(g, Vertical):
        _require_exact("matrix_from_geodesic", g.x0)
        x0 = Fraction(g.x0)
        # X = x0 is -2a x - b = 0 with a = 1, b = -2 x0, cleared and reduced
        a = x0.denominator
        b = -2 * x0.numerator
        g_ = gcd(a, abs(b))
        return Mat2Z(a // g_, b // g_, 0, -(a // g_)).canonical_sign()
    _require_exact("matrix_from_geodesic", g.x0, g.r)
    x0 = Fraction(g.x0)
    v = Fraction(g.r) - x0 * x0  # b/c once a/c = x0 is cleared
    c = x0.denominator * v.denominator // gcd(x0.denominator, v.denominator)
    a = x0.numerator * (c // x0.denominator)
    b = v.numerator * (c // v.denominator)
    g_ = gcd(gcd(abs(a), abs(b)), c)
    return Mat2Z(a // g_, b // g_, c // g_, -(a // g_)).canonical_sign()


def endpoints(g: Geodesic):
    """Boundary endpoints in R union {oo}: the fixed points of the matrix.

    Vertical lines end at (x0, oo); a half-circle ends at x0 -+ sqrt(r).
    Returned as mpf at the current working precision (exact inputs are
    converted; sqrt(r) is irrational in general).
    """
    if isinstance(g, Vertical):
        return (as_mpf(g.x0), OO)
    x0 = as_mpf(g.x0)
    s = mp.sqrt(as_mpf(g.r))
    return (x0 - s, x0 + s)


def mobius_act(M, z: HPoint) -> HPoint:
    """Fractional-linear action of a positive-determinant real matrix."""
    if isinstance(M, Mat2Z):
        a, b, c, d = M.a, M.b, M.c, M.d
    else:
        (a, b), (c, d) = M
    a, b, c, d = (as_mpf(v) for v in (a, b, c, d))
    if a * d - b * c <= 0:
        raise ValueError("mobius_act needs det > 0")
    w = (a * z.to_mpc() + b) / (c * z.to_mpc() + d)
    return HPoint(w.real, w.imag)


def point_fixing_matrix(p: SpecialPoint) -> Mat2Z:
    """Primitive integral trace-zero elliptic matrix A with A.z = z at z = x + i*sqrt(D).

    Scaled from the rational matrix [[x, -(x^2 + D)], [1, -x]].
    """
    x, D = p.x, p.D
    s = x * x + D
    c = x.denominator * s.denominator // gcd(x.denominator, s.denominator)
    a = x.numerator * (c // x.denominator)
    b = -s.numerator * (c // s.denominator)
    g_ = gcd(gcd(abs(a), abs(b)), c)
    return Mat2Z(a // g_, b // g_, c // g_, -(a // g_)).canonical_sign()


def is_special_geodesic(g: Geodesic) -> Specialness:
    """Decide specialness from exact data and classify split vs real quadratic.

    Special means the defining data (x0, and r for half-circles) is
    rational; equivalently the endpoints are rational or quadratic
    conjugates.  The class is split when N = |det| of the primitive
    matrix is a perfect square, real quadratic with field discriminant
    the squarefree part of N otherwise.
    """
    data = (g.x0,) if isinstance(g, Vertical) else (g.x0, g.r)
    if _contains_irrational(*data):
        return NOT_SPECIAL
    _require_exact("is_special_geodesic", *data)
    N = abs(matrix_from_geodesic(g).det)
    root = isqrt(N)
    if root * root == N:
        return Specialness(True, split=True, level=N)
    return Specialness(True, split=False, field_disc=squarefree_part(N), level=N)


def geodesic_from_endpoints(e1, e2) -> Geodesic:
    """Geodesic with the given exact boundary endpoints.

    Endpoints are rationals, OO, or quadratic surds given as triples
    (p, q, d) meaning p + q*sqrt(d) with p, q rational and d a positive
    non-square integer; surd endpoints must be conjugate.
    """
    if e2 is OO or e1 is OO:
        e = e2 if e1 is OO else e1
        _require_exact("geodesic_from_endpoints", e)
        return Vertical(Fraction(e))
    if isinstance(e1, tuple) or isinstance(e2, tuple):
        if not (isinstance(e1, tuple) and isinstance(e2, tuple)):
            raise ValueError("surd endpoints must come as a conjugate pair")
        (p1, q1, d1), (p2, q2, d2) = e1, e2
        if (p1, d1) != (p2, d2) or Fraction(q1) != -Fraction(q2):
            raise ValueError("surd endpoints are not quadratic conjugates")
        x0 = Fraction(p1)
        r = Fraction(q1) ** 2 * d1
        return Semicircle(x0, r)
    _require_exact("geodesic_from_endpoints", e1, e2)
    e1, e2 = Fraction(e1), Fraction(e2)
    if e1 == e2:
        raise ValueError("endpoints must be distinct")
    x0 = (e1 + e2) / 2
    return Semicircle(x0, (e1 - x0) ** 2)


def _rational_sqrt_floor(r: Fraction) -> Fraction:
    """A rational lower bound q of sqrt(r) with q^2 <= r, decently tight."""
    num, den = r.numerator, r.denominator
    scale = 10**12
    return Fraction(isqrt(num * den * scale * scale), den * scale)


def special_points_on_geodesic(g: Geodesic, count: int) -> list[SpecialPoint]:
    """count distinct special points lying exactly on the special geodesic g.

    Half-circle: rational x with (x - x0)^2 < r and D = r - (x - x0)^2,
    swept over integers descending from the right endpoint, then over
    finer denominators.  Vertical: x0 + i*sqrt(D) for D = 1, 2, 3, ...
    Membership is exact by construction.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    verdict = is_special_geodesic(g)
    if not verdict.special:
        raise ValueError("special_points_on_geodesic needs a special geodesic")
    if isinstance(g, Vertical):
        return [SpecialPoint(Fraction(g.x0), Fraction(D)) for D in range(1, count + 1)]
    x0, r = Fraction(g.x0), Fraction(g.r)
    points: list[SpecialPoint] = []
    seen: set[Fraction] = set()
    q = 1
    while len(points) < count:
        # x = k/q descending from the right endpoint toward the left one
        hi = _rational_sqrt_floor(r)
        k = (x0 + hi).numerator * q // (x0 + hi).denominator
        while len(points) < count:
            x = Fraction(k, q)
            k -= 1
            if x in seen:
                continue
            D = r - (x - x0) ** 2
            if D <= 0:
                if x < x0:
                    break
                continue
            seen.add(x)
            points.append(SpecialPoint(x, D))
        q += 1
    return points


def geodesics_through_point(
    p: SpecialPoint, count: int, x0s: list | None = None
) -> list[Geodesic]:
    """count special geodesics containing p exactly.

    For each rational centre x0 the half-circle (X - x0)^2 + Y^2 = r with
    r = (x - x0)^2 + D passes through x + i*sqrt(D).  Default centres are
    0, 1, -1, 2, -2, ... skipping x0 = x (that degenerate split case is
    available by passing x0s explicitly).
    """
    if count < 1:
        raise ValueError("count must be >= 1")

    def default_centres():
        yield Fraction(0)
        k = 1
        while True:
            yield Fraction(k)
            yield Fraction(-k)
            k += 1

    out: list[Geodesic] = []
    if x0s is not None:
        centres = iter([Fraction(v) for v in x0s])
        skip_x = False
    else:
        centres = default_centres()
        skip_x = True
    for x0 in centres:
        if len(out) >= count:
            break
        if skip_x and x0 == p.x:
            continue
        out.append(Semicircle(x0, (p.x - x0) ** 2 + p.D))
    if len(out) < count:
        raise ValueError("not enough centres supplied")
    return out


def point_on_geodesic(g: Geodesic, z: HPoint, tol) -> bool:
    """Numeric membership test with relative tolerance tol > 0."""
    if not float(tol) > 0:
        raise ValueError("tol must be > 0")
    x, y = as_mpf(z.x), as_mpf(z.y)
    if isinstance(g, Vertical):
        return abs(x - as_mpf(g.x0)) <= as_mpf(tol)
    r = as_mpf(g.r)
    res = abs((x - as_mpf(g.x0)) ** 2 + y * y - r)
    return res <= as_mpf(tol) * (1 + abs(r))
