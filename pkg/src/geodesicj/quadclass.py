"""Conjugacy classes of trace-zero integer matrices via indefinite forms.

A trace-zero matrix [[a, b], [c, -a]] of determinant -N corresponds to
the binary quadratic form (c, -2a, -b) of discriminant 4N, and
SL2(Z)-conjugacy of matrices is proper equivalence of forms.  Classes
are enumerated through Gauss reduction of indefinite forms: equivalence
classes of reduced forms are exactly the rho-cycles.  Imprimitive forms
(the non-invertible ideal classes) are carried along by factoring out
the content.

The quotient identifying a matrix class with the class of its negation
indexes the distinct geodesic images; it is computed here as tilde_pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import gcd, isqrt

from .halfplane import IDENTITY, MAT_S, MAT_T, Mat2Z


class SplitTorusError(ValueError):
    """Raised where a square determinant (split torus) admits no Pell automorph."""


@dataclass(frozen=True)
class QForm:
    """Binary quadratic form p X^2 + q XY + r Y^2."""

    p: int
    q: int
    r: int

    @property
    def disc(self) -> int:
        return self.q * self.q - 4 * self.p * self.r

    @property
    def content(self) -> int:
        return gcd(gcd(abs(self.p), abs(self.q)), abs(self.r))

    def primitive(self) -> "QForm":
        g = self.content
        return QForm(self.p // g, self.q // g, self.r // g)

    def scale(self, k: int) -> "QForm":
        return QForm(k * self.p, k * self.q, k * self.r)

    def __neg__(self) -> "QForm":
        return QForm(-self.p, -self.q, -self.r)

    def apply(self, m: Mat2Z) -> "QForm":
        """Substitute (x, y) -> (a x + b y, c x + d y)."""
        a, b, c, d = m.a, m.b, m.c, m.d
        p, q, r = self.p, self.q, self.r
        return QForm(
            p * a * a + q * a * c + r * c * c,
            2 * p * a * b + q * (a * d + b * c) + 2 * r * c * d,
            p * b * b + q * b * d + r * d * d,
        )


@dataclass(frozen=True)
class PellSolution:
    """Minimal positive (t, u) with t^2 - N u^2 = 1."""

    t: int
    u: int


@dataclass(frozen=True)
class ClassSet:
    """Conjugacy classes of trace-zero determinant -N integer matrices."""

    N: int
    reps: tuple[Mat2Z, ...]
    cycles: tuple[tuple[QForm, ...], ...]
    tilde_pairs: tuple[tuple[int, ...], ...]

    def to_json(self) -> str:
        data = {
            "N": str(self.N),
            "reps": [[str(v) for v in (m.a, m.b, m.c, m.d)] for m in self.reps],
            "tilde_pairs": [list(cell) for cell in self.tilde_pairs],
        }
        return json.dumps(data, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ClassSet":
        data = json.loads(text)
        N = int(data["N"])
        reps = tuple(Mat2Z(*[int(v) for v in row]) for row in data["reps"])
        cycles = tuple(cycle(form_from_matrix(m)) for m in reps)
        pairs = tuple(tuple(cell) for cell in data["tilde_pairs"])
        return ClassSet(N, reps, cycles, pairs)


# ---------------------------------------------------------------------------
# matrix <-> form dictionary


def form_from_matrix(A: Mat2Z) -> QForm:
    """The form (c, -2a, -b) whose roots are the fixed points of A."""
    if A.trace != 0:
        raise ValueError(f"matrix must have trace zero, got trace {A.trace}")
    return QForm(A.c, -2 * A.a, -A.b)


def matrix_from_form(f: QForm) -> Mat2Z:
    """Inverse dictionary: canonical-sign matrix [[-q/2, -r], [p, q/2]]."""
    if f.q % 2:
        raise ValueError("form with odd middle coefficient has no trace-zero integral matrix")
    if f.disc <= 0:
        raise ValueError("need positive discriminant")
    return Mat2Z(-f.q // 2, -f.r, f.p, f.q // 2).canonical_sign()


# ---------------------------------------------------------------------------
# Gauss reduction of indefinite forms


def _require_nonsquare_disc(D: int):
    if D <= 0:
        raise ValueError(f"need positive discriminant, got {D}")
    s = isqrt(D)
    if s * s == D:
        raise ValueError(f"square discriminant {D} is handled by the brute-force path")


def is_reduced(f: QForm) -> bool:
    """0 < q < sqrt(D) and sqrt(D) - q < 2|p| < sqrt(D) + q, tested exactly."""
    D = f.disc
    _require_nonsquare_disc(D)
    q = f.q
    if q <= 0 or q * q >= D:
        return False
    # |2|p| - sqrt(D)| < q  <=>  L <= 0 or L^2 < 16 p^2 D, L = 4p^2 + D - q^2
    L = 4 * f.p * f.p + D - q * q
    return L <= 0 or L * L < 16 * f.p * f.p * D


def rho(f: QForm) -> tuple[QForm, Mat2Z]:
    """One reduction step; returns (new form, the SL2(Z) substitution used)."""
    D = f.disc
    _require_nonsquare_disc(D)
    r = f.r
    if r == 0:
        raise ValueError("rho undefined for r = 0 (square discriminant)")
    s = isqrt(D)
    two_r = 2 * abs(r)
    if abs(r) <= s:
        # unique q' = -q mod 2|r| in (sqrt(D) - 2|r|, sqrt(D))
        q_new = s - (s + f.q) % two_r
    else:
        q_new = abs(r) - (abs(r) + f.q) % two_r
    m = (f.q + q_new) // (2 * r)
    step = Mat2Z(0, -1, 1, m)
    out = QForm(r, q_new, (q_new * q_new - D) // (4 * r))
    return out, step


def reduce_form(f: QForm) -> tuple[QForm, Mat2Z]:
    """Reduce f, factoring out the content; returns (reduced, transform).

    The transform M in SL2(Z) satisfies f.apply(M) == reduced.
    """
    _require_nonsquare_disc(f.disc)
    g = f.content
    cur = f.primitive()
    t = IDENTITY
    for _ in range(10_000):
        if is_reduced(cur):
            return cur.scale(g), t
        cur, step = rho(cur)
        t = t * step
    raise RuntimeError(f"reduction of {f} did not terminate")


def cycle(f: QForm) -> tuple[QForm, ...]:
    """The rho-cycle of reduced forms equivalent to f (content restored)."""
    g = f.content
    start, _ = reduce_form(f.primitive())
    out = [start]
    cur = start
    for _ in range(100_000):
        cur, _ = rho(cur)
        if cur == start:
            return tuple(q.scale(g) for q in out)
        out.append(cur)
    raise RuntimeError(f"cycle of {f} did not close")


def _canonical_cycle(forms: tuple[QForm, ...]) -> tuple[QForm, ...]:
    """Lexicographically minimal rotation, making cycle equality a pure == test."""
    keys = [(q.p, q.q, q.r) for q in forms]
    best = min(range(len(forms)), key=lambda i: keys[i:] + keys[:i])
    return forms[best:] + forms[:best]


def class_key(A: Mat2Z) -> tuple:
    """Invariant determining the SL2(Z)-conjugacy class of a trace-zero matrix."""
    f = form_from_matrix(A)
    return (f.content, _canonical_cycle(cycle(f)))


def are_conjugate(A: Mat2Z, B: Mat2Z) -> bool:
    """SL2(Z)-conjugacy via cycle comparison (non-square |det| only)."""
    if A.det != B.det:
        raise ValueError(f"determinants differ: {A.det} vs {B.det}")
    return class_key(A) == class_key(B)


# ---------------------------------------------------------------------------
# bounded brute-force conjugacy (covers square discriminants)


def _t_run_conjugates(m: tuple[int, int, int, int], cap: int):
    """Conjugates T^k m T^-k, k != 0, pruned once entries pass the cap and
    the quadratic growth in k has taken over."""
    a, b, c, d = m
    if c == 0 and a == d:
        return []  # conjugation by T^k is the identity on such matrices
    out = []
    for sign in (1, -1):
        k = 0
        while abs(k) <= 4 * cap:
            k += sign
            # T^k [[a,b],[c,d]] T^-k
            na = a + k * c
            nb = b + k * (d - a) - k * k * c
            nd = d - k * c
            if max(abs(na), abs(nb), abs(c), abs(nd)) <= cap:
                out.append((na, nb, c, nd))
            else:
                past_vertex = c == 0 or abs(k) > 2 * (abs(a) + abs(d)) // abs(c) + 2
                if past_vertex:
                    break
    return out


@lru_cache(maxsize=4096)
def _conjugate_ball(key: tuple[int, int, int, int], depth: int, cap: int) -> frozenset:
    """Conjugates of the matrix (a, b, c, d) by words of at most `depth`
    syllables (a syllable is S or a power of T), with all intermediate
    entries bounded by cap."""
    seen = {key}
    frontier = [key]
    for _ in range(depth):
        new_frontier = []
        for m in frontier:
            a, b, c, d = m
            cands = [(d, -c, -b, a)]  # S-conjugate
            cands.extend(_t_run_conjugates(m, cap))
            for k in cands:
                if max(abs(v) for v in k) <= cap and k not in seen:
                    seen.add(k)
                    new_frontier.append(k)
        frontier = new_frontier
    return frozenset(seen)


def are_conjugate_bruteforce(A: Mat2Z, B: Mat2Z, wordlen: int = 14, cap: int | None = None) -> bool:
    """Search for a conjugator as a word in S and powers of T of at most
    `wordlen` syllables, meeting in the middle.

    Sound (True implies conjugate); complete only up to the bound, so
    False means "no conjugator found within the bound".  Intermediate
    conjugates are pruned above an entry cap derived from the inputs.
    """
    if wordlen < 1:
        raise ValueError("wordlen must be >= 1")
    ka = (A.a, A.b, A.c, A.d)
    kb = (B.a, B.b, B.c, B.d)
    if ka == kb:
        return True
    if cap is None:
        cap = 3 * (max(abs(v) for v in ka) + max(abs(v) for v in kb)) + 32
    ball_a = _conjugate_ball(ka, (wordlen + 1) // 2, cap)
    ball_b = _conjugate_ball(kb, wordlen // 2, cap)
    return not ball_a.isdisjoint(ball_b)


# ---------------------------------------------------------------------------
# class enumeration


def _divisors(n: int) -> list[int]:
    n = abs(n)
    out = []
    for d in range(1, isqrt(n) + 1):
        if n % d == 0:
            out.append(d)
            if d * d != n:
                out.append(n // d)
    return sorted(out)


def reduced_forms(D: int) -> list[QForm]:
    """All reduced forms of discriminant D > 0 non-square, imprimitive included."""
    _require_nonsquare_disc(D)
    out = []
    s = isqrt(D)
    for q in range(1, s + 1):
        if (q * q - D) % 4:
            continue
        m = (q * q - D) // 4  # = p*r < 0
        for e in _divisors(m):
            for p in (e, -e):
                f = QForm(p, q, m // p)
                if is_reduced(f):
                    out.append(f)
    return sorted(out, key=lambda f: (f.p, f.q, f.r))


def enumerate_classes(N: int) -> ClassSet:
    """All SL2(Z)-classes of trace-zero determinant -N matrices, N non-square.

    One matrix representative per rho-cycle of reduced forms of
    discriminant 4N, plus the pairing of each class with the class of
    the negated matrix.
    """
    if N < 2:
        raise ValueError("need N >= 2")
    if isqrt(N) ** 2 == N:
        raise ValueError(f"N = {N} is a perfect square; use are_conjugate_bruteforce")
    remaining = set(reduced_forms(4 * N))
    cycles: list[tuple[QForm, ...]] = []
    while remaining:
        f = min(remaining, key=lambda q: (q.p, q.q, q.r))
        cyc = _canonical_cycle(cycle(f))
        cycles.append(cyc)
        remaining -= set(cyc)
    cycles.sort(key=lambda c: (c[0].p, c[0].q, c[0].r))
    reps = tuple(matrix_from_form(c[0]) for c in cycles)
    keys = [class_key(m) for m in reps]
    neg_keys = [class_key(-m) for m in reps]
    pairs = []
    assigned = set()
    for i in range(len(reps)):
        if i in assigned:
            continue
        partner = None
        for j in range(len(reps)):
            if neg_keys[i] == keys[j]:
                partner = j
                break
        if partner is None:
            raise RuntimeError(f"negation class of rep {i} missing for N={N}")
        cell = tuple(sorted({i, partner}))
        pairs.append(cell)
        assigned.update(cell)
    return ClassSet(N, reps, tuple(cycles), tuple(pairs))


# ---------------------------------------------------------------------------
# Pell equation and automorphs


def pell_min(N: int) -> PellSolution:
    """Minimal (t, u) with t^2 - N u^2 = 1, via the continued fraction of sqrt(N)."""
    if N < 2:
        raise ValueError("need N >= 2")
    a0 = isqrt(N)
    if a0 * a0 == N:
        raise ValueError(f"N = {N} is a perfect square")
    # convergents h/k of sqrt(N); the first with h^2 - N k^2 = 1 is minimal
    m, d, a = 0, 1, a0
    h_prev, h = 1, a0
    k_prev, k = 0, 1
    for _ in range(10_000_000):
        if h * h - N * k * k == 1:
            return PellSolution(h, k)
        m = d * a - m
        d = (N - m * m) // d
        a = (a0 + m) // d
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
    raise RuntimeError(f"Pell solution for N={N} not found")


def fundamental_automorph(A: Mat2Z) -> Mat2Z:
    """t*Id + u*A for the minimal Pell solution; determinant 1, fixes C_A setwise."""
    if A.trace != 0 or A.det >= 0:
        raise ValueError("need a trace-zero hyperbolic matrix")
    N = -A.det
    if isqrt(N) ** 2 == N:
        raise SplitTorusError(
            f"|det| = {N} is a perfect square: split torus, no hyperbolic automorph"
        )
    sol = pell_min(N)
    return Mat2Z(
        sol.t + sol.u * A.a,
        sol.u * A.b,
        sol.u * A.c,
        sol.t + sol.u * A.d,
    )
