"""Modular polynomials: evaluation by the isogeny product, exact recovery.

The level-N polynomial vanishes exactly on pairs of j-invariants of
elliptic curves related by a cyclic N-isogeny, so it can be evaluated
anywhere as prod (u - j((a z + b)/d)) over the divisor systems
ad = N, 0 <= b < d, gcd(a, b, d) = 1, with z any j-preimage of v.  That
product form never materializes the astronomically large coefficients,
which is the default strategy; exact integer coefficients are recovered
for small N by interpolation at imaginary-axis nodes (where all
j-values are real) followed by integer rounding with a verified gap.

The real form swaps (X, Y) for (X + iY, X - iY); its coefficients are
integers, even in Y, for N > 1.  For N = 1 the substitution gives 2iY,
normalized here to Y with the division recorded.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from math import comb, gcd

from mpmath import mp

from .halfplane import HPoint
from .modfun import DEFAULT_CTX, PrecisionCtx, j, j_invert

PHI_COMPUTE_MAX = 5

_I_POWERS = ((1, 0), (0, 1), (-1, 0), (0, -1))  # i^k as (re, im)


@dataclass(frozen=True)
class BivarZPoly:
    """Bivariate polynomial with arbitrary-precision integer coefficients."""

    N: int
    terms: tuple[tuple[int, int, int], ...]  # sorted (i, j, coeff), coeff != 0

    @staticmethod
    def from_dict(N: int, d: dict[tuple[int, int], int]) -> "BivarZPoly":
        items = tuple(sorted((i, jj, c) for (i, jj), c in d.items() if c))
        return BivarZPoly(N, items)

    def as_dict(self) -> dict[tuple[int, int], int]:
        return {(i, jj): c for i, jj, c in self.terms}

    @property
    def degree(self) -> int:
        return max(max(i, jj) for i, jj, _ in self.terms)

    def coeff(self, i: int, jj: int) -> int:
        return self.as_dict().get((i, jj), 0)

    def is_symmetric(self) -> bool:
        d = self.as_dict()
        return all(d.get((jj, i), 0) == c for (i, jj), c in d.items())

    def eval_mp(self, u, v):
        total = mp.mpf(0)
        for i, jj, c in self.terms:
            total += c * u**i * v**jj
        return total

    def eval_exact(self, u: Fraction, v: Fraction) -> Fraction:
        total = Fraction(0)
        for i, jj, c in self.terms:
            total += c * u**i * v**jj
        return total


@dataclass(frozen=True)
class PhiTilde:
    """The real form of a level-N modular polynomial (integer coefficients)."""

    N: int
    terms: tuple[tuple[int, int, int], ...]
    normalization: str = "identity"  # "divided_by_2i" for N = 1

    def as_dict(self) -> dict[tuple[int, int], int]:
        return {(i, jj): c for i, jj, c in self.terms}

    def eval_mp(self, x, y):
        total = mp.mpf(0)
        for i, jj, c in self.terms:
            total += c * x**i * y**jj
        return total

    def eval_exact(self, x: Fraction, y: Fraction) -> Fraction:
        total = Fraction(0)
        for i, jj, c in self.terms:
            total += c * x**i * y**jj
        return total

    def scale_at(self, x, y):
        """Sum of absolute term magnitudes, the normalization denominator."""
        total = mp.mpf(1)
        ax, ay = abs(x), abs(y)
        for i, jj, c in self.terms:
            total += abs(c) * ax**i * ay**jj
        return total


@dataclass(frozen=True)
class PhiEval:
    """Product-form evaluation: value, normalization scale, inverted point."""

    value: object
    scale: object
    z: HPoint

    @property
    def normalized(self):
        return abs(self.value) / self.scale

    @property
    def signed_normalized(self):
        """Re(value)/scale; the product is real on conjugate pairs for N > 1."""
        return self.value.real / self.scale


@dataclass(frozen=True)
class PhiTildeValue:
    """Tagged result of the real-form evaluation."""

    value: object  # signed mpf on the exact path, |product| on the proxy path
    normalized: object
    path: str  # "exact" | "proxy"


def divisor_systems(N: int) -> list[tuple[int, int, int]]:
    """All (a, b, d) with ad = N, 0 <= b < d, gcd(a, b, d) = 1."""
    if N < 1:
        raise ValueError("need N >= 1")
    out = []
    for a in range(1, N + 1):
        if N % a:
            continue
        d = N // a
        for b in range(d):
            if gcd(gcd(a, b), d) == 1:
                out.append((a, b, d))
    return out


def psi_degree(N: int) -> int:
    return len(divisor_systems(N))


def isogenous_j_values(N: int, z: HPoint, ctx: PrecisionCtx = DEFAULT_CTX) -> list:
    """The multiset of j-invariants cyclically N-isogenous to j(z)."""
    zc = z.to_mpc()
    out = []
    for a, b, d in divisor_systems(N):
        w = (a * zc + b) / d
        out.append(j(HPoint(w.real, w.imag), ctx))
    return out


def phi_eval(
    N: int,
    u,
    v,
    ctx: PrecisionCtx = DEFAULT_CTX,
    seed: HPoint | None = None,
) -> PhiEval:
    """prod (u - j((a z + b)/d)) with z a j-preimage of v.

    Vanishes (within tolerance) exactly when the curves with invariants
    u and v are related by a cyclic N-isogeny.  The normalization scale
    prod (1 + |u| + |j_k|) makes `normalized` robust across the huge
    dynamic range of j.
    """
    with ctx.workprec():
        u = mp.mpc(u)
        z = j_invert(v, ctx, seed=seed)
        value = mp.mpc(1)
        scale = mp.mpf(1)
        for jk in isogenous_j_values(N, z, ctx):
            value *= u - jk
            scale *= 1 + abs(u) + abs(jk)
        return PhiEval(value, scale, z)


# ---------------------------------------------------------------------------
# exact coefficient recovery


def _node_data(N: int, k: int, ctx: PrecisionCtx):
    """j(tau_k) and the monic X-product coefficients at node tau_k = i(1.1 + 0.05k)."""
    tau = HPoint(0, Fraction(11, 10) + Fraction(5, 100) * k)
    y = j(tau, ctx)
    roots = isogenous_j_values(N, tau, ctx)
    coeffs = [mp.mpc(1)]
    for r in roots:
        nxt = [mp.mpc(0)] * (len(coeffs) + 1)
        for idx, c in enumerate(coeffs):
            nxt[idx] += c * (-r)
            nxt[idx + 1] += c
        coeffs = nxt
    # conjugate root pairing makes every coefficient real
    out = []
    for c in coeffs:
        if abs(c.imag) > mp.mpf(2) ** (-ctx.bits // 4) * (1 + abs(c)):
            raise ArithmeticError("imaginary part of product coefficient did not cancel")
        out.append(c.real)
    return y.real, out


def _interpolate_integer_poly(N: int, ctx: PrecisionCtx):
    """One interpolation attempt; returns (terms, max rounding distance)."""
    psi = psi_degree(N)
    ys = []
    prod_coeffs = []  # prod_coeffs[k][i] = X^i coefficient at node k
    for k in range(psi + 1):
        y, coeffs = _node_data(N, k, ctx)
        ys.append(y)
        prod_coeffs.append(coeffs)
    vander = mp.matrix(psi + 1, psi + 1)
    for k in range(psi + 1):
        for jj in range(psi + 1):
            vander[k, jj] = ys[k] ** jj
    terms: dict[tuple[int, int], int] = {}
    worst = mp.mpf(0)
    for i in range(psi + 1):
        rhs = mp.matrix([prod_coeffs[k][i] for k in range(psi + 1)])
        sol = mp.lu_solve(vander, rhs)
        for jj in range(psi + 1):
            c = sol[jj]
            rounded = int(mp.floor(c + mp.mpf("0.5")))
            worst = max(worst, abs(c - rounded))
            if rounded:
                terms[(i, jj)] = rounded
    return terms, worst


def phi_compute(
    N: int,
    ctx: PrecisionCtx = DEFAULT_CTX,
    max_level: int = PHI_COMPUTE_MAX,
    cache_dir: str | None = None,
    retries: int = 6,
) -> BivarZPoly:
    """Exact integer coefficients of the level-N modular polynomial, N small.

    Interpolates the monic X-products at psi(N)+1 imaginary-axis nodes,
    rounds to integers, and accepts only if the rounding distance stays
    below 0.01, the symmetry (N > 1) holds exactly, and the product
    evaluation agrees at fresh points.  Precision doubles on failure.
    """
    if N < 1:
        raise ValueError("need N >= 1")
    if N > max_level:
        raise ValueError(
            f"N = {N} above the supported exact range (<= {max_level}); "
            "use phi_eval pointwise"
        )
    if cache_dir:
        cached = load_phi(N, cache_dir)
        if cached is not None:
            return cached
    psi = psi_degree(N)
    bits = max(ctx.bits, 64 * psi)
    last_err = None
    for _ in range(retries):
        work = PrecisionCtx(bits=bits)
        with work.workprec():
            try:
                terms, worst = _interpolate_integer_poly(N, work)
            except ArithmeticError as exc:
                last_err = exc
                bits *= 2
                continue
            if worst >= mp.mpf("0.01"):
                last_err = ArithmeticError(
                    f"rounding distance {mp.nstr(worst, 4)} too large at {bits} bits"
                )
                bits *= 2
                continue
            poly = BivarZPoly.from_dict(N, terms)
            if N > 1 and not poly.is_symmetric():
                last_err = ArithmeticError(f"recovered polynomial not symmetric at {bits} bits")
                bits *= 2
                continue
            if not _verify_against_product(poly, work):
                last_err = ArithmeticError(f"product-evaluation mismatch at {bits} bits")
                bits *= 2
                continue
        if cache_dir:
            save_phi(poly, cache_dir)
        return poly
    raise ArithmeticError(f"phi_compute({N}) failed after retries: {last_err}")


def _verify_against_product(poly: BivarZPoly, ctx: PrecisionCtx, npoints: int = 5) -> bool:
    probes = [
        (mp.mpc("0.31", "1.13"), mp.mpc("-0.22", "1.41")),
        (mp.mpc("0.05", "0.97"), mp.mpc("0.40", "1.06")),
        (mp.mpc("-0.44", "1.22"), mp.mpc("0.13", "0.91")),
        (mp.mpc("0.27", "1.55"), mp.mpc("-0.08", "1.18")),
        (mp.mpc("-0.15", "1.02"), mp.mpc("0.33", "1.30")),
    ]
    for zu, zv in probes[:npoints]:
        u = j(HPoint(zu.real, zu.imag), ctx)
        v = j(HPoint(zv.real, zv.imag), ctx)
        direct = poly.eval_mp(u, v)
        prod = phi_eval(poly.N, u, v, ctx)
        if abs(direct - prod.value) > mp.mpf("1e-10") * (1 + abs(direct) + abs(prod.value)):
            return False
    return True


def phi_tilde(P: BivarZPoly) -> PhiTilde:
    """Substitute (X + iY, X - iY) and expand over the Gaussian integers.

    For N > 1 symmetry forces a real, even-in-Y integer polynomial; both
    facts are asserted.  For N = 1 the substitution gives 2iY, returned
    as the normalized generator Y.
    """
    acc: dict[tuple[int, int], list[int]] = {}
    for i, jj, c in P.terms:
        for p in range(i + 1):
            cp = comb(i, p)
            ire, iim = _I_POWERS[(i - p) % 4]
            for q in range(jj + 1):
                cq = comb(jj, q)
                mre, mim = _I_POWERS[(-(jj - q)) % 4]  # (-i)^(jj-q)
                re = ire * mre - iim * mim
                im = ire * mim + iim * mre
                key = (p + q, (i - p) + (jj - q))
                cur = acc.setdefault(key, [0, 0])
                cur[0] += c * cp * cq * re
                cur[1] += c * cp * cq * im
    if P.N == 1:
        # X - Y maps to 2iY; normalize the generator of the same zero set
        expected = {(0, 1): [0, 2]}
        if {k: v for k, v in acc.items() if v != [0, 0]} != expected:
            raise ArithmeticError("level-1 substitution did not give 2iY")
        return PhiTilde(1, ((0, 1, 1),), normalization="divided_by_2i")
    terms = {}
    for (a, b), (re, im) in acc.items():
        if im != 0:
            raise ArithmeticError(
                f"imaginary part survived in the real form at X^{a} Y^{b}"
            )
        if re == 0:
            continue
        if b % 2:
            raise ArithmeticError(f"odd Y-exponent {b} in the real form")
        terms[(a, b)] = re
    return PhiTilde(P.N, tuple(sorted((a, b, c) for (a, b), c in terms.items())))


# in-process memo for the exact small-N polynomials
_EXACT_MEMO: dict[int, tuple[BivarZPoly, PhiTilde]] = {}


def exact_phi_pair(
    N: int, ctx: PrecisionCtx = DEFAULT_CTX, cache_dir: str | None = None
) -> tuple[BivarZPoly, PhiTilde]:
    if N not in _EXACT_MEMO:
        poly = phi_compute(N, ctx, cache_dir=cache_dir)
        _EXACT_MEMO[N] = (poly, phi_tilde(poly))
    return _EXACT_MEMO[N]


def phi_tilde_eval(
    N: int,
    x,
    y,
    ctx: PrecisionCtx = DEFAULT_CTX,
    cache_dir: str | None = None,
) -> PhiTildeValue:
    """Evaluate the real form at (x, y): exact coefficients for small N,
    otherwise the nonnegative product proxy with identical zero set."""
    with ctx.workprec():
        x, y = mp.mpf(x), mp.mpf(y)
        if N <= PHI_COMPUTE_MAX:
            _, tilde = exact_phi_pair(N, ctx, cache_dir)
            val = tilde.eval_mp(x, y)
            return PhiTildeValue(val, abs(val) / tilde.scale_at(x, y), "exact")
        res = phi_eval(N, mp.mpc(x, y), mp.mpc(x, -y), ctx)
        return PhiTildeValue(abs(res.value), res.normalized, "proxy")


# ---------------------------------------------------------------------------
# cache files


def _phi_payload(poly: BivarZPoly) -> dict:
    coeffs = [
        {"i": i, "j": jj, "c": str(c)} for i, jj, c in poly.terms
    ]
    blob = json.dumps(coeffs, sort_keys=True).encode()
    return {
        "N": poly.N,
        "degree": poly.degree,
        "coeffs": coeffs,
        "sha256": hashlib.sha256(blob).hexdigest(),
    }


def save_phi(poly: BivarZPoly, cache_dir: str) -> str:
    """Atomic, checksummed write of phi_N.json into cache_dir."""
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"phi_{poly.N}.json")
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(_phi_payload(poly), fh, indent=1)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_phi(N: int, cache_dir: str) -> BivarZPoly | None:
    """Load phi_N.json if present and checksum-clean; None otherwise."""
    path = os.path.join(cache_dir, f"phi_{N}.json")
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        data = json.load(fh)
    blob = json.dumps(data["coeffs"], sort_keys=True).encode()
    if data.get("sha256") != hashlib.sha256(blob).hexdigest() or data.get("N") != N:
        return None
    terms = {(int(e["i"]), int(e["j"])): int(e["c"]) for e in data["coeffs"]}
    return BivarZPoly.from_dict(N, terms)
