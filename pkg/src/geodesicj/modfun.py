"""High-precision evaluation of the j-invariant and Klein's lambda.

j is computed as E4^3 / Delta from q-expansions (q = e^{2 pi i z}) after
reduction to the standard fundamental domain, which guarantees
|q| <= e^{-pi sqrt(3)} ~ 0.0043 so a few dozen terms already carry
hundreds of bits.  Delta uses the eta product q prod (1 - q^n)^24.
lambda is evaluated from theta series with nome e^{i pi z}, without
level-2 reduction: callers keep inputs in a bounded region of their
geodesic (one automorph period), which keeps the nome small.

Truncation tail bounds are computed from the actual |q| and surfaced
rather than silently trusted; evaluations refuse to return values whose
bound exceeds the context tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import pi

from mpmath import mp

from .halfplane import (
    IDENTITY,
    MAT_S,
    Geodesic,
    HPoint,
    Mat2Z,
    Semicircle,
    Vertical,
    as_mpf,
    matrix_from_geodesic,
)
from .quadclass import fundamental_automorph, pell_min

_GUARD_BITS = 24
_THETA_NOME_LIMIT = 0.99
DEFAULT_THETA_EPS = 0.15  # default angular cutoff for half-circle sampling


class PrecisionError(ArithmeticError):
    """Requested accuracy is not reachable with the given context."""


class NonconvergenceError(ArithmeticError):
    """Iteration failed to converge; raising precision or qterms may help."""


@dataclass(frozen=True)
class PrecisionCtx:
    """Working precision for all analytic evaluations.

    qterms and newton_tol are derived from bits when omitted: the series
    cutoff is sized so the q-expansion tail sits below 2^-bits on the
    reduced domain, and the Newton tolerance is 2^-(bits-16).
    """

    bits: int = 256
    qterms: int | None = None
    newton_tol: object | None = None

    def __post_init__(self):
        if self.bits < 64:
            raise ValueError("need bits >= 64")
        if self.qterms is None:
            terms = max(16, int(self.bits * 0.6931 / 5.441) + 16)
            object.__setattr__(self, "qterms", terms)
        if self.qterms < 16:
            raise ValueError("need qterms >= 16")
        if self.newton_tol is None:
            with mp.workprec(self.bits):
                object.__setattr__(self, "newton_tol", mp.mpf(2) ** (16 - self.bits))
        if not self.newton_tol > 0:
            raise ValueError("need newton_tol > 0")

    def workprec(self):
        return mp.workprec(self.bits + _GUARD_BITS)


DEFAULT_CTX = PrecisionCtx()


@lru_cache(maxsize=32)
def _sigma_table(k: int, terms: int) -> tuple[int, ...]:
    """sigma_k(1..terms) by divisor sieve."""
    out = [0] * (terms + 1)
    for d in range(1, terms + 1):
        dk = d**k
        for n in range(d, terms + 1, d):
            out[n] += dk
    return tuple(out[1:])


# ---------------------------------------------------------------------------
# fundamental domain


def reduce_to_fund_domain(z: HPoint, max_iter: int = 20_000) -> tuple[HPoint, Mat2Z]:
    """Translate/invert z into |Re| <= 1/2, |z| >= 1; returns (z0, M) with M z = z0."""
    x, y = as_mpf(z.x), as_mpf(z.y)
    m = IDENTITY
    for _ in range(max_iter):
        n = int(mp.floor(x + mp.mpf("0.5")))
        if n:
            x -= n
            m = Mat2Z(1, -n, 0, 1) * m
        norm = x * x + y * y
        if norm < 1:
            x, y = -x / norm, y / norm
            m = MAT_S * m
        else:
            return HPoint(x, y), m
    raise NonconvergenceError("fundamental domain reduction did not terminate")


# ---------------------------------------------------------------------------
# q-series


def _series_bundle(q, terms: int, need_e6: bool):
    """E4, E6 (optional) and Delta at q, plus absolute/relative tail bounds."""
    s3 = _sigma_table(3, terms)
    s5 = _sigma_table(5, terms) if need_e6 else None
    e4 = mp.mpf(1)
    e6 = mp.mpf(1) if need_e6 else None
    eta = mp.mpf(1)
    qn = mp.mpf(1)
    for n in range(1, terms + 1):
        qn = qn * q
        e4 += 240 * s3[n - 1] * qn
        if need_e6:
            e6 -= 504 * s5[n - 1] * qn
        eta *= 1 - qn
    delta = q * eta**24
    x = abs(q)
    xm = x ** (terms + 1)
    # sigma_3(n) <= 1.21 n^3 and the term ratio stays below 1/2 for x <= 0.005
    e4_tail = 582 * (terms + 1) ** 3 * xm
    e6_tail = 1050 * (terms + 1) ** 5 * xm
    delta_rel_tail = 50 * xm
    return e4, e6, delta, (e4_tail, e6_tail, delta_rel_tail)


def _check_nome(q, ctx: PrecisionCtx):
    if abs(q) > mp.mpf("0.01"):
        raise PrecisionError(
            f"|q| = {mp.nstr(abs(q), 6)} too large after reduction; "
            "this should not happen for points in the upper half-plane"
        )


def _j_at_reduced(z0: HPoint, ctx: PrecisionCtx, need_derivative: bool = False):
    """j (and optionally dj/dz) at an already-reduced point, with tail bound."""
    tau = z0.to_mpc()
    q = mp.exp(2j * mp.pi * tau)
    _check_nome(q, ctx)
    e4, e6, delta, (e4_tail, e6_tail, delta_rel) = _series_bundle(
        q, ctx.qterms, need_derivative
    )
    jval = e4**3 / delta
    bound = (3 * abs(e4) ** 2 * e4_tail) / abs(delta) + abs(jval) * delta_rel
    tail = bound / (1 + abs(jval))
    if not need_derivative:
        return jval, None, tail
    jprime = -2j * mp.pi * e4**2 * e6 / delta
    return jval, jprime, tail


def j_tail_bound(z: HPoint, ctx: PrecisionCtx = DEFAULT_CTX):
    """Normalized truncation bound |error| / (1 + |j|) for j at z."""
    with ctx.workprec():
        z0, _ = reduce_to_fund_domain(z)
        _, _, tail = _j_at_reduced(z0, ctx)
        return tail


def j(z: HPoint, ctx: PrecisionCtx = DEFAULT_CTX):
    """The j-invariant at z, as an mpc at the context precision."""
    with ctx.workprec():
        z0, _ = reduce_to_fund_domain(z)
        jval, _, tail = _j_at_reduced(z0, ctx)
        if tail > ctx.newton_tol:
            raise PrecisionError(
                f"series tail bound {mp.nstr(tail, 4)} exceeds tolerance "
                f"{mp.nstr(mp.mpf(ctx.newton_tol), 4)}; raise bits or qterms"
            )
        return jval


def j_image_point(z: HPoint, ctx: PrecisionCtx = DEFAULT_CTX):
    """(Re j(z), Im j(z)) as a pair of mpf."""
    w = j(z, ctx)
    return (w.real, w.imag)


# ---------------------------------------------------------------------------
# inversion


def _boundary_normalize(z0: HPoint, ctx: PrecisionCtx) -> HPoint:
    """Deterministic representative on the fundamental domain boundary.

    The window is wide (2^-bits/4) because multiple roots of j - w only
    pin the preimage to a root of the tolerance; both normalizations are
    exact isometries of the tiling, so a spurious trigger is harmless.
    """
    x, y = as_mpf(z0.x), as_mpf(z0.y)
    eps = mp.mpf(2) ** (-(ctx.bits // 4))
    if abs(x + mp.mpf("0.5")) < eps:
        x = x + 1
    if abs(x * x + y * y - 1) < eps and x < -eps:
        # mirror the left unit-circle arc onto the right one
        norm = x * x + y * y
        x, y = -x / norm, y / norm
    return HPoint(x, y)


@lru_cache(maxsize=1)
def _coarse_value_table() -> tuple[tuple[complex, complex], ...]:
    """(z, j(z)) on a coarse fundamental-domain grid, for start selection."""
    ctx = PrecisionCtx(bits=64)
    out = []
    with ctx.workprec():
        ys = [mp.mpf("0.87") * mp.mpf("1.09") ** k for k in range(14)]
        for ix in range(-10, 11):
            x = mp.mpf(ix) / 20
            for y in ys:
                if x * x + y * y < 1:
                    continue
                zz = HPoint(x, y)
                out.append((complex(zz.to_mpc()), complex(j(zz, ctx))))
    return tuple(out)


def _newton_starts(w, bits: int):
    starts = []
    if abs(w) > 2500:
        # q ~ 1/w seed from j = 1/q + 744 + O(q)
        q0 = 1 / w
        tau0 = mp.log(q0) / (2j * mp.pi)
        tau0 = mp.mpc(tau0.real - mp.floor(tau0.real + mp.mpf("0.5")), tau0.imag)
        starts.append(tau0)
    wf = complex(w) if abs(w) < 1e300 else None
    if wf is not None:
        table = sorted(_coarse_value_table(), key=lambda zv: abs(zv[1] - wf))
        starts += [mp.mpc(z) for z, _ in table[:4]]
    starts += [
        mp.mpc(0, mp.mpf("1.18")),
        mp.mpc(mp.mpf("0.45"), mp.mpf("1.05")),
        mp.mpc(mp.mpf("-0.45"), mp.mpf("1.05")),
        mp.mpc(mp.mpf("0.35"), mp.mpf("1.45")),
    ]
    return starts


def _near_critical_value(w) -> bool:
    # zones around j = 0 (triple preimage) and j = 1728 (double preimage)
    return abs(w) < 200 or abs(w - 1728) < 400


def j_invert(w, ctx: PrecisionCtx = DEFAULT_CTX, seed: HPoint | None = None) -> HPoint:
    """A point z in the closed fundamental domain with j(z) ~ w.

    Damped Newton from a q-expansion seed for large |w| and from a fixed
    start list otherwise, with a multiplicity-accelerated step near the
    critical values 0 and 1728.  An optional seed point is tried first
    (useful when inverting along a continuous path).
    """
    with ctx.workprec():
        w = mp.mpc(w)
        tol = mp.mpf(ctx.newton_tol) * (1 + abs(w))
        starts = _newton_starts(w, ctx.bits)
        if seed is not None:
            starts = [seed.to_mpc()] + starts
        for start in starts:
            z = _run_newton(w, start, tol, ctx)
            if z is not None:
                return _boundary_normalize(z, ctx)
        raise NonconvergenceError(
            f"j_invert failed for w = {mp.nstr(w, 8)}; raise bits or qterms"
        )


def _probe(z0: HPoint, step, w, ctx: PrecisionCtx):
    cand = z0.to_mpc() - step
    if cand.imag <= mp.mpf("0.05"):
        return None
    zr, _ = reduce_to_fund_domain(HPoint(cand.real, cand.imag))
    fc, fpc, _ = _j_at_reduced(zr, ctx, need_derivative=True)
    return zr, fc - w, fpc


def _run_newton(w, start, tol, ctx: PrecisionCtx, max_iter: int = 200):
    zc = start
    if zc.imag <= 0:
        return None
    z0, _ = reduce_to_fund_domain(HPoint(zc.real, zc.imag))
    fz, fpz, _ = _j_at_reduced(z0, ctx, need_derivative=True)
    fz -= w
    mults = (1, 2, 3) if _near_critical_value(w) else (1,)
    for _ in range(max_iter):
        if abs(fz) <= tol:
            return z0
        if abs(fpz) == 0:
            z0 = HPoint(z0.x + mp.mpf("1e-3"), z0.y + mp.mpf("1e-3"))
            fz, fpz, _ = _j_at_reduced(z0, ctx, need_derivative=True)
            fz -= w
            continue
        base = fz / fpz
        if abs(base) > 2:
            base *= 2 / abs(base)
        # probe candidate multiplicities; the best residual wins
        best = None
        for m in mults:
            got = _probe(z0, m * base, w, ctx)
            if got is not None and (best is None or abs(got[1]) < abs(best[1])):
                best = got
        if best is None or abs(best[1]) >= abs(fz):
            # fall back to damping the plain step
            step = base / 2
            accepted = False
            for _ in range(60):
                got = _probe(z0, step, w, ctx)
                if got is not None and abs(got[1]) < abs(fz):
                    best = got
                    accepted = True
                    break
                step /= 2
            if not accepted:
                return None
        z0, fz, fpz = best
    return z0 if abs(fz) <= tol else None


# ---------------------------------------------------------------------------
# Klein's lambda


def _theta_terms(u_abs, bits: int) -> int:
    # |u|^(n^2) below 2^-(bits+20)
    if u_abs <= 0:
        return 4
    target = (bits + 20) * 0.6931
    return max(4, int(mp.ceil((target / -mp.log(u_abs)) ** mp.mpf("0.5"))) + 2)


def lambda_tail_bound(z: HPoint, ctx: PrecisionCtx = DEFAULT_CTX):
    """Truncation bound for the theta series underlying klein_lambda at z."""
    with ctx.workprec():
        u = mp.exp(1j * mp.pi * z.to_mpc())
        ua = abs(u)
        if ua > _THETA_NOME_LIMIT:
            raise PrecisionError(f"theta nome |u| = {mp.nstr(ua, 6)} too close to 1")
        n = _theta_terms(ua, ctx.bits)
        return 4 * ua ** ((n + 1) ** 2) / (1 - ua)


def klein_lambda(z: HPoint, ctx: PrecisionCtx = DEFAULT_CTX):
    """Klein's lambda function theta2^4 / theta3^4 with nome e^{i pi z}.

    No level-2 domain reduction is applied; the nome must stay away
    from the unit circle (|u| <= 0.99), which holds on one automorph
    period of the geodesics this library samples.
    """
    with ctx.workprec():
        u = mp.exp(1j * mp.pi * z.to_mpc())
        ua = abs(u)
        if ua > _THETA_NOME_LIMIT:
            raise PrecisionError(
                f"theta nome |u| = {mp.nstr(ua, 6)} too close to 1; "
                "sample within one automorph period"
            )
        n_terms = _theta_terms(ua, ctx.bits)
        # theta2 = 2 u^{1/4} sum u^{n(n+1)}, theta3 = 1 + 2 sum u^{n^2}
        th2 = mp.mpf(0)
        th3 = mp.mpf(0)
        for n in range(n_terms, 0, -1):
            th2 += u ** (n * (n + 1))
            th3 += u ** (n * n)
        th2 = 2 * mp.exp(1j * mp.pi * z.to_mpc() / 4) * (1 + th2)
        th3 = 1 + 2 * th3
        return (th2 / th3) ** 4


# ---------------------------------------------------------------------------
# geodesic sampling


def automorph_period_window(g: Geodesic) -> tuple[float, float]:
    """Angular window [theta0, theta1] covering one fundamental-automorph period.

    In the endpoint cross-ratio coordinate t = i tan(theta/2) the automorph
    acts by t -> kappa t with kappa = (t_pell + u_pell sqrt(N))^2, so the
    window symmetric about the apex runs between 2 atan(kappa^-1/2) and
    2 atan(kappa^1/2).
    """
    if isinstance(g, Vertical):
        raise ValueError("vertical geodesics are split; no automorph period")
    A = matrix_from_geodesic(g)
    N = -A.det
    sol = pell_min(N)  # raises for square N
    with mp.workprec(80):
        sqrt_kappa = sol.t + sol.u * mp.sqrt(N)
        lo = 2 * mp.atan(1 / sqrt_kappa)
        hi = 2 * mp.atan(sqrt_kappa)
        return (float(lo), float(hi))


def sample_geodesic(
    g: Geodesic,
    n: int,
    window=None,
    ctx: PrecisionCtx = DEFAULT_CTX,
) -> list[HPoint]:
    """n points along g at the context precision.

    Half-circles are parametrized z = x0 + sqrt(r) e^{i theta} over the
    window (default (0.15, pi - 0.15)); vertical lines as x0 + i e^s
    over s in the window (default [-1, 1]).  window="one-period" spans
    exactly one fundamental-automorph period (non-square level only),
    so first and last point are identified under the automorph.  n = 1
    returns the window midpoint.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if window == "one-period":
        lo, hi = automorph_period_window(g)
    elif window is None:
        if isinstance(g, Vertical):
            lo, hi = -1.0, 1.0
        else:
            lo, hi = DEFAULT_THETA_EPS, pi - DEFAULT_THETA_EPS
    else:
        lo, hi = window
    if n == 1:
        params = [(lo + hi) / 2]
    else:
        params = [lo + (hi - lo) * k / (n - 1) for k in range(n)]
    with ctx.workprec():
        out = []
        if isinstance(g, Vertical):
            x0 = as_mpf(g.x0)
            for s in params:
                out.append(HPoint(x0, mp.exp(mp.mpf(s))))
        else:
            x0 = as_mpf(g.x0)
            rad = mp.sqrt(as_mpf(g.r))
            for t in params:
                t = mp.mpf(t)
                out.append(HPoint(x0 + rad * mp.cos(t), rad * mp.sin(t)))
        return out


def geodesic_point(g: Geodesic, param, ctx: PrecisionCtx = DEFAULT_CTX) -> HPoint:
    """The single sample at the given parameter value (theta or log-height)."""
    return sample_geodesic(g, 1, window=(param, param), ctx=ctx)[0]
