"""Numerical algebraicity verdicts for analytic curve images.

A curve image is declared (weakly) algebraic when the monomial
evaluation matrix of its samples has a decisive near-null vector: the
smallest singular value must fall below the fit tolerance AND drop by a
decisive factor relative to one degree lower.  Because short analytic
arcs admit excellent polynomial approximations in double precision, a
float64 singular-value screen is followed by a high-precision Gram
confirmation on the multiprecision samples: a genuine algebraic
relation drops to the working-precision floor (~1e-40), while an
analytic approximation floor stays put (~1e-12), so the two separate
cleanly.  Verdicts on non-algebraic inputs remain statistical evidence,
never proof.

Samples are spread in image space before fitting: a dense parameter
sweep is capped at a multiple of the median magnitude (the j-map spikes
near cusps would otherwise collapse everything else below float
resolution) and thinned to roughly uniform image-space density.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
from mpmath import mp

from .halfplane import Geodesic, Semicircle, Vertical, is_exact, matrix_from_geodesic
from .modfun import (
    DEFAULT_CTX,
    DEFAULT_THETA_EPS,
    PrecisionCtx,
    j_image_point,
    sample_geodesic,
)
from .modpoly import PHI_COMPUTE_MAX, exact_phi_pair, phi_tilde_eval

DEFAULT_FIT_TOL = 1e-10
DEFAULT_GAP_TOL = 1e-6
DEFAULT_CONFIRM_TOL = 1e-20
DEFAULT_CONFIRM_BITS = 320


def monomials(d: int) -> tuple[tuple[int, int], ...]:
    """Exponent pairs of total degree <= d in graded lexicographic order."""
    return tuple((i, s - i) for s in range(d + 1) for i in range(s, -1, -1))


@dataclass(frozen=True)
class FitFrame:
    """Per-axis affine normalization onto [-1, 1]^2."""

    cx: float
    hx: float
    cy: float
    hy: float

    @staticmethod
    def around(points: np.ndarray) -> "FitFrame":
        xs, ys = points[:, 0], points[:, 1]
        hx = float(xs.max() - xs.min()) / 2
        hy = float(ys.max() - ys.min()) / 2
        scale = max(hx, hy, 1e-300)
        # an axis flatter than 1e-9 of the dominant scale is degenerate;
        # normalizing by its own extent would amplify noise to order one
        return FitFrame(
            float((xs.max() + xs.min()) / 2),
            hx if hx > 1e-9 * scale else scale,
            float((ys.max() + ys.min()) / 2),
            hy if hy > 1e-9 * scale else scale,
        )

    def normalize(self, points: np.ndarray) -> np.ndarray:
        out = np.array(points, dtype=float)
        out[:, 0] = (out[:, 0] - self.cx) / self.hx
        out[:, 1] = (out[:, 1] - self.cy) / self.hy
        return out


@dataclass(frozen=True)
class FitSample:
    """Plane points for fitting; high-precision coordinates when available."""

    points: tuple[tuple[float, float], ...]
    points_hp: tuple | None = None
    provenance: str = ""

    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def hp(self):
        if self.points_hp is not None:
            return self.points_hp
        return tuple((mp.mpf(x), mp.mpf(y)) for x, y in self.points)


@dataclass(frozen=True)
class FitReport:
    """Least-squares implicitization result at one degree.

    Coefficients are a unit vector over `monomials` in frame-normalized
    coordinates; residual = sigma_min / sqrt(n_samples).
    """

    degree: int
    n_monomials: int
    n_samples: int
    sigma_min: float
    residual: float
    rank_gap: float  # sigma_min / next-smallest singular value
    coefficients: tuple[float, ...]
    frame: FitFrame

    @property
    def monomial_list(self):
        return monomials(self.degree)

    def eval_normalized(self, xn, yn):
        total = 0.0
        for c, (i, jj) in zip(self.coefficients, self.monomial_list):
            total += c * xn**i * yn**jj
        return total

    def terms_original(self) -> dict[tuple[int, int], float]:
        """Certificate coefficients in original coordinates (exact expansion
        of the affine substitution, then rounded to float)."""
        cx, hx = Fraction(self.frame.cx), Fraction(self.frame.hx)
        cy, hy = Fraction(self.frame.cy), Fraction(self.frame.hy)
        acc: dict[tuple[int, int], Fraction] = {}
        for c, (i, jj) in zip(self.coefficients, self.monomial_list):
            if c == 0.0:
                continue
            cf = Fraction(c)
            # ((x - cx)/hx)^i ((y - cy)/hy)^j expanded by binomials
            for p in range(i + 1):
                for q in range(jj + 1):
                    coeff = (
                        cf
                        * comb(i, p)
                        * comb(jj, q)
                        * (-cx) ** (i - p)
                        * (-cy) ** (jj - q)
                        / (hx**i * hy**jj)
                    )
                    acc[(p, q)] = acc.get((p, q), Fraction(0)) + coeff
        return {k: float(v) for k, v in acc.items() if v != 0}


def fit_algebraic(sample, d: int) -> FitReport:
    """Total-degree-d implicit fit by SVD of the normalized monomial matrix."""
    pts = sample.array() if isinstance(sample, FitSample) else np.asarray(sample, dtype=float)
    ms = monomials(d)
    if len(pts) < 2 * len(ms):
        raise ValueError(
            f"need at least {2 * len(ms)} samples for degree {d}, got {len(pts)}"
        )
    frame = FitFrame.around(pts)
    norm = frame.normalize(pts)
    mat = np.stack([norm[:, 0] ** i * norm[:, 1] ** jj for i, jj in ms], axis=1)
    _, svals, vt = np.linalg.svd(mat, full_matrices=False)
    coeffs = vt[-1]
    # deterministic sign: first nonzero coefficient positive
    nz = np.nonzero(np.abs(coeffs) > 1e-300)[0]
    if nz.size and coeffs[nz[0]] < 0:
        coeffs = -coeffs
    sigma = float(svals[-1])
    gap = float(svals[-1] / svals[-2]) if len(svals) > 1 and svals[-2] > 0 else 0.0
    return FitReport(
        degree=d,
        n_monomials=len(ms),
        n_samples=len(pts),
        sigma_min=sigma,
        residual=sigma / float(np.sqrt(len(pts))),
        rank_gap=gap,
        coefficients=tuple(float(c) for c in coeffs),
        frame=frame,
    )


# ---------------------------------------------------------------------------
# high-precision confirmation


class _GramCache:
    """Gram matrix of normalized monomials at confirm precision; principal
    blocks give every lower degree for free (monomials are graded)."""

    def __init__(self, points_hp, frame: FitFrame, bits: int):
        self.points = points_hp
        self.frame = frame
        self.bits = bits
        self._gram = None
        self._degree = -1

    def _build(self, d: int):
        ms = monomials(d)
        k = len(ms)
        with mp.workprec(self.bits):
            cx, hx = mp.mpf(self.frame.cx), mp.mpf(self.frame.hx)
            cy, hy = mp.mpf(self.frame.cy), mp.mpf(self.frame.hy)
            gram = mp.matrix(k, k)
            for a, b in self.points:
                xn = (mp.mpf(a) - cx) / hx
                yn = (mp.mpf(b) - cy) / hy
                xp, yp = [mp.mpf(1)], [mp.mpf(1)]
                for _ in range(d):
                    xp.append(xp[-1] * xn)
                    yp.append(yp[-1] * yn)
                row = [xp[i] * yp[jj] for i, jj in ms]
                for i in range(k):
                    ri = row[i]
                    for jj in range(i, k):
                        gram[i, jj] += ri * row[jj]
            for i in range(k):
                for jj in range(i):
                    gram[i, jj] = gram[jj, i]
        self._gram = gram
        self._degree = d

    def sigma_min(self, d: int, want_vector: bool = False):
        """Smallest normalized singular value (and eigenvector) at degree d."""
        if d > self._degree:
            self._build(d)
        k = len(monomials(d))
        with mp.workprec(self.bits):
            sub = self._gram[:k, :k]
            if want_vector:
                evals, evecs = mp.eigsy(sub)
                lam = max(mp.mpf(0), evals[0])
                vec = tuple(evecs[i, 0] for i in range(k))
                sigma = mp.sqrt(lam) / mp.sqrt(len(self.points))
                return sigma, vec
            evals = mp.eigsy(sub, eigvals_only=True)
            lam = max(mp.mpf(0), evals[0])
            return mp.sqrt(lam) / mp.sqrt(len(self.points)), None


# ---------------------------------------------------------------------------
# sampling for fits


def _default_window(g: Geodesic):
    if isinstance(g, Vertical):
        return (-1.0, 1.0)
    return (DEFAULT_THETA_EPS, np.pi - DEFAULT_THETA_EPS)


def _fit_window(g: Geodesic):
    if (isinstance(g, Vertical) and is_exact(g.x0)) or (
        isinstance(g, Semicircle) and g.has_exact_data()
    ):
        from math import isqrt

        from .modfun import automorph_period_window

        N = -matrix_from_geodesic(g).det
        if isqrt(N) ** 2 != N:
            return automorph_period_window(g)
    return _default_window(g)


def curve_fit_sample(
    g: Geodesic,
    n: int = 500,
    window=None,
    ctx: PrecisionCtx = DEFAULT_CTX,
    seed: int = 0,
    cap_factor: float = 50.0,
    cap_floor: float = 4000.0,
    oversample: int = 6,
) -> FitSample:
    """Spread sample of the j-image of g: dense jittered parameter sweep,
    magnitude cap at cap_factor * median |J| (the spikes near cusps would
    otherwise dwarf all structure), then thinning to roughly uniform
    image-space density with about n points."""
    if window is None:
        window = _fit_window(g)
    rng = random.Random(seed)
    lo, hi = window
    m0 = oversample * n
    hp = []
    for k in range(m0):
        t = lo + (hi - lo) * (k + 0.8 * rng.random()) / m0
        z = sample_geodesic(g, 1, window=(t, t), ctx=ctx)[0]
        hp.append(j_image_point(z, ctx))
    arr = np.asarray([(float(a), float(b)) for a, b in hp])
    med = float(np.median(np.hypot(arr[:, 0], arr[:, 1])))
    cap = max(cap_factor * med, cap_floor)
    idx = np.nonzero((np.abs(arr[:, 0]) <= cap) & (np.abs(arr[:, 1]) <= cap))[0]
    keep = arr[idx]
    frame = FitFrame.around(keep)
    norm = frame.normalize(keep)
    dmin = 4.0 / n
    chosen = list(range(len(norm)))
    for _ in range(12):
        chosen = []
        last = None
        for i in range(len(norm)):
            if last is None or np.hypot(*(norm[i] - norm[last])) >= dmin:
                chosen.append(i)
                last = i
        if len(chosen) > 1.5 * n:
            dmin *= 1.4
        elif len(chosen) < 0.7 * n and dmin > 1e-9:
            dmin /= 1.5
        else:
            break
    return FitSample(
        points=tuple(tuple(keep[i]) for i in chosen),
        points_hp=tuple(hp[idx[i]] for i in chosen),
        provenance=f"j-image {g!r}",
    )


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class Verdict:
    """Outcome of the degree sweep: certified weak algebraicity or no fit."""

    certified: bool
    dmax: int
    degree: int | None = None
    report: FitReport | None = None
    residual_hp: float | None = None
    coefficients_hp: tuple | None = None
    profile: tuple = ()  # (degree, float64 residual) pairs

    def __str__(self):
        if self.certified:
            return (
                f"WeaklyBialgebraic(degree={self.degree}, "
                f"residual_hp={self.residual_hp:.3e})"
            )
        return f"NoFitUpTo({self.dmax})"


def verdict_from_sample(
    sample: FitSample,
    dmax: int,
    fit_tol: float = DEFAULT_FIT_TOL,
    gap_tol: float = DEFAULT_GAP_TOL,
    confirm_tol: float = DEFAULT_CONFIRM_TOL,
    confirm_bits: int = DEFAULT_CONFIRM_BITS,
) -> Verdict:
    """Degree sweep with the two-stage criterion.

    Degree d is certified when the float64 residual passes the screen
    (residual < 100 * fit_tol) and the high-precision residual is below
    confirm_tol with a decisive drop (gap_tol) against degree d-1.
    """
    gram: _GramCache | None = None
    profile = []
    prev_res_f = 1.0
    for d in range(1, dmax + 1):
        rep = fit_algebraic(sample, d)
        profile.append((d, rep.residual))
        screen = rep.residual < 100 * fit_tol and rep.residual < prev_res_f
        prev_res_f = max(rep.residual, 1e-300)
        if not screen:
            continue
        if gram is None or gram.frame != rep.frame:
            gram = _GramCache(sample.hp(), rep.frame, confirm_bits)
        res_hp, vec_hp = gram.sigma_min(d, want_vector=True)
        prev_hp, _ = gram.sigma_min(d - 1) if d > 1 else (mp.mpf(1), None)
        gap_hp = float(res_hp / prev_hp) if prev_hp > 0 else 0.0
        if float(res_hp) < confirm_tol and gap_hp < gap_tol:
            return Verdict(
                certified=True,
                dmax=dmax,
                degree=d,
                report=rep,
                residual_hp=float(res_hp),
                coefficients_hp=tuple(float(v) for v in vec_hp),
                profile=tuple(profile),
            )
    return Verdict(certified=False, dmax=dmax, profile=tuple(profile))


def bialgebraic_verdict(
    g: Geodesic,
    dmax: int = 10,
    n: int = 500,
    ctx: PrecisionCtx = DEFAULT_CTX,
    seed: int = 0,
    fit_tol: float = DEFAULT_FIT_TOL,
    gap_tol: float = DEFAULT_GAP_TOL,
    confirm_tol: float = DEFAULT_CONFIRM_TOL,
) -> Verdict:
    """Is the j-image of g contained in a plane algebraic curve of total
    degree <= dmax?  Certificates carry the fitted polynomial; a negative
    answer is statistical evidence only."""
    if dmax < 1:
        raise ValueError("need dmax >= 1")
    sample = curve_fit_sample(g, n, ctx=ctx, seed=seed)
    return verdict_from_sample(
        sample, dmax, fit_tol=fit_tol, gap_tol=gap_tol, confirm_tol=confirm_tol
    )


# ---------------------------------------------------------------------------
# strong vs weak


@dataclass(frozen=True)
class StrongWeak:
    strong: bool
    worst_gap: float
    cover_tol: float
    n_zero_samples: int
    witness: tuple | None = None

    def __str__(self):
        return "Strong" if self.strong else "WeakOnly"


def certificate_zero_samples(
    report: FitReport, nx: int = 120, inflate: float = 1.5, max_per_column: int = 8
) -> list[tuple[float, float]]:
    """Scanline real-root samples of the certificate's zero set over the
    inflated normalized window, in original coordinates."""
    ms = report.monomial_list
    d = report.degree
    out = []
    for xn in np.linspace(-inflate, inflate, nx):
        coeffs = np.zeros(d + 1)
        for c, (i, jj) in zip(report.coefficients, ms):
            coeffs[jj] += c * xn**i
        if np.all(np.abs(coeffs) < 1e-14):
            continue
        roots = np.polynomial.polynomial.polyroots(coeffs) if np.any(coeffs[1:]) else []
        count = 0
        for r in roots:
            if abs(r.imag) < 1e-8 and abs(r.real) <= inflate and count < max_per_column:
                out.append(
                    (
                        xn * report.frame.hx + report.frame.cx,
                        float(r.real) * report.frame.hy + report.frame.cy,
                    )
                )
                count += 1
    return out


def strong_vs_weak(
    sample, report: FitReport, cover_tol: float = 0.05, nx: int = 120
) -> StrongWeak:
    """Strong when every sampled point of the certificate's real zero set
    (within the inflated sample window) is near the image sample; weak
    when the zero set has parts the image does not reach."""
    pts = sample.array() if isinstance(sample, FitSample) else np.asarray(sample, dtype=float)
    norm = report.frame.normalize(pts)
    zeros = certificate_zero_samples(report, nx=nx)
    if not zeros:
        raise ValueError("certificate has no real zero samples in the window")
    zn = report.frame.normalize(np.asarray(zeros))
    worst = 0.0
    witness = None
    for k, row in enumerate(zn):
        dmin = float(np.min(np.hypot(norm[:, 0] - row[0], norm[:, 1] - row[1])))
        if dmin > worst:
            worst = dmin
            witness = zeros[k]
    return StrongWeak(
        strong=worst <= cover_tol,
        worst_gap=worst,
        cover_tol=cover_tol,
        n_zero_samples=len(zeros),
        witness=witness,
    )


# ---------------------------------------------------------------------------
# the exponential-map test family


def exp_map(x, y):
    """(Re, Im) of e^{2 pi i (x + iy)}; mpf when inputs are mpf."""
    if isinstance(x, mp.mpf) or isinstance(y, mp.mpf):
        twopix = 2 * mp.pi * x
        r = mp.exp(-2 * mp.pi * y)
        return (r * mp.cos(twopix), r * mp.sin(twopix))
    from math import cos, exp, pi, sin

    r = exp(-2 * pi * y)
    return (r * cos(2 * pi * x), r * sin(2 * pi * x))


def _exp_fit_sample(pairs, provenance: str, bits: int = 160) -> FitSample:
    with mp.workprec(bits):
        hp = [exp_map(mp.mpf(x), mp.mpf(y)) for x, y in pairs]
    return FitSample(
        points=tuple((float(a), float(b)) for a, b in hp),
        points_hp=tuple(hp),
        provenance=provenance,
    )


def sample_exp_horizontal(t: float, n: int = 200) -> FitSample:
    """E-image of the horizontal line at height t: the circle of squared
    radius e^{-4 pi t}."""
    pairs = [(k / n, t) for k in range(n)]
    return _exp_fit_sample(pairs, f"exp-image horizontal t={t}")


def sample_exp_vertical(t: float, n: int = 200, y_range=(-0.2, 1.2)) -> FitSample:
    """E-image of the vertical line at x = t: an open ray from the origin."""
    lo, hi = y_range
    pairs = [(t, lo + (hi - lo) * k / (n - 1)) for k in range(n)]
    return _exp_fit_sample(pairs, f"exp-image vertical t={t}")


def sample_exp_rotated(slope: float, n: int = 400, x_span: float = 6.0) -> FitSample:
    """E-image of the line y = slope * x: a logarithmic spiral."""
    pairs = [(x_span * k / (n - 1), slope * x_span * k / (n - 1)) for k in range(n)]
    return _exp_fit_sample(pairs, f"exp-image rotated slope={slope}")


def exp_special_points(count: int, order: int | None = None) -> FitSample:
    """E-images of (k/n, 0): roots of unity on the unit circle."""
    if count < 1:
        raise ValueError("need count >= 1")
    n = order or count
    pairs = [(Fraction(k, n), 0) for k in range(count)]
    with mp.workprec(160):
        hp = [exp_map(mp.mpf(p.numerator) / p.denominator, mp.mpf(0)) for p, _ in pairs]
    return FitSample(
        points=tuple((float(a), float(b)) for a, b in hp),
        points_hp=tuple(hp),
        provenance=f"roots of unity order {n}",
    )


# ---------------------------------------------------------------------------
# special-point fits


@dataclass(frozen=True)
class SpecialPointFit:
    verdict: Verdict
    level: int
    matched_level: int | None
    match_angle: float | None
    zero_residual: float | None

    @property
    def matched(self) -> bool:
        return self.matched_level is not None


def _phi_tilde_normalized_vector(N: int, report: FitReport, ctx: PrecisionCtx):
    """The exact level-N real form expressed as a unit vector over the
    report's normalized monomial basis."""
    _, tilde = exact_phi_pair(N, ctx)
    cx, hx = Fraction(report.frame.cx), Fraction(report.frame.hx)
    cy, hy = Fraction(report.frame.cy), Fraction(report.frame.hy)
    acc: dict[tuple[int, int], Fraction] = {}
    for i, jj, c in tilde.terms:
        # substitute x = hx*xn + cx, y = hy*yn + cy
        for p in range(i + 1):
            for q in range(jj + 1):
                coeff = (
                    Fraction(c)
                    * comb(i, p)
                    * comb(jj, q)
                    * hx**p
                    * cx ** (i - p)
                    * hy**q
                    * cy ** (jj - q)
                )
                acc[(p, q)] = acc.get((p, q), Fraction(0)) + coeff
    vec = np.array([float(acc.get(mn, Fraction(0))) for mn in report.monomial_list])
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise ValueError(f"level-{N} form vanished in the normalized basis")
    return vec / nrm


def special_point_fit(
    g: Geodesic,
    m: int = 200,
    dmax: int = 10,
    ctx: PrecisionCtx = DEFAULT_CTX,
    match_tol: float = 1e-6,
) -> SpecialPointFit:
    """Fit an algebraic curve through the j-images of m special points of g
    and compare the certificate against the level-N real form.

    m is raised automatically when the degree sweep needs more samples.
    For N within the exact range the comparison is coefficient-level
    (angle between unit vectors); the zero-set residual against the
    level evaluation is reported in every case.
    """
    from .halfplane import special_points_on_geodesic

    level = abs(matrix_from_geodesic(g).det)
    m = max(m, 2 * len(monomials(dmax)) + 8)
    pts = special_points_on_geodesic(g, m)
    with ctx.workprec():  # sqrt(D) must carry full precision into j
        hp = [j_image_point(p.to_hpoint(), ctx) for p in pts]
    arr = [(float(a), float(b)) for a, b in hp]
    # same magnitude capping as curve sampling
    a = np.asarray(arr)
    med = float(np.median(np.hypot(a[:, 0], a[:, 1])))
    cap = max(50.0 * med, 4000.0)
    sel = [k for k in range(len(arr)) if abs(arr[k][0]) <= cap and abs(arr[k][1]) <= cap]
    sample = FitSample(
        points=tuple(arr[k] for k in sel),
        points_hp=tuple(hp[k] for k in sel),
        provenance=f"special points on {g!r}",
    )
    verdict = verdict_from_sample(sample, dmax)
    if not verdict.certified:
        return SpecialPointFit(verdict, level, None, None, None)
    matched = None
    angle = None
    if level <= PHI_COMPUTE_MAX:
        target = _phi_tilde_normalized_vector(level, verdict.report, ctx)
        got = np.asarray(verdict.coefficients_hp)
        got = got / np.linalg.norm(got)
        angle = float(1 - abs(np.dot(target, got)))
        if angle < match_tol:
            matched = level
    zeros = certificate_zero_samples(verdict.report, nx=60)
    worst = 0.0
    for x, y in zeros[:100]:
        worst = max(worst, float(phi_tilde_eval(level, x, y, ctx).normalized))
    return SpecialPointFit(verdict, level, matched, angle, worst)
