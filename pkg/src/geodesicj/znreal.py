"""The real plane curves cut out by modular polynomials, sampled and verified.

Each conjugacy class of trace-zero determinant -N integer matrices maps,
through z -> (Re j(z), Im j(z)) along its geodesic, onto a piece of the
real curve of level N; for squarefree N > 1 the class images cover the
whole real curve and distinct tilde-classes give distinct images.  The
operations here turn those set-level statements into sampled,
tolerance-explicit verification reports:

  containment  -- class image points satisfy the level-N equation
  cover        -- every detected curve point is near some class image
  distinctness -- a witness point of one image far from the other
  intersection -- refined common points of two images

Coordinates are normalized to a square window (side 2, centred on the
x-centre of the data and on y = 0, matching the curve's symmetry) so
that grid pitch, cover radius and separation are all in one scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from mpmath import mp

from .halfplane import Geodesic, HPoint, Mat2Z, Semicircle, Vertical, geodesic_from_matrix
from .modfun import (
    DEFAULT_CTX,
    DEFAULT_THETA_EPS,
    PrecisionCtx,
    j,
    j_image_point,
    klein_lambda,
    sample_geodesic,
)
from .modpoly import PHI_COMPUTE_MAX, exact_phi_pair, phi_eval, phi_tilde_eval
from .quadclass import enumerate_classes

VERTICAL_LOG_WINDOW = (-3.0, 3.0)  # split-torus sampling window in log-height

Z1_CLASS_REPS = (Mat2Z(1, 0, 0, -1), Mat2Z(0, 1, 1, 0))


class FullOverlapError(ValueError):
    """Two identical geodesics intersect everywhere; refinement is meaningless."""


@dataclass(frozen=True)
class PlaneSample:
    """Finite sample of a plane curve with a provenance tag."""

    points: tuple[tuple[float, float], ...]
    provenance: str

    def __post_init__(self):
        if not self.points:
            raise ValueError("PlaneSample must be nonempty")
        for x, y in self.points:
            if not (np.isfinite(x) and np.isfinite(y)):
                raise ValueError("PlaneSample coordinates must be finite")

    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)


@dataclass(frozen=True)
class VerificationReport:
    claim: str
    max_residual: float
    tolerance: float
    passed: bool
    witnesses: tuple = ()
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "claim": self.claim,
                "max_residual": repr(self.max_residual),
                "tolerance": repr(self.tolerance),
                "passed": self.passed,
                "witnesses": [list(map(repr, w)) for w in self.witnesses],
                "extra": {k: repr(v) for k, v in sorted(self.extra.items())},
            },
            indent=2,
        )

    def __str__(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.claim}: max residual {self.max_residual:.3e} vs tol {self.tolerance:.3e}"


@dataclass(frozen=True)
class Frame:
    """Affine map onto the square window [-1, 1]^2 (y centred on the axis)."""

    cx: float
    half: float

    def normalize(self, pts: np.ndarray) -> np.ndarray:
        out = np.array(pts, dtype=float)
        out[:, 0] = (out[:, 0] - self.cx) / self.half
        out[:, 1] = out[:, 1] / self.half
        return out

    def denormalize(self, x: float, y: float) -> tuple[float, float]:
        return (x * self.half + self.cx, y * self.half)

    @staticmethod
    def around(points: np.ndarray, pad: float = 0.02) -> "Frame":
        xs, ys = points[:, 0], points[:, 1]
        cx = float((xs.max() + xs.min()) / 2)
        half = float(max((xs.max() - xs.min()) / 2, np.abs(ys).max(), 1e-30))
        return Frame(cx, half * (1 + pad))


# ---------------------------------------------------------------------------
# sampling geodesic images


def class_window(A: Mat2Z) -> object:
    """Sampling window for the geodesic of A: one automorph period when the
    level is non-square, documented defaults for the split case."""
    from math import isqrt

    N = -A.det
    if isqrt(N) ** 2 != N:
        return "one-period"
    g = geodesic_from_matrix(A)
    if isinstance(g, Vertical):
        return VERTICAL_LOG_WINDOW
    return (DEFAULT_THETA_EPS, np.pi - DEFAULT_THETA_EPS)


def geodesic_image(A: Mat2Z, n: int, ctx: PrecisionCtx = DEFAULT_CTX) -> PlaneSample:
    """n-point image of the geodesic of A under z -> (Re j, Im j)."""
    if n < 2:
        raise ValueError("need n >= 2")
    g = geodesic_from_matrix(A)
    pts = sample_geodesic(g, n, window=class_window(A), ctx=ctx)
    out = []
    for z in pts:
        re, im = j_image_point(z, ctx)
        out.append((float(re), float(im)))
    return PlaneSample(tuple(out), provenance=_tag(A))


def _tag(A: Mat2Z) -> str:
    # no commas: the tag must survive as one CSV field
    return f"A[{A.a} {A.b}; {A.c} {A.d}]"


def _window_bounds(g: Geodesic, window) -> tuple[float, float]:
    if window == "one-period":
        from .modfun import automorph_period_window

        return automorph_period_window(g)
    return window


def _image_at(g: Geodesic, t: float, ctx: PrecisionCtx) -> tuple[float, float]:
    z = sample_geodesic(g, 1, window=(t, t), ctx=ctx)[0]
    re, im = j_image_point(z, ctx)
    return (float(re), float(im))


def _coarse_image(A: Mat2Z, ctx: PrecisionCtx, coarse: int = 129):
    g = geodesic_from_matrix(A)
    lo, hi = _window_bounds(g, class_window(A))
    params = [lo + (hi - lo) * k / (coarse - 1) for k in range(coarse)]
    return g, [(t, _image_at(g, t, ctx)) for t in params]


def _refine_in_frame(g, base, frame: Frame, gap: float, ctx: PrecisionCtx, max_points=40_000):
    """Split parameter segments until image gaps are below `gap` in
    frame-normalized units; segments far outside the frame window are
    split only down to a coarse scale."""

    def norm(p):
        return ((p[0] - frame.cx) / frame.half, p[1] / frame.half)

    def near_window(p):
        nx, ny = norm(p)
        return abs(nx) <= 2 and abs(ny) <= 2

    out = list(base)
    stack = [(out[k], out[k + 1]) for k in range(len(out) - 1)]
    budget = max_points - len(out)
    while stack and budget > 0:
        (t0, p0), (t1, p1) = stack.pop()
        n0, n1 = norm(p0), norm(p1)
        length = np.hypot(n0[0] - n1[0], n0[1] - n1[1])
        if length <= gap or abs(t1 - t0) < 1e-12:
            continue
        if not (near_window(p0) or near_window(p1)) and length <= 0.5:
            continue
        tm = (t0 + t1) / 2
        pm = _image_at(g, tm, ctx)
        out.append((tm, pm))
        budget -= 1
        stack.append(((t0, p0), (tm, pm)))
        stack.append(((tm, pm), (t1, p1)))
    out.sort(key=lambda tp: tp[0])
    return out


def union_frame(reps, ctx: PrecisionCtx, coarse: int = 129):
    """Common normalization frame from coarse images of all class reps."""
    coarse_data = [_coarse_image(A, ctx, coarse) for A in reps]
    allpts = np.asarray([p for _, base in coarse_data for _, p in base])
    return Frame.around(allpts), coarse_data


def adaptive_geodesic_image(
    A: Mat2Z,
    ctx: PrecisionCtx = DEFAULT_CTX,
    frame: Frame | None = None,
    gap: float = 0.01,
    coarse: int = 129,
    max_points: int = 40_000,
) -> tuple[PlaneSample, Frame, list[float]]:
    """Image sample refined until consecutive points are closer than `gap`
    in frame-normalized coordinates.  Returns (sample, frame, parameters)."""
    g, base = _coarse_image(A, ctx, coarse)
    if frame is None:
        frame = Frame.around(np.asarray([p for _, p in base]))
    out = _refine_in_frame(g, base, frame, gap, ctx, max_points)
    params = [t for t, _ in out]
    sample = PlaneSample(tuple(p for _, p in out), provenance=_tag(A))
    return sample, frame, params


# ---------------------------------------------------------------------------
# verification reports


def verify_containment(
    N: int,
    A: Mat2Z,
    n: int = 200,
    tol: float = 1e-10,
    ctx: PrecisionCtx = DEFAULT_CTX,
    cache_dir: str | None = None,
) -> VerificationReport:
    """Max normalized level-N residual over an n-point image of A's geodesic."""
    if -A.det != N:
        raise ValueError(f"matrix determinant {-A.det} does not match level {N}")
    g = geodesic_from_matrix(A)
    pts = sample_geodesic(g, n, window=class_window(A), ctx=ctx)
    worst = mp.mpf(0)
    witness = None
    for z in pts:
        re, im = j_image_point(z, ctx)
        res = phi_tilde_eval(N, re, im, ctx, cache_dir=cache_dir).normalized
        if res > worst:
            worst = res
            witness = (float(re), float(im))
    return VerificationReport(
        claim=f"containment: image of {_tag(A)} on level-{N} curve",
        max_residual=float(worst),
        tolerance=tol,
        passed=worst <= tol,
        witnesses=(witness,) if witness else (),
        extra={"n": n, "path": "exact" if N <= PHI_COMPUTE_MAX else "proxy"},
    )


def _class_reps(N: int):
    if N == 1:
        return list(Z1_CLASS_REPS)
    return list(enumerate_classes(N).reps)


def _signed_grid_value(N, x, y, ctx, cache_dir, tilde, seed_holder):
    """Signed normalized level-N value at (x, y); the sign makes cell
    crossings detectable."""
    if tilde is not None:
        xm, ym = mp.mpf(x), mp.mpf(y)
        val = tilde.eval_mp(xm, ym)
        return float(val / tilde.scale_at(xm, ym)), None
    res = phi_eval(N, mp.mpc(x, y), mp.mpc(x, -y), ctx, seed=seed_holder[0])
    seed_holder[0] = res.z
    return float(res.signed_normalized), res.z


def _grid_values_exact(tilde, xs, ys):
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    num = np.zeros_like(gx)
    den = np.ones_like(gx)
    for i, jj, c in tilde.terms:
        term = float(c) * gx**i * gy**jj
        num += term
        den += np.abs(term)
    return num / den


def _grid_values(N, frame: Frame, pitch, tilde, scan_ctx, cache_dir, mirror=True):
    """Signed normalized level values on the frame's grid; for N > 1 only the
    upper half is evaluated and mirrored (the curve is symmetric in y)."""
    k = int(np.ceil(2.0 / pitch))
    grid = np.linspace(-1.0, 1.0, k + 1)
    xs_raw = grid * frame.half + frame.cx
    ys_raw = grid * frame.half
    if tilde is not None:
        return grid, _grid_values_exact(tilde, xs_raw, ys_raw)
    vals = np.zeros((k + 1, k + 1))
    cols = range(k + 1) if not (mirror and N > 1) else [jj for jj in range(k + 1) if ys_raw[jj] >= -1e-300]
    seed_holder = [None]
    for i in range(k + 1):
        for jj in cols:
            v, _ = _signed_grid_value(
                N, xs_raw[i], ys_raw[jj], scan_ctx, cache_dir, None, seed_holder
            )
            vals[i, jj] = v
    if mirror and N > 1:
        for jj in range(k + 1):
            if ys_raw[jj] < -1e-300:
                vals[:, jj] = vals[:, k - jj]
    return grid, vals


def _detect_curve_points(grid, vals, detect_tol):
    """Cell-centre points where the signed value changes sign, plus grid
    nodes where it is below detect_tol."""
    detected = []
    sgn = np.sign(vals)
    k = len(grid) - 1
    for i in range(k):
        for jj in range(k):
            cell = sgn[i : i + 2, jj : jj + 2]
            if cell.max() > 0 and cell.min() < 0:
                detected.append(((grid[i] + grid[i + 1]) / 2, (grid[jj] + grid[jj + 1]) / 2))
    for i, jj in np.argwhere(np.abs(vals) < detect_tol):
        detected.append((grid[i], grid[jj]))
    return detected


def verify_cover(
    N: int,
    pitch: float = 0.02,
    detect_tol: float = 1e-12,
    cover_factor: float = 3.0,
    ctx: PrecisionCtx = DEFAULT_CTX,
    scan_ctx: PrecisionCtx | None = None,
    cache_dir: str | None = None,
    reps: list[Mat2Z] | None = None,
    zoom: bool = True,
) -> VerificationReport:
    """Scan square windows for level-N curve points and check each one is
    within cover_factor * pitch of the union of class-image samples.

    Curve points are detected as sign changes of the signed normalized
    level value across grid cells (plus grid nodes where it is below
    detect_tol).  Two windows are scanned: the bounding square of all
    class images (contains the whole real curve for non-square N) and,
    when the scales differ, a zoom window at the smallest class image's
    scale, which is where the published figures live.  Distances are in
    each window's normalized units, so pitch and cover radius share one
    scale.
    """
    if reps is None:
        reps = _class_reps(N)
    if scan_ctx is None:
        scan_ctx = PrecisionCtx(bits=128) if N > PHI_COMPUTE_MAX else ctx
    # image samples only feed pitch-scale distance checks; 64 bits is ample
    image_ctx = PrecisionCtx(bits=64)
    gap = pitch / 2
    full_frame, coarse_data = union_frame(reps, image_ctx)
    frames = [full_frame]
    if zoom:
        halves = [Frame.around(np.asarray([p for _, p in base])).half for _, base in coarse_data]
        small = coarse_data[int(np.argmin(halves))]
        zoom_frame = Frame.around(np.asarray([p for _, p in small[1]]))
        if zoom_frame.half < full_frame.half / 3:
            frames.append(zoom_frame)

    tilde = None
    if N <= PHI_COMPUTE_MAX:
        _, tilde = exact_phi_pair(N, ctx, cache_dir)
    cover_tol = cover_factor * pitch
    worst = 0.0
    witness = None
    detected_total = 0
    for frame in frames:
        refined = [
            _refine_in_frame(g, base, frame, gap, image_ctx) for g, base in coarse_data
        ]
        cloud_raw = np.asarray([p for out in refined for _, p in out])
        cloud = frame.normalize(cloud_raw)
        grid, vals = _grid_values(N, frame, pitch, tilde, scan_ctx, cache_dir)
        detected = _detect_curve_points(grid, vals, detect_tol)
        detected_total += len(detected)
        for row in detected:
            d = float(np.min(np.hypot(cloud[:, 0] - row[0], cloud[:, 1] - row[1])))
            if d > worst:
                worst = d
                witness = frame.denormalize(row[0], row[1])
    return VerificationReport(
        claim=f"cover: level-{N} curve points near class images",
        max_residual=worst,
        tolerance=cover_tol,
        passed=worst <= cover_tol,
        witnesses=(witness,) if witness else (),
        extra={
            "pitch": pitch,
            "detect_tol": detect_tol,
            "cover_tol": cover_tol,
            "detected": detected_total,
            "classes": len(reps),
            "windows": [(f.cx, f.half) for f in frames],
        },
    )


def verify_distinct(
    N: int,
    A: Mat2Z,
    B: Mat2Z,
    n: int = 400,
    ctx: PrecisionCtx = DEFAULT_CTX,
    separation: float = 0.05,
) -> VerificationReport:
    """One-sided distinctness witness: a sampled point of J(C_A) farther than
    `separation` (normalized units) from every sampled point of J(C_B)."""
    if N > 1:
        from .quadclass import are_conjugate

        if are_conjugate(A, B) or are_conjugate(A, -B):
            raise ValueError("matrices are in the same tilde class; images coincide")
    # distances live in the frame of the witness-owning curve A, so a small
    # image is not drowned by a huge partner; B is refined densely there
    image_ctx = PrecisionCtx(bits=64)
    ga, base_a = _coarse_image(A, image_ctx)
    gb, base_b = _coarse_image(B, image_ctx)
    frame = Frame.around(np.asarray([p for _, p in base_a]))
    ra = _refine_in_frame(ga, base_a, frame, separation / 4, image_ctx)
    rb = _refine_in_frame(gb, base_b, frame, separation / 4, image_ctx)
    pa = frame.normalize(np.asarray([p for _, p in ra]))
    pb = frame.normalize(np.asarray([p for _, p in rb]))
    best = -1.0
    witness = None
    for row in pa:
        d = float(np.min(np.hypot(pb[:, 0] - row[0], pb[:, 1] - row[1])))
        if d > best:
            best = d
            witness = frame.denormalize(row[0], row[1])
    return VerificationReport(
        claim=f"distinct: image of {_tag(A)} not contained in image of {_tag(B)}",
        max_residual=best,
        tolerance=separation,
        passed=best > separation,
        witnesses=(witness,) if witness else (),
        extra={"separation": separation, "n_A": len(pa), "n_B": len(pb)},
    )


def _golden_min(f, lo, hi, iters=60):
    phi = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    return (a + b) / 2


def find_intersections(
    A: Mat2Z,
    B: Mat2Z,
    n: int = 400,
    tol: float = 1e-6,
    ctx: PrecisionCtx = DEFAULT_CTX,
) -> list[tuple[float, float]]:
    """Common points of the two geodesic images, refined along the geodesic
    parameters by alternating golden-section minimization of the gap."""
    ga, gb = geodesic_from_matrix(A), geodesic_from_matrix(B)
    if ga == gb:
        raise FullOverlapError("identical geodesics: images fully overlap")
    image_ctx = PrecisionCtx(bits=64)
    frame, coarse_data = union_frame([A, B], image_ctx)
    ra = _refine_in_frame(*coarse_data[0], frame, 0.02, image_ctx)
    rb = _refine_in_frame(*coarse_data[1], frame, 0.02, image_ctx)
    ta = [t for t, _ in ra]
    tb = [t for t, _ in rb]
    pa = frame.normalize(np.asarray([p for _, p in ra]))
    pb = frame.normalize(np.asarray([p for _, p in rb]))
    dists = np.hypot(
        pa[:, 0][:, None] - pb[:, 0][None, :], pa[:, 1][:, None] - pb[:, 1][None, :]
    )
    near = np.argwhere(dists < 0.03)
    if near.size == 0:
        return []
    # cluster candidate pairs by parameter proximity on A's side
    near = near[np.argsort(dists[near[:, 0], near[:, 1]])]
    clusters: list[tuple[int, int]] = []
    for ia, ib in near:
        if all(abs(ta[ia] - ta[ja]) > 0.05 for ja, _ in clusters):
            clusters.append((int(ia), int(ib)))
    results = []
    for ia, ib in clusters:
        t_lo = ta[max(0, ia - 2)]
        t_hi = ta[min(len(ta) - 1, ia + 2)]
        u_lo = tb[max(0, ib - 2)]
        u_hi = tb[min(len(tb) - 1, ib + 2)]
        t_cur = ta[ia]
        u_cur = tb[ib]

        def gap_t(t, u_fixed):
            p = _image_at(ga, t, image_ctx)
            q = _image_at(gb, u_fixed, image_ctx)
            return np.hypot(p[0] - q[0], p[1] - q[1])

        for _ in range(9):
            t_cur = _golden_min(lambda t: gap_t(t, u_cur), t_lo, t_hi, iters=36)
            u_cur = _golden_min(lambda u: gap_t(t_cur, u), u_lo, u_hi, iters=36)
            if gap_t(t_cur, u_cur) == 0:
                break
            w = (t_hi - t_lo) / 8
            t_lo, t_hi = t_cur - w, t_cur + w
            wu = (u_hi - u_lo) / 8
            u_lo, u_hi = u_cur - wu, u_cur + wu
        p = _image_at(ga, t_cur, image_ctx)
        q = _image_at(gb, u_cur, image_ctx)
        if np.hypot(p[0] - q[0], p[1] - q[1]) <= tol * max(1.0, abs(p[0]), abs(p[1])):
            results.append(((p[0] + q[0]) / 2, (p[1] + q[1]) / 2))
    # dedupe clusters that refined to the same point
    unique: list[tuple[float, float]] = []
    for p in results:
        if all(np.hypot(p[0] - q[0], p[1] - q[1]) > 10 * tol for q in unique):
            unique.append(p)
    return unique


LEMNISCATE_MATRIX = Mat2Z(1, 1, 1, -1)


def lemniscate_check(
    n: int = 200,
    tol: float = 1e-12,
    ctx: PrecisionCtx = DEFAULT_CTX,
    r=Fraction(2),
) -> VerificationReport:
    """Map one automorph period of the circle |z - 1|^2 = r through Klein's
    lambda and test (x^2+y^2)((x-1)^2+y^2) = 1/16.

    r defaults to the exact value 2 (the geodesic of [[1, 1], [1, -1]]);
    any other r is a perturbation control sampled over the same window.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    from .modfun import automorph_period_window

    window = automorph_period_window(Semicircle(Fraction(1), Fraction(2)))
    g = Semicircle(Fraction(1) if r == 2 else 1.0, r if r == 2 else float(r))
    pts = sample_geodesic(g, n, window=window, ctx=ctx)
    worst = mp.mpf(0)
    witness = None
    with ctx.workprec():
        for z in pts:
            lam = klein_lambda(z, ctx)
            x, y = lam.real, lam.imag
            res = abs((x * x + y * y) * ((x - 1) ** 2 + y * y) - mp.mpf(1) / 16)
            if res > worst:
                worst = res
                witness = (float(x), float(y))
    return VerificationReport(
        claim="lemniscate: level-2 image of the circle at 1 with radius sqrt(2)",
        max_residual=float(worst),
        tolerance=tol,
        passed=worst <= tol,
        witnesses=(witness,) if witness else (),
        extra={"n": n, "r": str(r)},
    )


# ---------------------------------------------------------------------------
# emitters

SVG_PALETTE = ("#1f4fbf", "#c02a2a", "#2a8f4f", "#b07020", "#7040a0", "#407f8f")


def emit_curve(samples, path: str, fmt: str = "csv") -> str:
    """Write plane samples as CSV (x, y, provenance) or SVG polylines,
    one color per provenance (first class blue, second red)."""
    if isinstance(samples, PlaneSample):
        samples = [samples]
    if not samples or all(len(s.points) == 0 for s in samples):
        raise ValueError("emit_curve needs nonempty samples")
    if fmt == "csv":
        lines = ["x,y,provenance"]
        for s in samples:
            for x, y in s.points:
                lines.append(f"{x:.17g},{y:.17g},{s.provenance}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        return path
    if fmt != "svg":
        raise ValueError(f"unknown format {fmt!r}")
    allpts = np.vstack([s.array() for s in samples])
    x0, x1 = float(allpts[:, 0].min()), float(allpts[:, 0].max())
    y0, y1 = float(allpts[:, 1].min()), float(allpts[:, 1].max())
    wx, wy = max(x1 - x0, 1e-30), max(y1 - y0, 1e-30)
    W, H, pad = 800.0, 600.0, 30.0

    def to_px(x, y):
        sx = pad + (x - x0) / wx * (W - 2 * pad)
        sy = H - pad - (y - y0) / wy * (H - 2 * pad)
        return sx, sy

    groups = []
    for idx, s in enumerate(samples):
        color = SVG_PALETTE[idx % len(SVG_PALETTE)]
        coords = " ".join("%.3f,%.3f" % to_px(x, y) for x, y in s.points)
        groups.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.2" '
            f'points="{coords}"><title>{s.provenance}</title></polyline>'
        )
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" '
        f'viewBox="0 0 {W:.0f} {H:.0f}">\n'
        '<rect width="100%" height="100%" fill="white"/>\n'
        + "\n".join(groups)
        + "\n</svg>\n"
    )
    with open(path, "w") as fh:
        fh.write(svg)
    return path
