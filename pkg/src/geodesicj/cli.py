"""Command-line front end: one subcommand per verifiable claim.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
Every tolerance is a flag; defaults are documented in --help.  Flags can
also be set through environment variables with the GEODESICJ_ prefix
(GEODESICJ_PREC, GEODESICJ_TOL, GEODESICJ_SAMPLES, GEODESICJ_OUT,
GEODESICJ_FORMAT, GEODESICJ_CACHE, GEODESICJ_SEED).  Identical
configuration (including seed) produces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

from mpmath import mp

from . import algcheck, modfun, modpoly, quadclass, znreal
from .halfplane import HPoint, Irrational, Mat2Z, Semicircle, Vertical

ENV_PREFIX = "GEODESICJ_"


@dataclass(frozen=True)
class Config:
    prec: int = 256
    tol: float | None = None
    samples: int = 200
    out: str = "out"
    format: str = "csv"
    cache: str | None = None
    seed: int = 0

    def ctx(self) -> modfun.PrecisionCtx:
        return modfun.PrecisionCtx(bits=self.prec)


def _env_default(name: str, cast, fallback):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prec", type=int, default=_env_default("PREC", int, 256),
                        help="working precision in bits (default 256)")
    common.add_argument("--tol", type=float, default=_env_default("TOL", float, None),
                        help="tolerance override for verification subcommands")
    common.add_argument("--samples", type=int, default=_env_default("SAMPLES", int, 200),
                        help="sample count (default 200)")
    common.add_argument("--out", default=_env_default("OUT", str, "out"),
                        help="output directory (default ./out)")
    common.add_argument("--format", choices=("csv", "svg", "json"),
                        default=_env_default("FORMAT", str, "csv"), help="plot format")
    common.add_argument("--cache", default=_env_default("CACHE", str, None),
                        help="cache directory for exact modular polynomials")
    common.add_argument("--seed", type=int, default=_env_default("SEED", int, 0),
                        help="sampling seed (default 0)")

    p = argparse.ArgumentParser(
        prog="geodesicj",
        description="special geodesics, class sets, and the real curves of modular polynomials",
    )
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classes", parents=[common],
                       help="conjugacy classes of trace-zero det -N matrices")
    c.add_argument("N", type=int)
    c.add_argument("--json", action="store_true", help="print the class set as JSON")

    jj = sub.add_parser("j", parents=[common], help="evaluate j at x + iy")
    jj.add_argument("x", type=str)
    jj.add_argument("y", type=str)

    inv = sub.add_parser("invertj", parents=[common],
                         help="find z in the fundamental domain with j(z) = re + i*im")
    inv.add_argument("re", type=str)
    inv.add_argument("im", type=str)

    lam = sub.add_parser("lambda", parents=[common], help="evaluate Klein's lambda at x + iy")
    lam.add_argument("x", type=str)
    lam.add_argument("y", type=str)

    zn = sub.add_parser("zn", parents=[common],
                        help="verify the level-N real curve decomposition")
    zn.add_argument("N", type=int)
    zn.add_argument("--pitch", type=float, default=0.02, help="grid pitch (default 0.02)")
    zn.add_argument("--skip-cover", action="store_true", help="skip the grid cover scan")

    at = sub.add_parser("algtest", parents=[common],
                        help="algebraicity verdict for a curve image")
    at.add_argument("--circle", nargs=2, metavar=("X0", "R"),
                    help="half-circle with rational centre and squared radius")
    at.add_argument("--vertical", metavar="X0", help="vertical geodesic at rational x0")
    at.add_argument("--pi-control", action="store_true",
                    help="non-special control: centre pi, squared radius 1")
    at.add_argument("--exp", nargs=2, metavar=("KIND", "PARAM"),
                    help="exponential-map curve: KIND in {L, S, R}, PARAM = t or slope")
    at.add_argument("--dmax", type=int, default=10)

    lem = sub.add_parser("lemniscate", parents=[common],
                         help="level-2 lemniscate identity for the sqrt(2) geodesic")
    lem.add_argument("--r", type=float, default=None,
                     help="perturbed squared radius (default: exact 2)")
    return p


def _fmt(x, digits=30):
    return mp.nstr(mp.mpf(x), digits, strip_zeros=False)


def _parse_scalar(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise SystemExit(2)


def cmd_classes(cfg: Config, args) -> int:
    N = args.N
    if N < 1:
        print("error: N must be positive", file=sys.stderr)
        return 2
    if N == 1:
        reps = znreal.Z1_CLASS_REPS
        print("N=1: 2 classes (split torus), representatives:")
        for m in reps:
            print(f"  {m.rows()}")
        print("tilde pairing: each class fixed by negation")
        return 0
    if isqrt(N) ** 2 == N:
        print(f"error: N = {N} is a perfect square > 1; only N = 1 has a stored table",
              file=sys.stderr)
        return 2
    cs = quadclass.enumerate_classes(N)
    if args.json:
        print(cs.to_json())
        return 0
    pell = quadclass.pell_min(N)
    print(f"N={N}: {len(cs.reps)} classes, {len(cs.tilde_pairs)} after identifying A with -A")
    print(f"Pell minimal solution: t={pell.t}, u={pell.u}  (t^2 - {N} u^2 = 1)")
    for i, m in enumerate(cs.reps):
        cell = next(c for c in cs.tilde_pairs if i in c)
        paired = "self-paired" if len(cell) == 1 else f"paired with class {[x for x in cell if x != i][0]}"
        auto = quadclass.fundamental_automorph(m)
        print(f"  class {i}: rep {m.rows()}, cycle length {len(cs.cycles[i])}, "
              f"{paired}, automorph {auto.rows()}")
    return 0


def cmd_j(cfg: Config, args) -> int:
    ctx = cfg.ctx()
    x = _parse_scalar(args.x)
    y = _parse_scalar(args.y)
    if y <= 0:
        print("error: need y > 0", file=sys.stderr)
        return 2
    val = modfun.j(HPoint(x, y), ctx)
    print(_fmt(val.real), _fmt(val.imag))
    return 0


def cmd_invertj(cfg: Config, args) -> int:
    ctx = cfg.ctx()
    w = mp.mpc(mp.mpf(args.re), mp.mpf(args.im))
    z = modfun.j_invert(w, ctx)
    print(_fmt(z.x), _fmt(z.y))
    return 0


def cmd_lambda(cfg: Config, args) -> int:
    ctx = cfg.ctx()
    x = _parse_scalar(args.x)
    y = _parse_scalar(args.y)
    if y <= 0:
        print("error: need y > 0", file=sys.stderr)
        return 2
    val = modfun.klein_lambda(HPoint(x, y), ctx)
    print(_fmt(val.real), _fmt(val.imag))
    return 0


def cmd_zn(cfg: Config, args) -> int:
    ctx = cfg.ctx()
    N = args.N
    if N < 1 or (N > 1 and isqrt(N) ** 2 == N):
        print("error: need N = 1 or non-square N > 1", file=sys.stderr)
        return 2
    tol = cfg.tol if cfg.tol is not None else 1e-10
    os.makedirs(cfg.out, exist_ok=True)
    reps = list(znreal.Z1_CLASS_REPS) if N == 1 else list(quadclass.enumerate_classes(N).reps)
    reports = []
    for A in reps:
        reports.append(znreal.verify_containment(N, A, n=cfg.samples, tol=tol,
                                                 ctx=ctx, cache_dir=cfg.cache))
    if not args.skip_cover:
        reports.append(znreal.verify_cover(N, pitch=args.pitch, ctx=ctx,
                                           cache_dir=cfg.cache, reps=reps))
    intersections = []
    if len(reps) >= 2:
        reports.append(znreal.verify_distinct(N, reps[0], reps[1], ctx=ctx))
        intersections = znreal.find_intersections(reps[0], reps[1], ctx=ctx)
    samples = [znreal.geodesic_image(A, max(cfg.samples, 200), ctx) for A in reps]
    base = os.path.join(cfg.out, f"zn_{N}")
    if cfg.format in ("csv", "json"):
        znreal.emit_curve(samples, base + ".csv", "csv")
    if cfg.format == "svg":
        znreal.emit_curve(samples, base + ".svg", "svg")
    payload = {
        "N": N,
        "reports": [json.loads(r.to_json()) for r in reports],
        "intersections": [[repr(x), repr(y)] for x, y in intersections],
    }
    with open(base + "_report.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    for r in reports:
        print(r)
    if intersections:
        print("intersections:", " ".join(f"({x:.9g}, {y:.9g})" for x, y in intersections))
    print(f"wrote {base}_report.json")
    return 0 if all(r.passed for r in reports) else 1


def _algtest_geodesic(args):
    if args.circle:
        return Semicircle(_parse_scalar(args.circle[0]), _parse_scalar(args.circle[1]))
    if args.vertical is not None:
        return Vertical(_parse_scalar(args.vertical))
    if args.pi_control:
        return Semicircle(Irrational("pi", lambda: mp.pi), 1)
    return None


def cmd_algtest(cfg: Config, args) -> int:
    ctx = cfg.ctx()
    n = max(cfg.samples, 400)
    if args.exp:
        kind, param = args.exp
        t = float(param)
        if kind == "L":
            sample = algcheck.sample_exp_horizontal(t, n)
            dmax = min(args.dmax, 3)
        elif kind == "S":
            sample = algcheck.sample_exp_vertical(t, n)
            dmax = min(args.dmax, 3)
        elif kind == "R":
            sample = algcheck.sample_exp_rotated(t, n)
            dmax = args.dmax
        else:
            print("error: --exp KIND must be L, S or R", file=sys.stderr)
            return 2
        verdict = algcheck.verdict_from_sample(sample, dmax)
        print(verdict)
        if verdict.certified:
            sw = algcheck.strong_vs_weak(sample, verdict.report)
            print(f"image vs full zero set: {sw} (worst gap {sw.worst_gap:.3e})")
        return 0
    g = _algtest_geodesic(args)
    if g is None:
        print("error: choose --circle, --vertical, --pi-control or --exp", file=sys.stderr)
        return 2
    verdict = algcheck.bialgebraic_verdict(g, dmax=args.dmax, n=n, ctx=ctx, seed=cfg.seed)
    print(verdict)
    if verdict.certified:
        terms = verdict.report.terms_original()
        shown = sorted(terms.items())[:8]
        print("certificate (original coordinates, truncated):",
              " + ".join(f"{c:.4e} x^{i} y^{jj}" for (i, jj), c in shown))
    else:
        print("profile:", " ".join(f"d={d}:{r:.2e}" for d, r in verdict.profile))
    return 0


def cmd_lemniscate(cfg: Config, args) -> int:
    ctx = cfg.ctx()
    tol = cfg.tol if cfg.tol is not None else 1e-12
    kwargs = {}
    if args.r is not None:
        kwargs["r"] = args.r
    rep = znreal.lemniscate_check(max(cfg.samples, 16), tol, ctx, **kwargs)
    print(rep)
    if not rep.passed and rep.max_residual < 1e-6:
        print(f"hint: residual is near the precision floor; raise --prec above {cfg.prec}")
    return 0 if rep.passed else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.prec < 64:
        print("error: --prec must be at least 64", file=sys.stderr)
        return 2
    cfg = Config(
        prec=args.prec,
        tol=args.tol,
        samples=args.samples,
        out=args.out,
        format=args.format,
        cache=args.cache,
        seed=args.seed,
    )
    handlers = {
        "classes": cmd_classes,
        "j": cmd_j,
        "invertj": cmd_invertj,
        "lambda": cmd_lambda,
        "zn": cmd_zn,
        "algtest": cmd_algtest,
        "lemniscate": cmd_lemniscate,
    }
    try:
        return handlers[args.command](cfg, args)
    except (ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except modfun.PrecisionError as exc:
        print(f"precision failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
