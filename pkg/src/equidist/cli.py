"""Command-line interface: ``equidist <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import errors, harness
from .errors import AcceptanceFailure, ConfigError, EquidistError
from .measures import circle_grid, fmt, make_reference, LebesgueCircle
from .wasserstein.result import dumps


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _family_spec(args) -> dict:
    spec = {"kind": args.kind}
    if args.kind in ("gaussian_period", "subgroup_normalized"):
        if args.d is None:
            raise ConfigError(f"{args.kind} needs --d")
        spec["d"] = args.d
    elif args.kind == "kloosterman":
        spec["r"] = args.r
    elif args.kind == "rootset":
        if not args.g:
            raise ConfigError("rootset needs --g (ascending integer coefficients)")
        spec["g"] = [int(c) for c in args.g.split(",")]
    return spec


def cmd_field(args) -> int:
    from .ff import build_field

    ctx = build_field(args.p, args.n)
    info = {"p": ctx.p, "n": ctx.n, "q": ctx.q, "generator": ctx.generator,
            "modulus_poly": list(ctx.modulus_poly) if ctx.modulus_poly else None}
    _write(json.dumps(info, sort_keys=True) + "\n", args.out)
    return 0


def cmd_sums(args) -> int:
    from .expsums import kloosterman_family
    from .ff import build_field

    if args.kind == "kloosterman" and args.n > 1:
        fam = kloosterman_family(build_field(args.q, args.n), args.r)
    else:
        if args.n != 1:
            raise ConfigError("only the kloosterman family supports extension fields")
        fam = harness.build_family(_family_spec(args), args.q)
    lines = ["index,re,im"]
    for i, z in zip(fam.index, fam.values):
        lines.append(f"{int(i)},{fmt(z.real)},{fmt(z.imag)}")
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_sample(args) -> int:
    spec = {"type": args.reference}
    if args.d is not None:
        spec["d"] = args.d
    if args.k is not None:
        spec["k"] = args.k
    ref = make_reference(spec)
    m = ref.sample(args.M, seed=args.seed)
    if hasattr(m, "points") and np.iscomplexobj(m.points):
        re, im = m.points.real, m.points.imag
    elif hasattr(m, "atoms"):
        re, im = m.atoms, np.zeros_like(m.atoms)
    else:
        raise ConfigError("torus samples have no CSV form")
    lines = ["index,re,im"] + [f"{i},{fmt(a)},{fmt(b)}" for i, (a, b) in enumerate(zip(re, im))]
    _write("\n".join(lines) + "\n", args.out)
    return 0


def _single_config(args) -> harness.ExperimentConfig:
    fam = _family_spec(args)
    ref = {"type": args.reference}
    if args.ref_d is not None:
        ref["d"] = args.ref_d
    elif args.reference in ("haar_pushforward", "gamma_d") and "d" in fam:
        ref["d"] = fam["d"]
    cfg = {
        "family": fam,
        "reference": ref,
        "method": args.method,
        "bootstrap": args.bootstrap,
        "seed": args.seed,
        "reference_samples": args.M,
        "fourier_T": args.T,
    }
    if args.kind == "circle_grid":
        cfg["sizes"] = [args.q]
    else:
        cfg["primes"] = {"list": [args.q]}
    return harness.ExperimentConfig.from_dict(cfg)


def cmd_wass(args) -> int:
    cfg = _single_config(args)
    rec = harness.evaluate_size(cfg, args.q)
    if rec.status != "ok":
        name, _, msg = rec.message.partition(": ")
        cls = getattr(errors, name, EquidistError)
        raise cls(msg)
    _write(harness.emit([rec], args.format), args.out)
    return 0


def cmd_bound(args) -> int:
    from .wasserstein import fourier_bound_torus, rate_bound_constant

    if args.what == "rate":
        c, e = rate_bound_constant(args.z_size, args.degree, args.cz)
        _write(dumps({"constant": c, "exponent": e}), args.out)
        return 0
    if args.what == "grid":
        rep = fourier_bound_torus(circle_grid(args.N), LebesgueCircle(), args.T, scan=args.scan)
    else:
        from .ff import build_field, cyclotomic_residues
        from .expsums import torus_orbit
        from .measures import EmpiricalTorus
        from .zlattice import HaarTorusFourier, cyclotomic_preset

        ctx = build_field(args.q)
        orb = torus_orbit(ctx, cyclotomic_residues(ctx, args.d), sort=False)
        mu = EmpiricalTorus(orb.points, np.full(orb.q, 1.0 / orb.q))
        rep = fourier_bound_torus(mu, HaarTorusFourier(cyclotomic_preset(args.d)), args.T, scan=args.scan)
    _write(rep.to_json(), args.out)
    return 0


def cmd_sweep(args) -> int:
    cfg = harness.ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    out = args.out or cfg.output
    res = harness.sweep(cfg)
    if args.format == "json":
        _write(dumps(res.to_dict(deterministic=not args.timings)), out)
    else:
        _write(harness.emit(res.records, args.format, deterministic=not args.timings), out)
        if out:
            Path(out + ".fit.json").write_text(dumps(res.fit.to_dict() if res.fit else {"error": res.fit_error}))
    if args.check:
        fails = harness.check_sweep(res, cfg)
        if fails:
            raise AcceptanceFailure("; ".join(fails))
    return 0


def cmd_clt(args) -> int:
    pairs = []
    for item in args.pairs.split(","):
        q, d = item.split(":")
        pairs.append((int(q), int(d)))
    rows = harness.clt_regime_sweep(pairs, M=args.M, bootstrap=args.bootstrap,
                                    seed=args.seed or 0, method=args.method)
    _write(harness.emit(rows, args.format), args.out)
    if args.check:
        bad = [r for r in rows if r["status"] != "ok" or not r["bound_holds"]]
        if bad:
            raise AcceptanceFailure(f"bound fails for {[(r['q'], r['d']) for r in bad]}")
    return 0


def cmd_snf(args) -> int:
    from .zlattice import smith_normal_form

    src = args.matrix
    text = Path(src).read_text() if Path(src).exists() else src
    try:
        A = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"matrix is not JSON: {exc}") from None
    if isinstance(A, dict):
        A = A.get("generators", A.get("matrix"))
    snf = smith_normal_form(A)
    as_list = lambda M: [[int(x) for x in row] for row in M]
    _write(json.dumps({"U": as_list(snf.U), "D": as_list(snf.D), "V": as_list(snf.V),
                       "diagonal": list(snf.diagonal)}, sort_keys=True) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="64-bit RNG seed")
    common.add_argument("--threads", type=int, default=None, help="worker threads for sweeps")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json", "dat"), default="csv")

    p = argparse.ArgumentParser(prog="equidist", description="Exponential sums, limit measures and W1 distances.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("field", parents=[common], help="build a finite field and print its data")
    s.add_argument("p", type=int)
    s.add_argument("n", type=int, nargs="?", default=1)
    s.set_defaults(func=cmd_field)

    fam_kinds = [k for k in harness.FAMILY_KINDS if k != "circle_grid"]

    def family_args(sp, kinds):
        sp.add_argument("--d", type=int, default=None, help="subgroup order")
        sp.add_argument("--r", type=int, default=2, help="Kloosterman rank")
        sp.add_argument("--g", default=None, help="polynomial coefficients, ascending, comma separated")

    s = sub.add_parser("sums", parents=[common], help="compute a sum family as CSV")
    s.add_argument("kind", choices=fam_kinds)
    s.add_argument("--q", type=int, required=True, help="characteristic p (field is F_p^n)")
    s.add_argument("--n", type=int, default=1)
    family_args(s, fam_kinds)
    s.set_defaults(func=cmd_sums)

    s = sub.add_parser("sample", parents=[common], help="sample a reference measure")
    s.add_argument("reference", choices=("sato_tate", "arcsine", "gaussian_half_id", "gamma_d",
                                         "haar_pushforward", "lebesgue_circle"))
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--d", type=int, default=None)
    s.add_argument("--k", type=int, default=None)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("wass", parents=[common], help="W1 between one family and a reference")
    s.add_argument("kind", choices=harness.FAMILY_KINDS)
    s.add_argument("--q", type=int, required=True, help="prime (or grid size for circle_grid)")
    family_args(s, harness.FAMILY_KINDS)
    s.add_argument("--reference", default="haar_pushforward")
    s.add_argument("--ref-d", type=int, default=None)
    s.add_argument("--method", choices=harness.METHODS, default="exact2d")
    s.add_argument("--M", type=int, default=None, help="reference sample size")
    s.add_argument("--bootstrap", type=int, default=5)
    s.add_argument("--T", type=int, default=16, help="Fourier truncation")
    s.set_defaults(func=cmd_wass)

    s = sub.add_parser("bound", parents=[common], help="Fourier bound or rate constant")
    s.add_argument("what", choices=("grid", "orbit", "rate"))
    s.add_argument("--N", type=int, default=10)
    s.add_argument("--q", type=int, default=7)
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--T", type=float, default=10)
    s.add_argument("--scan", action="store_true")
    s.add_argument("--z-size", type=int, default=3)
    s.add_argument("--degree", type=int, default=2)
    s.add_argument("--cz", type=float, default=1.0)
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("sweep", parents=[common], help="run a sweep from a JSON config")
    s.add_argument("config")
    s.add_argument("--check", action="store_true", help="exit 4 if configured assertions fail")
    s.add_argument("--timings", action="store_true", help="keep per-size wall times in the output")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("clt", parents=[common], help="growing-subgroup distances for (q, d) pairs")
    s.add_argument("--pairs", default="211:5,2311:7,30109:13", help="comma separated q:d")
    s.add_argument("--M", type=int, default=None)
    s.add_argument("--bootstrap", type=int, default=5)
    s.add_argument("--method", choices=("exact2d", "sinkhorn"), default="exact2d")
    s.add_argument("--check", action="store_true")
    s.set_defaults(func=cmd_clt)

    s = sub.add_parser("snf", parents=[common], help="Smith normal form of an integer matrix")
    s.add_argument("matrix", help="JSON matrix, inline or a file path")
    s.set_defaults(func=cmd_snf)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "sweep" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except EquidistError as exc:
        print(f"equidist: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"equidist: invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
