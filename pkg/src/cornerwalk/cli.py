"""Command-line front end.

Every subcommand writes a small report or CSV whose first lines are the
run manifest as ``#`` comments: the command, the model path, the sorted
parameters, the tool version, and the seed when one is involved.  No
timestamps, no hostnames — re-running the printed manifest must
reproduce the output byte for byte.  All floating-point fields are
printed with 17 significant digits so values round-trip exactly.

Exit codes: 0 success; 1 model parse/validation failure; 2 usage error
(argparse, bad parameter values, missing --seed); 3 numerical failure
(bracketing, convergence, SPD, division blowups).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field

from . import __version__
from .model import (
    InvalidModelError,
    ModelFileError,
    StepDistribution,
    parse_model_file,
    validate_model,
)
from .curve import SolverError, cramer_transform, f_branch, find_extrema, g_branch
from .compensation import (
    HarmonicValue,
    boundary_harmonic,
    build_sequence,
    escape_probability,
    harmonic_eval,
)
from .uniformization import compute_params, sequence_at
from . import montecarlo as mc

__all__ = ["main", "RunManifest"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class RunManifest:
    command: str
    model_path: str
    parameters: dict = field(default_factory=dict)
    tool_version: str = __version__
    seed: int | None = None

    def header_lines(self) -> list[str]:
        lines = [f"# command: {self.command}", f"# model: {self.model_path}"]
        for k in sorted(self.parameters):
            v = self.parameters[k]
            if isinstance(v, float):
                v = _fmt(v)
            lines.append(f"# param {k}: {v}")
        lines.append(f"# tool_version: {self.tool_version}")
        if self.seed is not None:
            lines.append(f"# seed: {self.seed}")
        return lines


def _emit(args, manifest: RunManifest, body: list[str]) -> None:
    text = "\n".join(manifest.header_lines() + body) + "\n"
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_model(path: str) -> StepDistribution:
    return parse_model_file(path)


def _load_valid_model(path: str) -> StepDistribution:
    dist = _load_model(path)
    report = validate_model(dist)
    if not report.passed:
        ids = ", ".join(rule for rule, _ in report.violations)
        raise InvalidModelError(f"{path}: model fails validation rules: {ids}")
    return dist


# ---------------------------------------------------------------- validate


def cmd_validate(args) -> int:
    dist = _load_model(args.model)
    report = validate_model(dist)
    man = RunManifest("validate", args.model, {})
    body = [
        f"steps: {len(dist)}",
        f"passed: {'yes' if report.passed else 'no'}",
        f"small-step: {'yes' if report.is_small_step else 'no'}",
    ]
    for rule, msg in report.violations:
        body.append(f"violation {rule}: {msg}")
    for note in report.notes:
        body.append(f"note: {note}")
    _emit(args, man, body)
    return 0 if report.passed else 1


# -------------------------------------------------------------- curve-dump


def cmd_curve_dump(args) -> int:
    dist = _load_valid_model(args.model)
    geom = find_extrema(dist)
    lo = args.lo if args.lo is not None else min(geom.x0, geom.y0)
    hi = min(args.hi, 0.0)
    if not lo < hi:
        raise ValueError(f"empty grid: lo={lo!r} must be < hi={hi!r}")
    step = args.step if args.step is not None else (hi - lo) / 50.0
    if step <= 0:
        raise ValueError("step must be positive")
    man = RunManifest(
        "curve-dump", args.model, {"lo": lo, "hi": hi, "step": step}
    )
    body = ["x,f(x),y,g(y)"]
    k = 0
    while True:
        t = lo + k * step
        if t > hi + 1e-12 * max(1.0, abs(hi)):
            break
        x = min(max(t, geom.x0), 0.0)
        y = min(max(t, geom.y0), 0.0)
        body.append(
            ",".join(
                [_fmt(x), _fmt(f_branch(geom, x)), _fmt(y), _fmt(g_branch(geom, y))]
            )
        )
        k += 1
    _emit(args, man, body)
    return 0


# ------------------------------------------------------------------ escape


def cmd_escape(args) -> int:
    dist = _load_valid_model(args.model)
    i, j = args.i, args.j
    if i < 0 or j < 0:
        raise ValueError("escape coordinates must be nonnegative")
    if i == 0 or j == 0:
        hv = HarmonicValue(0.0, 0.0, 0)  # absorbed start: Dirichlet value
    else:
        geom = find_extrema(dist)
        hv = escape_probability(geom, i, j, tol=args.tol)
    params = {"i": i, "j": j, "tol": args.tol}
    seed = None
    body = [
        f"escape_probability: {_fmt(hv.value)}",
        f"tail_bound: {_fmt(hv.tail_bound)}",
        f"terms_used: {hv.terms_used}",
    ]
    if args.mc_check is not None:
        n_paths, horizon, seed = args.mc_check
        params.update({"mc_n_paths": n_paths, "mc_horizon": horizon})
        est = mc.estimate_escape(
            dist, (i, j), mc.SimConfig(seed=seed, n_paths=n_paths, horizon=horizon)
        ) if i >= 1 and j >= 1 else mc.SimEstimate(0.0, 0.0, n_paths, horizon, 0.0)
        delta = abs(est.mean - hv.value)
        gate = 3.0 * est.std_error + hv.tail_bound
        body += [
            f"mc_mean: {_fmt(est.mean)}",
            f"mc_std_error: {_fmt(est.std_error)}",
            f"mc_delta: {_fmt(delta)}",
            f"mc_verdict: {'agree' if delta <= gate else 'disagree'}",
        ]
    _emit(args, RunManifest("escape", args.model, params, seed=seed), body)
    return 0


# ---------------------------------------------------------- harmonic-table


def cmd_harmonic_table(args) -> int:
    dist = _load_valid_model(args.model)
    if args.imax < 1 or args.jmax < 1:
        raise ValueError("imax and jmax must be >= 1")
    geom = find_extrema(dist)
    seq = build_sequence(geom, (0.0, 0.0), truncation_tol=args.tol, imin=2)
    man = RunManifest(
        "harmonic-table",
        args.model,
        {"imax": args.imax, "jmax": args.jmax, "tol": args.tol,
         "bounds": args.bounds},
    )
    header = ["i"] + [str(j) for j in range(1, args.jmax + 1)]
    if args.bounds:
        header.append("tail_bound")
    body = [",".join(header)]
    for i in range(1, args.imax + 1):
        vals = [harmonic_eval(seq, i, j) for j in range(1, args.jmax + 1)]
        row = [str(i)] + [_fmt(v.value) for v in vals]
        if args.bounds:
            row.append(_fmt(max(v.tail_bound for v in vals)))
        body.append(",".join(row))
    _emit(args, man, body)
    return 0


# ------------------------------------------------------- boundary-harmonic


def cmd_boundary_harmonic(args) -> int:
    dist = _load_valid_model(args.model)
    if args.i < 1 or args.j < 1:
        raise ValueError("coordinates must be >= 1")
    geom = find_extrema(dist)
    v = boundary_harmonic(geom, args.i, args.j, tol=args.tol)
    man = RunManifest(
        "boundary-harmonic", args.model,
        {"i": args.i, "j": args.j, "tol": args.tol},
    )
    _emit(args, man, [f"boundary_harmonic: {_fmt(v)}"])
    return 0


# ---------------------------------------------------------------- sequence


def cmd_sequence(args) -> int:
    dist = _load_valid_model(args.model)
    params = compute_params(dist)
    if args.nmin > args.nmax:
        raise ValueError("nmin must be <= nmax")
    man = RunManifest(
        "sequence", args.model,
        {"s": args.s, "nmin": args.nmin, "nmax": args.nmax},
    )
    body = ["n,alpha_n,beta_n,inv_alpha_n,inv_beta_n"]
    for n in range(args.nmin, args.nmax + 1):
        a_n, b_n = sequence_at(params, args.s, n)
        body.append(
            ",".join([str(n), _fmt(a_n), _fmt(b_n), _fmt(1.0 / a_n), _fmt(1.0 / b_n)])
        )
    _emit(args, man, body)
    return 0


# ---------------------------------------------------------------- simulate


def _sim_rows(quantity: str, est: mc.SimEstimate, seed: int) -> list[str]:
    return [
        "quantity,value,std_error,n_paths,horizon,seed",
        ",".join(
            [
                quantity,
                _fmt(est.mean),
                _fmt(est.std_error),
                str(est.n_paths),
                str(est.horizon),
                str(seed),
            ]
        ),
    ]


def cmd_simulate(args) -> int:
    dist = _load_valid_model(args.model)
    cfg = mc.SimConfig(seed=args.seed, n_paths=args.n_paths, horizon=args.horizon)
    if args.quantity == "escape":
        params = {"i": args.coords[0], "j": args.coords[1],
                  "n_paths": args.n_paths, "horizon": args.horizon}
        est = mc.estimate_escape(dist, tuple(args.coords), cfg)
    elif args.quantity == "survival":
        params = {"height": args.coords[0],
                  "n_paths": args.n_paths, "horizon": args.horizon}
        est = mc.estimate_halfplane_survival(dist, args.coords[0], cfg)
    else:
        x, y = tuple(args.coords[:2]), tuple(args.coords[2:])
        params = {"x": f"({x[0]} {x[1]})", "y": f"({y[0]} {y[1]})",
                  "n_paths": args.n_paths, "horizon": args.horizon}
        if args.twist_u is not None:
            if args.quantity == "martin":
                raise ValueError("martin ratios pick their own twist; drop --twist-u")
            u1, u2 = args.twist_u
            nrm = math.hypot(u1, u2)
            if nrm <= 0:
                raise ValueError("twist direction must be nonzero")
            twist = cramer_transform(find_extrema(dist), (u1 / nrm, u2 / nrm))
            cfg = mc.SimConfig(seed=args.seed, n_paths=args.n_paths,
                               horizon=args.horizon, twist=twist)
            params["twist_u"] = f"({_fmt(u1)} {_fmt(u2)})"
        if args.quantity == "green":
            est = mc.estimate_green(dist, x, y, cfg)
        else:
            est = mc.martin_kernel_estimate(dist, x, y, cfg)
    man = RunManifest("simulate", args.model, params, seed=args.seed)
    _emit(args, man, _sim_rows(args.quantity, est, args.seed))
    return 0


# --------------------------------------------------------------- green-scan


def cmd_green_scan(args) -> int:
    dist = _load_valid_model(args.model)
    radii = [float(r) for r in args.radii.split(",") if r.strip()]
    if not radii:
        raise ValueError("at least one radius is required")
    cfg = mc.SimConfig(seed=args.seed, n_paths=args.n_paths, horizon=args.horizon)
    pts = mc.green_direction_scan(dist, (args.x[0], args.x[1]), tuple(args.u), radii, cfg)
    man = RunManifest(
        "green-scan", args.model,
        {"x": f"({args.x[0]} {args.x[1]})",
         "u": f"({_fmt(args.u[0])} {_fmt(args.u[1])})",
         "radii": args.radii, "n_paths": args.n_paths,
         "horizon": args.horizon if args.horizon is not None else "auto"},
        seed=args.seed,
    )
    body = ["quantity,value,std_error,n_paths,horizon,seed"]
    for p in pts:
        horizon = args.horizon if args.horizon is not None else mc._default_horizon(
            (args.x[0], args.x[1]), p.y
        )
        body.append(
            ",".join(
                [
                    f"scaled_green_{p.y[0]}_{p.y[1]}",
                    _fmt(p.value),
                    _fmt(p.std_error),
                    str(args.n_paths),
                    str(horizon),
                    str(args.seed),
                ]
            )
        )
    _emit(args, man, body)
    return 0


# ----------------------------------------------------------------- compare


def cmd_compare(args) -> int:
    dist = _load_valid_model(args.model)
    if args.imin < 0 or args.jmin < 0:
        raise ValueError("imin and jmin must be >= 0")
    if args.imax < args.imin or args.jmax < args.jmin:
        raise ValueError("imax/jmax must be >= imin/jmin")
    geom = find_extrema(dist)
    seq = build_sequence(
        geom, (0.0, 0.0), truncation_tol=args.tol,
        imin=max(2, args.imin + args.jmin),
    )
    man = RunManifest(
        "compare", args.model,
        {"imin": args.imin, "imax": args.imax, "jmin": args.jmin,
         "jmax": args.jmax, "n_paths": args.n_paths, "horizon": args.horizon,
         "tol": args.tol},
        seed=args.seed,
    )
    body = ["i,j,series,tail_bound,mc_mean,mc_std_error,z"]
    for i in range(args.imin, args.imax + 1):
        for j in range(args.jmin, args.jmax + 1):
            if i == 0 or j == 0:
                hv = HarmonicValue(0.0, 0.0, 0)
                est = mc.SimEstimate(0.0, 0.0, args.n_paths, args.horizon, 0.0)
            else:
                hv = harmonic_eval(seq, i, j)
                est = mc.estimate_escape(
                    dist, (i, j),
                    mc.SimConfig(seed=args.seed, n_paths=args.n_paths,
                                 horizon=args.horizon),
                )
            z = 0.0 if est.std_error == 0.0 else (est.mean - hv.value) / est.std_error
            body.append(
                ",".join(
                    [str(i), str(j), _fmt(hv.value), _fmt(hv.tail_bound),
                     _fmt(est.mean), _fmt(est.std_error), _fmt(z)]
                )
            )
    _emit(args, man, body)
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cornerwalk",
        description="Harmonic functions and escape probabilities for "
        "singular quarter-plane random walks.",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    def add(name, func, with_out=True):
        q = sub.add_parser(name)
        q.add_argument("model", help="model file (lines: di dj prob)")
        if with_out:
            q.add_argument("-o", "--out", help="write output to this file")
        q.set_defaults(func=func)
        return q

    add("validate", cmd_validate)

    q = add("curve-dump", cmd_curve_dump)
    q.add_argument("--lo", type=float, default=None,
                   help="grid start (default: leftmost branch abscissa)")
    q.add_argument("--hi", type=float, default=0.0)
    q.add_argument("--step", type=float, default=None)

    q = add("escape", cmd_escape)
    q.add_argument("i", type=int)
    q.add_argument("j", type=int)
    q.add_argument("--tol", type=float, default=1e-14)
    q.add_argument("--mc-check", nargs=3, type=int, default=None,
                   metavar=("N_PATHS", "HORIZON", "SEED"))

    q = add("harmonic-table", cmd_harmonic_table)
    q.add_argument("--imax", type=int, default=10)
    q.add_argument("--jmax", type=int, default=10)
    q.add_argument("--tol", type=float, default=1e-14)
    q.add_argument("--bounds", action="store_true",
                   help="append the per-row max tail bound as a last column")

    q = add("boundary-harmonic", cmd_boundary_harmonic)
    q.add_argument("i", type=int)
    q.add_argument("j", type=int)
    q.add_argument("--tol", type=float, default=1e-12)

    q = add("sequence", cmd_sequence)
    q.add_argument("--s", type=float, default=1.0,
                   help="uniformization coordinate in (1/rho, 1]")
    q.add_argument("--nmin", type=int, default=-6)
    q.add_argument("--nmax", type=int, default=6)

    q = add("simulate", cmd_simulate)
    q.add_argument("quantity", choices=["escape", "survival", "green", "martin"])
    q.add_argument("coords", type=int, nargs="+",
                   help="escape: I J; survival: HEIGHT; green/martin: XI XJ YI YJ")
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--n-paths", type=int, required=True)
    q.add_argument("--horizon", type=int, default=None)
    q.add_argument("--twist-u", nargs=2, type=float, default=None,
                   metavar=("U1", "U2"))

    q = add("green-scan", cmd_green_scan)
    q.add_argument("x", type=int, nargs=2, metavar=("XI", "XJ"))
    q.add_argument("--u", nargs=2, type=float, required=True, metavar=("U1", "U2"))
    q.add_argument("--radii", required=True, help="comma-separated radii")
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--n-paths", type=int, required=True)
    q.add_argument("--horizon", type=int, default=None)

    q = add("compare", cmd_compare)
    q.add_argument("imax", type=int)
    q.add_argument("jmax", type=int)
    q.add_argument("--imin", type=int, default=1)
    q.add_argument("--jmin", type=int, default=1)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--n-paths", type=int, default=20000)
    q.add_argument("--horizon", type=int, default=2000)
    q.add_argument("--tol", type=float, default=1e-14)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    # simulate's coord arity depends on the quantity; argparse can't express it
    if getattr(args, "subcommand", None) == "simulate":
        need = {"escape": 2, "survival": 1, "green": 4, "martin": 4}[args.quantity]
        if len(args.coords) != need:
            parser.error(f"{args.quantity} takes {need} coordinate(s)")

    try:
        return args.func(args)
    except (ModelFileError, InvalidModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, ZeroDivisionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
