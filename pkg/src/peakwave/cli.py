"""Command line entry point: ``peakwave <subcommand> ...``.

Exit status: 0 success, 1 computation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import replace
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .bifurcation import asymptotic_seed, speed_coefficient
from .continuation import ContinuationConfig, continue_branch, extrapolate_speed
from .diagnostics import check_apriori, crest_regularity_fit, monotone_margin
from .kernel import (GAMMA_CUTOFF, KernelSpec, kernel_closed_form, kernel_gamma_integral,
                     pointwise_tail_bound, series_values)
from .ostrovsky import check_speed_window, distance_to_peaked, verify_suite
from .solver import NewtonConfig, SolverError, newton_solve
from .store import RunManifest, StoreError, atomic_write_text, load_branch, save_branch

log = logging.getLogger("peakwave")

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class ComputationFailure(RuntimeError):
    pass


# ---------------------------------------------------------------- parsing

def read_config(path: str) -> dict:
    """Line-oriented ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _power_of_two(s: str) -> int:
    m = int(s)
    if m < 16 or m & (m - 1):
        raise argparse.ArgumentTypeError("mode counts must be powers of two >= 16")
    return m


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="peakwave", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"peakwave {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="subcommand")

    def common(sp):
        sp.add_argument("--config", help="key = value file; flags take precedence")
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")

    sp = sub.add_parser("kernel", help="tabulate the convolution kernel as CSV")
    common(sp)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--terms", type=_positive_int, default=10_000)
    sp.add_argument("--grid", type=_positive_int, default=512)
    sp.add_argument("--method", choices=("series", "closed", "gamma", "all"), default="series")
    sp.add_argument("--out", help="CSV path (default: stdout)")

    sp = sub.add_parser("solve", help="solve for one wave")
    common(sp)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--k", type=_positive_int, default=1)
    sp.add_argument("--modes", type=_power_of_two, default=256)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--mu", type=float)
    g.add_argument("--eps", type=_positive_float)
    g.add_argument("--height", type=_positive_float)
    sp.add_argument("--tol", type=_positive_float, default=1e-11)
    sp.add_argument("--max-iters", type=_positive_int, default=40)
    sp.add_argument("--out", required=True, help="profile CSV")

    sp = sub.add_parser("continue", help="continue a branch towards the highest wave")
    common(sp)
    sp.add_argument("--r", type=float, nargs="+", required=True)
    sp.add_argument("--k", type=_positive_int, nargs="+", default=[1])
    sp.add_argument("--modes", type=_power_of_two, default=256)
    sp.add_argument("--max-modes", type=_power_of_two, default=4096)
    sp.add_argument("--height-floor", type=_positive_float, default=1e-3)
    sp.add_argument("--steps", type=_positive_int, default=400)
    sp.add_argument("--eps", type=_positive_float)
    sp.add_argument("--tol", type=_positive_float, default=1e-11)
    sp.add_argument("--jobs", type=_positive_int, default=1)
    sp.add_argument("--out", required=True,
                    help="branch JSONL; with several (r, k) jobs use {r} and {k} placeholders")

    sp = sub.add_parser("diagnose", help="a priori checks on a stored branch")
    common(sp)
    sp.add_argument("branch")
    sp.add_argument("--out", default="report.json")

    sp = sub.add_parser("ostrovsky", help="exact-solution checks for r = 2")
    common(sp)
    sp.add_argument("action", choices=("verify",))
    sp.add_argument("--modes", type=_power_of_two, nargs=2, default=[1024, 4096])
    sp.add_argument("--out", default="report.json")

    sp = sub.add_parser("export", help="convert a branch file to plot-ready CSVs")
    common(sp)
    sp.add_argument("branch")
    sp.add_argument("--outdir", required=True)
    return p


def parse_args(argv) -> tuple[argparse.ArgumentParser, argparse.Namespace]:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = read_config(args.config)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        dests = {a.dest for a in subparser._actions}
        unknown = sorted(set(values) - dests)
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        # string defaults go through each flag's type conversion on re-parse
        subparser.set_defaults(**values)
        args = parser.parse_args(argv)
    return parser, args


def _check_r(parser, rs):
    for r in np.atleast_1d(rs):
        if not r > 1:
            parser.error("r must exceed 1")


def _check_out(parser, path, force):
    if path and os.path.exists(path) and not force:
        parser.error(f"{path} exists; pass --force to overwrite")


def validate(parser, args):
    """Reject bad inputs before any computation starts."""
    cmd = args.command
    if cmd in ("kernel", "solve", "continue"):
        _check_r(parser, args.r)
    if cmd == "kernel" and args.method in ("closed", "all"):
        r = args.r
        if not (float(r).is_integer() and int(r) % 2 == 0 and 2 <= r <= 12):
            parser.error("closed form needs an even integer r in [2, 12]")
    if cmd == "solve":
        if args.mu is None and args.eps is None and args.height is None:
            parser.error("one of --mu, --eps, --height is required")
        if args.eps is not None and args.eps > 0.1:
            parser.error("--eps must not exceed 0.1")
        if 4 * args.k > args.modes // 2:
            parser.error("too few modes for this k")
    if cmd == "continue":
        if args.max_modes < args.modes:
            parser.error("--max-modes must be >= --modes")
        jobs = [(r, k) for r in args.r for k in args.k]
        if len(jobs) > 1 and not ("{r}" in args.out and "{k}" in args.out):
            parser.error("several (r, k) jobs need {r} and {k} in --out")
        for r, k in jobs:
            _check_out(parser, _job_path(args.out, r, k), args.force)
        return
    if cmd in ("kernel", "solve", "diagnose", "ostrovsky"):
        _check_out(parser, args.out, args.force)
    if cmd in ("diagnose", "export") and not os.path.isfile(args.branch):
        parser.error(f"no such branch file: {args.branch}")


# ------------------------------------------------------------- commands

def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def cmd_kernel(args) -> int:
    spec = KernelSpec(args.r, series_cap=max(16, args.terms))
    x = -np.pi + 2 * np.pi * np.arange(args.grid) / args.grid
    methods = ("series", "closed", "gamma") if args.method == "all" else (args.method,)
    rows = []
    for method in methods:
        if method == "series":
            vals = series_values(spec, x, args.terms)
            bounds = pointwise_tail_bound(args.r, args.terms, x)
            rows += [(float(a), float(v), method, float(b)) for a, v, b in zip(x, vals, bounds)]
        elif method == "closed":
            vals = kernel_closed_form(args.r, x)
            rows += [(float(a), float(v), method, 0.0) for a, v in zip(x, vals)]
        else:
            skipped = 0
            for a in x:
                if abs(a) < GAMMA_CUTOFF:
                    skipped += 1
                    continue
                v, e = kernel_gamma_integral(spec, a, return_error=True)
                rows.append((float(a), float(v), method, float(e)))
            if skipped:
                log.warning("gamma route skipped %d points with |x| < pi/64", skipped)
    text = _csv_text(("x", "value", "method", "error_bound"), rows)
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _solve_seed(args, spec):
    r, k = args.r, args.k
    if args.height is not None:
        ccfg = ContinuationConfig(modes=args.modes, max_modes=max(args.modes, 4096),
                                  height_floor=args.height, tol_residual=args.tol,
                                  max_iters=args.max_iters)
        branch = continue_branch(r, k, ccfg, spec)
        if branch.termination != "height_floor_reached":
            raise ComputationFailure(f"continuation stopped: {branch.termination} "
                                     f"{branch.message}")
        return branch.points[-1].solution
    if args.eps is not None:
        cfg = NewtonConfig(args.tol, args.max_iters, constraint="fixed_first_coeff",
                           value=args.eps)
        return newton_solve(asymptotic_seed(r, k, args.eps, args.modes), cfg, spec)
    mu_star = float(k) ** -r
    if args.mu <= mu_star:
        raise ComputationFailure(f"no nontrivial wave expected at mu <= mu*_k = {mu_star:.6g}")
    cfg = NewtonConfig(args.tol, args.max_iters, constraint="fixed_mu")
    eps = float(np.sqrt((args.mu - mu_star) / speed_coefficient(r, k)))
    if eps <= 0.05 * float(k) ** (-r):
        guess = asymptotic_seed(r, k, eps, args.modes)
        return newton_solve(replace(guess, mu=args.mu), cfg, spec)
    # far from bifurcation: walk the branch in height, start from the first point past mu
    ccfg = ContinuationConfig(modes=args.modes, max_modes=max(args.modes, 4096),
                              height_floor=1e-3, tol_residual=args.tol)
    branch = continue_branch(r, k, ccfg, spec)
    past = [p for p in branch.points if p.mu >= args.mu]
    if not past:
        raise ComputationFailure(f"mu={args.mu} lies beyond the computed branch "
                                 f"(largest speed {branch.speeds().max():.10g})")
    return newton_solve(replace(past[0].solution, mu=args.mu), cfg, spec)


def cmd_solve(args) -> int:
    spec = KernelSpec(args.r)
    sol = _solve_seed(args, spec)
    if sol.phi.crest() >= sol.mu:
        raise ComputationFailure("solution violates max phi < mu")
    log.info("mu=%.12g height=%.6g residual=%.3e", sol.mu, sol.height, sol.residual_norm)
    rows = [(float(a), float(v)) for a, v in zip(sol.phi.x, sol.phi.values)]
    header = ("x", "phi")
    text = (f"# r={args.r!r} k={args.k} mu={sol.mu!r} residual={sol.residual_norm:.3e}\n"
            + _csv_text(header, rows))
    atomic_write_text(args.out, text)
    return 0


def _job_path(template: str, r: float, k: int) -> str:
    return template.replace("{r}", f"{r:g}").replace("{k}", str(k))


def run_continuation(r, k, ccfg: ContinuationConfig):
    """One (r, k) job; returns the branch with crest fits attached."""
    branch = continue_branch(r, k, ccfg)
    for p in branch.points:
        try:
            p.alpha_fit = crest_regularity_fit(p.solution).alpha
        except ValueError:
            p.alpha_fit = None
    return branch


def cmd_continue(args) -> int:
    ccfg = ContinuationConfig(modes=args.modes, max_modes=args.max_modes,
                              height_floor=args.height_floor, max_steps=args.steps,
                              eps=args.eps, tol_residual=args.tol)
    jobs = [(r, k) for r in args.r for k in args.k]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(args.jobs, len(jobs))) as ex:
            branches = list(ex.map(run_continuation, *zip(*jobs), [ccfg] * len(jobs)))
    else:
        branches = [run_continuation(r, k, ccfg) for r, k in jobs]
    status = 0
    for (r, k), branch in zip(jobs, branches):
        seed_eps = ccfg.eps if ccfg.eps is not None else 0.02 * float(k) ** (-r)
        manifest = RunManifest(r=r, k=k, modes=ccfg.modes,
                               tolerances={"residual": ccfg.tol_residual,
                                           "tail": ccfg.tail_tol},
                               seed_eps=seed_eps, height_floor=ccfg.height_floor,
                               termination=branch.termination)
        save_branch(branch, manifest, _job_path(args.out, r, k), force=True)
        if branch.termination != "height_floor_reached":
            log.error("r=%g k=%d: %s %s", r, k, branch.termination, branch.message)
            status = 1
        else:
            log.info("r=%g k=%d: %d points, terminal mu=%.10g", r, k, len(branch.points),
                     branch.points[-1].mu)
    return status


def diagnose_branch(branch) -> dict:
    spec = KernelSpec(branch.r)
    points, violated = [], False
    for i, p in enumerate(branch.points):
        rep = check_apriori(p.solution, spec)
        try:
            rep.regularity = crest_regularity_fit(p.solution)
        except ValueError as exc:
            rep.info["regularity_error"] = str(exc)
        d = rep.to_dict()
        d.update(index=i, s=p.s, mu=p.mu, height=p.height,
                 max_phi_below_mu=bool(p.max_phi < p.mu),
                 monotone_margin=monotone_margin(p.solution))
        violated |= not rep.satisfied
        points.append(d)
    report = {"r": branch.r, "k": branch.k, "n_points": len(points),
              "all_satisfied": not violated, "points": points}
    if len(branch.points) >= 2:
        report["extrapolated_speed"] = extrapolate_speed(branch, min(3, len(branch.points)))
    if branch.r == 2 and branch.points:
        report["speed_window"] = check_speed_window(branch, report.get("extrapolated_speed"))
        if branch.k == 1:
            report["terminal_distance_to_peaked"] = distance_to_peaked(branch.points[-1].solution)
    return report


def _to_json(obj) -> str:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"cannot serialise {type(o).__name__}")
    return json.dumps(obj, indent=2, default=default) + "\n"


def cmd_diagnose(args) -> int:
    branch, _ = load_branch(args.branch)
    report = diagnose_branch(branch)
    atomic_write_text(args.out, _to_json(report))
    return 0 if report["all_satisfied"] else 1


def cmd_ostrovsky(args) -> int:
    report = verify_suite(tuple(args.modes))
    atomic_write_text(args.out, _to_json(report))
    return 0 if report["passed"] else 1


def cmd_export(args) -> int:
    branch, _ = load_branch(args.branch)
    os.makedirs(args.outdir, exist_ok=True)
    coeff_rows = []
    for i, p in enumerate(branch.points):
        sol = p.solution
        path = os.path.join(args.outdir, f"profile_{i:04d}.csv")
        _check_target(path, args.force)
        rows = [(float(a), float(v)) for a, v in zip(sol.phi.x, sol.phi.values)]
        atomic_write_text(path, _csv_text(("x", "phi"), rows))
        coeff_rows += [(i, j + 1, float(c)) for j, c in enumerate(sol.phi.cos_coeffs)]
    summary = [(i, p.s, p.mu, p.height, p.solution.modes) for i, p in enumerate(branch.points)]
    for name, header, rows in (("coefficients.csv", ("point", "mode", "coeff"), coeff_rows),
                               ("branch.csv", ("point", "s", "mu", "height", "modes"), summary)):
        path = os.path.join(args.outdir, name)
        _check_target(path, args.force)
        atomic_write_text(path, _csv_text(header, rows))
    return 0


def _check_target(path, force):
    if os.path.exists(path) and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")


COMMANDS = {"kernel": cmd_kernel, "solve": cmd_solve, "continue": cmd_continue,
            "diagnose": cmd_diagnose, "ostrovsky": cmd_ostrovsky, "export": cmd_export}


def configure_logging():
    level = os.environ.get("PEAKWAVE_LOG", "error").lower()
    if level not in LOG_LEVELS:
        print(f"peakwave: PEAKWAVE_LOG must be one of {', '.join(LOG_LEVELS)}", file=sys.stderr)
        return False
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)
    return True


def main(argv=None) -> int:
    if not configure_logging():
        return 2
    try:
        parser, args = parse_args(argv)
        validate(parser, args)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (SolverError, ComputationFailure, StoreError, OSError, ValueError) as exc:
        print(f"peakwave {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
