"""Command-line interface.

Subcommands: validate, solve-rho, constants, bounds, certify, simulate,
oracle, converge, report.  Exit codes: 0 success, 1 I/O or configuration
error, 2 validation failure, 3 solver failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import adjustment, oracle
from .config import load_config
from .errors import ConfigError, DrawdownError, InvalidStudy
from .problem import DrawdownProblem
from .simulate import SimConfig, mc_estimate
from .study import (StudySpec, generator_certificates, run_convergence_study,
                    run_report)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="drawdown",
        description="Minimum drawdown-probability toolkit: optimal "
                    "retentions, adjustment coefficients, closed-form "
                    "bounds, Monte Carlo, and the Picard oracle.")
    # global flags are accepted both before and after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="JSON configuration")
    common.add_argument("--out", default=argparse.SUPPRESS,
                        help="write output to this path")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="override the RNG seed")
    ap.add_argument("--config", default=None, help="JSON configuration")
    ap.add_argument("--out", default=None)
    ap.add_argument("--seed", type=int, default=None)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    add_parser("validate", help="check market invariants")

    sp = add_parser("solve-rho", help="adjustment coefficients at one n")
    sp.add_argument("--n", type=float, default=16.0)

    add_parser("constants", help="every convergence constant")

    sp = add_parser("bounds", help="closed-form bounds at one state")
    sp.add_argument("--n", type=float, required=True)
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--m", type=float, required=True)

    sp = add_parser("certify", help="generator certificates on the grid")
    sp.add_argument("--n", type=float, help="scale (default N')")

    sp = add_parser("simulate", help="Monte Carlo drawdown estimate")
    sp.add_argument("--n", type=float, default=1.0)
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--mode", choices=["drawdown", "fixed_ruin"],
                    default="drawdown")
    sp.add_argument("--scheme", choices=["jump_exact", "diffusion_euler"],
                    default="jump_exact")
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--x0", type=float, required=True)
    sp.add_argument("--m0", type=float, required=True)
    sp.add_argument("--barrier-mult", type=float, default=8.0)
    sp.add_argument("--csv", action="store_true",
                    help="emit a sweep CSV row instead of JSON")

    sp = add_parser("oracle", help="Picard fixed-barrier probability")
    sp.add_argument("--m", type=float, required=True)
    sp.add_argument("--retention",
                    choices=["full", "proportional", "cap",
                             "diffusion_optimal", "max_adjust"],
                    help="override the config retention kind")
    sp.add_argument("--q", type=float, help="proportional parameter")
    sp.add_argument("--d", type=float, help="cap parameter")
    sp.add_argument("--tol", type=float, default=1e-7)

    sp = add_parser("converge", help="convergence study over scales")
    sp.add_argument("--n-list", default="4,16,64,256,1024")
    sp.add_argument("--states", default="2,2;1.6,1.6",
                    help="semicolon-separated x,m pairs")
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--escape-barrier", type=float, default=22.5)

    add_parser("report", help="aggregate validation and certificates")
    return ap


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _retention_fragment(args, fragment):
    if getattr(args, "retention", None):
        fragment = {"kind": args.retention}
        if args.retention == "proportional":
            if args.q is None:
                raise ConfigError("--retention proportional needs --q")
            fragment["q"] = args.q
        if args.retention == "cap":
            if args.d is None:
                raise ConfigError("--retention cap needs --d")
            fragment["d"] = args.d
    return fragment


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if getattr(args, "config", None) is None:
        print("error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    if not hasattr(args, "out"):
        args.out = None
    if not hasattr(args, "seed"):
        args.seed = None
    try:
        market, severity, retention_fragment = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    problem = DrawdownProblem(market, severity)
    try:
        return _dispatch(args, problem, retention_fragment)
    except (ConfigError, InvalidStudy) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DrawdownError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def _dispatch(args, problem, retention_fragment):
    p, s = problem.market, problem.severity

    if args.command == "validate":
        report = problem.validate()
        _emit(args, json.dumps(report.as_dict(), indent=2))
        return EXIT_OK if report.passed else EXIT_VALIDATION

    report = problem.validate()
    if not report.passed:
        if args.command == "report":
            _emit(args, json.dumps({"validation": report.as_dict(),
                                    "status": "invalid-market"}, indent=2))
        else:
            print("error: market validation failed: "
                  + "; ".join(c.name for c in report.failures()),
                  file=sys.stderr)
        return EXIT_VALIDATION

    if args.command == "solve-rho":
        rho_D = problem.rho_D
        rho_n = problem.rho_n(args.n)
        rho_n_RD = problem.rho_n_of_RD(args.n)
        out = {
            "n": args.n,
            "rho_D": rho_D,
            "rho_n": rho_n,
            "rho_n_of_RD": rho_n_RD,
            "residuals": {
                "rho_D": adjustment.rho_D_residual(rho_D, p, s),
                "rho_n": adjustment.rho_n_residual(rho_n, args.n, p, s),
                "rho_n_of_RD": adjustment.rho_n_of_R_residual(
                    rho_n_RD, problem.R_D, args.n, p, s),
            },
        }
        _emit(args, json.dumps(out, indent=2))
        return EXIT_OK

    if args.command == "constants":
        _emit(args, json.dumps(problem.constants.as_dict(), indent=2))
        return EXIT_OK

    if args.command == "bounds":
        bundle = problem.bounds(args.x, args.m, args.n)
        _emit(args, json.dumps(bundle.as_dict(), indent=2))
        return EXIT_OK

    if args.command == "certify":
        n = args.n if args.n is not None else float(problem.constants.N_prime)
        cert = generator_certificates(problem, n)
        _emit(args, json.dumps(cert, indent=2))
        return EXIT_OK if cert["pass"] else EXIT_VALIDATION

    if args.command == "simulate":
        R = problem.resolve_retention(retention_fragment, n=args.n)
        cfg = SimConfig(n=args.n, retention=R, x0=args.x0, m0=args.m0,
                        paths=args.paths,
                        seed=args.seed if args.seed is not None else 0,
                        barrier_mode=args.mode, scheme=args.scheme,
                        dt=args.dt, barrier_mult=args.barrier_mult)
        est = mc_estimate(cfg, p, s, rho_D=problem.rho_D)
        if args.csv:
            row = ",".join([repr(float(args.n)), repr(args.x0),
                            repr(args.m0), args.mode, str(args.paths),
                            repr(est.p_hat), repr(est.se),
                            repr(est.truncation_bound)])
            _emit(args, "n,x0,m0,mode,paths,p_hat,se,trunc_bound\n"
                  + row + "\n")
        else:
            _emit(args, json.dumps(est.as_dict(), indent=2))
        return EXIT_OK

    if args.command == "oracle":
        fragment = _retention_fragment(args, retention_fragment)
        R = problem.resolve_retention(fragment, n=1.0)
        grid = oracle.picard_solve(R, p, s, args.m, tol=args.tol)
        lines = ["x,psi"]
        for x, v in zip(grid.x, grid.values):
            lines.append(f"{float(x)!r},{float(v)!r}")
        _emit(args, "\n".join(lines) + "\n")
        return EXIT_OK

    if args.command == "converge":
        n_list = tuple(float(t) for t in args.n_list.split(",") if t != "")
        states = tuple(tuple(float(v) for v in pair.split(","))
                       for pair in args.states.split(";") if pair)
        spec = StudySpec(n_list=n_list, states=states, paths=args.paths,
                         seed=args.seed if args.seed is not None else 20240913,
                         escape_barrier=args.escape_barrier)
        result = run_convergence_study(spec, problem)
        _emit(args, result.csv())
        print(json.dumps(result.summary(), indent=2), file=sys.stderr)
        return EXIT_OK

    if args.command == "report":
        rep = run_report(problem)
        _emit(args, json.dumps(rep, indent=2))
        if rep["status"] == "ok":
            return EXIT_OK
        return EXIT_VALIDATION

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
