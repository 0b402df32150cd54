"""Command-line entry point: ``tikhonov-nmf <command> ...``.

Exit codes: 0 on success or convergence, 2 when an iteration budget ran out
(results are still written), 1 on input or usage errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
from dotenv import find_dotenv, load_dotenv

from .config import (
    DEFAULT_DELTA,
    DEFAULT_GAMMA,
    DEFAULT_LAMBDA0,
    DEFAULT_LAMBDA_EPS,
    DEFAULT_LAMBDA_GAMMA,
    DEFAULT_MAX_ITER,
    DEFAULT_SIGMA,
    DEFAULT_TOL,
    LambdaConfig,
    Settings,
    load_settings,
)
from .diagnostics import export_trace_csv
from .errors import TikhonovNMFError
from .factorizer import TikhonovNMF
from .matrix_core import RegParams
from .matrix_io import MatrixFileFormat, read_matrix, read_vector, write_matrix, write_vector
from .nmf_engine import FactorPair
from .tikhonov_ls import LinearInverseProblem, iterate_lambda, lambda_grid, lcurve_sweep

logger = logging.getLogger("tikhonov_nmf.cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for max_iter here
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _zeros_or_vector(value: str, length: int, flag: str) -> np.ndarray:
    if value == "zeros":
        return np.zeros(length)
    values = read_vector(value)
    if values.shape != (length,):
        raise UsageError(f"{flag}: expected {length} values, got {values.size}")
    return values


def _format_float(value: float) -> str:
    return format(float(value), ".17g")


def cmd_factorize(args: argparse.Namespace, settings: Settings) -> int:
    a = read_matrix(args.input)
    m, n = a.shape

    if (args.init_b is None) != (args.init_c is None):
        raise UsageError("--init-b and --init-c must be given together")
    init = None
    if args.init_b is not None:
        init = FactorPair(read_matrix(args.init_b), read_matrix(args.init_c))

    gamma_b = read_vector(args.gamma_b) if args.gamma_b else args.gamma
    gamma_c = read_vector(args.gamma_c) if args.gamma_c else args.gamma
    init_params = RegParams(
        _zeros_or_vector(args.beta0, m, "--beta0"),
        _zeros_or_vector(args.alpha0, n, "--alpha0"),
    )

    model = TikhonovNMF(
        rank=args.rank,
        variant=args.variant,
        sigma=args.sigma,
        delta_b=args.delta_b,
        delta_c=args.delta_c,
        tol=args.tol,
        max_iter=args.max_iter,
        gamma_b=gamma_b,
        gamma_c=gamma_c,
        update_regularization=not args.freeze_regularization,
        seed=args.seed if args.seed is not None else settings.default_seed,
        objective_form=args.objective_form,
    )
    result = model.fit(a, init=init, init_params=init_params)

    write_matrix(result.factors.b, args.out_b, args.format)
    write_matrix(result.factors.c, args.out_c, args.format)
    export_trace_csv(result.traces, args.trace)
    if args.beta_out:
        write_vector(result.params.beta, args.beta_out)
    if args.alpha_out:
        write_vector(result.params.alpha, args.alpha_out)

    last = result.traces[-1]
    print(f"termination={result.termination.value} iterations={result.iterations}")
    print(f"objective={_format_float(last.objective_combined)}")
    print(f"residual_norm_sq={_format_float(last.residual_norm_sq)}")
    print(f"max_slack_b={_format_float(last.max_slack_b)} max_slack_c={_format_float(last.max_slack_c)}")
    return EXIT_OK if result.converged else EXIT_BUDGET


def _load_problem(args: argparse.Namespace) -> LinearInverseProblem:
    return LinearInverseProblem(read_matrix(args.design), read_vector(args.observation))


def cmd_tikhonov_solve(args: argparse.Namespace, settings: Settings) -> int:
    problem = _load_problem(args)
    config = LambdaConfig(
        gamma=args.gamma, lambda0=args.lambda0, eps=args.eps, max_iter=args.max_iter
    )
    result = iterate_lambda(problem, config)

    write_vector(result.x, args.out)
    if args.lambda_trace:
        with open(args.lambda_trace, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["step", "lambda"])
            for step, lam in enumerate(result.lambda_history):
                writer.writerow([step, _format_float(lam)])

    print(f"status={result.status.value} iterations={result.iterations}")
    print(f"lambda={_format_float(result.lam)}")
    return EXIT_OK if result.converged else EXIT_BUDGET


def cmd_lcurve_sweep(args: argparse.Namespace, settings: Settings) -> int:
    problem = _load_problem(args)
    grid = lambda_grid(args.lambda_min, args.lambda_max, args.points, args.spacing)
    workers = args.workers if args.workers is not None else settings.workers
    points = lcurve_sweep(problem, grid, max_workers=workers)

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lambda", "residual_norm_sq", "solution_norm_sq"])
        for point in points:
            writer.writerow(
                [
                    _format_float(point.lam),
                    _format_float(point.residual_norm_sq),
                    _format_float(point.solution_norm_sq),
                ]
            )
    print(f"wrote {len(points)} L-curve points to {args.out}")
    return EXIT_OK


def cmd_check_kkt(args: argparse.Namespace, settings: Settings) -> int:
    a = read_matrix(args.input)
    m, n = a.shape
    factors = FactorPair(read_matrix(args.b), read_matrix(args.c))
    params = RegParams(
        _zeros_or_vector(args.beta or "zeros", m, "--beta"),
        _zeros_or_vector(args.alpha or "zeros", n, "--alpha"),
    )
    kkt = TikhonovNMF.check(a, factors, params)
    print(f"max_slack_b={_format_float(kkt.max_slack_b)}")
    print(f"max_slack_c={_format_float(kkt.max_slack_c)}")
    print(f"neg_grad_at_zero_b={kkt.neg_grad_at_zero_b}")
    print(f"neg_grad_at_zero_c={kkt.neg_grad_at_zero_c}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="tikhonov-nmf",
        description="Tikhonov-regularized NMF with L-curve parameter selection.",
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    defaults = argparse.ArgumentDefaultsHelpFormatter

    fac = commands.add_parser(
        "factorize", help="factorize a nonnegative matrix", formatter_class=defaults
    )
    fac.add_argument("--input", required=True, type=Path, help="matrix A (CSV or Matrix Market)")
    fac.add_argument("--rank", required=True, type=int)
    fac.add_argument(
        "--variant",
        choices=["additive", "multiplicative"],
        default="additive",
        help="update rule",
    )
    fac.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER, help="iteration budget")
    fac.add_argument("--tol", type=float, default=DEFAULT_TOL, help="KKT stopping tolerance")
    fac.add_argument("--sigma", type=float, default=DEFAULT_SIGMA, help="zero-lock escape floor")
    fac.add_argument("--delta-b", type=float, default=DEFAULT_DELTA, help="denominator guard for B")
    fac.add_argument("--delta-c", type=float, default=DEFAULT_DELTA, help="denominator guard for C")
    fac.add_argument("--gamma", type=float, default=DEFAULT_GAMMA, help="slope for every row and column")
    fac.add_argument("--gamma-b", metavar="PATH", help="per-row slopes, overrides --gamma for B")
    fac.add_argument("--gamma-c", metavar="PATH", help="per-column slopes, overrides --gamma for C")
    fac.add_argument("--beta0", default="zeros", metavar="zeros|PATH", help="initial row weights")
    fac.add_argument("--alpha0", default="zeros", metavar="zeros|PATH", help="initial column weights")
    fac.add_argument("--init", choices=["random"], default="random", help="initial factors")
    fac.add_argument("--init-b", metavar="PATH", help="initial B, with --init-c")
    fac.add_argument("--init-c", metavar="PATH", help="initial C, with --init-b")
    fac.add_argument("--seed", type=int, help="defaults to TIKHONOV_NMF_SEED")
    fac.add_argument("--out-b", required=True, type=Path)
    fac.add_argument("--out-c", required=True, type=Path)
    fac.add_argument("--trace", required=True, type=Path)
    fac.add_argument("--beta-out", type=Path)
    fac.add_argument("--alpha-out", type=Path)
    fac.add_argument(
        "--format",
        choices=[f.value for f in MatrixFileFormat],
        default=MatrixFileFormat.CSV.value,
        help="factor file format",
    )
    fac.add_argument(
        "--objective-form",
        choices=["direct", "trace"],
        default="direct",
        help="objective evaluation used in the trace",
    )
    fac.add_argument(
        "--freeze-regularization",
        action="store_true",
        help="keep the initial beta/alpha for the whole run",
    )
    fac.set_defaults(handler=cmd_factorize)

    solve = commands.add_parser(
        "tikhonov-solve",
        help="Tikhonov least squares with iterative lambda selection",
        formatter_class=defaults,
    )
    solve.add_argument("--design", required=True, type=Path)
    solve.add_argument("--observation", required=True, type=Path)
    solve.add_argument("--gamma", type=float, default=DEFAULT_LAMBDA_GAMMA, help="L-corner slope")
    solve.add_argument("--lambda0", type=float, default=DEFAULT_LAMBDA0, help="starting lambda")
    solve.add_argument("--eps", type=float, default=DEFAULT_LAMBDA_EPS, help="relative change stop")
    solve.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER, help="iteration budget")
    solve.add_argument("--out", required=True, type=Path)
    solve.add_argument("--lambda-trace", type=Path)
    solve.set_defaults(handler=cmd_tikhonov_solve)

    sweep = commands.add_parser(
        "lcurve-sweep", help="tabulate the L-curve over a lambda grid", formatter_class=defaults
    )
    sweep.add_argument("--design", required=True, type=Path)
    sweep.add_argument("--observation", required=True, type=Path)
    sweep.add_argument("--lambda-min", required=True, type=float)
    sweep.add_argument("--lambda-max", required=True, type=float)
    sweep.add_argument("--points", required=True, type=int)
    sweep.add_argument("--spacing", choices=["log", "linear"], default="log", help="grid spacing")
    sweep.add_argument("--workers", type=int, help="defaults to TIKHONOV_NMF_WORKERS")
    sweep.add_argument("--out", required=True, type=Path)
    sweep.set_defaults(handler=cmd_lcurve_sweep)

    kkt = commands.add_parser(
        "check-kkt", help="report KKT residuals of given factors", formatter_class=defaults
    )
    kkt.add_argument("--input", required=True, type=Path)
    kkt.add_argument("--b", required=True, type=Path)
    kkt.add_argument("--c", required=True, type=Path)
    kkt.add_argument("--beta", metavar="PATH", help="row weights, zeros when omitted")
    kkt.add_argument("--alpha", metavar="PATH", help="column weights, zeros when omitted")
    kkt.set_defaults(handler=cmd_check_kkt)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    load_dotenv(find_dotenv(usecwd=True))
    try:
        settings = load_settings()
    except ValueError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        return args.handler(args, settings)
    except UsageError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (TikhonovNMFError, ValueError, OSError) as exc:
        logger.debug("command %s failed", args.command, exc_info=True)
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
