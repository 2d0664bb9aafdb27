"""Command-line entry point.

Subcommands: ``estimate``, ``weights``, ``bias-oracle``, ``verify-rate``.

Exit codes: 0 success, 2 invalid flags (one-line diagnostic), 1 runtime
failure such as tilt overflow, quadrature failure or an unwritable path.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .densities import DENSITIES, get_density
from .errors import (
    InvalidConfigError,
    InvalidInputError,
    TiltKDEError,
    UnsupportedDerivativeError,
)
from .estimator import BandwidthRule, EstimatorSpec, estimate
from .kernels import KERNELS, get_kernel
from .outputs import csv_text, read_data_file, report_json, report_rows_csv, report_svg, write_text
from .rate_lab import ERROR_STATISTICS, ExperimentPlan, expectation_quadrature, run_experiment
from .tilt import DEFAULT_CLIP, TILT_MODES, TiltConfig, build_weights, compute_weights, pilot_estimates, tilt_g

HELP_WIDTH = 88


class UsageError(Exception):
    """Flag validation failure; reported as a single line with exit code 2."""


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=HELP_WIDTH, max_help_position=32)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(2)


# ---------------------------------------------------------------------------
# flag parsing helpers
# ---------------------------------------------------------------------------


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _grid(text: str):
    parts = text.split(":")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"grid must look like lo:hi:count, got {text!r}") from None
    if len(parts) != 3 or count < 1 or not hi >= lo or not (math.isfinite(lo) and math.isfinite(hi)):
        raise argparse.ArgumentTypeError(f"grid must look like lo:hi:count with lo <= hi, count >= 1")
    return lo, hi, count


def _add_source(p):
    g = p.add_argument_group("data source (--data, or --density with --n/--seed)")
    g.add_argument("--data", metavar="FILE", help="text file, one value per line, '#' comments")
    g.add_argument("--density", choices=sorted(DENSITIES), help="reference density to sample")
    g.add_argument("--n", type=int, help="sample size drawn from --density")
    g.add_argument("--seed", type=int, default=0, help="64-bit seed for the sampler (default 0)")


def _add_kernel(p, default="epanechnikov"):
    p.add_argument("--kernel", choices=list(KERNELS), default=default, help=f"kernel (default {default})")


def _add_tilt(p, modes=TILT_MODES, default="oracle", pilot=True):
    g = p.add_argument_group("tilt")
    g.add_argument("--tilt", choices=modes, default=default, help=f"tilt source (default {default})")
    g.add_argument("--tilt-c", type=float, help="coefficient of f''/f (default -mu2(K)/2)")
    g.add_argument("--clip", type=float, default=DEFAULT_CLIP, help=f"clip bound for g (default {DEFAULT_CLIP:g})")
    g.add_argument("--weight-policy", choices=("signed", "clamp"), default="signed",
                   help="keep negative weights or clamp and renormalise (default signed)")
    if not pilot:
        return
    g.add_argument("--pilot-h", type=float, help="pilot bandwidth for plugin tilt (default sd * n^(-1/9))")
    g.add_argument("--pilot-kernel", choices=list(KERNELS), default="triweight",
                   help="pilot kernel for plugin tilt (default triweight)")


def _add_bandwidth(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--h", type=float, help="explicit bandwidth")
    g.add_argument("--h-rule", type=float, metavar="C0", help="h = C0 * n^(-1/(2r+1)) (default C0=1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tiltkde", description="Tilted kernel estimation of densities and their derivatives.",
                     formatter_class=_formatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("estimate", help="evaluate the tilted estimate of f^(s) on a grid",
                       formatter_class=_formatter)
    _add_source(p)
    _add_kernel(p)
    p.add_argument("--r", type=int, default=2, help="assumed (even) smoothness of f (default 2)")
    p.add_argument("--s", type=int, default=0, help="derivative order (default 0)")
    _add_bandwidth(p)
    _add_tilt(p)
    p.add_argument("--grid", type=_grid, metavar="LO:HI:COUNT", help="query grid (default covers the data)")
    p.add_argument("--out", metavar="FILE.csv", help="output CSV (default stdout)")

    p = sub.add_parser("weights", help="print the tilted weights for a sample", formatter_class=_formatter)
    _add_source(p)
    _add_kernel(p)
    p.add_argument("--r", type=int, default=2, help="assumed (even) smoothness of f (default 2)")
    _add_bandwidth(p)
    _add_tilt(p)
    p.add_argument("--out", metavar="FILE.csv", help="output CSV (default stdout)")

    p = sub.add_parser("bias-oracle", help="quadrature expectation and bias of the estimator",
                       formatter_class=_formatter)
    p.add_argument("--density", choices=sorted(DENSITIES), default="normal", help="reference density (default normal)")
    _add_kernel(p)
    p.add_argument("--s", type=int, default=0, help="derivative order (default 0)")
    p.add_argument("--x", type=_float_list, default=[0.0, 0.5, 1.0], metavar="X1,X2,...",
                   help="evaluation points (default 0,0.5,1)")
    p.add_argument("--h-grid", type=_float_list, default=[0.2, 0.1, 0.05], metavar="H1,H2,...",
                   help="bandwidths (default 0.2,0.1,0.05)")
    p.add_argument("--tilt", choices=("oracle", "none"), default="oracle", help="tilt source (default oracle)")
    p.add_argument("--tilt-c", type=float, help="coefficient of f''/f (default -mu2(K)/2)")
    p.add_argument("--clip", type=float, default=DEFAULT_CLIP, help=f"clip bound for g (default {DEFAULT_CLIP:g})")
    p.add_argument("--out", metavar="FILE.csv", help="output CSV (default stdout)")

    p = sub.add_parser("verify-rate", help="Monte Carlo check of the convergence rate",
                       formatter_class=_formatter)
    p.add_argument("--density", choices=sorted(DENSITIES), default="normal", help="reference density (default normal)")
    p.add_argument("--r", type=int, default=2, help="assumed (even) smoothness of f (default 2)")
    p.add_argument("--s", type=int, default=0, help="derivative order (default 0)")
    _add_kernel(p)
    p.add_argument("--n-grid", type=_int_list, default=[512, 1024, 2048, 4096, 8192, 16384],
                   metavar="N1,N2,...", help="sample sizes (default 512,...,16384)")
    p.add_argument("--reps", type=int, default=200, help="replications per sample size (default 200)")
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--h-rule", type=float, default=1.0, metavar="C0", help="h = C0 * n^(-1/(2r+1)) (default 1)")
    _add_tilt(p, modes=("oracle", "none"), pilot=False)
    p.add_argument("--eval-points", type=_float_list, default=[0.0, 0.5, 1.0], metavar="X1,X2,...",
                   help="evaluation points (default 0,0.5,1)")
    p.add_argument("--statistic", choices=ERROR_STATISTICS, default="median-abs",
                   help="error statistic across replications (default median-abs)")
    p.add_argument("--tolerance", type=float, default=0.12, help="allowed |fitted - theoretical| (default 0.12)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: CPU count)")
    p.add_argument("--out", metavar="report.json", help="JSON report (default stdout)")
    p.add_argument("--csv", metavar="rows.csv", help="per-(n, x) rows as CSV")
    p.add_argument("--svg", metavar="plot.svg", help="log-log chart")
    return parser


# ---------------------------------------------------------------------------
# validation: everything below raises UsageError before any computation
# ---------------------------------------------------------------------------


@dataclass
class Source:
    sample: np.ndarray
    density: Optional[object]
    label: str


def _source(args) -> Source:
    if args.data is not None and args.density is not None:
        raise UsageError("give either --data or --density, not both")
    if args.data is None and args.density is None:
        raise UsageError("a data source is required: --data FILE or --density NAME --n INT")
    if args.data is not None:
        if args.n is not None:
            raise UsageError("--n only applies with --density")
        try:
            sample = read_data_file(args.data)
        except OSError as exc:
            raise UsageError(f"cannot read {args.data}: {exc.strerror}") from None
        except InvalidInputError as exc:
            raise UsageError(str(exc)) from None
        return Source(np.sort(sample), None, args.data)
    if args.n is None:
        raise UsageError("--density needs --n")
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    density = get_density(args.density)
    return Source(density.sampler(args.seed).sample(args.n), density, args.density)


def _check_derivative(kernel, s, r):
    if s < 0:
        raise UsageError(f"--s must be >= 0, got {s}")
    if s > kernel.smoothness:
        raise UsageError(f"s exceeds kernel smoothness ({kernel.name} supports s <= {kernel.smoothness})")
    if r < 2 or r % 2:
        raise UsageError(f"--r must be an even integer >= 2, got {r}")
    if s > r:
        raise UsageError(f"--s must not exceed --r ({s} > {r})")


def _tilt_config(args, sample: Optional[np.ndarray], have_truth: bool) -> TiltConfig:
    if args.clip is None or not args.clip > 0:
        raise UsageError(f"--clip must be positive, got {args.clip}")
    if args.tilt == "oracle" and not have_truth:
        raise UsageError("oracle tilt needs a reference density; use --tilt plugin or none with --data")
    pilot_h = getattr(args, "pilot_h", None)
    pilot_kernel = getattr(args, "pilot_kernel", "triweight")
    if args.tilt == "plugin":
        if get_kernel(pilot_kernel).smoothness < 2:
            raise UsageError(f"--pilot-kernel {pilot_kernel} cannot estimate f''; use triweight or gaussian")
        if pilot_h is None:
            sd = float(np.std(sample)) if sample is not None and sample.size > 1 else 1.0
            pilot_h = (sd if sd > 0 else 1.0) * sample.size ** (-1.0 / 9.0)
        elif not pilot_h > 0:
            raise UsageError(f"--pilot-h must be positive, got {pilot_h}")
    try:
        return TiltConfig(
            mode=args.tilt,
            lead_constant=args.tilt_c,
            clip=args.clip,
            weight_policy=getattr(args, "weight_policy", "signed"),
            pilot_bandwidth=pilot_h,
            pilot_kernel=pilot_kernel,
        )
    except (InvalidConfigError, UnsupportedDerivativeError) as exc:
        raise UsageError(str(exc)) from None


def _bandwidth(args):
    if args.h is not None:
        if not args.h > 0 or not math.isfinite(args.h):
            raise UsageError(f"--h must be positive, got {args.h}")
        return args.h
    c0 = 1.0 if args.h_rule is None else args.h_rule
    if not c0 > 0:
        raise UsageError(f"--h-rule must be positive, got {c0}")
    return BandwidthRule(c0)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_estimate(args, stdout):
    kernel = get_kernel(args.kernel)
    _check_derivative(kernel, args.s, args.r)
    bandwidth = _bandwidth(args)
    src = _source(args)
    tilt = _tilt_config(args, src.sample, src.density is not None)
    spec = EstimatorSpec(kernel=kernel, r=args.r, s=args.s, bandwidth=bandwidth, tilt=tilt)
    h = spec.bandwidth_for(src.sample.size)
    if args.grid is None:
        pad = 3.0 * h * (kernel.support or 1.0)
        lo, hi, count = float(src.sample[0]) - pad, float(src.sample[-1]) + pad, 201
    else:
        lo, hi, count = args.grid
    queries = np.linspace(lo, hi, count)

    def run():
        weights = build_weights(tilt, kernel, src.sample, h, src.density)
        result = estimate(spec, src.sample, weights, queries)
        rows = (
            (x, v, result.h_used, result.delta, src.sample.size, args.s, kernel.name, tilt.mode)
            for x, v in zip(result.points, result.values)
        )
        header = ("x", "fhat_s", "h", "delta", "n", "s", "kernel", "tilt_mode")
        write_text(csv_text(header, rows), args.out, stdout)

    return run


def _cmd_weights(args, stdout):
    kernel = get_kernel(args.kernel)
    if args.r < 2 or args.r % 2:
        raise UsageError(f"--r must be an even integer >= 2, got {args.r}")
    bandwidth = _bandwidth(args)
    src = _source(args)
    tilt = _tilt_config(args, src.sample, src.density is not None)
    spec = EstimatorSpec(kernel=kernel, r=args.r, s=0, bandwidth=bandwidth, tilt=tilt)
    h = spec.bandwidth_for(src.sample.size)

    def run():
        source = None
        if tilt.mode == "oracle":
            source = src.density
        elif tilt.mode == "plugin":
            source = pilot_estimates(src.sample, tilt.pilot_bandwidth, get_kernel(tilt.pilot_kernel))
        g = np.atleast_1d(tilt_g(source, tilt, src.sample, kernel))
        w = compute_weights(src.sample, g, h, tilt.weight_policy)
        rows = zip(src.sample, g, w.raw, w.weights)
        write_text(csv_text(("x", "g", "raw", "p"), rows), args.out, stdout)

    return run


def _cmd_bias_oracle(args, stdout):
    kernel = get_kernel(args.kernel)
    if args.s < 0 or args.s > kernel.smoothness:
        raise UsageError(f"s exceeds kernel smoothness ({kernel.name} supports s <= {kernel.smoothness})")
    if not args.h_grid or any(not h > 0 for h in args.h_grid):
        raise UsageError("--h-grid values must be positive")
    if not args.x:
        raise UsageError("--x needs at least one point")
    density = get_density(args.density)
    args.weight_policy = "signed"
    tilt = _tilt_config(args, None, True)

    def run():
        rows = []
        for x in args.x:
            for h in args.h_grid:
                b = expectation_quadrature(density, kernel, tilt, h, args.s, x)
                rows.append((b.h, b.x, b.s, b.expected_value, b.truth, b.bias, b.bias_over_h2))
        header = ("h", "x", "s", "expected_value", "truth", "bias", "bias_over_h2")
        write_text(csv_text(header, rows), args.out, stdout)

    return run


def _cmd_verify_rate(args, stdout):
    kernel = get_kernel(args.kernel)
    _check_derivative(kernel, args.s, args.r)
    if not args.h_rule > 0:
        raise UsageError(f"--h-rule must be positive, got {args.h_rule}")
    if args.threads is not None and args.threads < 1:
        raise UsageError(f"--threads must be >= 1, got {args.threads}")
    if not args.tolerance > 0:
        raise UsageError(f"--tolerance must be positive, got {args.tolerance}")
    density = get_density(args.density)
    tilt = _tilt_config(args, None, True)
    try:
        spec = EstimatorSpec(kernel=kernel, r=args.r, s=args.s, bandwidth=BandwidthRule(args.h_rule), tilt=tilt)
        plan = ExperimentPlan(
            density=density,
            spec=spec,
            n_grid=tuple(args.n_grid),
            replications=args.reps,
            eval_points=tuple(args.eval_points),
            base_seed=args.seed,
            error_statistic=args.statistic,
            tolerance=args.tolerance,
        )
    except (InvalidConfigError, UnsupportedDerivativeError) as exc:
        raise UsageError(str(exc)) from None
    config = {
        "density": density.name,
        "kernel": kernel.name,
        "r": args.r,
        "s": args.s,
        "tilt": tilt.mode,
        "tilt_c": tilt.resolved_constant(kernel) if tilt.mode != "none" else None,
        "clip": tilt.clip,
        "weight_policy": tilt.weight_policy,
        "h_rule": args.h_rule,
        "n_grid": list(plan.n_grid),
        "reps": plan.replications,
        "eval_points": list(plan.eval_points),
        "seed": args.seed,
        "statistic": plan.error_statistic,
    }

    def run():
        report = run_experiment(plan, threads=args.threads or os.cpu_count())
        write_text(report_json(report, config), args.out, stdout)
        if args.csv:
            write_text(report_rows_csv(report), args.csv, stdout)
        if args.svg:
            title = f"{density.name}, {kernel.name}, r={args.r}, s={args.s}, tilt={tilt.mode}"
            write_text(report_svg(report, title), args.svg, stdout)
        if args.out:
            verdict = "PASS" if report.passed else "FAIL"
            sys.stderr.write(
                f"{verdict}: fitted slope {report.fitted_slope:.4f} +/- {report.slope_stderr:.4f}, "
                f"theoretical {report.theoretical_slope:.4f}, tolerance {report.tolerance:g}\n"
            )

    return run


COMMANDS = {
    "estimate": _cmd_estimate,
    "weights": _cmd_weights,
    "bias-oracle": _cmd_bias_oracle,
    "verify-rate": _cmd_verify_rate,
}


def main(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        run = COMMANDS[args.command](args, stdout)
    except UsageError as exc:
        sys.stderr.write(f"tiltkde {args.command}: error: {exc}\n")
        return 2
    try:
        run()
    except TiltKDEError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
