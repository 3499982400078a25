"""Command-line interface.

Exit codes: 0 success, 1 usage/config error, 2 numerical failure (drift,
non-finite force, singular fit), 3 checkpoint mismatch.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .analysis import InsufficientStatisticsError, SingularFitError
from .checkpoint import CheckpointError, CheckpointMismatchError
from .config import ConfigError, load_config
from .hmc import IntegratorError
from .matalg import DecompositionError, DriftError, NormOverflowError
from .runner import cmd_check_equivalence, cmd_extrapolate, cmd_run, cmd_scan

USAGE_ERROR = 1
NUMERICAL_ERROR = 2
CHECKPOINT_ERROR = 3

_NUMERICAL = (
    DriftError,
    DecompositionError,
    IntegratorError,
    NormOverflowError,
    SingularFitError,
    InsufficientStatisticsError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbiym",
        description="SU(N) lattice Yang-Mills Monte Carlo: Wilson and "
        "orbifold-lattice actions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one HMC chain")
    run.add_argument("--config", required=True, help="config file path")
    run.add_argument("--resume", action="store_true", help="resume from checkpoint")
    run.add_argument(
        "--stop-after", type=int, default=None, metavar="N",
        help="advance at most N trajectories, then checkpoint and exit",
    )

    scan = sub.add_parser("scan", help="fan out one run per axis value")
    scan.add_argument("--config", required=True)
    scan.add_argument("--axis", required=True, choices=("m2", "a_t", "a_iso"))
    scan.add_argument(
        "--values", required=True, help="comma-separated positive values"
    )
    scan.add_argument("--jobs", type=int, default=1, help="concurrent runs")

    extr = sub.add_parser("extrapolate", help="quadratic 1/m^2 extrapolation")
    extr.add_argument("rundirs", nargs="*", help="orbifold run directories")
    extr.add_argument(
        "--config", default=None,
        help="scan base config; its outdir subdirectories become the run list",
    )
    extr.add_argument("--observable", required=True, help="CSV column name")
    extr.add_argument("--wilson", default=None, help="Wilson reference run directory")
    extr.add_argument("--bin-size", type=int, default=50)
    extr.add_argument("--out", default=None, help="fit-summary CSV path")

    chk = sub.add_parser("check-equivalence", help="frozen-field action identity")
    chk.add_argument("--config", required=True)
    chk.add_argument("--samples", type=int, default=50)
    return parser


def _do_run(args) -> int:
    cfg = load_config(args.config)
    result = cmd_run(cfg, resume=args.resume, stop_after=args.stop_after)
    state = "finished" if result.finished else f"paused at {result.trajectories}"
    print(
        f"{result.outdir}: {state}, accepted {result.accepted}, "
        f"invalid measurements {result.invalid_measurements}"
    )
    return 0


def _do_scan(args) -> int:
    cfg = load_config(args.config)
    values = [float(tok) for tok in args.values.split(",") if tok.strip()]
    dirs = cmd_scan(cfg, args.axis, values, jobs=args.jobs)
    for d in dirs:
        print(d)
    return 0


def _do_extrapolate(args) -> int:
    rundirs = list(args.rundirs)
    if not rundirs:
        if args.config is None:
            raise ConfigError("give run directories or --config of a scan")
        base = load_config(args.config).outdir
        rundirs = sorted(
            os.path.join(base, d)
            for d in os.listdir(base)
            if os.path.isdir(os.path.join(base, d))
        )
    report = cmd_extrapolate(
        rundirs, args.observable, wilson_dir=args.wilson,
        bin_size=args.bin_size, out_csv=args.out,
    )
    print(f"observable: {report.observable}")
    for m2, est in report.points:
        print(f"  m2 = {m2:g}: {est.mean:.8g} +/- {est.err:.3g}")
    fit = report.fit
    print(
        f"  extrapolated (1/m^2 -> 0): {fit.a0:.8g} +/- {fit.a0_err:.3g}, "
        f"chi2/dof = {fit.chi2_per_dof:.3g}"
    )
    if report.wilson is not None:
        print(
            f"  wilson reference: {report.wilson.mean:.8g} +/- "
            f"{report.wilson.err:.3g}, pull = {report.pull:+.3f}"
        )
    return 0


def _do_check_equivalence(args) -> int:
    cfg = load_config(args.config)
    report = cmd_check_equivalence(cfg, samples=args.samples)
    print(
        f"frozen-field equivalence over {report.samples} samples: "
        f"max relative deviation {report.max_rel_dev:.3e} "
        f"(tolerance {report.tolerance:g})"
    )
    if not report.passed:
        print("FAIL")
        return NUMERICAL_ERROR
    print("PASS")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _do_run,
        "scan": _do_scan,
        "extrapolate": _do_extrapolate,
        "check-equivalence": _do_check_equivalence,
    }
    try:
        return handlers[args.command](args)
    except CheckpointMismatchError as err:
        print(f"error: {err}", file=sys.stderr)
        return CHECKPOINT_ERROR
    except _NUMERICAL as err:
        print(f"error: {err}", file=sys.stderr)
        return NUMERICAL_ERROR
    except (ConfigError, CheckpointError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
