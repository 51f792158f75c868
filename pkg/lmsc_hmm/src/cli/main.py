"""
Command-line entry point: `lmsc-hmm <mode> [--config FILE] [--seed N] ...`.

Exit codes: 0 success, 2 config or input error, 3 numerical failure, 4 I/O error.
"""
import argparse
import logging
import time
from pathlib import Path
from typing import List, Optional

from lmsc_hmm import __version__
from lmsc_hmm.src.cli.config import MODES, load_experiment_config
from lmsc_hmm.src.cli.experiments import run_experiment
from lmsc_hmm.src.cli.outputs import emit_outputs
from lmsc_hmm.src.common.exceptions import (ConfigError, InvalidInputError,
                                            NumericalError, TraceFormatError)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

DESCRIPTIONS = {
    "simulate": "Draw a state path and amplitudes from a configured HMM.",
    "fit-bw": "Estimate the transition matrix by Baum-Welch with fixed emissions.",
    "baseline": "Estimate the chain with threshold labelling (T1/T10/T20).",
    "sweep": "Two-Gaussian benchmark: BW and threshold methods over the mu1 grid.",
    "curve-fit": "Fit a fixed-family mixture to a down-sampled trace by simulated annealing.",
    "pipeline": "Curve fit, Baum-Welch and threshold baselines on one trace.",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lmsc-hmm",
        description="Baum-Welch state estimation for land mobile satellite channel measurements.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)

    for mode in MODES:
        cmd = sub.add_parser(mode, help=DESCRIPTIONS[mode], description=DESCRIPTIONS[mode])
        cmd.add_argument("--config", type=Path, default=None, help="JSON config; the bundled default when omitted.")
        cmd.add_argument("--seed", type=int, default=None, help="Override the config's master seed.")
        cmd.add_argument("--out-dir", type=Path, default=None, help="Output directory (default: results/<mode>).")
        cmd.add_argument("--workers", type=int, default=None, help="Worker processes for sweeps and restarts.")
        cmd.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv", help="Results file format.")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = args.out_dir or Path("results") / args.mode
    started = time.perf_counter()

    try:
        config = load_experiment_config(args.config, args.mode, {"seed": args.seed, "workers": args.workers})
        result = run_experiment(config)
        emit_outputs(result, out_dir, fmt=args.fmt)
    except TraceFormatError as e:
        log.error(f"Cannot read input: {e}")
        return EXIT_IO
    except (ConfigError, InvalidInputError) as e:
        log.error(f"Invalid configuration or input: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        log.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except OSError as e:
        log.error(f"I/O error: {e}")
        return EXIT_IO

    log.info(f"{args.mode} completed in {time.perf_counter() - started:.2f} s, outputs in '{out_dir}'.")
    for warning in result.warnings:
        log.warning(warning)

    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
