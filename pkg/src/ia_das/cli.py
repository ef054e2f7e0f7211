"""Command-line entry point.

Subcommands map one-to-one onto the experiment runners; every one accepts
the same --config/--seed/--trials/--out/--threads flags, with flags
overriding the file.  Results go to --out as CSV (stdout if omitted);
`properness` additionally prints a human-readable table.

Exit codes: 0 success, 2 configuration problem, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import load_config
from .errors import ConfigError, IaDasError
from .experiments import (
    properness_table,
    render_csv,
    result_csv,
    run_backoff_prediction,
    run_cell_map,
    run_rate_vs_distance,
    run_snr_sweep,
    write_output,
)

_RUNNERS = {
    "sweep": run_snr_sweep,
    "backoff-predict": run_backoff_prediction,
    "cellmap": run_cell_map,
    "rate-vs-distance": run_rate_vs_distance,
}

_HELP = {
    "properness": "classify shapes as strictly/unconstrained-only/in-feasible by counting",
    "sweep": "mean sum rate vs SNR over Rayleigh channels for the constraint arms",
    "backoff-predict": "simulated backed-off rate vs the quadrature prediction",
    "cellmap": "mean center-user rate on a position grid over the 7-cell cluster",
    "rate-vs-distance": "center-user rate vs distance bins over the 7-cell cluster",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ia-das",
        description="Interference-alignment experiments for distributed-antenna networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("properness", "sweep", "backoff-predict", "cellmap", "rate-vs-distance"):
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", metavar="PATH", help="YAML experiment config")
        p.add_argument("--seed", type=int, metavar="N", help="master seed override")
        p.add_argument("--trials", type=int, metavar="N", help="trial count override")
        p.add_argument("--out", metavar="PATH", help="CSV output path (default stdout)")
        p.add_argument("--threads", type=int, metavar="N", help="worker threads (default 1)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(
            args.config,
            seed=args.seed,
            trials=args.trials,
            output=args.out,
            threads=args.threads,
        )
        if args.command == "properness":
            text, records = properness_table(config.properness.system_shapes())
            sys.stdout.write(text)
            if config.output is not None:
                csv = render_csv(
                    records, ["command: properness", f"config: {config.echo()}"]
                )
                write_output(csv, config.output)
        else:
            rows = _RUNNERS[args.command](config)
            write_output(result_csv(args.command, rows, config), config.output)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IaDasError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
