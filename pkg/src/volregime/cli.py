"""Command-line entry point: ingest / detect / tests / fit / run-all.

Exit codes: 0 full success, 2 partial per-index failures, 1 fatal error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline

_STAGES = {
    "ingest": pipeline.cmd_ingest,
    "detect": pipeline.cmd_detect,
    "tests": pipeline.cmd_tests,
    "fit": pipeline.cmd_fit,
    "run-all": pipeline.run_all,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volregime",
        description="Turmoil-regime detection and EGARCH-M turmoil-impact estimation",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _STAGES:
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="base random seed (overrides config)")
        p.add_argument("--k", type=int, help="mixture components (overrides config)")
        p.add_argument("--adf-max-lag", type=int, dest="adf_max_lag",
                       help="ADF max lag (overrides config)")
        p.add_argument("--archlm-lags", type=int, dest="archlm_lags",
                       help="ARCH-LM lag order (overrides config)")
        p.add_argument("--window", help="date window START:END (ISO dates)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = pipeline.load_config(args.config)
        config = pipeline.apply_overrides(
            config,
            out_dir=args.out,
            seed=args.seed,
            k=args.k,
            adf_max_lag=args.adf_max_lag,
            archlm_lags=args.archlm_lags,
            window=args.window,
        )
        result = _STAGES[args.command](config)
    except Exception as exc:  # fatal: config, IO, degenerate fits
        logging.getLogger("volregime").error("%s", exc)
        return 1
    failures = result.get("failures", [])
    if failures:
        logging.getLogger("volregime").warning(
            "completed with %d per-index failures", len(failures)
        )
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
