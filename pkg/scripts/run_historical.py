"""Run the full pipeline on a directory of historical price CSVs.

Expects one CSV per index named <TICKER>.csv with Date/Close columns:
STOXX50E (benchmark), DAX, DAX3ESGK, CAC40, CAC40ESG, FTSEMIB, MIBESG.

Usage:
    python scripts/run_historical.py --data DIR --out DIR \
        [--start 2021-10-18] [--end 2024-02-19]
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from make_fixtures import BENCHMARK_TICKER, TARGET_PARAMS
from volregime.cli import main as cli_main


def build_config(data_dir: Path, out_dir: Path, start: str, end: str) -> dict:
    indices = [
        {"ticker": BENCHMARK_TICKER, "path": str(data_dir / f"{BENCHMARK_TICKER}.csv"),
         "type": "traditional", "market": "Europe"}
    ]
    for ticker, (kind, market, _) in TARGET_PARAMS.items():
        indices.append(
            {"ticker": ticker, "path": str(data_dir / f"{ticker}.csv"),
             "type": kind, "market": market}
        )
    return {
        "benchmark": BENCHMARK_TICKER,
        "out_dir": str(out_dir),
        "window": {"start": start, "end": end},
        "indices": indices,
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True, help="directory with the 7 price CSVs")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--start", default="2021-10-18")
    ap.add_argument("--end", default="2024-02-19")
    args = ap.parse_args()

    config = build_config(
        Path(args.data).resolve(), Path(args.out).resolve(), args.start, args.end
    )
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(config, fh, indent=2)
        config_path = fh.name
    return cli_main(["run-all", "--config", config_path])


if __name__ == "__main__":
    sys.exit(main())
