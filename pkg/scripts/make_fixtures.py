"""Generate a synthetic 7-index fixture set plus a pipeline config.

The benchmark is drawn from the two-component mixture reported for the
European benchmark index; the six country targets are EGARCH-M simulations
using the published coefficient sets, driven by the turmoil dummy that
regime detection recovers from the benchmark (so a pipeline run on the
fixtures re-derives the very dummy the targets were generated with).
Prices are reconstructed from returns by inverting the percentage
log-return definition.

Usage:
    python scripts/make_fixtures.py --dir demo [--days 2500] [--seed 11]
Then:
    volregime run-all --config demo/config.json
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
from pathlib import Path

import numpy as np

from volregime import (
    EgarchMParams,
    MgndComponent,
    MgndParams,
    SkewGndParams,
    classify,
    fit_mgnd,
    sample_mgnd,
    simulate_egarch_m,
)

BENCHMARK_TICKER = "STOXX50E"

BENCHMARK_MIXTURE = MgndParams(
    components=(
        MgndComponent(pi=0.8502, mu=0.1141, delta=0.7351, nu=1.3123),
        MgndComponent(pi=0.1498, mu=-0.4408, delta=2.0158, nu=1.7998),
    )
)

TARGET_PARAMS: dict[str, tuple[str, str, EgarchMParams]] = {
    "DAX": ("traditional", "Germany", EgarchMParams(
        mu=-0.0887, m1=-2.6587, phi1=0.0, lam=0.2083, omega=-0.0320, v1=0.4841,
        alpha1=-0.1123, gamma1=0.1121, beta1=0.9389,
        innovation=SkewGndParams(nu=1.4890, s=1.0295))),
    "DAX3ESGK": ("esg", "Germany", EgarchMParams(
        mu=-0.0404, m1=-2.6888, phi1=0.0, lam=0.1428, omega=-0.0215, v1=0.3940,
        alpha1=-0.1051, gamma1=0.1147, beta1=0.9536,
        innovation=SkewGndParams(nu=1.3553, s=1.0330))),
    "CAC40": ("traditional", "France", EgarchMParams(
        mu=-0.1690, m1=-2.6935, phi1=0.0, lam=0.3117, omega=-0.0435, v1=0.5934,
        alpha1=-0.1420, gamma1=0.0546, beta1=0.9105,
        innovation=SkewGndParams(nu=1.6868, s=1.0558))),
    "CAC40ESG": ("esg", "France", EgarchMParams(
        mu=-0.0633, m1=-2.2656, phi1=0.0, lam=0.1713, omega=-0.0384, v1=0.6434,
        alpha1=-0.1554, gamma1=0.0798, beta1=0.9102,
        innovation=SkewGndParams(nu=1.7020, s=1.0066))),
    "FTSEMIB": ("traditional", "Italy", EgarchMParams(
        mu=-0.1476, m1=-2.7659, phi1=0.0, lam=0.2795, omega=-0.0255, v1=0.6166,
        alpha1=-0.1129, gamma1=0.0863, beta1=0.9026,
        innovation=SkewGndParams(nu=1.8300, s=0.9999))),
    "MIBESG": ("esg", "Italy", EgarchMParams(
        mu=-0.1461, m1=-2.7715, phi1=0.0, lam=0.2704, omega=-0.0238, v1=0.7009,
        alpha1=-0.1221, gamma1=0.1024, beta1=0.8856,
        innovation=SkewGndParams(nu=1.8833, s=0.9965))),
}


def business_days(start: dt.date, count: int) -> list[dt.date]:
    days, d = [], start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def prices_from_returns(returns: np.ndarray, first_price: float = 1000.0) -> np.ndarray:
    levels = np.empty(returns.size + 1)
    levels[0] = first_price
    levels[1:] = first_price * np.exp(np.cumsum(returns / 100.0))
    return levels


def write_price_csv(path: Path, dates: list[dt.date], prices: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Date", "Close"])
        for d, p in zip(dates, prices):
            w.writerow([d.isoformat(), repr(float(p))])


def write_fixture_set(
    data_dir: Path,
    n_days: int = 2500,
    seed: int = 11,
    start: dt.date = dt.date(2021, 10, 18),
) -> Path:
    """Write the 7 price CSVs and config.json; returns the config path.

    n_days counts price observations; each series yields n_days - 1 returns.
    """
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    dates = business_days(start, n_days)

    bench_returns, _ = sample_mgnd(BENCHMARK_MIXTURE, n_days - 1, seed=seed)
    write_price_csv(
        data_dir / f"{BENCHMARK_TICKER}.csv", dates, prices_from_returns(bench_returns)
    )

    # the dummy the pipeline itself will recover from these benchmark returns
    detected = classify(bench_returns, fit_mgnd(bench_returns, k=2).params)
    dummy = detected.dummy

    for i, (ticker, (_, _, params)) in enumerate(TARGET_PARAMS.items()):
        sim = simulate_egarch_m(params, dummy, n_days - 1, seed=seed * 1000 + i)
        write_price_csv(data_dir / f"{ticker}.csv", dates, prices_from_returns(sim.values))

    config = {
        "benchmark": BENCHMARK_TICKER,
        "seed": seed,
        "k": 2,
        "archlm_lags": 12,
        "adf_max_lag": None,
        "out_dir": "out",
        "indices": [
            {"ticker": BENCHMARK_TICKER, "path": f"{BENCHMARK_TICKER}.csv",
             "type": "traditional", "market": "Europe"}
        ]
        + [
            {"ticker": t, "path": f"{t}.csv", "type": kind, "market": market}
            for t, (kind, market, _) in TARGET_PARAMS.items()
        ],
    }
    config_path = data_dir / "config.json"
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")
    return config_path


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dir", required=True, help="target directory for the fixture set")
    ap.add_argument("--days", type=int, default=2500, help="price observations per index")
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()
    config = write_fixture_set(Path(args.dir), n_days=args.days, seed=args.seed)
    print(f"fixture set written; run: volregime run-all --config {config}")


if __name__ == "__main__":
    main()
