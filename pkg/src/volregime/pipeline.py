"""File-based orchestration of the full analysis pipeline.

Stages communicate only through CSV/JSON artifacts in the output directory:
ingest -> per-index return series + summary table; detect -> mixture fit,
turmoil dummy and density grid from the benchmark; tests -> JB/ADF/ARCH-LM
table; fit -> per-index EGARCH-M reports, coefficient tables, impact summary
and filtered volatility series. Re-running a stage with identical inputs and
seeds rewrites byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import diagnostics, egarch, mixture, series
from .gnd import gnd_logpdf

logger = logging.getLogger(__name__)

DUMMY_TICKER = "TURMOIL"


class PipelineError(RuntimeError):
    """A stage could not produce its artifacts."""


@dataclass(frozen=True)
class IndexSpec:
    ticker: str
    path: str
    kind: str = "traditional"
    market: str = ""
    date_column: str = "Date"
    price_column: str = "Close"

    def __post_init__(self) -> None:
        if self.kind not in ("traditional", "esg"):
            raise ValueError(f"kind must be 'traditional' or 'esg', got {self.kind!r}")


@dataclass(frozen=True)
class PipelineConfig:
    benchmark: str
    indices: tuple[IndexSpec, ...]
    start: dt.date | None = None
    end: dt.date | None = None
    k: int = 2
    archlm_lags: int = 12
    adf_max_lag: int | None = None
    seed: int = 0
    out_dir: str = "out"
    date_format: str = "%Y-%m-%d"
    mgnd_init: mixture.InitStrategy = "quantile"
    mgnd_tol: float = 1e-6
    mgnd_max_iter: int = 500

    def __post_init__(self) -> None:
        tickers = [i.ticker for i in self.indices]
        if len(set(tickers)) != len(tickers):
            raise ValueError("duplicate tickers in config")
        if self.benchmark not in tickers:
            raise ValueError(f"benchmark {self.benchmark!r} not among configured indices")
        if self.start is not None and self.end is not None and not self.start < self.end:
            raise ValueError("window start must precede end")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def targets(self) -> tuple[IndexSpec, ...]:
        return tuple(i for i in self.indices if i.ticker != self.benchmark)

    @property
    def benchmark_spec(self) -> IndexSpec:
        return next(i for i in self.indices if i.ticker == self.benchmark)


def load_config(path) -> PipelineConfig:
    """Read the JSON config; relative CSV paths resolve against its directory."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    base = path.parent

    def parse_date(s):
        return dt.date.fromisoformat(s) if s else None

    window = doc.get("window") or {}
    out = Path(doc.get("out_dir", "out"))
    indices = tuple(
        IndexSpec(
            ticker=entry["ticker"],
            path=str((base / entry["path"]).resolve()),
            kind=entry.get("type", "traditional"),
            market=entry.get("market", ""),
            date_column=entry.get("date_column", "Date"),
            price_column=entry.get("price_column", "Close"),
        )
        for entry in doc["indices"]
    )
    return PipelineConfig(
        benchmark=doc["benchmark"],
        indices=indices,
        start=parse_date(window.get("start")),
        end=parse_date(window.get("end")),
        k=int(doc.get("k", 2)),
        archlm_lags=int(doc.get("archlm_lags", 12)),
        adf_max_lag=None if doc.get("adf_max_lag") is None else int(doc["adf_max_lag"]),
        seed=int(doc.get("seed", 0)),
        out_dir=str(out if out.is_absolute() else base / out),
        date_format=doc.get("date_format", "%Y-%m-%d"),
        mgnd_init=doc.get("mgnd_init", "quantile"),
        mgnd_tol=float(doc.get("mgnd_tol", 1e-6)),
        mgnd_max_iter=int(doc.get("mgnd_max_iter", 500)),
    )


def apply_overrides(
    config: PipelineConfig,
    out_dir: str | None = None,
    seed: int | None = None,
    k: int | None = None,
    adf_max_lag: int | None = None,
    archlm_lags: int | None = None,
    window: str | None = None,
) -> PipelineConfig:
    """CLI flags override their config keys; window is 'START:END' (ISO dates)."""
    changes: dict = {}
    if out_dir is not None:
        changes["out_dir"] = out_dir
    if seed is not None:
        changes["seed"] = seed
    if k is not None:
        changes["k"] = k
    if adf_max_lag is not None:
        changes["adf_max_lag"] = adf_max_lag
    if archlm_lags is not None:
        changes["archlm_lags"] = archlm_lags
    if window is not None:
        start_s, _, end_s = window.partition(":")
        changes["start"] = dt.date.fromisoformat(start_s) if start_s else None
        changes["end"] = dt.date.fromisoformat(end_s) if end_s else None
    return dataclasses.replace(config, **changes) if changes else config


# --- canonical artifact readers/writers ---------------------------------------


def _fmt(x: float) -> str:
    """Shortest round-trip decimal form; CSV floats reload bit-identically."""
    return repr(float(x))


def returns_csv_path(config: PipelineConfig, ticker: str) -> Path:
    return Path(config.out_dir) / "returns" / f"{ticker}.csv"


def write_returns_csv(rs: series.ReturnSeries, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "return"])
        for d, v in zip(rs.dates, rs.values):
            w.writerow([d.isoformat(), _fmt(v)])


def read_returns_csv(path, ticker: str) -> series.ReturnSeries:
    dates, values = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            dates.append(dt.date.fromisoformat(row["date"]))
            values.append(float(row["return"]))
    return series.ReturnSeries(ticker=ticker, dates=tuple(dates), values=np.array(values))


def read_dummy_csv(path) -> series.ReturnSeries:
    """The dummy reloads as a 0/1-valued ReturnSeries so align() applies to it."""
    dates, values = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            dates.append(dt.date.fromisoformat(row["date"]))
            values.append(float(row["turmoil"]))
    return series.ReturnSeries(ticker=DUMMY_TICKER, dates=tuple(dates), values=np.array(values))


def _write_json(doc: dict, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_table(path, header: list[str], rows: list[list]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# --- stages -------------------------------------------------------------------


def cmd_ingest(config: PipelineConfig) -> dict:
    """Load every configured CSV, window it, and persist returns + summary."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    failures: list[tuple[str, str]] = []
    loaded: dict[str, series.ReturnSeries] = {}
    for spec in config.indices:
        try:
            prices = series.load_prices(
                spec.path,
                spec.ticker,
                date_column=spec.date_column,
                price_column=spec.price_column,
                date_format=config.date_format,
            )
            if config.start is not None or config.end is not None:
                prices = series.window(prices, config.start, config.end)
            loaded[spec.ticker] = series.log_returns(prices)
        except (OSError, ValueError) as exc:
            failures.append((spec.ticker, str(exc)))
    if failures:
        detail = "; ".join(f"{t}: {msg}" for t, msg in failures)
        raise PipelineError(f"ingest failed for {len(failures)} indices: {detail}")

    rows = []
    for spec in config.indices:
        rs = loaded[spec.ticker]
        write_returns_csv(rs, returns_csv_path(config, spec.ticker))
        st = series.summary_stats(rs)
        rows.append(
            [
                spec.ticker, spec.kind, spec.market, st.n,
                _fmt(st.mean), _fmt(st.stdev), _fmt(st.skewness),
                _fmt(st.kurtosis), _fmt(st.kurtosis_raw), st.shape_defined,
            ]
        )
    _write_table(
        out / "summary_stats.csv",
        ["ticker", "type", "market", "n", "mean", "stdev",
         "skewness", "kurtosis_excess", "kurtosis_raw", "shape_defined"],
        rows,
    )
    logger.info("ingest wrote %d return series", len(loaded))
    return {"n_indices": len(loaded), "summary_csv": str(out / "summary_stats.csv")}


def cmd_detect(config: PipelineConfig) -> dict:
    """Fit the mixture on the benchmark, classify, and emit dummy + densities."""
    if config.k < 2:
        raise PipelineError("regime detection needs k >= 2")
    out = Path(config.out_dir)
    bench = read_returns_csv(returns_csv_path(config, config.benchmark), config.benchmark)
    report = mixture.fit_mgnd(
        bench, k=config.k, init=config.mgnd_init, tol=config.mgnd_tol,
        max_iter=config.mgnd_max_iter, seed=config.seed,
    )
    classification = mixture.classify(bench, report.params)
    mixture.write_dummy_csv(classification, out / "turmoil_dummy.csv")
    share = float(np.mean(classification.dummy))
    _write_json(
        {
            "benchmark": config.benchmark,
            "fit": report.to_json_dict(),
            "turmoil_index": classification.turmoil_index,
            "dummy_share": share,
        },
        out / "mgnd_fit.json",
    )

    lo, hi = float(bench.values.min()), float(bench.values.max())
    margin = max(1.0, 0.1 * (hi - lo))
    grid = np.linspace(lo - margin, hi + margin, 2001)
    comps = report.params.components
    weighted = [c.pi * np.exp(gnd_logpdf(grid, c.gnd())) for c in comps]
    density = np.sum(weighted, axis=0)
    header = ["x", "density"] + [f"component_{j + 1}" for j in range(len(comps))]
    rows = [
        [_fmt(x), _fmt(density[i])] + [_fmt(w[i]) for w in weighted]
        for i, x in enumerate(grid)
    ]
    _write_table(out / "density_grid.csv", header, rows)
    logger.info("detect: turmoil share %.4f over %d days", share, len(bench))
    return {
        "dummy_csv": str(out / "turmoil_dummy.csv"),
        "fit_json": str(out / "mgnd_fit.json"),
        "dummy_share": share,
    }


def _stars_csv(p: float) -> str:
    return egarch.significance_stars(p)


def cmd_tests(config: PipelineConfig) -> dict:
    """JB/ADF/ARCH-LM per target; per-index failures recorded, run continues."""
    out = Path(config.out_dir)
    rows = []
    failures: list[tuple[str, str]] = []
    for spec in config.targets:
        try:
            rs = read_returns_csv(returns_csv_path(config, spec.ticker), spec.ticker)
            jb = diagnostics.jarque_bera(rs)
            adf = diagnostics.adf_test(rs, max_lag=config.adf_max_lag)
            lm = diagnostics.arch_lm(rs, lags=config.archlm_lags)
            rows.append(
                [
                    spec.ticker,
                    _fmt(jb.statistic), _fmt(jb.p_value), _stars_csv(jb.p_value),
                    _fmt(adf.statistic), _fmt(adf.p_value), adf.lags, _stars_csv(adf.p_value),
                    _fmt(lm.statistic), _fmt(lm.p_value), lm.lags, _stars_csv(lm.p_value),
                ]
            )
        except (OSError, ValueError, np.linalg.LinAlgError) as exc:
            logger.error("tests failed for %s: %s", spec.ticker, exc)
            failures.append((spec.ticker, str(exc)))
    _write_table(
        out / "tests_results.csv",
        ["ticker", "jb_stat", "jb_p", "jb_stars", "adf_stat", "adf_p", "adf_lags",
         "adf_stars", "archlm_stat", "archlm_p", "archlm_lags", "archlm_stars"],
        rows,
    )
    return {"tests_csv": str(out / "tests_results.csv"), "failures": failures}


def cmd_fit(config: PipelineConfig) -> dict:
    """EGARCH-M per target against the detected dummy; emits tables + h series."""
    out = Path(config.out_dir)
    dummy = read_dummy_csv(out / "turmoil_dummy.csv")
    fits: list[egarch.EgarchFitReport] = []
    specs_fitted: list[IndexSpec] = []
    failures: list[tuple[str, str]] = []
    for spec in config.targets:
        try:
            rs = read_returns_csv(returns_csv_path(config, spec.ticker), spec.ticker)
            aligned_rs, aligned_dummy = series.align([rs, dummy])
            dropped = len(rs) - len(aligned_rs)
            if dropped:
                logger.info("fit %s: dropped %d dates without dummy coverage",
                            spec.ticker, dropped)
            report = egarch.fit_egarch_m(aligned_rs, aligned_dummy.values)
            fits.append(report)
            specs_fitted.append(spec)
            _write_json(report.to_json_dict(), out / "egarch" / f"{spec.ticker}_fit.json")
            vol_rows = [
                [d.isoformat(), _fmt(h)]
                for d, h in zip(report.filtered.dates, report.filtered.h)
            ]
            _write_table(out / "volatility" / f"{spec.ticker}.csv", ["date", "h"], vol_rows)
        except (OSError, ValueError, series.AlignmentError, egarch.FilterError) as exc:
            logger.error("fit failed for %s: %s", spec.ticker, exc)
            failures.append((spec.ticker, str(exc)))

    mean_rows, var_rows = [], []
    for fit in fits:
        vec = fit.params.as_vector()
        by_name = dict(zip(egarch.PARAM_NAMES, vec))
        pv = dict(zip(egarch.PARAM_NAMES, fit.p_values))
        mean_rows.append(
            [fit.ticker]
            + [x for n in egarch.MEAN_EQ_NAMES for x in (_fmt(by_name[n]), _stars_csv(pv[n]))]
            + [fit.converged]
        )
        var_rows.append(
            [fit.ticker]
            + [x for n in egarch.VARIANCE_EQ_NAMES for x in (_fmt(by_name[n]), _stars_csv(pv[n]))]
            + [fit.converged]
        )
    _write_table(
        out / "mean_equation.csv",
        ["ticker"] + [f"{n}{suf}" for n in egarch.MEAN_EQ_NAMES for suf in ("", "_stars")]
        + ["converged"],
        mean_rows,
    )
    _write_table(
        out / "variance_equation.csv",
        ["ticker"] + [f"{n}{suf}" for n in egarch.VARIANCE_EQ_NAMES for suf in ("", "_stars")]
        + ["converged"],
        var_rows,
    )
    impact = egarch.turmoil_impact_summary(fits) if fits else []
    impact_rows = [
        [
            row["ticker"], spec.kind, spec.market,
            _fmt(row["m1"]), row["m1_stars"], _fmt(row["v1"]), row["v1_stars"],
            _fmt(row["peak_volatility"]), row["converged"],
        ]
        for row, spec in zip(impact, specs_fitted)
    ]
    _write_table(
        out / "impact_summary.csv",
        ["ticker", "type", "market", "m1", "m1_stars", "v1", "v1_stars",
         "peak_volatility", "converged"],
        impact_rows,
    )
    return {
        "n_fitted": len(fits),
        "failures": failures,
        "impact_csv": str(out / "impact_summary.csv"),
    }


def run_all(config: PipelineConfig) -> dict:
    """ingest -> detect -> tests -> fit; returns merged stage results."""
    results = {"ingest": cmd_ingest(config), "detect": cmd_detect(config)}
    results["tests"] = cmd_tests(config)
    results["fit"] = cmd_fit(config)
    results["failures"] = results["tests"]["failures"] + results["fit"]["failures"]
    return results
