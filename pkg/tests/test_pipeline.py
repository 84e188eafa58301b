import csv
import datetime as dt
import json
import math
from pathlib import Path

import numpy as np
import pytest

from make_fixtures import TARGET_PARAMS, write_fixture_set
from volregime import DegenerateComponentError, load_config
from volregime.cli import main as cli_main
from volregime.pipeline import (
    PipelineConfig,
    PipelineError,
    apply_overrides,
    cmd_detect,
    cmd_fit,
    cmd_ingest,
    cmd_tests,
    read_dummy_csv,
    read_returns_csv,
    returns_csv_path,
    run_all,
)


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_price_csv(path, dates, prices):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Date", "Close"])
        for d, p in zip(dates, prices):
            w.writerow([d.isoformat(), repr(float(p))])


def business_days(start, count):
    days, d = [], start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


@pytest.fixture(scope="module")
def big_run(tmp_path_factory):
    """One full pipeline run on the 2500-day fixture set, shared by the module."""
    root = tmp_path_factory.mktemp("bigfix")
    config_path = write_fixture_set(root, n_days=2500, seed=11)
    config = load_config(config_path)
    results = run_all(config)
    return config, results


class TestIngest:
    def test_writes_seven_series_and_summary(self, big_run):
        config, results = big_run
        out = Path(config.out_dir)
        files = sorted(p.name for p in (out / "returns").glob("*.csv"))
        assert len(files) == 7
        rows = read_rows(out / "summary_stats.csv")
        assert len(rows) == 7
        assert {r["ticker"] for r in rows} == {s.ticker for s in config.indices}

    def test_returns_csv_round_trips_losslessly(self, big_run):
        config, _ = big_run
        path = returns_csv_path(config, "DAX")
        rs = read_returns_csv(path, "DAX")
        tmp = path.parent / "rt.csv"
        from volregime.pipeline import write_returns_csv

        write_returns_csv(rs, tmp)
        assert path.read_bytes() == tmp.read_bytes()
        tmp.unlink()

    def test_window_restricts_outputs(self, tmp_path):
        dates = business_days(dt.date(2022, 1, 3), 40)
        rng = np.random.default_rng(0)
        for t in ("BENCH", "TGT"):
            write_price_csv(tmp_path / f"{t}.csv", dates,
                            100 * np.exp(np.cumsum(rng.normal(0, 0.01, 40))))
        config = PipelineConfig(
            benchmark="BENCH",
            indices=(
                _spec("BENCH", tmp_path), _spec("TGT", tmp_path),
            ),
            start=dates[5], end=dates[14],  # 10 price days -> 9 returns
            out_dir=str(tmp_path / "out"),
        )
        cmd_ingest(config)
        for t in ("BENCH", "TGT"):
            rows = read_rows(returns_csv_path(config, t))
            assert 1 <= len(rows) <= 10

    def test_constant_price_index_flagged(self, tmp_path):
        dates = business_days(dt.date(2022, 1, 3), 30)
        write_price_csv(tmp_path / "CONST.csv", dates, np.full(30, 42.0))
        write_price_csv(tmp_path / "BENCH.csv", dates,
                        100 * np.exp(np.cumsum(np.random.default_rng(1).normal(0, 0.01, 30))))
        config = PipelineConfig(
            benchmark="BENCH",
            indices=(_spec("BENCH", tmp_path), _spec("CONST", tmp_path)),
            out_dir=str(tmp_path / "out"),
        )
        cmd_ingest(config)
        rows = {r["ticker"]: r for r in read_rows(Path(config.out_dir) / "summary_stats.csv")}
        assert rows["CONST"]["shape_defined"] == "False"
        assert rows["CONST"]["skewness"] == "nan"
        assert rows["BENCH"]["shape_defined"] == "True"

    def test_load_failure_aborts_with_diagnostics(self, tmp_path):
        dates = business_days(dt.date(2022, 1, 3), 30)
        write_price_csv(tmp_path / "GOOD.csv", dates, np.linspace(90, 110, 30))
        (tmp_path / "BAD.csv").write_text("not,a,header\n")
        config = PipelineConfig(
            benchmark="GOOD",
            indices=(_spec("GOOD", tmp_path), _spec("BAD", tmp_path)),
            out_dir=str(tmp_path / "out"),
        )
        with pytest.raises(PipelineError, match="BAD"):
            cmd_ingest(config)


class TestDetect:
    def test_density_grid_integrates_to_one(self, big_run):
        config, _ = big_run
        rows = read_rows(Path(config.out_dir) / "density_grid.csv")
        x = np.array([float(r["x"]) for r in rows])
        dens = np.array([float(r["density"]) for r in rows])
        assert np.trapezoid(dens, x) == pytest.approx(1.0, abs=1e-3)
        comp = np.array([float(r["component_1"]) + float(r["component_2"]) for r in rows])
        np.testing.assert_allclose(comp, dens, atol=1e-12)

    def test_dummy_share_matches_argmax_region_mass(self, big_run):
        # The empirical hard-label share must match the fitted mixture's own
        # decision-region mass (quadrature). Note this mass sits far below the
        # generating mixing weight 0.1498: for the published parameters the
        # argmax region holds only 0.0493 of the distribution.
        from scipy.integrate import quad
        from scipy.optimize import brentq

        from volregime import MgndComponent, gnd_logpdf

        config, results = big_run
        doc = json.loads((Path(config.out_dir) / "mgnd_fit.json").read_text())
        comps = [
            MgndComponent(pi=c["pi"], mu=c["mu"], delta=c["delta"], nu=c["nu"])
            for c in doc["fit"]["components"]
        ]
        turmoil = doc["turmoil_index"]

        def margin(x):
            logw = [math.log(c.pi) + gnd_logpdf(x, c.gnd()) for c in comps]
            return logw[turmoil] - logw[1 - turmoil]

        grid = np.linspace(-25.0, 25.0, 8001)
        vals = np.array([margin(x) for x in grid])
        flips = np.where(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
        cuts = [brentq(margin, grid[i], grid[i + 1]) for i in flips]
        edges = [-np.inf] + cuts + [np.inf]
        mix = lambda x: sum(c.pi * math.exp(gnd_logpdf(x, c.gnd())) for c in comps)
        mass = 0.0
        for lo, hi in zip(edges, edges[1:]):
            mid = (max(lo, -30.0) + min(hi, 30.0)) / 2.0
            if margin(mid) > 0:
                mass += quad(mix, lo, hi)[0]
        share = results["detect"]["dummy_share"]
        assert share == pytest.approx(mass, abs=0.02)
        assert 0.01 < share < 0.1498  # strictly below the mixing weight

    def test_dummy_csv_well_formed(self, big_run):
        config, _ = big_run
        path = Path(config.out_dir) / "turmoil_dummy.csv"
        dummy = read_dummy_csv(path)
        assert set(np.unique(dummy.values)) <= {0.0, 1.0}
        assert len(dummy) == 2499
        # reload -> rewrite is byte-identical (lossless canonical format)
        from volregime.mixture import RegimeClassification, write_dummy_csv

        cls = RegimeClassification(
            posteriors=np.zeros((len(dummy), 2)), labels=dummy.values.astype(int),
            turmoil_index=1, dummy=dummy.values.astype(int), dates=dummy.dates,
        )
        tmp = path.parent / "dummy_rt.csv"
        write_dummy_csv(cls, tmp)
        assert path.read_bytes() == tmp.read_bytes()
        tmp.unlink()

    def test_fit_json_reports_mixture(self, big_run):
        config, _ = big_run
        doc = json.loads((Path(config.out_dir) / "mgnd_fit.json").read_text())
        assert doc["benchmark"] == "STOXX50E"
        assert len(doc["fit"]["components"]) == 2
        assert doc["turmoil_index"] in (0, 1)

    def test_degenerate_benchmark_aborts(self, tmp_path):
        dates = business_days(dt.date(2022, 1, 3), 300)
        write_price_csv(tmp_path / "FLAT.csv", dates, np.full(300, 10.0))
        config = PipelineConfig(
            benchmark="FLAT", indices=(_spec("FLAT", tmp_path),),
            out_dir=str(tmp_path / "out"),
        )
        cmd_ingest(config)
        with pytest.raises(DegenerateComponentError):
            cmd_detect(config)

    def test_k_one_rejected(self, tmp_path):
        dates = business_days(dt.date(2022, 1, 3), 60)
        write_price_csv(tmp_path / "B.csv", dates,
                        100 * np.exp(np.cumsum(np.random.default_rng(2).normal(0, 0.01, 60))))
        config = PipelineConfig(
            benchmark="B", indices=(_spec("B", tmp_path),), k=1,
            out_dir=str(tmp_path / "out"),
        )
        cmd_ingest(config)
        with pytest.raises(PipelineError, match="k >= 2"):
            cmd_detect(config)


class TestTests:
    def test_six_rows_with_stars(self, big_run):
        config, results = big_run
        rows = read_rows(Path(config.out_dir) / "tests_results.csv")
        assert len(rows) == 6
        assert results["tests"]["failures"] == []
        for r in rows:
            assert r["adf_stars"] == "**"  # simulated returns are stationary
            assert r["jb_stars"] == "**"  # heavy-tailed innovations
            assert r["archlm_stars"] == "**"  # EGARCH volatility clustering

    def test_white_noise_fixture_stars(self, tmp_path):
        starred_adf = unstarred_lm = 0
        seeds = range(10)
        for seed in seeds:
            base = tmp_path / f"wn{seed}"
            base.mkdir()
            dates = business_days(dt.date(2022, 1, 3), 601)
            rng = np.random.default_rng(100 + seed)
            returns = rng.normal(0.0, 1.0, 600)
            prices = 100 * np.exp(np.cumsum(returns / 100.0))
            write_price_csv(base / "B.csv", dates, np.insert(prices, 0, 100.0))
            write_price_csv(base / "WN.csv", dates, np.insert(prices, 0, 100.0))
            config = PipelineConfig(
                benchmark="B", indices=(_spec("B", base), _spec("WN", base)),
                out_dir=str(base / "out"),
            )
            cmd_ingest(config)
            cmd_tests(config)
            row = read_rows(Path(config.out_dir) / "tests_results.csv")[0]
            starred_adf += row["adf_stars"] == "**"
            unstarred_lm += row["archlm_stars"] == ""
        assert starred_adf >= 9
        assert unstarred_lm >= 9

    def test_garch_fixture_archlm_starred(self, tmp_path):
        from test_diagnostics import simulate_garch11

        dates = business_days(dt.date(2022, 1, 3), 2001)
        returns = simulate_garch11(np.random.default_rng(55), 2000)
        prices = 100 * np.exp(np.cumsum(returns / 100.0))
        write_price_csv(tmp_path / "B.csv", dates, np.insert(prices, 0, 100.0))
        write_price_csv(tmp_path / "G.csv", dates, np.insert(prices, 0, 100.0))
        config = PipelineConfig(
            benchmark="B", indices=(_spec("B", tmp_path), _spec("G", tmp_path)),
            out_dir=str(tmp_path / "out"),
        )
        cmd_ingest(config)
        cmd_tests(config)
        row = read_rows(Path(config.out_dir) / "tests_results.csv")[0]
        assert row["archlm_stars"] == "**"


class TestFit:
    def test_all_six_converged_and_recovered(self, big_run):
        config, results = big_run
        assert results["fit"]["failures"] == []
        assert results["fit"]["n_fitted"] == 6
        for ticker, (_, _, true) in TARGET_PARAMS.items():
            doc = json.loads(
                (Path(config.out_dir) / "egarch" / f"{ticker}_fit.json").read_text()
            )
            assert doc["converged"] is True
            var_eq = doc["variance_equation"]
            mean_eq = doc["mean_equation"]
            assert abs(var_eq["beta1"]["estimate"] - true.beta1) <= 0.05
            assert abs(var_eq["v1"]["estimate"] - true.v1) <= 0.20
            assert abs(mean_eq["m1"]["estimate"] - true.m1) <= 0.5
            assert abs(mean_eq["lambda"]["estimate"] - true.lam) <= 0.15

    def test_peak_volatility_matches_emitted_series(self, big_run):
        config, _ = big_run
        out = Path(config.out_dir)
        impact = {r["ticker"]: r for r in read_rows(out / "impact_summary.csv")}
        assert len(impact) == 6
        for ticker, row in impact.items():
            h = [float(r["h"]) for r in read_rows(out / "volatility" / f"{ticker}.csv")]
            assert float(row["peak_volatility"]) == max(h)

    def test_coefficient_tables_cover_all_fits(self, big_run):
        config, _ = big_run
        out = Path(config.out_dir)
        mean_rows = read_rows(out / "mean_equation.csv")
        var_rows = read_rows(out / "variance_equation.csv")
        assert len(mean_rows) == len(var_rows) == 6
        assert all(r["converged"] == "True" for r in mean_rows)
        for r in var_rows:
            assert r["v1_stars"] == "**"  # strong simulated turmoil impact
        for r in mean_rows:
            assert r["m1_stars"] == "**"

    def test_calendar_mismatch_aligned(self, tmp_path):
        import dataclasses

        config_path = write_fixture_set(tmp_path, n_days=400, seed=3)
        full = load_config(config_path)
        config = dataclasses.replace(
            full, indices=tuple(s for s in full.indices if s.ticker in ("STOXX50E", "DAX"))
        )
        cmd_ingest(config)
        cmd_detect(config)
        victim = returns_csv_path(config, "DAX")
        lines = victim.read_text().splitlines()
        del lines[10:15]  # five local holidays
        victim.write_text("\n".join(lines) + "\n")
        results = cmd_fit(config)
        assert results["failures"] == []
        h_rows = read_rows(Path(config.out_dir) / "volatility" / "DAX.csv")
        assert len(h_rows) == 399 - 5 - 1  # aligned returns minus the AR seed

    def test_corrupt_target_isolated(self, tmp_path):
        config_path = write_fixture_set(tmp_path, n_days=400, seed=3)
        config = load_config(config_path)
        cmd_ingest(config)
        cmd_detect(config)
        # truncate one intermediate returns file below the fit minimum
        victim = returns_csv_path(config, "CAC40")
        lines = victim.read_text().splitlines()[:50]
        victim.write_text("\n".join(lines) + "\n")
        results = cmd_fit(config)
        assert results["n_fitted"] == 5
        assert [t for t, _ in results["failures"]] == ["CAC40"]
        assert not (Path(config.out_dir) / "egarch" / "CAC40_fit.json").exists()


class TestConfig:
    def test_benchmark_must_be_configured(self, tmp_path):
        with pytest.raises(ValueError, match="benchmark"):
            PipelineConfig(benchmark="MISSING", indices=(_spec("A", tmp_path),))

    def test_window_order_checked(self, tmp_path):
        with pytest.raises(ValueError, match="window"):
            PipelineConfig(
                benchmark="A", indices=(_spec("A", tmp_path),),
                start=dt.date(2022, 5, 1), end=dt.date(2022, 1, 1),
            )

    def test_duplicate_tickers_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="duplicate"):
            PipelineConfig(benchmark="A", indices=(_spec("A", tmp_path), _spec("A", tmp_path)))

    def test_overrides(self, tmp_path):
        config = PipelineConfig(benchmark="A", indices=(_spec("A", tmp_path),))
        out = apply_overrides(config, seed=9, k=3, window="2022-01-01:2022-06-30",
                              out_dir="elsewhere", archlm_lags=6, adf_max_lag=4)
        assert out.seed == 9 and out.k == 3 and out.archlm_lags == 6 and out.adf_max_lag == 4
        assert out.out_dir == "elsewhere"
        assert out.start == dt.date(2022, 1, 1) and out.end == dt.date(2022, 6, 30)

    def test_load_config_resolves_paths(self, tmp_path):
        (tmp_path / "data").mkdir()
        doc = {
            "benchmark": "B",
            "out_dir": "out",
            "indices": [{"ticker": "B", "path": "data/b.csv"}],
        }
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(doc))
        config = load_config(cfg_path)
        assert Path(config.indices[0].path) == (tmp_path / "data" / "b.csv").resolve()
        assert Path(config.out_dir) == tmp_path / "out"


class TestCli:
    def test_run_all_exit_zero(self, tmp_path):
        config_path = write_fixture_set(tmp_path, n_days=320, seed=11)
        assert cli_main(["run-all", "--config", str(config_path)]) == 0
        assert (tmp_path / "out" / "impact_summary.csv").exists()

    def test_fatal_error_exit_one(self, tmp_path):
        missing = tmp_path / "nope.json"
        assert cli_main(["ingest", "--config", str(missing)]) == 1

    def test_partial_failure_exit_two(self, tmp_path):
        config_path = write_fixture_set(tmp_path, n_days=320, seed=12)
        assert cli_main(["ingest", "--config", str(config_path)]) == 0
        assert cli_main(["detect", "--config", str(config_path)]) == 0
        victim = tmp_path / "out" / "returns" / "DAX.csv"
        victim.write_text("date,return\n2022-01-03,0.0\n")
        assert cli_main(["fit", "--config", str(config_path)]) == 2

    def test_window_flag_round_trip(self, tmp_path):
        config_path = write_fixture_set(tmp_path, n_days=320, seed=13)
        code = cli_main([
            "ingest", "--config", str(config_path),
            "--window", "2022-01-03:2022-06-30", "--out", str(tmp_path / "w"),
        ])
        assert code == 0
        rows = read_rows(tmp_path / "w" / "returns" / "STOXX50E.csv")
        assert all(r["date"] <= "2022-06-30" for r in rows)


def _spec(ticker, base):
    from volregime.pipeline import IndexSpec

    return IndexSpec(ticker=ticker, path=str(Path(base) / f"{ticker}.csv"))
