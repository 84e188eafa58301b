"""Preliminary hypothesis tests on return series: Jarque-Bera normality,
augmented Dickey-Fuller unit root (constant-only, MacKinnon p-values) and
the ARCH-LM heteroskedasticity test."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.stats import chi2, norm

from .series import as_values as _as_values

DEFAULT_ARCH_LAGS = 12


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    lags: int | None
    decision_1pct: bool

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p_value must be in [0, 1], got {self.p_value}")


def jb_statistic(n: int, skewness: float, kurtosis_excess: float) -> float:
    """JB = n (S^2/6 + K_excess^2/24)."""
    return n * (skewness**2 / 6.0 + kurtosis_excess**2 / 24.0)


def jarque_bera(returns) -> TestResult:
    """Jarque-Bera normality test against chi-square(2).

    Skewness and excess kurtosis use the same n-denominator moment ratios as
    summary_stats, so a sample with S = 0 and K_excess = 0 scores exactly 0.
    """
    r = _as_values(returns)
    n = r.size
    if n < 8:
        raise ValueError(f"need n >= 8, got {n}")
    d = r - r.mean()
    m2 = float(np.mean(d**2))
    if m2 == 0.0:
        raise ValueError("constant series: moments undefined")
    skew = float(np.mean(d**3) / m2**1.5)
    kur_ex = float(np.mean(d**4) / m2**2) - 3.0
    stat = jb_statistic(n, skew, kur_ex)
    p = float(chi2.sf(stat, 2))
    return TestResult(statistic=stat, p_value=p, lags=None, decision_1pct=p < 0.01)


# --- ADF ---------------------------------------------------------------------


@lru_cache(maxsize=1)
def _mackinnon_table() -> dict:
    with resources.files("volregime").joinpath("adf_mackinnon.json").open() as fh:
        return json.load(fh)


def mackinnon_pvalue(stat: float) -> float:
    """Response-surface p-value for the constant-only tau statistic."""
    surf = _mackinnon_table()["pvalue_surface"]
    if stat > surf["tau_max"]:
        return 1.0
    if stat < surf["tau_min"]:
        return 0.0
    coefs = surf["small_p"] if stat <= surf["tau_star"] else surf["large_p"]
    return float(norm.cdf(np.polyval(coefs[::-1], stat)))


def mackinnon_crit(level: str, nobs: int) -> float:
    """Finite-sample critical value b0 + b1/T + b2/T^2 + b3/T^3."""
    b = _mackinnon_table()["critical_value_surface"][level]
    t = float(nobs)
    return b[0] + b[1] / t + b[2] / t**2 + b[3] / t**3


def _ols(y: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """(coefficients, residuals, sigma^2) with a rank check."""
    coef, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
    if rank < x.shape[1]:
        raise np.linalg.LinAlgError("singular regression matrix")
    resid = y - x @ coef
    dof = y.size - x.shape[1]
    if dof <= 0:
        raise np.linalg.LinAlgError("no residual degrees of freedom")
    return coef, resid, float(resid @ resid) / dof


def schwert_max_lag(n: int) -> int:
    return int(12.0 * (n / 100.0) ** 0.25)


def adf_test(returns, max_lag: int | None = None) -> TestResult:
    """Constant-only ADF regression with AIC lag selection.

    Delta y_t is regressed on (1, y_{t-1}, Delta y_{t-1..p}); the statistic
    is the t-ratio on the lagged level. p comes from the MacKinnon response
    surface. max_lag defaults to the Schwert rule 12*(n/100)^(1/4); the lag
    order is picked by AIC on the max_lag-trimmed common sample, then the
    test regression is re-run on the full sample available at that order.
    """
    y = _as_values(returns)
    n = y.size
    if max_lag is None:
        max_lag = schwert_max_lag(n)
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    if n < 25 + max_lag:
        raise ValueError(f"need n >= {25 + max_lag} for max_lag={max_lag}, got {n}")

    dy = np.diff(y)

    def design(p: int, trim: int) -> tuple[np.ndarray, np.ndarray]:
        rows = dy.size - trim
        lhs = dy[trim:]
        cols = [np.ones(rows), y[trim:-1]]
        for j in range(1, p + 1):
            cols.append(dy[trim - j : dy.size - j])
        return lhs, np.column_stack(cols)

    best_lag = 0
    if max_lag > 0:
        best_aic = math.inf
        for p in range(max_lag + 1):
            lhs, x = design(p, max_lag)
            _, resid, _ = _ols(lhs, x)
            nobs = lhs.size
            aic = nobs * math.log(resid @ resid / nobs) + 2.0 * x.shape[1]
            if aic < best_aic:
                best_aic, best_lag = aic, p

    lhs, x = design(best_lag, best_lag)
    coef, resid, s2 = _ols(lhs, x)
    xtx_inv = np.linalg.inv(x.T @ x)
    se = math.sqrt(s2 * xtx_inv[1, 1])
    stat = float(coef[1] / se)
    p = mackinnon_pvalue(stat)
    return TestResult(statistic=stat, p_value=p, lags=best_lag, decision_1pct=p < 0.01)


def arch_lm(returns, lags: int = DEFAULT_ARCH_LAGS) -> TestResult:
    """Engle LM test: n_eff * R^2 of squared demeaned returns on their lags."""
    r = _as_values(returns)
    n = r.size
    if lags < 1:
        raise ValueError("lags must be >= 1")
    if n < 5 * lags:
        raise ValueError(f"need n >= {5 * lags} for lags={lags}, got {n}")
    sq = (r - r.mean()) ** 2
    lhs = sq[lags:]
    cols = [np.ones(lhs.size)] + [sq[lags - j : n - j] for j in range(1, lags + 1)]
    x = np.column_stack(cols)
    _, resid, _ = _ols(lhs, x)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((lhs - lhs.mean()) ** 2))
    if ss_tot == 0.0:
        raise np.linalg.LinAlgError("constant squared series")
    r2 = 1.0 - ss_res / ss_tot
    stat = lhs.size * r2
    p = float(chi2.sf(stat, lags))
    return TestResult(statistic=stat, p_value=p, lags=lags, decision_1pct=p < 0.01)
