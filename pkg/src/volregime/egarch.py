"""EGARCH(1,1)-in-mean with AR(1) term and exogenous turmoil dummies in both
equations, driven by standardized skewed-GND innovations.

Mean:      r_t = mu + m1*D_t + phi1*r_{t-1} + lam*h_t + eps_t
Variance:  ln h_t^2 = omega + v1*D_t + alpha1*z_{t-1}
                      + gamma1*(|z_{t-1}| - E|z|) + beta1*ln h_{t-1}^2
with z_t = eps_t / h_t.

The first return seeds the AR lag; likelihood contributions start at the
second observation. The presample log-variance defaults to the log sample
variance of the input returns and z_0 = 0.
"""

from __future__ import annotations

import datetime as dt
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm

from .gnd import SkewGndParams, _sgnd_draw, sgnd_expected_abs, sgnd_logpdf
from .series import ReturnSeries, as_values as _as_values

logger = logging.getLogger(__name__)

PARAM_NAMES = (
    "mu", "m1", "phi1", "lambda", "omega", "v1", "alpha1", "gamma1", "beta1", "nu", "s",
)
MEAN_EQ_NAMES = ("mu", "m1", "phi1", "lambda")
VARIANCE_EQ_NAMES = ("omega", "v1", "alpha1", "gamma1", "beta1", "nu", "s")

_NU_FLOOR = 0.3
_SURROGATE = 1e12
_LNH2_LIMIT = 700.0


class FilterError(RuntimeError):
    """The variance recursion left the representable range."""


@dataclass(frozen=True)
class EgarchMParams:
    mu: float
    m1: float
    phi1: float
    lam: float
    omega: float
    v1: float
    alpha1: float
    gamma1: float
    beta1: float
    innovation: SkewGndParams

    def __post_init__(self) -> None:
        if not abs(self.beta1) < 1.0:
            raise ValueError(f"|beta1| must be < 1 for stationarity, got {self.beta1}")

    def as_vector(self) -> np.ndarray:
        return np.array(
            [
                self.mu, self.m1, self.phi1, self.lam, self.omega, self.v1,
                self.alpha1, self.gamma1, self.beta1, self.innovation.nu, self.innovation.s,
            ]
        )

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "EgarchMParams":
        v = np.asarray(v, dtype=float)
        if v.shape != (11,):
            raise ValueError(f"expected 11 parameters, got shape {v.shape}")
        return cls(
            mu=float(v[0]), m1=float(v[1]), phi1=float(v[2]), lam=float(v[3]),
            omega=float(v[4]), v1=float(v[5]), alpha1=float(v[6]), gamma1=float(v[7]),
            beta1=float(v[8]), innovation=SkewGndParams(nu=float(v[9]), s=float(v[10])),
        )


@dataclass(frozen=True, eq=False)
class FilterOutput:
    """Filtered conditional standard deviations, residuals and log-likelihood."""

    h: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    eps: np.ndarray = field(repr=False)
    loglik: float
    dates: tuple[dt.date, ...] | None = None


@dataclass(frozen=True, eq=False)
class EgarchFitReport:
    ticker: str
    params: EgarchMParams
    std_errors: np.ndarray = field(repr=False)
    p_values: np.ndarray = field(repr=False)
    loglik: float
    converged: bool
    n_obs: int
    filtered: FilterOutput = field(repr=False)

    def peak_volatility(self) -> float:
        return float(np.max(self.filtered.h))

    def to_json_dict(self) -> dict:
        est = self.params.as_vector()
        per_param = {
            name: {
                "estimate": float(est[i]),
                "std_error": _nan_to_none(self.std_errors[i]),
                "p_value": _nan_to_none(self.p_values[i]),
                "stars": significance_stars(float(self.p_values[i])),
            }
            for i, name in enumerate(PARAM_NAMES)
        }
        return {
            "ticker": self.ticker,
            "loglik": self.loglik,
            "converged": self.converged,
            "n_obs": self.n_obs,
            "peak_volatility": self.peak_volatility(),
            "mean_equation": {n: per_param[n] for n in MEAN_EQ_NAMES},
            "variance_equation": {n: per_param[n] for n in VARIANCE_EQ_NAMES},
        }


def _nan_to_none(x: float):
    return None if math.isnan(x) else float(x)


def significance_stars(p: float) -> str:
    """Coefficient-table stars: ** at 1%, * at 5%."""
    if math.isnan(p):
        return ""
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


# --- transforms --------------------------------------------------------------


def unconstrain(params: EgarchMParams) -> np.ndarray:
    """Map parameters to the unconstrained optimizer space."""
    raw = params.as_vector()
    raw[8] = math.atanh(params.beta1)
    raw[9] = math.log(params.innovation.nu - _NU_FLOOR)
    raw[10] = math.log(params.innovation.s)
    return raw


def constrain(raw: Sequence[float]) -> EgarchMParams:
    """Inverse of unconstrain: tanh for beta1, floor+exp for nu, exp for s.

    tanh rounds to exactly +-1.0 for |raw| >~ 19, so beta1 is clamped a hair
    inside the open interval to keep the objective finite everywhere.
    """
    v = np.asarray(raw, dtype=float).copy()
    if v.shape != (11,):
        raise ValueError(f"expected 11 raw parameters, got shape {v.shape}")
    beta = math.tanh(v[8])
    if abs(beta) >= 1.0:
        beta = math.copysign(1.0 - 1e-12, beta)
    v[8] = beta
    v[9] = _NU_FLOOR + math.exp(v[9])
    v[10] = math.exp(v[10])
    return EgarchMParams.from_vector(v)


# --- filtering ---------------------------------------------------------------


def _check_dummy(dummy, n: int) -> list[float]:
    d = np.asarray(dummy, dtype=float)
    if d.shape != (n,):
        raise ValueError(f"dummy misaligned: length {d.shape} vs {n} returns")
    if not np.all((d == 0.0) | (d == 1.0)):
        raise ValueError("dummy must contain only 0/1 values")
    return d.tolist()


def filter_returns(
    params: EgarchMParams,
    returns,
    dummy,
    presample_logvar: float | None = None,
) -> FilterOutput:
    """Run the mean/variance recursions over a return series.

    Returns per-date h, z and eps for every observation after the first
    (the first return only seeds the AR lag), plus the log-likelihood
    sum of [log f_z(z_t) - ln h_t].
    """
    r = _as_values(returns)
    n = r.size
    if n < 2:
        raise ValueError("need at least 2 returns")
    d = _check_dummy(dummy, n)
    rr = r.tolist()
    if presample_logvar is None:
        presample_logvar = math.log(float(np.var(r, ddof=1)))

    eabs = sgnd_expected_abs(params.innovation)
    mu, m1, phi1, lam = params.mu, params.m1, params.phi1, params.lam
    omega, v1, alpha1, gamma1, beta1 = (
        params.omega, params.v1, params.alpha1, params.gamma1, params.beta1,
    )

    h_out = [0.0] * (n - 1)
    z_out = [0.0] * (n - 1)
    eps_out = [0.0] * (n - 1)
    lnh2_out = [0.0] * (n - 1)
    lnh2_prev = presample_logvar
    z_prev = 0.0
    for t in range(1, n):
        lnh2 = (
            omega + v1 * d[t] + alpha1 * z_prev
            + gamma1 * (abs(z_prev) - eabs) + beta1 * lnh2_prev
        )
        if not (-_LNH2_LIMIT < lnh2 < _LNH2_LIMIT):
            raise FilterError(f"log-variance recursion left (-700, 700) at t={t}")
        h = math.exp(0.5 * lnh2)
        eps = rr[t] - mu - m1 * d[t] - phi1 * rr[t - 1] - lam * h
        z = eps / h
        h_out[t - 1] = h
        z_out[t - 1] = z
        eps_out[t - 1] = eps
        lnh2_out[t - 1] = lnh2
        lnh2_prev = lnh2
        z_prev = z

    z_arr = np.array(z_out)
    terms = sgnd_logpdf(z_arr, params.innovation) - 0.5 * np.array(lnh2_out)
    loglik = math.fsum(terms)
    dates = returns.dates[1:] if isinstance(returns, ReturnSeries) else None
    return FilterOutput(
        h=np.array(h_out), z=z_arr, eps=np.array(eps_out), loglik=loglik, dates=dates
    )


def neg_loglik(raw, returns, dummy, presample_logvar: float | None = None) -> float:
    """Negative log-likelihood of an unconstrained parameter vector.

    Non-finite recursions come back as a large finite surrogate so
    quasi-Newton line searches can back off instead of crashing.
    """
    try:
        params = constrain(raw)
        out = filter_returns(params, returns, dummy, presample_logvar)
    except (FilterError, OverflowError):
        return _SURROGATE
    if not math.isfinite(out.loglik):
        return _SURROGATE
    return -out.loglik


# --- estimation --------------------------------------------------------------


def default_start(returns) -> EgarchMParams:
    r = _as_values(returns)
    return EgarchMParams(
        mu=float(np.mean(r)), m1=0.0, phi1=0.0, lam=0.0,
        omega=math.log(float(np.var(r, ddof=1))) * (1.0 - 0.95),
        v1=0.0, alpha1=-0.05, gamma1=0.1, beta1=0.95,
        innovation=SkewGndParams(nu=1.5, s=1.0),
    )


def _hessian(f, theta: np.ndarray, scale: float = 1e-3) -> np.ndarray:
    """Central-difference Hessian; steps shrink near the beta1 boundary.

    The default step beats finite-difference noise on the likelihood (the
    curvature is O(10^2-10^5), the objective is summed to ~1e-9) while
    staying far inside the quadratic regime.
    """
    k = theta.size
    h = scale * np.maximum(1.0, np.abs(theta))
    h[8] = min(h[8], (1.0 - abs(theta[8])) / 4.0)
    h[9] = min(h[9], (theta[9] - _NU_FLOOR) / 4.0)
    h[10] = min(h[10], theta[10] / 4.0)
    hess = np.empty((k, k))
    f0 = f(theta)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        hess[i, i] = (f(theta + ei) - 2.0 * f0 + f(theta - ei)) / h[i] ** 2
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = h[j]
            hess[i, j] = hess[j, i] = (
                f(theta + ei + ej) - f(theta + ei - ej)
                - f(theta - ei + ej) + f(theta - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return hess


def fit_egarch_m(
    returns,
    dummy,
    init: EgarchMParams | None = None,
    presample_logvar: float | None = None,
) -> EgarchFitReport:
    """Maximum-likelihood fit by quasi-Newton search with numerical gradients.

    Standard errors come from the inverse central-difference Hessian of the
    negative log-likelihood in the natural parameterization; p-values use
    the asymptotic normal approximation. One perturbed restart is attempted
    when the first search does not converge.
    """
    r = _as_values(returns)
    n = r.size
    if n < 250:
        raise ValueError(f"need at least 250 returns, got {n}")
    if n < 500:
        logger.warning("only %d returns; estimates may be unstable", n)
    d = np.asarray(dummy, dtype=float)
    _check_dummy(d, n)
    if presample_logvar is None:
        presample_logvar = math.log(float(np.var(r, ddof=1)))

    start = init if init is not None else default_start(returns)
    raw0 = unconstrain(start)
    obj = lambda raw: neg_loglik(raw, r, d, presample_logvar)
    # 1000 function-with-gradient evaluations; each finite-difference gradient
    # costs len(raw)+1 underlying objective calls, which is what maxfun counts.
    opts = {"maxfun": 1000 * (raw0.size + 1), "maxiter": 1000, "gtol": 1e-5}
    res = minimize(obj, raw0, method="L-BFGS-B", options=opts)
    if not res.success:
        rng = np.random.default_rng(0)
        retry = minimize(obj, raw0 + rng.normal(0.0, 0.05, raw0.size),
                         method="L-BFGS-B", options=opts)
        if retry.fun < res.fun:
            res = retry
    converged = bool(res.success)
    if not converged:
        logger.warning("EGARCH-M optimizer did not converge: %s", res.message)

    params = constrain(res.x)
    filtered = filter_returns(params, returns, d, presample_logvar)
    theta = params.as_vector()

    def f_constrained(vec: np.ndarray) -> float:
        try:
            p = EgarchMParams.from_vector(vec)
            out = filter_returns(p, r, d, presample_logvar)
        except (FilterError, OverflowError, ValueError):
            return _SURROGATE
        return -out.loglik if math.isfinite(out.loglik) else _SURROGATE

    std_errors = np.full(11, math.nan)
    for scale in (1e-3, 5e-3):
        try:
            diag = np.diag(np.linalg.inv(_hessian(f_constrained, theta, scale)))
        except np.linalg.LinAlgError:
            continue
        with np.errstate(invalid="ignore"):
            std_errors = np.where(diag > 0, np.sqrt(np.abs(diag)), math.nan)
        if np.all(diag > 0):
            break
    if not np.all(np.isfinite(std_errors)):
        logger.warning("Hessian not positive definite; some std errors undefined")
    with np.errstate(invalid="ignore"):
        p_values = 2.0 * norm.sf(np.abs(theta) / std_errors)

    ticker = returns.ticker if isinstance(returns, ReturnSeries) else ""
    return EgarchFitReport(
        ticker=ticker,
        params=params,
        std_errors=std_errors,
        p_values=p_values,
        loglik=filtered.loglik,
        converged=converged,
        n_obs=n - 1,
        filtered=filtered,
    )


# --- simulation --------------------------------------------------------------


def simulate_egarch_m(
    params: EgarchMParams,
    dummy,
    n: int,
    seed: int,
    presample_logvar: float | None = None,
    with_paths: bool = False,
    ticker: str = "SIM",
    start_date: dt.date = dt.date(2000, 1, 3),
):
    """Generate n returns by running the recursions forward on fresh draws.

    Built to invert filter_returns exactly: feeding the simulated series back
    through the filter with the same presample log-variance reproduces the
    generating h and z paths. The first return has no AR predecessor; it is
    mu + m1*D_0 + lam*h_0 + h_0*z_0 at the presample volatility level.
    """
    d = _check_dummy(dummy, n)
    if presample_logvar is None:
        presample_logvar = params.omega / (1.0 - params.beta1)
    rng = np.random.default_rng(seed)
    draws = _sgnd_draw(rng, params.innovation, n).tolist()
    eabs = sgnd_expected_abs(params.innovation)

    rr = [0.0] * n
    h_path = [0.0] * (n - 1)
    z_path = [0.0] * (n - 1)
    eps_path = [0.0] * (n - 1)
    lnh2_path = [0.0] * (n - 1)
    h0 = math.exp(0.5 * presample_logvar)
    rr[0] = params.mu + params.m1 * d[0] + params.lam * h0 + h0 * draws[0]
    lnh2_prev = presample_logvar
    z_prev = 0.0  # matches the filter's z_0 = 0 convention
    for t in range(1, n):
        lnh2 = (
            params.omega + params.v1 * d[t] + params.alpha1 * z_prev
            + params.gamma1 * (abs(z_prev) - eabs) + params.beta1 * lnh2_prev
        )
        if not (-_LNH2_LIMIT < lnh2 < _LNH2_LIMIT):
            raise FilterError(f"simulated log-variance left (-700, 700) at t={t}")
        h = math.exp(0.5 * lnh2)
        z = draws[t]
        eps = h * z
        rr[t] = params.mu + params.m1 * d[t] + params.phi1 * rr[t - 1] + params.lam * h + eps
        h_path[t - 1] = h
        z_path[t - 1] = z
        eps_path[t - 1] = eps
        lnh2_path[t - 1] = lnh2
        lnh2_prev = lnh2
        z_prev = z

    dates = tuple(start_date + dt.timedelta(days=t) for t in range(n))
    series = ReturnSeries(ticker=ticker, dates=dates, values=np.array(rr))
    if not with_paths:
        return series
    z_arr = np.array(z_path)
    terms = sgnd_logpdf(z_arr, params.innovation) - 0.5 * np.array(lnh2_path)
    paths = FilterOutput(
        h=np.array(h_path), z=z_arr, eps=np.array(eps_path),
        loglik=math.fsum(terms), dates=dates[1:],
    )
    return series, paths


def turmoil_impact_summary(fits: Sequence[EgarchFitReport]) -> list[dict]:
    """Per-index turmoil impacts (m1, v1 with stars) and peak volatility."""
    if not fits:
        raise ValueError("need at least one fit")
    i_m1 = PARAM_NAMES.index("m1")
    i_v1 = PARAM_NAMES.index("v1")
    rows = []
    for fit in fits:
        vec = fit.params.as_vector()
        rows.append(
            {
                "ticker": fit.ticker,
                "m1": float(vec[i_m1]),
                "m1_stars": significance_stars(float(fit.p_values[i_m1])),
                "v1": float(vec[i_v1]),
                "v1_stars": significance_stars(float(fit.p_values[i_v1])),
                "peak_volatility": fit.peak_volatility(),
                "converged": fit.converged,
            }
        )
    return rows
