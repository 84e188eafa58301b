"""K-component mixture of generalised normal distributions: EM fitting,
Naive Bayes regime classification and the turmoil dummy series."""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .gnd import GndParams, gnd_logpdf, gnd_variance
from .series import ReturnSeries, as_values as _as_values

logger = logging.getLogger(__name__)

InitStrategy = Literal["quantile", "random"]

NU_LO, NU_HI = 0.3, 5.0
_MIN_WEIGHT = 1e-4
_SCALE_FLOOR_FRAC = 1e-4
_NU_BOUNDARY_TOL = 1e-3


class MgndFitError(RuntimeError):
    """EM could not produce a valid fit."""


class DegenerateComponentError(MgndFitError):
    """A component collapsed (vanishing weight or scale)."""


@dataclass(frozen=True)
class MgndComponent:
    pi: float
    mu: float
    delta: float
    nu: float

    def __post_init__(self) -> None:
        if not (0.0 < self.pi <= 1.0):
            raise ValueError(f"pi must be in (0, 1], got {self.pi}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")

    @property
    def sigma(self) -> float:
        """Per-component standard deviation sqrt(delta^2 Gamma(3/nu)/Gamma(1/nu))."""
        return math.sqrt(gnd_variance(self.delta, self.nu))

    def gnd(self) -> GndParams:
        return GndParams(mu=self.mu, delta=self.delta, nu=self.nu)


@dataclass(frozen=True)
class MgndParams:
    components: tuple[MgndComponent, ...]

    def __post_init__(self) -> None:
        total = math.fsum(c.pi for c in self.components)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"weights must sum to 1, got {total}")

    @property
    def k(self) -> int:
        return len(self.components)


@dataclass(frozen=True, eq=False)
class RegimeClassification:
    """Per-observation posteriors, hard labels and the 0/1 turmoil dummy."""

    posteriors: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    turmoil_index: int
    dummy: np.ndarray = field(repr=False)
    dates: tuple[dt.date, ...] | None = None


@dataclass(frozen=True, eq=False)
class MgndFitReport:
    params: MgndParams
    loglik: float
    iterations: int
    converged: bool
    loglik_path: tuple[float, ...]
    nu_at_boundary: tuple[bool, ...]

    def to_json_dict(self) -> dict:
        return {
            "components": [
                {"pi": c.pi, "mu": c.mu, "delta": c.delta, "nu": c.nu, "sigma": c.sigma}
                for c in self.params.components
            ],
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
            "nu_at_boundary": list(self.nu_at_boundary),
        }


def _weighted_logpdf(r: np.ndarray, params: MgndParams) -> np.ndarray:
    """(n, K) matrix of log(pi_k) + log f_k(r)."""
    cols = [
        np.log(c.pi) + gnd_logpdf(r, c.gnd()) for c in params.components
    ]
    return np.column_stack(cols)


def loglik_mgnd(returns, params: MgndParams) -> float:
    """Observed-data log-likelihood of the mixture."""
    lw = _weighted_logpdf(_as_values(returns), params)
    return float(np.sum(logsumexp(lw, axis=1)))


def responsibilities(returns, params: MgndParams) -> np.ndarray:
    """Posterior component probabilities, one row per observation.

    Computed in log space with row-max subtraction so extreme returns never
    underflow; rows are normalized to sum to 1.
    """
    lw = _weighted_logpdf(_as_values(returns), params)
    lw -= lw.max(axis=1, keepdims=True)
    w = np.exp(lw)
    w /= w.sum(axis=1, keepdims=True)
    return w


# --- EM ---------------------------------------------------------------------


def _nu_from_raw(raw: float) -> float:
    return NU_LO + (NU_HI - NU_LO) / (1.0 + math.exp(-raw))


def _raw_from_nu(nu: float) -> float:
    nu = min(max(nu, NU_LO + 1e-9), NU_HI - 1e-9)
    return math.log((nu - NU_LO) / (NU_HI - nu))


def _component_nll(
    theta: np.ndarray, r: np.ndarray, w: np.ndarray, wsum: float, mu0: float
) -> float:
    dmu, log_delta, raw_nu = theta
    delta = math.exp(log_delta)
    nu = _nu_from_raw(raw_nu)
    from scipy.special import gammaln

    log_norm = math.log(nu) - math.log(2.0 * delta) - gammaln(1.0 / nu)
    val = wsum * log_norm - float(w @ (np.abs((r - mu0 - dmu) / delta) ** nu))
    if not math.isfinite(val):
        return 1e300
    return -val


def _maximize_component(
    r: np.ndarray, w: np.ndarray, comp: MgndComponent, max_inner: int
) -> MgndComponent:
    """Improve one component's (mu, delta, nu) on its responsibility-weighted
    log-likelihood. Nelder-Mead on (mu increment, log delta, box-transformed
    nu) keeps positivity/box constraints, tolerates the kink of |.|^nu at mu,
    and is exactly location-equivariant because the increment starts at 0."""
    wsum = float(w.sum())
    x0 = np.array([0.0, math.log(comp.delta), _raw_from_nu(comp.nu)])
    res = minimize(
        _component_nll,
        x0,
        args=(r, w, wsum, comp.mu),
        method="Nelder-Mead",
        options={"maxiter": max_inner},
    )
    dmu, log_delta, raw_nu = res.x
    return MgndComponent(
        pi=comp.pi,
        mu=comp.mu + float(dmu),
        delta=math.exp(float(log_delta)),
        nu=_nu_from_raw(float(raw_nu)),
    )


def _moment_component(group: np.ndarray, pi: float, scale_floor: float) -> MgndComponent:
    var = float(np.var(group)) if group.size else 0.0
    delta = math.sqrt(2.0 * var) if var > 0 else scale_floor
    return MgndComponent(
        pi=pi, mu=float(np.mean(group)) if group.size else 0.0, delta=max(delta, scale_floor), nu=2.0
    )


def _quantile_init(r: np.ndarray, k: int, scale_floor: float) -> MgndParams:
    med = float(np.median(r))
    a = np.abs(r - med)
    if k == 1:
        return MgndParams(components=(_moment_component(r, 1.0, scale_floor),))
    if k == 2:
        thr = float(np.quantile(a, 0.85))
        core, tail = r[a <= thr], r[a > thr]
        if tail.size == 0:
            raise DegenerateComponentError("tail group empty at initialization")
        return MgndParams(
            components=(
                _moment_component(core, 0.85, scale_floor),
                _moment_component(tail, 0.15, scale_floor),
            )
        )
    edges = np.quantile(a, np.linspace(0.0, 1.0, k + 1))
    comps = []
    for j in range(k):
        mask = (a >= edges[j]) & (a <= edges[j + 1] if j == k - 1 else a < edges[j + 1])
        group = r[mask]
        comps.append(_moment_component(group, max(group.size, 1) / r.size, scale_floor))
    total = sum(c.pi for c in comps)
    comps = [
        MgndComponent(pi=c.pi / total, mu=c.mu, delta=c.delta, nu=c.nu) for c in comps
    ]
    return MgndParams(components=tuple(comps))


def _random_init(
    r: np.ndarray, k: int, scale_floor: float, rng: np.random.Generator
) -> MgndParams:
    resp = rng.dirichlet(np.ones(k), size=r.size)
    comps = []
    for j in range(k):
        w = resp[:, j]
        wsum = float(w.sum())
        mu = float(w @ r / wsum)
        var = float(w @ (r - mu) ** 2 / wsum)
        delta = max(math.sqrt(2.0 * var), scale_floor) if var > 0 else scale_floor
        comps.append(MgndComponent(pi=wsum / r.size, mu=mu, delta=delta, nu=2.0))
    total = sum(c.pi for c in comps)
    comps = [MgndComponent(pi=c.pi / total, mu=c.mu, delta=c.delta, nu=c.nu) for c in comps]
    return MgndParams(components=tuple(comps))


def _check_degenerate(params: MgndParams, scale_floor: float, iteration: int) -> None:
    for j, c in enumerate(params.components):
        if c.pi < _MIN_WEIGHT:
            raise DegenerateComponentError(
                f"component {j} weight collapsed to {c.pi:.3e} at iteration {iteration}"
            )
        if c.delta < scale_floor:
            raise DegenerateComponentError(
                f"component {j} scale {c.delta:.3e} fell below floor "
                f"{scale_floor:.3e} at iteration {iteration}"
            )


def _run_em(
    r: np.ndarray,
    params: MgndParams,
    tol: float,
    max_iter: int,
    scale_floor: float,
    max_inner: int = 30,
) -> MgndFitReport:
    _check_degenerate(params, scale_floor, 0)
    ll = loglik_mgnd(r, params)
    if not math.isfinite(ll):
        raise MgndFitError("non-finite log-likelihood at initialization")
    path = [ll]
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        resp = responsibilities(r, params)
        pis = resp.mean(axis=0)
        comps = []
        for j, comp in enumerate(params.components):
            updated = _maximize_component(r, resp[:, j], comp, max_inner)
            comps.append(
                MgndComponent(pi=float(pis[j]), mu=updated.mu, delta=updated.delta, nu=updated.nu)
            )
        params = MgndParams(components=tuple(comps))
        _check_degenerate(params, scale_floor, iteration)
        ll_new = loglik_mgnd(r, params)
        if not math.isfinite(ll_new):
            raise MgndFitError(f"non-finite log-likelihood at iteration {iteration}")
        if ll_new < ll - 1e-8:
            raise MgndFitError(
                f"log-likelihood decreased at iteration {iteration}: {ll} -> {ll_new}"
            )
        path.append(ll_new)
        if abs(ll_new - ll) <= tol * (abs(ll) + 1e-12):
            ll = ll_new
            converged = True
            break
        ll = ll_new
    boundary = tuple(
        c.nu <= NU_LO + _NU_BOUNDARY_TOL or c.nu >= NU_HI - _NU_BOUNDARY_TOL
        for c in params.components
    )
    if any(boundary):
        logger.warning("nu estimate at search-box boundary: %s", boundary)
    return MgndFitReport(
        params=params,
        loglik=ll,
        iterations=iteration,
        converged=converged,
        loglik_path=tuple(path),
        nu_at_boundary=boundary,
    )


def fit_mgnd(
    returns,
    k: int = 2,
    init: InitStrategy = "quantile",
    tol: float = 1e-6,
    max_iter: int = 500,
    seed: int = 0,
    restarts: int = 5,
) -> MgndFitReport:
    """Fit the K-component mixture by EM.

    E-step: posterior responsibilities. M-step: exact weight update plus a
    bounded Nelder-Mead improvement of each component's (mu, delta, nu), so
    the observed-data log-likelihood never decreases (generalized EM).
    Stops on relative log-likelihood change < tol or at max_iter.

    init="quantile" splits at the 85th percentile of |r - median| and
    moment-matches the core/tail groups; init="random" draws random
    responsibilities `restarts` times (seeded) and keeps the best fit.
    """
    r = _as_values(returns)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if r.size < 10 * k:
        raise ValueError(f"need at least {10 * k} observations for k={k}, got {r.size}")
    scale_floor = _SCALE_FLOOR_FRAC * float(np.std(r, ddof=1) if r.size > 1 else 0.0)
    if init == "quantile":
        return _run_em(r, _quantile_init(r, k, scale_floor), tol, max_iter, scale_floor)
    if init != "random":
        raise ValueError(f"unknown init strategy {init!r}")
    rng = np.random.default_rng(seed)
    best: MgndFitReport | None = None
    last_error: MgndFitError | None = None
    for _ in range(restarts):
        start = _random_init(r, k, scale_floor, rng)
        try:
            report = _run_em(r, start, tol, max_iter, scale_floor)
        except MgndFitError as exc:
            last_error = exc
            continue
        if best is None or report.loglik > best.loglik:
            best = report
    if best is None:
        raise last_error if last_error is not None else MgndFitError("all restarts failed")
    return best


# --- classification ----------------------------------------------------------


def identify_turmoil_component(params: MgndParams) -> int:
    """Index of the turmoil component of a 2-component mixture.

    The component with the larger per-component standard deviation; sigmas
    equal to 1e-12 fall back to the smaller nu, then to the lower index.
    """
    if params.k != 2:
        raise ValueError(f"turmoil identification is defined for K=2 only, got K={params.k}")
    s0, s1 = (c.sigma for c in params.components)
    if abs(s0 - s1) > 1e-12:
        return 0 if s0 > s1 else 1
    n0, n1 = (c.nu for c in params.components)
    if abs(n0 - n1) > 1e-12:
        return 0 if n0 < n1 else 1
    return 0


def classify(returns, params: MgndParams) -> RegimeClassification:
    """Assign each return to its posterior-mode component and derive the dummy.

    Exact posterior ties resolve to the lower component index; dummy_t = 1
    exactly when the label is the turmoil component.
    """
    r = _as_values(returns)
    post = responsibilities(r, params)
    labels = np.argmax(post, axis=1)
    turmoil = identify_turmoil_component(params)
    dummy = (labels == turmoil).astype(np.int64)
    dates = returns.dates if isinstance(returns, ReturnSeries) else None
    return RegimeClassification(
        posteriors=post, labels=labels, turmoil_index=turmoil, dummy=dummy, dates=dates
    )


def sample_mgnd(params: MgndParams, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw n mixture values plus their generating component labels."""
    rng = np.random.default_rng(seed)
    pis = np.array([c.pi for c in params.components])
    labels = rng.choice(params.k, size=n, p=pis / pis.sum())
    out = np.empty(n)
    for j, c in enumerate(params.components):
        mask = labels == j
        m = int(mask.sum())
        if m == 0:
            continue
        g = rng.gamma(1.0 / c.nu, 1.0, size=m)
        sign = rng.integers(0, 2, size=m) * 2.0 - 1.0
        out[mask] = c.mu + c.delta * sign * g ** (1.0 / c.nu)
    return out, labels


def write_dummy_csv(classification: RegimeClassification, path) -> None:
    """Two-column (date, 0/1) CSV export of the turmoil dummy."""
    if classification.dates is None:
        raise ValueError("classification carries no dates")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "turmoil"])
        for d, v in zip(classification.dates, classification.dummy):
            writer.writerow([d.isoformat(), int(v)])
