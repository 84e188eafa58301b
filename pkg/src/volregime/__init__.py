"""Stable/turmoil regime detection in daily equity-index returns via a
mixture of generalised normal distributions, plus EGARCH(1,1)-in-mean
estimation of turmoil impact on returns and volatility."""

from .diagnostics import TestResult, adf_test, arch_lm, jarque_bera
from .egarch import (
    EgarchFitReport,
    EgarchMParams,
    FilterOutput,
    constrain,
    filter_returns,
    fit_egarch_m,
    neg_loglik,
    simulate_egarch_m,
    turmoil_impact_summary,
    unconstrain,
)
from .gnd import (
    GndParams,
    SkewGndParams,
    gnd_abs_moment,
    gnd_logpdf,
    gnd_sample,
    gnd_variance,
    sgnd_expected_abs,
    sgnd_logpdf,
    sgnd_sample,
)
from .mixture import (
    DegenerateComponentError,
    MgndComponent,
    MgndFitReport,
    MgndParams,
    RegimeClassification,
    classify,
    fit_mgnd,
    identify_turmoil_component,
    responsibilities,
    sample_mgnd,
)
from .pipeline import IndexSpec, PipelineConfig, load_config, run_all
from .series import (
    PriceSeries,
    ReturnSeries,
    SummaryStats,
    align,
    load_prices,
    log_returns,
    summary_stats,
)

__all__ = [
    "GndParams", "SkewGndParams", "gnd_logpdf", "gnd_variance", "gnd_abs_moment",
    "gnd_sample", "sgnd_logpdf", "sgnd_expected_abs", "sgnd_sample",
    "PriceSeries", "ReturnSeries", "SummaryStats", "load_prices", "log_returns",
    "align", "summary_stats",
    "MgndParams", "MgndComponent", "MgndFitReport", "RegimeClassification",
    "DegenerateComponentError", "responsibilities", "fit_mgnd", "classify",
    "identify_turmoil_component", "sample_mgnd",
    "TestResult", "jarque_bera", "adf_test", "arch_lm",
    "EgarchMParams", "FilterOutput", "EgarchFitReport", "filter_returns",
    "neg_loglik", "fit_egarch_m", "simulate_egarch_m", "turmoil_impact_summary",
    "constrain", "unconstrain",
    "PipelineConfig", "IndexSpec", "load_config", "run_all",
]
