"""Jarque-Bera normality testing for autoregressive series with time-varying variance."""

__version__ = "0.1.0"

from .bootstrap import BootstrapConfig, bootstrap_replicate, test_bootstrap
from .jb_test import (
    JbResult,
    Method,
    chi2_2_pvalue,
    jb_statistic,
    kappa2,
    kurtosis_limit,
    sample_moments,
    test_corrected,
    test_standard,
)
from .kernel_variance import (
    BandwidthGrid,
    CvRule,
    FixedRule,
    VariancePath,
    cv_score,
    fixed_bandwidth,
    select_bandwidth_cv,
    smooth_variance,
    standardize,
)
from .series_model import ArFit, Series, fit_ar, sample_mean, simulate_ar

__all__ = [
    "ArFit", "BandwidthGrid", "BootstrapConfig", "CvRule", "FixedRule", "JbResult",
    "Method", "Series", "VariancePath", "bootstrap_replicate", "chi2_2_pvalue",
    "cv_score", "fit_ar", "fixed_bandwidth", "jb_statistic", "kappa2",
    "kurtosis_limit", "sample_mean", "sample_moments", "select_bandwidth_cv",
    "simulate_ar", "smooth_variance", "standardize", "test_bootstrap",
    "test_corrected", "test_standard",
]
