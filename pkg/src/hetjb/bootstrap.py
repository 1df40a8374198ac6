"""Parametric bootstrap for the variance-corrected JB test.

Each replicate rebuilds a series from the fitted AR model with Gaussian errors
scaled by the estimated standard deviation path, refits mean and AR
coefficients, re-estimates the variance path and recomputes the corrected JB
statistic.  The p-value is ``(1 + #{Q_b >= Q_obs}) / (B + 1)``.

Replicate ``i`` draws from ``make_rng(derive_seed(master_seed, i))``, and
replicates are processed in fixed chunks, so the output is identical for any
number of workers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Optional, Union

import numpy as np

from . import kernel_variance as kv
from ._parallel import ordered_map
from .errors import BootstrapFailure, InvalidInputError, ReplicateFailure
from .jb_test import Method, corrected_statistic, jb_many
from .rng import derive_seed, make_rng
from .series_model import ArFit, fit_ar, fit_ar_many, simulate_ar

log = logging.getLogger(__name__)

CHUNK = 256
MAX_FAILURE_RATE = 0.01

Rule = Union[kv.CvRule, kv.FixedRule]


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 499
    rule: Rule = field(default_factory=kv.CvRule)
    master_seed: int = 0
    parallel: bool = False
    jobs: Optional[int] = None
    # False reuses the observed-data bandwidth in every replicate
    reselect_bandwidth: bool = True

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidInputError("need at least one bootstrap replicate")
        if not 0 <= self.master_seed < 2 ** 64:
            raise InvalidInputError("master_seed must be a 64-bit unsigned integer")


def replicate_seeds(master_seed, replicates):
    return [derive_seed(master_seed, i) for i in range(replicates)]


def _full_path(fit, path):
    # the first p observations have no residual; reuse the first path value
    return np.concatenate((np.full(fit.order, path.h[0]), path.h))


def _replicate_chunk(seeds, fit, h_full, rule):
    n, p = fit.n, fit.order
    E = np.stack([make_rng(s).standard_normal(n) for s in seeds])
    Y = simulate_ar(fit.omega_hat, fit.theta_hat, E * h_full)
    _, _, R, ok = fit_ar_many(Y, p)
    D = (R - R.mean(axis=1, keepdims=True)).T
    D[:, ~ok] = 0.0
    h2, _ = kv.smooth_many(D, rule)
    with np.errstate(invalid="ignore", divide="ignore"):
        valid = ok & np.all(h2 > 0.0, axis=0) & np.all(np.isfinite(h2), axis=0)
        q = jb_many(D / np.sqrt(h2))
    q[~valid] = np.nan
    return q


def replicate_statistics(fit, path, rule, seeds, reselect=True, jobs=1):
    """Bootstrap statistics for each seed; NaN marks a failed replicate."""
    if len(path) != fit.m:
        raise InvalidInputError("variance path length differs from the residual count")
    seeds = list(seeds)
    use = rule if reselect else path.bandwidth
    if not reselect and path.kernel != "normal":
        raise InvalidInputError("fixed-bandwidth replicates support the normal kernel only")
    work = partial(_replicate_chunk, fit=fit, h_full=_full_path(fit, path), rule=use)
    chunks = [seeds[i:i + CHUNK] for i in range(0, len(seeds), CHUNK)]
    parts = ordered_map(work, chunks, jobs=jobs)
    return np.concatenate(parts) if parts else np.empty(0)


def bootstrap_replicate(fit: ArFit, path: kv.VariancePath, rule: Rule, seed: int, reselect=True):
    q = replicate_statistics(fit, path, rule, [seed], reselect=reselect)[0]
    if np.isnan(q):
        raise ReplicateFailure(f"bootstrap replicate with seed {seed} degenerated", seed)
    return float(q)


def plus_one_pvalue(q_obs, q_boot):
    q_boot = np.asarray(q_boot, dtype=float)
    return (1.0 + np.count_nonzero(q_boot >= q_obs)) / (q_boot.size + 1.0)


def bootstrap_from_fit(fit, config):
    """Bootstrap JB test given an AR fit of the observed series."""
    observed, path = corrected_statistic(fit.residuals, config.rule)
    seeds = replicate_seeds(config.master_seed, config.replicates)
    jobs = config.jobs if config.parallel else 1
    q = replicate_statistics(fit, path, config.rule, seeds, config.reselect_bandwidth, jobs)
    failed = np.isnan(q)
    n_failed = int(failed.sum())
    if n_failed > MAX_FAILURE_RATE * config.replicates:
        bad = [s for s, f in zip(seeds, failed) if f]
        raise BootstrapFailure(
            f"{n_failed} of {config.replicates} bootstrap replicates failed", bad
        )
    if n_failed:
        log.warning("%d bootstrap replicates failed and were dropped", n_failed)
    q = q[~failed]
    method = Method.BOOT if isinstance(config.rule, kv.CvRule) else Method.F_BOOT
    return replace(
        observed,
        p_value=plus_one_pvalue(observed.statistic, q),
        method=method,
        replicates=int(q.size),
        failed_replicates=n_failed,
    )


def test_bootstrap(series, p, config=None):
    config = BootstrapConfig() if config is None else config
    return bootstrap_from_fit(fit_ar(series, p), config)


test_bootstrap.__test__ = False
