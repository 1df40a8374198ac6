"""Size and power experiments for the JB tests on simulated AR(1) series.

Variance profiles give the error *variance* at rescaled time ``r``; the
simulated errors are ``sqrt(profile(t/n)) * eps_t``.

Replication ``i`` of the cell with sample size ``n`` simulates its data from
``derive_seed(master_seed, n, i, 0)`` and bootstraps from
``derive_seed(master_seed, n, i, 1)``.  All tests in a cell see the same
series, and power curves reuse the same underlying draws at every ``delta``.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional, Union

import numpy as np
from scipy.signal import lfilter

from . import kernel_variance as kv
from ._parallel import ordered_map
from .bootstrap import BootstrapConfig, bootstrap_from_fit
from .errors import ExperimentError, HetJBError, InvalidInputError
from .jb_test import Method, test_corrected, test_standard
from .rng import derive_seed, make_rng
from .series_model import Series, fit_ar

log = logging.getLogger(__name__)

BURN_IN = 100
MAX_FAILURE_RATE = 0.01


def _seasonal(r):
    return 1.0 + 2.0 * np.exp(r) + 0.3 * (1.0 + r) * np.sin(5.0 * np.pi * r + np.pi / 6.0)


def variance_profile_seasonal(r):
    """Smooth trend plus seasonal wave: ``1 + 2e^r + 0.3(1+r)sin(5 pi r + pi/6)``."""
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(arr > 1.0):
        raise InvalidInputError("rescaled time must lie in (0, 1]")
    out = _seasonal(arr)
    return float(out) if out.ndim == 0 else out


def sd_profile_seasonal(r):
    """Standard deviation path matching :func:`variance_profile_seasonal`."""
    return np.sqrt(variance_profile_seasonal(r))


def variance_profile_trend(r):
    """The same profile without its seasonal part."""
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(arr > 1.0):
        raise InvalidInputError("rescaled time must lie in (0, 1]")
    out = 1.0 + 2.0 * np.exp(arr)
    return float(out) if out.ndim == 0 else out


PROFILES = {
    "homoscedastic": None,
    "seasonal": variance_profile_seasonal,
    "trend": variance_profile_trend,
}


@dataclass(frozen=True)
class Gaussian:
    def __str__(self):
        return "gaussian"


@dataclass(frozen=True)
class Mixture:
    """``cos(delta) v + sin(delta) w`` with ``v`` normal and ``sqrt(2) w + 1`` chi-square(1)."""

    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta <= math.pi / 2 + 1e-12:
            raise InvalidInputError("delta must lie in (0, pi/2]")

    def __str__(self):
        return f"mixture(delta={self.delta:.6g})"


Innovation = Union[Gaussian, Mixture]


def draw_innovation(kind, rng, size=None):
    """Draw unit-variance innovations.  Normal draws come first in the stream."""
    v = rng.standard_normal(size)
    if isinstance(kind, Gaussian):
        return v
    w = (rng.chisquare(1.0, size) - 1.0) / math.sqrt(2.0)
    return math.cos(kind.delta) * v + math.sin(kind.delta) * w


@dataclass(frozen=True)
class DgpConfig:
    a0: float = 0.4
    n: int = 100
    variance: Union[str, Callable] = "homoscedastic"
    innovation: Innovation = field(default_factory=Gaussian)
    seed: int = 0

    def __post_init__(self):
        if not abs(self.a0) < 1:
            raise InvalidInputError("|a0| must be below 1")
        if self.n < 20:
            raise InvalidInputError("n must be at least 20")
        if isinstance(self.variance, str) and self.variance not in PROFILES:
            raise InvalidInputError(f"unknown variance profile {self.variance!r}")

    def profile(self):
        return PROFILES[self.variance] if isinstance(self.variance, str) else self.variance

    def describe(self):
        v = self.variance if isinstance(self.variance, str) else getattr(self.variance, "__name__", "custom")
        return {"a0": self.a0, "variance": v, "innovation": str(self.innovation)}


def _scale_path(config):
    g = config.profile()
    total = BURN_IN + config.n
    if g is None:
        return np.ones(total)
    r = np.arange(1, config.n + 1) / config.n
    # burn-in uses the profile frozen at r -> 0+
    start = float(_seasonal(0.0)) if g is variance_profile_seasonal else float(g(1e-12))
    var = np.concatenate((np.full(BURN_IN, start), np.asarray(g(r), dtype=float)))
    if np.any(~(var > 0)):
        raise InvalidInputError("variance profile must be positive")
    return np.sqrt(var)


def simulate_dgp(config):
    """AR(1) path ``y_t = a0 y_{t-1} + h_t eps_t`` after a 100-step burn-in.

    ``h_t`` is the square root of the variance profile at ``t/n``.
    """
    rng = make_rng(config.seed)
    total = BURN_IN + config.n
    u = _scale_path(config) * draw_innovation(config.innovation, rng, total)
    y = lfilter([1.0], [1.0, -config.a0], u)[BURN_IN:]
    return Series(y, label="dgp")


def confidence_band(N, level=0.05):
    """95% band for a rejection frequency with true rate ``level``, in percent."""
    if N < 1:
        raise InvalidInputError("N must be positive")
    if not 0.0 < level < 1.0:
        raise InvalidInputError("level must lie in (0, 1)")
    half = 1.96 * math.sqrt(level * (1.0 - level) / N)
    return 100.0 * (level - half), 100.0 * (level + half)


# -- test identifiers ------------------------------------------------------------

_TEST_RE = re.compile(r"^(T_st|T_cv|T_boot|T_f|T_f,boot)(?:\(([^)]+)\))?$")


@dataclass(frozen=True)
class TestSpec:
    method: Method
    gamma: Optional[float] = None

    __test__ = False

    @property
    def label(self):
        if self.gamma is None:
            return str(self.method)
        return f"{self.method}({self.gamma:g})"

    def rule(self, cv_rule):
        return cv_rule if self.gamma is None else kv.FixedRule(self.gamma)


def parse_test(text, default_gamma=1.0):
    m = _TEST_RE.match(text.strip().replace(" ", ""))
    if not m:
        raise InvalidInputError(f"unknown test identifier {text!r}")
    method = Method(m.group(1))
    fixed = method in (Method.F, Method.F_BOOT)
    if m.group(2) is not None and not fixed:
        raise InvalidInputError(f"{method} takes no bandwidth constant")
    gamma = None
    if fixed:
        gamma = float(m.group(2)) if m.group(2) is not None else float(default_gamma)
        if not gamma > 0:
            raise InvalidInputError("gamma must be positive")
    return TestSpec(method, gamma)


def _as_specs(tests):
    specs = [t if isinstance(t, TestSpec) else parse_test(t) for t in tests]
    if not specs:
        raise InvalidInputError("no tests requested")
    return specs


def run_tests(fit, specs, cv_rule, replicates, boot_seed):
    """p-values of each test on one fitted series; NaN where the test failed."""
    out = []
    for spec in specs:
        try:
            if spec.method is Method.ST:
                res = test_standard(fit.residuals)
            elif spec.method in (Method.CV, Method.F):
                res = test_corrected(fit.residuals, spec.rule(cv_rule))
            else:
                cfg = BootstrapConfig(replicates, spec.rule(cv_rule), boot_seed)
                res = bootstrap_from_fit(fit, cfg)
            out.append(res.p_value)
        except HetJBError as exc:
            log.debug("%s failed: %s", spec.label, exc)
            out.append(float("nan"))
    return out


def _replication(task, template, specs, cv_rule, replicates, master_seed):
    n, i, innovation = task
    cfg = DgpConfig(template.a0, n, template.variance, innovation, derive_seed(master_seed, n, i, 0))
    try:
        fit = fit_ar(simulate_dgp(cfg), 1)
    except HetJBError:
        return [float("nan")] * len(specs)
    return run_tests(fit, specs, cv_rule, replicates, derive_seed(master_seed, n, i, 1))


# -- reports ---------------------------------------------------------------------


@dataclass
class McReport:
    scenario: dict
    axis: str
    axis_values: list
    tests: list
    N: int
    alpha: float
    band: tuple
    master_seed: int
    replicates: int
    rejections: dict
    valid: dict

    def failures(self, test):
        return [self.N - v for v in self.valid[test]]

    def frequency(self, test):
        return [100.0 * r / v if v else float("nan") for r, v in zip(self.rejections[test], self.valid[test])]

    def cell(self, test, value):
        return self.frequency(test)[self.axis_values.index(value)]

    def to_dict(self):
        return {
            "schema_version": 1,
            "scenario": self.scenario,
            "axis": self.axis,
            "axis_values": list(self.axis_values),
            "tests": list(self.tests),
            "N": self.N,
            "alpha": self.alpha,
            "band": list(self.band),
            "master_seed": self.master_seed,
            "replicates": self.replicates,
            "rejections": self.rejections,
            "valid": self.valid,
            "frequency": {t: self.frequency(t) for t in self.tests},
        }

    def to_text(self):
        head = f"{self.axis:>10}" + "".join(f"{_fmt_axis(v):>10}" for v in self.axis_values)
        lines = [
            f"Rejection frequencies (%) at alpha={self.alpha:g}, N={self.N}, "
            f"B={self.replicates}, seed={self.master_seed}",
            "scenario: " + ", ".join(f"{k}={v}" for k, v in self.scenario.items()),
            head,
        ]
        for t in self.tests:
            lines.append(f"{t:>10}" + "".join(f"{f:10.1f}" for f in self.frequency(t)))
        lo, hi = self.band
        lines.append(f"95% band around {100 * self.alpha:g}%: ({lo:.2f}, {hi:.2f})")
        return "\n".join(lines)


def _fmt_axis(v):
    return f"{v:.4g}" if isinstance(v, float) else str(v)


def _run(tasks, axis_values, axis_of, template, specs, N, master_seed, replicates, alpha, jobs, cv_rule, axis, scenario):
    work = partial(
        _replication, template=template, specs=specs, cv_rule=cv_rule,
        replicates=replicates, master_seed=master_seed,
    )
    pvals = ordered_map(work, tasks, jobs=jobs)
    labels = [s.label for s in specs]
    rej = {t: [0] * len(axis_values) for t in labels}
    valid = {t: [0] * len(axis_values) for t in labels}
    for task, ps in zip(tasks, pvals):
        k = axis_of(task)
        for t, p in zip(labels, ps):
            if np.isnan(p):
                continue
            valid[t][k] += 1
            rej[t][k] += int(p < alpha)
    for t in labels:
        for k, v in enumerate(valid[t]):
            if N - v > MAX_FAILURE_RATE * N:
                raise ExperimentError(f"{t}: {N - v} of {N} replications failed at {axis}={axis_values[k]}")
            if v < N:
                log.warning("%s: %d replications failed at %s=%s", t, N - v, axis, axis_values[k])
    return McReport(
        scenario=scenario, axis=axis, axis_values=list(axis_values), tests=labels, N=N,
        alpha=alpha, band=confidence_band(N, alpha), master_seed=master_seed,
        replicates=replicates, rejections=rej, valid=valid,
    )


def size_experiment(tests, n_values, N, scenario=None, master_seed=0, *, replicates=499,
                    alpha=0.05, jobs=1, cv_rule=None):
    """Rejection frequencies of ``tests`` across sample sizes.

    Each replication simulates from ``scenario`` (its ``n`` and ``seed`` are
    ignored), fits mean and AR(1), and applies every test to the residuals.
    """
    specs = _as_specs(tests)
    template = DgpConfig() if scenario is None else scenario
    cv_rule = kv.CvRule() if cv_rule is None else cv_rule
    if N < 1:
        raise InvalidInputError("N must be positive")
    n_values = [int(n) for n in n_values]
    tasks = [(n, i, template.innovation) for n in n_values for i in range(N)]
    index = {n: k for k, n in enumerate(n_values)}
    return _run(tasks, n_values, lambda t: index[t[0]], template, specs, N, master_seed,
                replicates, alpha, jobs, cv_rule, "n", template.describe())


def default_delta_grid(points=8):
    return [math.pi / 2 * k / points for k in range(1, points + 1)]


def power_experiment(tests, n, delta_grid, N, master_seed=0, *, scenario=None, replicates=499,
                     alpha=0.05, jobs=1, cv_rule=None):
    """Rejection frequencies under mixture innovations across ``delta_grid``."""
    specs = _as_specs(tests)
    template = DgpConfig() if scenario is None else scenario
    cv_rule = kv.CvRule() if cv_rule is None else cv_rule
    if N < 1:
        raise InvalidInputError("N must be positive")
    deltas = [float(d) for d in delta_grid]
    tasks = [(int(n), i, Mixture(d)) for d in deltas for i in range(N)]
    index = {d: k for k, d in enumerate(deltas)}
    scen = {**template.describe(), "innovation": "mixture", "n": int(n)}
    return _run(tasks, deltas, lambda t: index[t[2].delta], template, specs, N, master_seed,
                replicates, alpha, jobs, cv_rule, "delta", scen)
