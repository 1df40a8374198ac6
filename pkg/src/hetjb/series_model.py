"""Series container, AR(p) conditional least squares and AR simulation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.signal import lfilter

from .errors import InvalidInputError, SingularSystemError

RCOND_MIN = 1e-12


@dataclass(frozen=True)
class Series:
    """Ordered real sample with an optional date index.

    ``timestamps`` is stored as ``datetime64[D]`` and must be strictly increasing.
    """

    values: np.ndarray
    label: str = "y"
    timestamps: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size < 1:
            raise InvalidInputError("series must contain at least one value")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("series values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype="datetime64[D]").reshape(-1)
            if ts.size != values.size:
                raise InvalidInputError("timestamps and values differ in length")
            if ts.size > 1 and not np.all(ts[1:] > ts[:-1]):
                raise InvalidInputError("timestamps must be strictly increasing")
            ts.setflags(write=False)
            object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ArFit:
    order: int
    omega_hat: float
    theta_hat: np.ndarray
    residuals: np.ndarray
    n: int
    effective_start: int = field(init=False)

    def __post_init__(self):
        # 1-based index of the first residual
        object.__setattr__(self, "effective_start", self.order + 1)

    @property
    def m(self):
        return self.residuals.size

    def recompute_residuals(self, values):
        """Residuals rebuilt from the stored estimates and the original values."""
        x = np.asarray(values, dtype=float) - self.omega_hat
        return _ar_residuals(x, self.theta_hat)


def sample_mean(series):
    values = series.values if isinstance(series, Series) else np.asarray(series, dtype=float)
    if values.size == 0:
        raise InvalidInputError("cannot take the mean of an empty series")
    return float(np.mean(values))


def lag_matrix(x, p):
    """Rows ``(x[t-1], ..., x[t-p])`` for ``t = p..n-1`` (0-based)."""
    n = x.shape[-1]
    cols = [x[..., p - i:n - i] for i in range(1, p + 1)]
    return np.stack(cols, axis=-1)


def _ar_residuals(x, theta):
    p = theta.size
    if p == 0:
        return x.copy()
    return x[p:] - lag_matrix(x, p) @ theta


def _check_order(n, p):
    if p < 0:
        raise InvalidInputError("AR order must be nonnegative")
    if p > 0 and n <= 5 * p:
        raise InvalidInputError(f"sample size {n} too small for AR order {p} (need n > 5p)")


def _solve_normal_equations(S, s):
    # reciprocal 1-norm condition estimate of the lag moment matrix
    norm = np.linalg.norm(S, 1)
    if norm == 0.0 or not np.isfinite(norm):
        raise SingularSystemError("lag moment matrix is singular")
    try:
        lu, piv = linalg.lu_factor(S, check_finite=False)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError("lag moment matrix is singular") from exc
    if np.any(np.diag(lu) == 0.0):
        raise SingularSystemError("lag moment matrix is singular")
    inv_norm = np.linalg.norm(linalg.lu_solve((lu, piv), np.eye(S.shape[0])), 1)
    if 1.0 / (norm * inv_norm) < RCOND_MIN:
        raise SingularSystemError("lag moment matrix is numerically singular")
    return linalg.lu_solve((lu, piv), s, check_finite=False)


def ar_ols(x, p):
    """Conditional least squares AR(p) coefficients for an already centred sample.

    Sums run over ``t = p+1..n``; no pre-sample values are invented.
    Returns ``(theta, residuals)``.
    """
    x = np.asarray(x, dtype=float)
    _check_order(x.size, p)
    if p == 0:
        return np.empty(0), x.copy()
    X = lag_matrix(x, p)
    target = x[p:]
    S = X.T @ X
    s = X.T @ target
    theta = _solve_normal_equations(S, s)
    return theta, target - X @ theta


def fit_ar(series, p, omega=None):
    """Fit ``y_t = omega + x_t`` with ``x_t`` AR(p).

    Parameters
    ----------
    series : Series or array_like
    p : int
        Autoregressive order, caller supplied.
    omega : float, optional
        Known mean.  Defaults to the sample mean; passing a value gives the
        infeasible estimator that uses the true mean.

    Returns
    -------
    ArFit
    """
    values = series.values if isinstance(series, Series) else np.asarray(series, dtype=float)
    n = values.size
    if n == 0:
        raise InvalidInputError("empty series")
    _check_order(n, p)
    omega_hat = sample_mean(values) if omega is None else float(omega)
    theta, resid = ar_ols(values - omega_hat, p)
    theta.setflags(write=False)
    resid.setflags(write=False)
    return ArFit(order=p, omega_hat=omega_hat, theta_hat=theta, residuals=resid, n=n)


def fit_ar_many(Y, p):
    """Vectorised :func:`fit_ar` over the rows of ``Y`` (shape ``(B, n)``).

    Returns ``(omega, theta, residuals, ok)``; rows whose lag moment matrix is
    numerically singular have ``ok == False`` and NaN estimates.
    """
    Y = np.asarray(Y, dtype=float)
    B, n = Y.shape
    _check_order(n, p)
    omega = Y.mean(axis=1)
    X = Y - omega[:, None]
    ok = np.ones(B, dtype=bool)
    if p == 0:
        return omega, np.empty((B, 0)), X, ok
    L = lag_matrix(X, p)                      # (B, m, p)
    target = X[:, p:]
    S = np.einsum("bmi,bmj->bij", L, L)
    s = np.einsum("bmi,bm->bi", L, target)
    theta = np.full((B, p), np.nan)
    if p == 1:
        # 1x1 systems: singular only when the lag column is identically zero
        ok = S[:, 0, 0] > 0.0
        theta[ok, 0] = s[ok, 0] / S[ok, 0, 0]
    for b in range(B) if p > 1 else ():
        try:
            theta[b] = _solve_normal_equations(S[b], s[b])
        except SingularSystemError:
            ok[b] = False
    resid = target - np.einsum("bmi,bi->bm", L, np.where(ok[:, None], theta, 0.0))
    resid[~ok] = np.nan
    return omega, theta, resid, ok


def simulate_ar(omega, theta, errors, label="simulated"):
    """Build ``y_t = omega + x_t`` with ``x_t = sum_i theta_i x_{t-i} + e_t``.

    Pre-sample values of ``x`` are zero and there is no burn-in, so the first
    few observations carry an ``O(|theta|^t)`` start-up transient.
    ``errors`` may be 2-D, in which case each row is an independent path and a
    plain array is returned.
    """
    errors = np.asarray(errors, dtype=float)
    if not np.all(np.isfinite(errors)):
        raise InvalidInputError("errors must be finite")
    theta = np.asarray(theta, dtype=float).reshape(-1)
    denom = np.concatenate(([1.0], -theta))
    x = lfilter([1.0], denom, errors, axis=-1)
    y = omega + x
    if errors.ndim == 1:
        return Series(y, label=label)
    return y
