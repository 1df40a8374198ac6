"""Leave-one-out kernel estimation of a time-varying variance profile.

The variance at observation ``t`` is a kernel-weighted average of the squared
centred residuals at all other observations, with time rescaled to the
residual sample: ``K((t - i) / (m * b))``.  Bandwidths are either picked by
leave-one-out cross-validation over a log-spaced grid or set by the rule
``gamma * (sigma2 / m) ** 0.2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DegenerateBandwidthError, DegenerateVarianceError, InvalidInputError

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def normal_kernel(u):
    return np.exp(-0.5 * np.square(u)) / _SQRT_2PI


def uniform_kernel(u):
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


KERNELS = {"normal": normal_kernel, "uniform": uniform_kernel}


@dataclass(frozen=True)
class VariancePath:
    h: np.ndarray
    h_squared: np.ndarray
    bandwidth: float
    kernel: str = "normal"

    def __len__(self):
        return self.h.size


@dataclass(frozen=True)
class BandwidthGrid:
    """Log-spaced candidate bandwidths on ``[c_min * b_ref, c_max * b_ref]``."""

    b_ref: float
    c_min: float = 0.2
    c_max: float = 3.0
    points: int = 25

    def __post_init__(self):
        if not self.b_ref > 0:
            raise InvalidInputError("b_ref must be positive")
        if not 0 < self.c_min < self.c_max:
            raise InvalidInputError("grid needs 0 < c_min < c_max")
        if self.points < 2:
            raise InvalidInputError("grid needs at least two points")

    @classmethod
    def default(cls, m, c_min=0.2, c_max=3.0, points=25):
        # b ~ m^(-1/3) sits inside the admissible rate window for the bandwidth
        return cls(b_ref=float(m) ** (-1.0 / 3.0), c_min=c_min, c_max=c_max, points=points)

    @property
    def values(self):
        return np.geomspace(self.c_min * self.b_ref, self.c_max * self.b_ref, self.points)


@dataclass(frozen=True)
class CvRule:
    """Bandwidth chosen by cross-validation on the default grid shape."""

    c_min: float = 0.2
    c_max: float = 3.0
    points: int = 25
    kernel: str = "normal"

    def grid(self, m):
        return BandwidthGrid.default(m, self.c_min, self.c_max, self.points)

    def bandwidth(self, residuals):
        r = np.asarray(residuals, dtype=float)
        return select_bandwidth_cv(r, self.grid(r.size), kernel=self.kernel)


@dataclass(frozen=True)
class FixedRule:
    gamma: float
    kernel: str = "normal"

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidInputError("gamma must be positive")

    def bandwidth(self, residuals):
        return fixed_bandwidth(residuals, self.gamma)


def _validate(residuals):
    r = np.asarray(residuals, dtype=float).reshape(-1)
    if r.size < 3:
        raise InvalidInputError("need at least 3 residuals for kernel smoothing")
    if not np.all(np.isfinite(r)):
        raise InvalidInputError("residuals must be finite")
    return r


def _build_weights(m, b, kernel="normal"):
    if not b > 0 or not np.isfinite(b):
        raise InvalidInputError("bandwidth must be a positive finite number")
    try:
        K = KERNELS[kernel]
    except KeyError:
        raise InvalidInputError(f"unknown kernel {kernel!r}") from None
    lags = np.arange(m, dtype=float)
    k = K(lags / (m * b))
    k[0] = 0.0
    idx = np.abs(np.subtract.outer(np.arange(m), np.arange(m)))
    W = k[idx]
    mass = W.sum(axis=1)
    if np.any(mass <= 0.0):
        raise DegenerateBandwidthError(
            f"bandwidth {b:.3g} too small: kernel weights vanish for some observations"
        )
    W /= mass[:, None]
    return W


@lru_cache(maxsize=160)
def _cached_weights(m, b, kernel):
    W = _build_weights(m, b, kernel)
    W.setflags(write=False)
    return W


def weight_matrix(m, b, kernel="normal", cache=True):
    """Row-normalised leave-one-out weights ``w[t, i]`` (zero diagonal)."""
    if cache:
        return _cached_weights(int(m), float(b), kernel)
    return _build_weights(int(m), float(b), kernel)


def squared_deviations(residuals):
    r = np.asarray(residuals, dtype=float)
    return np.square(r - r.mean(axis=0))


def smooth_variance(residuals, b, kernel="normal"):
    r = _validate(residuals)
    z = squared_deviations(r)
    h2 = weight_matrix(r.size, b, kernel) @ z
    if np.any(h2 <= 0.0):
        raise DegenerateVarianceError("estimated variance is zero for some observations")
    return VariancePath(h=np.sqrt(h2), h_squared=h2, bandwidth=float(b), kernel=kernel)


def cv_score(residuals, b, kernel="normal"):
    """Mean squared leave-one-out prediction error of the squared deviations."""
    r = _validate(residuals)
    z = squared_deviations(r)
    h2 = weight_matrix(r.size, b, kernel) @ z
    return float(np.mean(np.square(z - h2)))


def cv_curve(residuals, grid=None, kernel="normal"):
    """Scores over the grid; degenerate grid points score ``inf``."""
    r = _validate(residuals)
    grid = BandwidthGrid.default(r.size) if grid is None else grid
    bs = grid.values
    scores = np.empty(bs.size)
    for j, b in enumerate(bs):
        try:
            scores[j] = cv_score(r, b, kernel)
        except DegenerateBandwidthError:
            scores[j] = np.inf
    return bs, scores


def select_bandwidth_cv(residuals, grid: Optional[BandwidthGrid] = None, kernel="normal"):
    """Grid bandwidth minimising :func:`cv_score`; ties go to the smaller bandwidth."""
    bs, scores = cv_curve(residuals, grid, kernel)
    if not np.any(np.isfinite(scores)):
        raise DegenerateBandwidthError("every grid bandwidth is degenerate")
    return float(bs[int(np.argmin(scores))])


def fixed_bandwidth(residuals, gamma):
    """``gamma * (sigma2 / m) ** 0.2`` with ``sigma2`` the (1/m) sample variance."""
    r = np.asarray(residuals, dtype=float).reshape(-1)
    if not gamma > 0:
        raise InvalidInputError("gamma must be positive")
    if r.size < 2:
        raise InvalidInputError("need at least 2 residuals")
    var = float(np.var(r))
    if var <= 0.0:
        raise DegenerateVarianceError("residuals have zero sample variance")
    return gamma * (var / r.size) ** 0.2


def standardize(residuals, path):
    r = np.asarray(residuals, dtype=float).reshape(-1)
    if r.size != len(path):
        raise InvalidInputError(
            f"residual length {r.size} does not match variance path length {len(path)}"
        )
    return (r - r.mean()) / path.h


# -- batched variants used by the bootstrap --------------------------------------


def smooth_many(D, rule):
    """Variance paths for every column of ``D`` (centred residuals, shape ``(m, B)``).

    Returns ``(h2, bandwidths)``.  Columns that cannot be smoothed get NaN.
    """
    m, B = D.shape
    Z = np.square(D)
    if isinstance(rule, CvRule):
        bs = rule.grid(m).values
        best = np.full(B, np.inf)
        pick = np.full(B, -1)
        for j, b in enumerate(bs):
            try:
                W = weight_matrix(m, b, rule.kernel)
            except DegenerateBandwidthError:
                continue
            score = np.mean(np.square(Z - W @ Z), axis=0)
            better = score < best
            best[better] = score[better]
            pick[better] = j
        h2 = np.full((m, B), np.nan)
        chosen = np.full(B, np.nan)
        for j in np.unique(pick[pick >= 0]):
            cols = pick == j
            h2[:, cols] = weight_matrix(m, bs[j], rule.kernel) @ Z[:, cols]
            chosen[cols] = bs[j]
        return h2, chosen
    if isinstance(rule, FixedRule):
        h2 = np.full((m, B), np.nan)
        chosen = np.full(B, np.nan)
        var = np.mean(Z, axis=0)
        for j in range(B):
            if not var[j] > 0:
                continue
            b = rule.gamma * (var[j] / m) ** 0.2
            try:
                W = weight_matrix(m, b, rule.kernel, cache=False)
            except DegenerateBandwidthError:
                continue
            h2[:, j] = W @ Z[:, j]
            chosen[j] = b
        return h2, chosen
    if isinstance(rule, (float, int)):
        W = weight_matrix(m, float(rule))
        return W @ Z, np.full(B, float(rule))
    raise InvalidInputError(f"unsupported bandwidth rule {rule!r}")
