"""Temporal and spatial predictors and the chi-squared fit score.

The temporal predictor is a tapped-delay-line filter fitted by least
squares on a training window and then adapted sample by sample with (N)LMS.
The spatial predictor is an intercept-plus-slopes regression of a node on
one or more companions. Both are weighted by a goodness-of-fit score
``max(0, 1 - chi2 / nu)``.

All objects here are immutable; update functions return new instances.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .core import ArityError, GapError, SizeError, _frozen_array

VARIANCE_FLOOR = 1e-12
NLMS_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class TemporalFilter:
    coeffs: np.ndarray
    mu: float = 0.5
    normalize_lms: bool = True
    degenerate: bool = False

    def __post_init__(self):
        coeffs = _frozen_array(self.coeffs)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise SizeError("filter needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def order(self) -> int:
        return self.coeffs.size


@dataclass(frozen=True, eq=False)
class SpatialRegressor:
    """``coeffs[0]`` is the intercept, ``coeffs[1:]`` one slope per companion."""

    coeffs: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        coeffs = _frozen_array(self.coeffs)
        if coeffs.ndim != 1 or coeffs.size < 2:
            raise SizeError("regressor needs an intercept and at least one slope")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def companion_count(self) -> int:
        return self.coeffs.size - 1


@dataclass(frozen=True)
class FitTracker:
    chi2: float
    nu: int
    sigma2: float

    @property
    def score(self) -> float:
        return fit_score(self.chi2, self.nu)


def _solve_least_squares(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, bool]:
    """Solve min ||A x - b|| by pivoted QR; fall back to the minimum-norm
    solution when A is numerically rank deficient.

    Returns ``(x, degenerate)``.
    """
    m, n = A.shape
    Q, R, perm = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(m, n) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    if diag.size == 0 or diag[0] == 0.0 or diag[-1] <= tol:
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
        return x, True
    z = scipy.linalg.solve_triangular(R, Q.T @ b)
    x = np.empty(n)
    x[perm] = z
    return x, False


def _clean(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise SizeError(f"{what} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise GapError(f"{what} contains gaps")
    return arr


def delay_matrix(trace, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Build the ``(T - p) x p`` delay-line matrix and target vector.

    Row ``i`` holds ``d[p+i-1], ..., d[i]`` (most recent first) and its
    target is ``d[p+i]``.
    """
    d = _clean(trace, "trace")
    T = d.size
    if p < 1:
        raise SizeError("filter order must be >= 1")
    if T <= p:
        raise SizeError(f"trace of length {T} too short for order {p}")
    U = np.column_stack([d[p - 1 - j: T - 1 - j] for j in range(p)])
    return U, d[p:]


def fit_temporal(trace, p: int, mu: float = 0.5, normalize_lms: bool = True) -> TemporalFilter:
    """Least-squares tapped-delay-line coefficients over a training window."""
    U, target = delay_matrix(trace, p)
    alpha, degenerate = _solve_least_squares(U, target)
    return TemporalFilter(alpha, mu=mu, normalize_lms=normalize_lms, degenerate=degenerate)


def predict_temporal(filt: TemporalFilter, history) -> float:
    """Sum of ``alpha_i * d(t - i)``; ``history`` is most recent first."""
    h = np.asarray(history, dtype=float)
    if h.shape != filt.coeffs.shape:
        raise SizeError(f"history length {h.size} != filter order {filt.order}")
    return float(np.dot(filt.coeffs, h))


def lms_update(filt: TemporalFilter, inputs, actual: float, predicted: float) -> TemporalFilter:
    """One (N)LMS step on the prediction error ``actual - predicted``."""
    x = np.asarray(inputs, dtype=float)
    if x.shape != filt.coeffs.shape:
        raise SizeError(f"input length {x.size} != filter order {filt.order}")
    err = actual - predicted
    if err == 0.0:
        return filt
    step = filt.mu
    if filt.normalize_lms:
        step = filt.mu / (NLMS_EPS + float(np.dot(x, x)))
    return dataclasses.replace(filt, coeffs=filt.coeffs + (step * err) * x)


def _design(companions: Sequence, n: int | None = None) -> np.ndarray:
    cols = [_clean(c, "companion trace") for c in companions]
    if not cols:
        raise ArityError("at least one companion is required")
    n = cols[0].size if n is None else n
    if any(c.size != n for c in cols):
        raise SizeError("companion traces differ in length from the dependent trace")
    return np.column_stack([np.ones(n)] + cols)


def fit_spatial(dependent, companions: Sequence) -> SpatialRegressor:
    """Intercept-plus-slopes least-squares regression on ``k`` companions.

    ``companions`` is a sequence of aligned traces (a single 1-D trace is
    accepted as ``k = 1``).
    """
    d = _clean(dependent, "dependent trace")
    if isinstance(companions, np.ndarray) and companions.ndim == 1:
        companions = [companions]
    V = _design(companions, d.size)
    k = V.shape[1] - 1
    if d.size < k + 2:
        raise SizeError(f"need at least {k + 2} samples for {k} companion(s), got {d.size}")
    beta, degenerate = _solve_least_squares(V, d)
    return SpatialRegressor(beta, degenerate=degenerate)


def predict_spatial(reg: SpatialRegressor, companion_values) -> float:
    a = np.atleast_1d(np.asarray(companion_values, dtype=float))
    if a.size != reg.companion_count:
        raise SizeError(f"expected {reg.companion_count} companion value(s), got {a.size}")
    return float(reg.coeffs[0] + np.dot(reg.coeffs[1:], a))


def chi_squared(actuals, predictions, sigma2: float) -> float:
    """Sum of squared residuals over ``sigma2``.

    Below the variance floor the statistic is 0 for a perfect fit and
    ``inf`` otherwise.
    """
    a = np.asarray(actuals, dtype=float)
    b = np.asarray(predictions, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise SizeError("actuals and predictions differ in length")
    if a.size < 1:
        raise SizeError("need at least one sample")
    r = a - b
    if sigma2 < VARIANCE_FLOOR:
        return 0.0 if np.all(np.abs(r) < VARIANCE_FLOOR) else float("inf")
    return float(np.sum(r * r) / sigma2)


def fit_score(chi2: float, nu: int) -> float:
    """``1 - chi2 / nu`` clamped to ``[0, 1]``."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    if chi2 < 0:
        raise ValueError("chi2 must be non-negative")
    return max(0.0, 1.0 - chi2 / nu)


def update_fit(tracker: FitTracker, error: float) -> FitTracker:
    if tracker.sigma2 < VARIANCE_FLOOR:
        term = 0.0 if abs(error) < VARIANCE_FLOOR else float("inf")
    else:
        term = error * error / tracker.sigma2
    return FitTracker(tracker.chi2 + term, tracker.nu + 1, tracker.sigma2)


def temporal_tracker(trace, filt: TemporalFilter) -> FitTracker:
    """In-sample fit tracker of a filter over its training window.

    Degrees of freedom follow the sample-count convention ``T - 1``.
    """
    U, target = delay_matrix(trace, filt.order)
    sigma2 = float(np.var(target))
    return FitTracker(chi_squared(target, U @ filt.coeffs, sigma2), len(trace) - 1, sigma2)


def spatial_tracker(dependent, companions: Sequence, reg: SpatialRegressor,
                    nu: int | None = None) -> FitTracker:
    d = _clean(dependent, "dependent trace")
    if isinstance(companions, np.ndarray) and companions.ndim == 1:
        companions = [companions]
    V = _design(companions, d.size)
    sigma2 = float(np.var(d))
    nu = d.size - 1 if nu is None else nu
    return FitTracker(chi_squared(d, V @ reg.coeffs, sigma2), max(nu, 1), sigma2)
