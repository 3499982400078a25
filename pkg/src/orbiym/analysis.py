"""Binning, jackknife errors, susceptibility, and 1/m^2 extrapolation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class InsufficientStatisticsError(ValueError):
    """Series too short for the requested binning."""


class SingularFitError(ValueError):
    """Rank-deficient design matrix (for example duplicate x values)."""


@dataclass(frozen=True)
class EnsembleEstimate:
    mean: float
    err: float
    n_bins: int
    bin_size: int


@dataclass(frozen=True)
class FitResult:
    """Weighted quadratic fit y = a0 + a1 x + a2 x^2 (x = 1/m^2)."""

    a0: float
    a1: float
    a2: float
    a0_err: float
    chi2_per_dof: float
    cov: np.ndarray


def jackknife(series, bin_size: int, estimator: Callable | None = None) -> EnsembleEstimate:
    """Leave-one-bin-out error of ``estimator`` over a correlated series.

    The series is cut into n_bins = len // bin_size full bins (any tail is
    dropped).  ``estimator`` maps a 1-d sample to a scalar and defaults to
    the mean, for which the central value is exactly the binned sample
    mean.  Derived quantities pass their own estimator; it is applied to
    the sample with one bin removed at a time.
    """
    series = np.asarray(series, dtype=float).ravel()
    if bin_size < 1:
        raise ValueError("bin_size must be >= 1")
    if len(series) < 2 * bin_size:
        raise InsufficientStatisticsError(
            f"need at least {2 * bin_size} samples for bin_size {bin_size}, "
            f"got {len(series)}"
        )
    n_bins = len(series) // bin_size
    data = series[: n_bins * bin_size]
    if estimator is None:
        estimator = np.mean
    mask = np.ones(len(data), dtype=bool)
    thetas = np.empty(n_bins)
    for i in range(n_bins):
        mask[i * bin_size : (i + 1) * bin_size] = False
        thetas[i] = estimator(data[mask])
        mask[i * bin_size : (i + 1) * bin_size] = True
    center = np.mean(thetas)
    err = np.sqrt((n_bins - 1) / n_bins * np.sum((thetas - center) ** 2))
    return EnsembleEstimate(
        mean=float(estimator(data)), err=float(err), n_bins=n_bins, bin_size=bin_size
    )


def susceptibility(abs_p_series, bin_size: int) -> EnsembleEstimate:
    """Jackknife estimate of <|P|^2> - <|P|>^2."""

    def chi(sample):
        return np.mean(sample**2) - np.mean(sample) ** 2

    return jackknife(abs_p_series, bin_size, estimator=chi)


def binning_report(series, bin_sizes: Sequence[int]) -> list[EnsembleEstimate]:
    """Error versus bin size; a plateau signals resolved autocorrelations."""
    return [jackknife(series, b) for b in bin_sizes]


def quad_extrapolate(points) -> FitResult:
    """Weighted least squares of (x, y, sigma) triples against a quadratic.

    Solved by normal equations on an x/max|x| rescaled design for
    conditioning; a0 is the x = 0 value and a0_err comes from the
    parameter covariance.  Requires >= 4 points (one degree of freedom),
    positive sigmas, and distinct x.
    """
    pts = [(float(x), float(y), float(s)) for x, y, s in points]
    if len(pts) < 4:
        raise ValueError(f"need at least 4 points for a quadratic fit, got {len(pts)}")
    x = np.array([q[0] for q in pts])
    y = np.array([q[1] for q in pts])
    sigma = np.array([q[2] for q in pts])
    if np.any(sigma <= 0):
        raise ValueError("all sigmas must be positive")
    if len(np.unique(x)) != len(x):
        raise SingularFitError("duplicate x values make the fit singular")

    scale = np.max(np.abs(x))
    if scale == 0:
        raise SingularFitError("all x values are zero")
    xs = x / scale
    design = np.stack([np.ones_like(xs), xs, xs**2], axis=1)
    w = 1.0 / sigma**2
    a = design.T @ (design * w[:, None])
    b = design.T @ (w * y)
    try:
        coeff = np.linalg.solve(a, b)
        cov_scaled = np.linalg.inv(a)
    except np.linalg.LinAlgError as err:
        raise SingularFitError(f"normal equations are singular: {err}") from err

    resid = (y - design @ coeff) / sigma
    chi2 = float(resid @ resid)
    dof = len(pts) - 3
    unscale = np.diag([1.0, 1.0 / scale, 1.0 / scale**2])
    cov = unscale @ cov_scaled @ unscale
    return FitResult(
        a0=float(coeff[0]),
        a1=float(coeff[1] / scale),
        a2=float(coeff[2] / scale**2),
        a0_err=float(np.sqrt(cov[0, 0])),
        chi2_per_dof=chi2 / dof,
        cov=cov,
    )
