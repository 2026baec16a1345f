"""Phase-I design: estimate sigma, theta0, theta1 and derive reference values."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import distlab
from .scores import SQRT3, ScoreKind

# defaults when no Phase-I data exist
THETA0_NEAR_NORMAL = 1.0
THETA0_HEAVY_TAILS = 1.3
THETA1_DEFAULT = 1.0


class DesignWarning(UserWarning):
    pass


def _clean(data, min_points: int) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size < min_points:
        raise ValueError(f"need at least {min_points} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    if np.ptp(x) == 0.0:
        raise ValueError("degenerate data: all values are equal")
    return x


def estimate_sigma(data, method: str = "sample_sd") -> float:
    """Location-invariant, scale-equivariant spread: ``sample_sd`` or ``iqr``."""
    x = _clean(data, 2)
    if method == "sample_sd":
        return float(x.std(ddof=1))
    if method == "iqr":
        q1, q3 = np.percentile(x, [25, 75])
        if q3 == q1:
            raise ValueError("degenerate data: zero inter-quartile range")
        return float(q3 - q1)
    raise ValueError(f"unknown sigma method {method!r}")


def theta0_hat(data, score="w", sigma_method: str = "sample_sd",
               bandwidth: Optional[float] = None) -> float:
    """Plug-in estimate of theta0 from data standardized by ``sigma_hat``.

    Wilcoxon: ``sqrt(12) * mean(f_hat(V_i / sigma_hat))``.  Van der Waerden
    falls back to quadrature against the fitted kernel density.
    ``bandwidth`` is on the scale of the raw data (default: normal reference rule).
    """
    kind = ScoreKind.parse(score)
    x = _clean(data, 2)
    sigma = estimate_sigma(x, sigma_method)
    y = x / sigma
    kde = distlab.fit_kde(y, None if bandwidth is None else bandwidth / sigma)
    if kind is ScoreKind.W:
        return float(math.sqrt(12.0) * kde.pdf(y).mean())
    if kind is ScoreKind.VDW:
        return distlab.theta0(kind, kde).theta
    raise ValueError("theta0 is a location-score constant")


def theta1_hat(data, sigma_method: str = "sample_sd", bandwidth: Optional[float] = None) -> float:
    """Order-statistic plug-in ``12/m * sum (2i/(m+1) - 1) Y_(i) f_hat(Y_(i))``."""
    x = _clean(data, 3)
    sigma = estimate_sigma(x, sigma_method)
    y = np.sort(x / sigma)
    m = y.size
    kde = distlab.fit_kde(y, None if bandwidth is None else bandwidth / sigma)
    weights = 2.0 * np.arange(1, m + 1) / (m + 1.0) - 1.0
    return float(12.0 * np.mean(weights * y * kde.pdf(y)))


def design_location(theta0: float, delta1: float, score="w") -> float:
    """Reference value ``theta0 * delta1 / 2`` for a target shift ``delta1`` (in sigma units)."""
    if not delta1 > 0:
        raise ValueError("target shift must be positive")
    zeta = theta0 * delta1 / 2.0
    if ScoreKind.parse(score) is ScoreKind.W and zeta >= SQRT3:
        warnings.warn(
            f"zeta={zeta:.3f} >= sqrt(3): the Wilcoxon statistic never exceeds sqrt(3), "
            "so the upper chart can never signal", DesignWarning, stacklevel=2)
    return zeta


def design_dispersion(theta1: float, alpha: float) -> tuple[float, float]:
    """Reference magnitudes for a ``100 alpha %`` dispersion increase / decrease.

    Upper: ``theta1 log(1 + alpha) / 2``; lower: ``-theta1 log(alpha) / 2``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return theta1 * math.log1p(alpha) / 2.0, -theta1 * math.log(alpha) / 2.0


@dataclass(frozen=True)
class Phase1Design:
    sigma_hat: float
    theta0_hat: float
    theta1_hat: float
    zeta_location: float
    zeta_up: float
    zeta_down: float
    bandwidth: float


def design_from_data(data, delta1: float, alpha: float, score="w",
                     sigma_method: str = "sample_sd",
                     bandwidth: Optional[float] = None) -> Phase1Design:
    """Estimate the constants from Phase-I data and derive all reference values."""
    x = _clean(data, 3)
    sigma = estimate_sigma(x, sigma_method)
    bw = bandwidth if bandwidth is not None else distlab.silverman_bandwidth(x)
    t0 = theta0_hat(x, score, sigma_method, bw)
    t1 = theta1_hat(x, sigma_method, bw)
    zu, zd = design_dispersion(t1, alpha)
    return Phase1Design(sigma, t0, t1, design_location(t0, delta1, score), zu, zd, bw)
