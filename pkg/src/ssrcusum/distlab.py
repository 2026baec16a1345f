"""Reference distributions and the design constants theta0 / theta1.

Every family is exposed in a standardized parameterization:

* ``normal``          standard normal
* ``student_t(nu)``   unit standard deviation for ``nu >= 3``, unit IQR for ``nu`` in {1, 2}
* ``skew_normal(lam)`` zero mean, unit variance
* ``uniform``         unit variance (``standardization="none"`` gives U(-1, 1))
* ``empirical_kde``   Gaussian kernel density on observed data

A standardized variate is ``(raw - loc) / scale`` where ``raw`` follows the
unscaled family.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate, optimize, special, stats

from .scores import ScoreKind, ScoreKindError, score_spec

NORMAL = "normal"
STUDENT_T = "student_t"
SKEW_NORMAL = "skew_normal"
UNIFORM = "uniform"
KDE = "empirical_kde"

# integer codes shared with the simulation kernels
FAMILY_CODES = {NORMAL: 0, STUDENT_T: 1, SKEW_NORMAL: 2, UNIFORM: 3, KDE: 4}


class QuadratureError(RuntimeError):
    pass


class ThetaValue(NamedTuple):
    theta: float
    error: float


@dataclass(frozen=True)
class DistributionSpec:
    family: str
    param: float = 0.0
    standardization: str = "unit_variance"
    loc: float = 0.0
    scale: float = 1.0
    data: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    bandwidth: float = 0.0

    @property
    def code(self) -> int:
        return FAMILY_CODES[self.family]

    @property
    def label(self) -> str:
        if self.family == STUDENT_T:
            return f"t{self.param:g}"
        if self.family == SKEW_NORMAL:
            return f"skew_normal({self.param:g})"
        return self.family

    def _raw(self):
        return _raw_family(self.family, self.param)

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        if self.family == KDE:
            z = (y[..., None] - self.data) / self.bandwidth
            return np.exp(-0.5 * z * z).mean(axis=-1) / (self.bandwidth * math.sqrt(2.0 * math.pi))
        return self._raw().pdf(self.loc + self.scale * y) * self.scale

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        if self.family == KDE:
            z = (y[..., None] - self.data) / self.bandwidth
            return special.ndtr(z).mean(axis=-1)
        return self._raw().cdf(self.loc + self.scale * y)

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        if self.family == KDE:
            lo, hi = self.support_hint()
            f = np.vectorize(lambda q: optimize.brentq(lambda y: float(self.cdf(y)) - q, lo, hi,
                                                        xtol=1e-13, rtol=1e-13))
            return f(p)
        return (self._raw().ppf(p) - self.loc) / self.scale

    def support_hint(self) -> tuple[float, float]:
        """Finite interval holding all but a negligible amount of mass."""
        if self.family == KDE:
            pad = 12.0 * self.bandwidth
            return float(self.data.min() - pad), float(self.data.max() + pad)
        if self.family == UNIFORM:
            return float(self.ppf(0.0)), float(self.ppf(1.0))
        return float(self.ppf(1e-14)), float(self.ppf(1.0 - 1e-14))

    @property
    def bounded(self) -> bool:
        return self.family == UNIFORM

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return sample(self, rng, n)


def normal() -> DistributionSpec:
    return DistributionSpec(NORMAL, standardization="unit_variance")


def student_t(nu: float, standardization: Optional[str] = None) -> DistributionSpec:
    """Student t with ``nu`` degrees of freedom, standardized as in Table 1 by default."""
    if nu <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(nu):
        return normal()
    if standardization is None:
        standardization = "unit_variance" if nu > 2 else "unit_iqr"
    t = stats.t(nu)
    if standardization == "unit_variance":
        if nu <= 2:
            raise ValueError("t distributions with nu <= 2 have no variance")
        scale = math.sqrt(nu / (nu - 2.0))
    elif standardization == "unit_iqr":
        scale = float(t.ppf(0.75) - t.ppf(0.25))
    elif standardization == "none":
        scale = 1.0
    else:
        raise ValueError(f"unknown standardization {standardization!r}")
    return DistributionSpec(STUDENT_T, float(nu), standardization, 0.0, scale)


def skew_normal(lam: float) -> DistributionSpec:
    """Azzalini skew-normal with shape ``lam`` shifted/scaled to mean 0, variance 1."""
    d = lam / math.sqrt(1.0 + lam * lam)
    mean = d * math.sqrt(2.0 / math.pi)
    sd = math.sqrt(1.0 - 2.0 * d * d / math.pi)
    return DistributionSpec(SKEW_NORMAL, float(lam), "unit_variance", mean, sd)


def uniform(standardization: str = "unit_variance") -> DistributionSpec:
    if standardization == "unit_variance":
        scale = 1.0 / math.sqrt(3.0)
    elif standardization == "none":
        scale = 1.0
    else:
        raise ValueError(f"unknown standardization {standardization!r}")
    return DistributionSpec(UNIFORM, 0.0, standardization, 0.0, scale)


def silverman_bandwidth(data) -> float:
    """Normal-reference bandwidth ``(4 / 3n)**(1/5) * sd``."""
    data = np.asarray(data, dtype=float)
    return float((4.0 / (3.0 * data.size)) ** 0.2 * data.std(ddof=1))


def fit_kde(data, bandwidth: Optional[float] = None) -> DistributionSpec:
    data = np.asarray(data, dtype=float).ravel()
    if data.size < 2:
        raise ValueError("need at least two points for a density estimate")
    if not np.all(np.isfinite(data)):
        raise ValueError("data must be finite")
    if np.ptp(data) == 0.0:
        raise ValueError("degenerate data: all values are equal")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(data)
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    data = np.sort(data)
    data.flags.writeable = False
    return DistributionSpec(KDE, 0.0, "none", 0.0, 1.0, data, float(bandwidth))


def parse_distribution(name: str) -> DistributionSpec:
    """``normal``, ``t3``, ``t(2.5)``, ``uniform``, ``skew_normal(5)`` / ``sn5``."""
    key = name.strip().lower().replace(" ", "")
    if key in ("normal", "norm", "n", "tinf"):
        return normal()
    if key in ("uniform", "unif", "u"):
        return uniform()
    for prefix, ctor in (("skew_normal", skew_normal), ("skewnormal", skew_normal),
                         ("sn", skew_normal), ("student_t", student_t), ("t", student_t)):
        if key.startswith(prefix):
            arg = key[len(prefix):].strip("()")
            try:
                return ctor(float(arg))
            except ValueError:
                break
    raise ValueError(f"cannot parse distribution {name!r}")


def sample(dist: DistributionSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` i.i.d. standardized draws."""
    if dist.family == NORMAL:
        raw = rng.standard_normal(n)
    elif dist.family == STUDENT_T:
        raw = rng.standard_t(dist.param, n)
    elif dist.family == SKEW_NORMAL:
        d = dist.param / math.sqrt(1.0 + dist.param ** 2)
        z0 = np.abs(rng.standard_normal(n))
        raw = d * z0 + math.sqrt(1.0 - d * d) * rng.standard_normal(n)
    elif dist.family == UNIFORM:
        raw = rng.uniform(-1.0, 1.0, n)
    elif dist.family == KDE:
        return rng.choice(dist.data, n) + dist.bandwidth * rng.standard_normal(n)
    else:
        raise ValueError(dist.family)
    return (raw - dist.loc) / dist.scale


# -- design constants ------------------------------------------------------------

@functools.lru_cache(maxsize=64)
def _raw_family(family: str, param: float):
    if family == NORMAL:
        return stats.norm()
    if family == STUDENT_T:
        return stats.t(param)
    if family == SKEW_NORMAL:
        return stats.skewnorm(param)
    if family == UNIFORM:
        return stats.uniform(loc=-1.0, scale=2.0)
    raise ValueError(f"{family} has no parametric form")


_QUAD = dict(epsabs=1e-10, epsrel=1e-10, limit=400)
_U_EDGE = 1.0 - 1e-15


def _quad(fn, a, b, tol, what):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fn, a, b, **_QUAD)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"{what}: quadrature did not converge ({exc})") from None
    if not err < tol:
        raise QuadratureError(f"{what}: error estimate {err:.2e} exceeds tolerance {tol:.0e}")
    return ThetaValue(float(val), float(err))


def theta0(score, dist: DistributionSpec, tol: float = 1e-6) -> ThetaValue:
    """Location efficacy ``2 E[f(Y) J'(2F(Y) - 1)]`` (W: ``sqrt(12) E f(Y)``).

    Analytic families are integrated over ``u = 2F(y) - 1`` in (-1, 1); the
    kernel density estimate is integrated over a finite y-window instead.
    """
    spec = score_spec(score)
    if not spec.kind.is_location:
        raise ScoreKindError("theta0 is defined for location scores")
    if spec.kind is ScoreKind.VDW and dist.bounded:
        # f stays positive at a finite endpoint while J' diverges like 1/((1-u) sqrt(log))
        return ThetaValue(math.inf, 0.0)
    if dist.family == KDE:
        lo, hi = dist.support_hint()

        def integrand(y):
            u = min(max(2.0 * float(dist.cdf(y)) - 1.0, -_U_EDGE), _U_EDGE)
            return 2.0 * float(dist.pdf(y)) ** 2 * spec.dJ(u)

        return _quad(integrand, lo, hi, tol, "theta0")

    def integrand(u):
        y = float(dist.ppf(0.5 * (1.0 + u)))
        return spec.dJ(u) * float(dist.pdf(y))

    return _quad(integrand, -1.0, 1.0, tol, "theta0")


def theta1(dist: DistributionSpec, tol: float = 1e-6) -> ThetaValue:
    """Dispersion efficacy ``12 E[(2F(Y) - 1) Y f(Y)]``."""
    if dist.family == KDE:
        lo, hi = dist.support_hint()

        def integrand(y):
            return 12.0 * (2.0 * float(dist.cdf(y)) - 1.0) * y * float(dist.pdf(y)) ** 2

        return _quad(integrand, lo, hi, tol, "theta1")

    def integrand(u):
        y = float(dist.ppf(0.5 * (1.0 + u)))
        return 6.0 * u * y * float(dist.pdf(y))

    return _quad(integrand, -1.0, 1.0, tol, "theta1")
