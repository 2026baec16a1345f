"""Score functions, normalizers and per-observation chart statistics.

Three score kinds are supported:

* ``W``   -- Wilcoxon, ``J(u) = sqrt(3) u``
* ``VDW`` -- Van der Waerden, ``J(u) = Phi^{-1}((1 + u) / 2)``
* ``W2``  -- squared Wilcoxon dispersion score, a function of the rank only

Location statistics are ``sign * J(rank / (i + 1)) / nu_i`` with
``nu_i**2 = mean(J(j / (i + 1))**2, j = 1..i)``; they have mean 0 and
variance 1 under the in-control law for every ``i``.
"""
from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, field

import numba
import numpy as np

from ._normal import ndtri_raw, normal_pdf

SQRT3 = math.sqrt(3.0)


class ScoreKind(enum.IntEnum):
    W = 0
    VDW = 1
    W2 = 2

    @property
    def is_location(self) -> bool:
        return self is not ScoreKind.W2

    @classmethod
    def parse(cls, value) -> "ScoreKind":
        """Accept a ScoreKind, its name, or the CLI aliases ``w``, ``vdw``, ``w2``."""
        if isinstance(value, cls):
            return value
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            return cls(int(value))
        key = str(value).strip().lower()
        aliases = {"w": cls.W, "wilcoxon": cls.W,
                   "vdw": cls.VDW, "vanderwaerden": cls.VDW, "van_der_waerden": cls.VDW,
                   "w2": cls.W2, "wilcoxonsquared": cls.W2, "wilcoxon_squared": cls.W2}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown score kind {value!r}") from None


class ScoreKindError(TypeError):
    """A location-only operation was handed the dispersion score (or vice versa)."""


def inverse_normal_cdf(p: float) -> float:
    """Standard normal quantile, accurate to ``|Phi(z) - p| < 1e-13``."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    return float(ndtri_raw(p))


@numba.njit(cache=True)
def _j_value(kind, u):
    if kind == 0:
        return SQRT3 * u
    if kind == 1:
        if u == 0.0:
            return 0.0
        return ndtri_raw(0.5 * (1.0 + u))
    # dispersion: J_W(u)**2 on (0, 1)
    return 3.0 * u * u


@numba.njit(cache=True)
def _fill_normalizers(kind, out, start):
    # out[i] = nu_i for i >= start; out[0] unused
    for i in range(start, out.shape[0]):
        s = 0.0
        inv = 1.0 / (i + 1.0)
        for j in range(1, i + 1):
            v = _j_value(kind, j * inv)
            s += v * v
        out[i] = math.sqrt(s / i)


class NormalizerTable:
    """Memoized ``nu_i`` for ``i = 1..n``, computed from the defining sum.

    The table only ever grows; extension is guarded by a lock so a shared
    instance can be read from several threads.
    """

    def __init__(self, kind: ScoreKind, n_max: int = 1024):
        self.kind = ScoreKind.parse(kind)
        self._values = np.zeros(1, dtype=np.float64)
        self._lock = threading.Lock()
        self.extend(n_max)

    def __len__(self) -> int:
        return self._values.shape[0] - 1

    def extend(self, n_max: int) -> None:
        if n_max <= len(self):
            return
        with self._lock:
            old = self._values
            if n_max <= old.shape[0] - 1:
                return
            new = np.empty(n_max + 1, dtype=np.float64)
            new[: old.shape[0]] = old
            new[0] = np.nan
            _fill_normalizers(int(self.kind), new, old.shape[0])
            self._values = new

    def nu(self, i: int) -> float:
        if i < 1:
            raise ValueError("index must be >= 1")
        if i > len(self):
            self.extend(max(i, 2 * len(self)))
        return float(self._values[i])

    def array(self, n: int) -> np.ndarray:
        """Read-only view of ``nu_0..nu_n`` (``nu_0`` is NaN)."""
        self.extend(n)
        view = self._values[: n + 1]
        view.flags.writeable = False
        return view


@dataclass(frozen=True)
class ScoreSpec:
    kind: ScoreKind
    _table: NormalizerTable = field(repr=False, compare=False, hash=False)

    def J(self, u: float) -> float:
        if self.kind.is_location:
            if not -1.0 < u < 1.0:
                raise ValueError("location scores are defined on (-1, 1)")
        elif not 0.0 < u < 1.0:
            raise ValueError("the dispersion score is defined on (0, 1)")
        return float(_j_value(int(self.kind), float(u)))

    def dJ(self, u: float) -> float:
        """Derivative of J (location kinds only)."""
        if self.kind is ScoreKind.W:
            return SQRT3
        if self.kind is ScoreKind.VDW:
            return 0.5 / normal_pdf(inverse_normal_cdf(0.5 * (1.0 + u)))
        raise ScoreKindError("J' is only used for location scores")

    def nu(self, i: int) -> float:
        return self._table.nu(i)

    @property
    def normalizers(self) -> NormalizerTable:
        return self._table


_SPECS: dict[ScoreKind, ScoreSpec] = {}
_SPECS_LOCK = threading.Lock()


def score_spec(kind) -> ScoreSpec:
    """Shared, lazily built ScoreSpec for ``kind``."""
    kind = ScoreKind.parse(kind)
    with _SPECS_LOCK:
        spec = _SPECS.get(kind)
        if spec is None:
            spec = ScoreSpec(kind, NormalizerTable(kind))
            _SPECS[kind] = spec
    return spec


def _check_rank(i: int, rank: int) -> None:
    if i < 1:
        raise ValueError(f"index must be >= 1, got {i}")
    if not 1 <= rank <= i:
        raise ValueError(f"rank must lie in [1, {i}], got {rank}")


def xi_location(score, i: int, sign: int, rank: int) -> float:
    """Signed sequential rank statistic for observation ``i``."""
    spec = score if isinstance(score, ScoreSpec) else score_spec(score)
    if not spec.kind.is_location:
        raise ScoreKindError("xi_location needs a location score (W or VDW)")
    _check_rank(i, rank)
    if sign not in (-1, 0, 1):
        raise ValueError("sign must be -1, 0 or +1")
    if sign == 0:
        return 0.0
    return sign * spec.J(rank / (i + 1)) / spec.nu(i)


def xi_dispersion(i: int, rank: int) -> float:
    """Squared-Wilcoxon dispersion statistic; sign free, in-control mean 0."""
    _check_rank(i, rank)
    return 6.0 * rank * rank / ((2 * i + 1) * (i + 1)) - 1.0


def xi(score, i: int, sign: int, rank: int) -> float:
    """Dispatch to the location or dispersion statistic by score kind."""
    kind = score.kind if isinstance(score, ScoreSpec) else ScoreKind.parse(score)
    if kind is ScoreKind.W2:
        return xi_dispersion(i, rank)
    return xi_location(score, i, sign, rank)
