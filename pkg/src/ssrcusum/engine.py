"""Generic CUSUM recursion over a stream of chart statistics.

Upper:  ``D+_n = max(0, D+_{n-1} + xi_n - zeta_up)``,   signal when ``D+ > h_up``
Lower:  ``D-_n = min(0, D-_{n-1} + xi_n + zeta_down)``, signal when ``D- < -h_down``

Reference values and limits are stored as nonnegative magnitudes; the signs
are applied in the recursion.  After a signal the chart must be reset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

from .scores import ScoreSpec, score_spec, xi as score_xi
from .seqrank import RankAccumulator

UPPER = "upper"
LOWER = "lower"
BOTH = "both"
DEFAULT_MAX_N = 10**7


class ChartError(RuntimeError):
    """Raised for invalid use of a chart (stepping after a signal, bad input)."""


@dataclass(frozen=True)
class CusumConfig:
    zeta_up: float = 0.0
    zeta_down: float = 0.0
    h_up: float = math.inf
    h_down: float = math.inf
    sides: str = BOTH

    def __post_init__(self):
        if self.sides not in (UPPER, LOWER, BOTH):
            raise ValueError(f"sides must be one of upper/lower/both, got {self.sides!r}")
        if self.zeta_up < 0 or self.zeta_down < 0:
            raise ValueError("reference values are magnitudes and must be >= 0")
        if self.upper and not self.h_up > 0:
            raise ValueError("h_up must be > 0")
        if self.lower and not self.h_down > 0:
            raise ValueError("h_down must be > 0 (give the magnitude)")

    @classmethod
    def symmetric(cls, zeta: float, h: float, sides: str = BOTH) -> "CusumConfig":
        return cls(zeta_up=zeta, zeta_down=zeta, h_up=h, h_down=h, sides=sides)

    @classmethod
    def upper_only(cls, zeta: float, h: float) -> "CusumConfig":
        return cls(zeta_up=zeta, h_up=h, sides=UPPER)

    @classmethod
    def lower_only(cls, zeta: float, h: float) -> "CusumConfig":
        return cls(zeta_down=zeta, h_down=h, sides=LOWER)

    @property
    def upper(self) -> bool:
        return self.sides in (UPPER, BOTH)

    @property
    def lower(self) -> bool:
        return self.sides in (LOWER, BOTH)


@dataclass
class CusumState:
    n: int = 0
    d_up: float = 0.0
    d_down: float = 0.0
    last_zero_up: int = 0
    last_zero_down: int = 0
    signal: Optional[str] = None


class PathRecord(NamedTuple):
    n: int
    d_up: float
    d_down: float
    signal: bool


@dataclass
class SignalReport:
    index: int
    side: str
    changepoint: int
    d_value: float
    path: Optional[list] = field(default=None, repr=False)


@dataclass
class StreamSummary:
    """Returned by :func:`run` when the stream ends (or the cap is hit) without a signal."""

    state: CusumState
    capped: bool = False
    path: Optional[list] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.state.n


def step(state: CusumState, xi: float, config: CusumConfig):
    """Advance ``state`` in place by one statistic; returns ``(state, side or None)``."""
    if state.signal is not None:
        raise ChartError("chart has signalled; reset it before stepping again")
    if not math.isfinite(xi):
        raise ChartError(f"statistic must be finite, got {xi!r}")
    state.n += 1
    side = None
    if config.upper:
        state.d_up = max(0.0, state.d_up + xi - config.zeta_up)
        if state.d_up == 0.0:
            state.last_zero_up = state.n
        elif state.d_up > config.h_up:
            side = UPPER
    if config.lower:
        state.d_down = min(0.0, state.d_down + xi + config.zeta_down)
        if state.d_down == 0.0:
            state.last_zero_down = state.n
        elif state.d_down < -config.h_down and side is None:
            side = LOWER
    state.signal = side
    return state, side


def reset_chart(state: Optional[CusumState] = None) -> CusumState:
    if state is None:
        return CusumState()
    state.n = 0
    state.d_up = state.d_down = 0.0
    state.last_zero_up = state.last_zero_down = 0
    state.signal = None
    return state


def changepoint_estimate(state: CusumState, side: str) -> int:
    """Last index at which the signalling one-sided statistic sat at zero."""
    return state.last_zero_up if side == UPPER else state.last_zero_down


def run_xi(xis: Iterable[float], config: CusumConfig, max_n: int = DEFAULT_MAX_N,
           keep_path: bool = False):
    """Run the recursion over ready-made statistics."""
    state = CusumState()
    path = [] if keep_path else None
    for x in xis:
        if state.n >= max_n:
            return StreamSummary(state, capped=True, path=path)
        _, side = step(state, x, config)
        if keep_path:
            path.append(PathRecord(state.n, state.d_up, state.d_down, side is not None))
        if side is not None:
            d = state.d_up if side == UPPER else state.d_down
            return SignalReport(state.n, side, changepoint_estimate(state, side), d, path)
    return StreamSummary(state, path=path)


def score_stream(xs: Iterable[float], score) -> Iterable[float]:
    """Yield chart statistics for raw observations."""
    spec = score if isinstance(score, ScoreSpec) else score_spec(score)
    acc = RankAccumulator()
    for x in xs:
        s, r, i = acc.push(x)
        yield score_xi(spec, i, s, r)


def run(xs: Iterable[float], score, config: CusumConfig, max_n: int = DEFAULT_MAX_N,
        keep_path: bool = False):
    """Signed-sequential-rank CUSUM over raw observations.

    Returns a :class:`SignalReport` at the first signal, otherwise a
    :class:`StreamSummary` (``capped`` set when ``max_n`` stopped the run).
    """
    return run_xi(score_stream(xs, score), config, max_n=max_n, keep_path=keep_path)
