"""Concurrent location and dispersion charts over one observation stream.

Both charts share a single rank accumulator.  The location chart uses a
Wilcoxon or van der Waerden score, the dispersion chart the squared-rank
score.  Four charts at an in-control ARL of 2000 each give an overall
false-alarm spacing of roughly 500.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .engine import LOWER, UPPER, ChartError, CusumConfig, CusumState, reset_chart, step
from .scores import ScoreKind, score_spec, xi_dispersion, xi_location
from .seqrank import RankAccumulator

LOCATION = "location"
DISPERSION = "dispersion"


@dataclass(frozen=True)
class MonitorConfig:
    location: Optional[CusumConfig] = None
    dispersion: Optional[CusumConfig] = None
    score: str = "w"
    halt_on_signal: bool = True

    def __post_init__(self):
        if self.location is None and self.dispersion is None:
            raise ValueError("configure at least one chart")
        if not ScoreKind.parse(self.score).is_location:
            raise ValueError("the location chart needs a location score (w or vdw)")
        for name, cfg in ((LOCATION, self.location), (DISPERSION, self.dispersion)):
            if cfg is None:
                continue
            if cfg.upper and not math.isfinite(cfg.h_up):
                raise ValueError(f"{name} chart: upper control limit missing")
            if cfg.lower and not math.isfinite(cfg.h_down):
                raise ValueError(f"{name} chart: lower control limit missing")


@dataclass
class MonitorRecord:
    n: int
    x: float
    sign: int
    rank: int
    xi_location: Optional[float]
    xi_dispersion: Optional[float]
    loc_up: Optional[float]
    loc_down: Optional[float]
    disp_up: Optional[float]
    disp_down: Optional[float]
    signal: str
    changepoint: str


@dataclass(frozen=True)
class ChartSignal:
    chart: str
    side: str
    index: int
    changepoint: int
    d_value: float

    @property
    def label(self) -> str:
        return f"{self.chart}:{self.side}"


@dataclass
class MonitorReport:
    n: int
    signals: list
    zeros: int
    halted: bool
    warnings: list = field(default_factory=list)

    @property
    def first_signal(self) -> Optional[ChartSignal]:
        return self.signals[0] if self.signals else None


class _Chart:
    def __init__(self, name: str, config: CusumConfig):
        self.name = name
        self.config = config
        self.state = CusumState()
        self.offset = 0

    def step(self, xi: float) -> Optional[ChartSignal]:
        _, side = step(self.state, xi, self.config)
        if side is None:
            return None
        st = self.state
        d, cp = (st.d_up, st.last_zero_up) if side == UPPER else (st.d_down, st.last_zero_down)
        return ChartSignal(self.name, side, self.offset + st.n, self.offset + cp, d)

    def restart(self):
        self.offset += self.state.n
        reset_chart(self.state)

    def values(self):
        up = self.state.d_up if self.config.upper else None
        down = self.state.d_down if self.config.lower else None
        return up, down


class Monitor:
    """Feed observations with :meth:`push`; one :class:`MonitorRecord` per call.

    After a signal the monitor halts (``halt_on_signal``) or restarts the
    signalling chart while ranks keep accumulating.
    """

    def __init__(self, config: MonitorConfig):
        self.config = config
        self.kind = ScoreKind.parse(config.score)
        self._spec = score_spec(self.kind)
        self.ranks = RankAccumulator()
        self.loc = _Chart(LOCATION, config.location) if config.location else None
        self.disp = _Chart(DISPERSION, config.dispersion) if config.dispersion else None
        self.signals: list = []
        self.halted = False

    @property
    def n(self) -> int:
        return self.ranks.count

    def push(self, x: float) -> MonitorRecord:
        if self.halted:
            raise ChartError("monitor halted after a signal")
        s, r, i = self.ranks.push(x)
        hits = []
        xl = xd = None
        if self.loc is not None:
            xl = xi_location(self._spec, i, s, r)
            hits.append(self.loc.step(xl))
        if self.disp is not None:
            xd = xi_dispersion(i, r)
            hits.append(self.disp.step(xd))
        hits = [h for h in hits if h is not None]
        lu, ld = self.loc.values() if self.loc else (None, None)
        du, dd = self.disp.values() if self.disp else (None, None)
        rec = MonitorRecord(i, float(x), s, r, xl, xd, lu, ld, du, dd,
                            ";".join(h.label for h in hits),
                            ";".join(str(h.changepoint) for h in hits))
        if hits:
            self.signals.extend(hits)
            if self.config.halt_on_signal:
                self.halted = True
            else:
                for h in hits:
                    (self.loc if h.chart == LOCATION else self.disp).restart()
        return rec

    def report(self) -> MonitorReport:
        warns = []
        if self.ranks.zeros:
            warns.append(f"{self.ranks.zeros} zero difference(s): sign 0 gives a zero "
                         "location statistic")
        return MonitorReport(self.n, list(self.signals), self.ranks.zeros, self.halted, warns)


def monitor_stream(xs: Iterable[float], config: MonitorConfig, keep_records: bool = True):
    """Run a :class:`Monitor` over ``xs``; returns ``(report, records)``."""
    mon = Monitor(config)
    records = []
    for x in xs:
        rec = mon.push(x)
        if keep_records:
            records.append(rec)
        if mon.halted:
            break
    return mon.report(), records


def location_config(zeta: float, h: float, two_sided: bool = True) -> CusumConfig:
    return CusumConfig.symmetric(zeta, h) if two_sided else CusumConfig.upper_only(zeta, h)


def dispersion_config(zeta_up: Optional[float], h_up: Optional[float],
                      zeta_down: Optional[float] = None,
                      h_down: Optional[float] = None) -> CusumConfig:
    """Any side whose reference value is given becomes active."""
    up, down = zeta_up is not None, zeta_down is not None
    if not (up or down):
        raise ValueError("dispersion chart needs zeta_up and/or zeta_down")
    if up and h_up is None or down and h_down is None:
        raise ValueError("dispersion chart: control limit missing for an active side")
    sides = "both" if up and down else (UPPER if up else LOWER)
    return CusumConfig(zeta_up or 0.0, zeta_down or 0.0,
                       h_up if up else math.inf, h_down if down else math.inf, sides)
