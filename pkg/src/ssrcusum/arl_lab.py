"""Out-of-control ARL experiments.

The conditional delay ``E[N - tau | N > tau]`` is estimated by rejection:
runs that signal on or before observation ``tau`` (all of which is still
in control) are discarded.  The normal-CUSUM oracle replaces the rank
statistics by N(0, 1) noise that picks up a drift ``delta_eff`` after
``tau``; with ``delta_eff = theta0 * delta`` it predicts the SSR delay.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import distlab
from .calibrate import normal_control_limit, published_limit
from .distlab import DistributionSpec
from .engine import BOTH, UPPER, CusumConfig
from .montecarlo import chart_run_lengths, normal_run_lengths
from .scores import ScoreKind

MIN_SURVIVORS = 100


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ShiftScenario:
    """In-control ``base`` up to ``tau``; afterwards ``shift + factor * Y``, ``Y ~ post``."""

    base: DistributionSpec
    tau: int = 0
    shift: float = 0.0
    factor: float = 1.0
    post: Optional[DistributionSpec] = None

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if not self.factor > 0:
            raise ValueError("scale factor must be positive")

    @classmethod
    def location(cls, base, delta: float, tau: int) -> "ShiftScenario":
        return cls(base, tau, shift=delta)

    @classmethod
    def scale(cls, base, factor: float, tau: int) -> "ShiftScenario":
        return cls(base, tau, factor=factor)

    @classmethod
    def swap(cls, base, post, tau: int) -> "ShiftScenario":
        return cls(base, tau, post=post)


@dataclass(frozen=True)
class OocArlEstimate:
    arl: float
    se: float
    kept: int
    discarded: int
    capped: int = 0

    @property
    def reps(self) -> int:
        return self.kept + self.discarded


def conditional_delay(run_lengths: np.ndarray, tau: int, cap: int) -> OocArlEstimate:
    rl = np.asarray(run_lengths)
    capped = int(np.count_nonzero(rl > cap))
    kept = rl[(rl > tau) & (rl <= cap)]
    discarded = int(np.count_nonzero(rl <= tau))
    if kept.size < MIN_SURVIVORS:
        raise ExperimentError(
            f"only {kept.size} runs survived past tau={tau}; tau is too close to the IC ARL")
    delay = (kept - tau).astype(float)
    return OocArlEstimate(float(delay.mean()), float(delay.std(ddof=1) / math.sqrt(delay.size)),
                          int(kept.size), discarded, capped)


def ooc_arl(scenario: ShiftScenario, score, config: CusumConfig, reps: int = 10_000,
            seed=0, cap: int = 10**6) -> OocArlEstimate:
    """Conditional out-of-control ARL of an SSR chart under ``scenario``."""
    if reps < 1000:
        raise ValueError("use at least 1000 replications")
    rl = chart_run_lengths(score, config, reps, seed, base=scenario.base, post=scenario.post,
                           tau=scenario.tau, shift=scenario.shift, factor=scenario.factor,
                           cap=cap, sampler="data")
    return conditional_delay(rl, scenario.tau, cap)


def normal_oracle_arl(delta_eff: float, zeta: float, h: float, tau: int = 0,
                      reps: int = 10_000, seed=0, sides: str = UPPER,
                      cap: int = 10**6) -> OocArlEstimate:
    """Conditional ARL of the normal CUSUM whose increments gain mean ``delta_eff`` after tau."""
    if reps < 1000:
        raise ValueError("use at least 1000 replications")
    config = CusumConfig.symmetric(zeta, h, sides)
    rl = normal_run_lengths(config, reps, seed, tau=tau, delta=delta_eff, cap=cap)
    return conditional_delay(rl, tau, cap)


@dataclass
class GapRow:
    delta: float
    w: float
    n: float

    @property
    def d(self) -> int:
        return int(round(self.w - self.n))


@dataclass
class GapColumn:
    dist: str
    zeta: float
    h: float
    theta0: float
    rows: list = field(default_factory=list)

    @property
    def max_abs_gap_above(self) -> int:
        """Largest |d| over delta > 0.25 (the third line of the abridged table)."""
        gaps = [abs(r.d) for r in self.rows if r.delta > 0.25]
        return max(gaps) if gaps else 0


@dataclass
class GapTable:
    tau: int
    score: str
    columns: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        head = ["delta"]
        for c in self.columns:
            tag = f"{c.dist}:{c.zeta:g}/{c.h:g}"
            head += [f"W[{tag}]", f"N[{tag}]", f"d[{tag}]"]
        w.writerow(head)
        for k, delta in enumerate(r.delta for r in self.columns[0].rows):
            line = [f"{delta:g}"]
            for c in self.columns:
                r = c.rows[k]
                line += [f"{r.w:.1f}", f"{r.n:.1f}", str(r.d)]
            w.writerow(line)
        return buf.getvalue()


def heuristic_gap_table(score, columns: Sequence[dict], deltas: Sequence[float], tau: int,
                        reps: int = 10_000, seed: int = 0) -> GapTable:
    """``W(delta) - N(theta0 delta)`` for one-sided upper charts.

    Each column is a dict with ``dist`` (name or DistributionSpec), ``zeta``,
    ``h`` and optionally ``theta0`` (computed by quadrature when absent).
    """
    kind = ScoreKind.parse(score)
    out = []
    for ci, col in enumerate(columns):
        dist = col["dist"]
        if isinstance(dist, str):
            dist = distlab.parse_distribution(dist)
        theta = col.get("theta0")
        if theta is None:
            theta = distlab.theta0(kind, dist).theta
        gc = GapColumn(dist.label, col["zeta"], col["h"], theta)
        config = CusumConfig.upper_only(col["zeta"], col["h"])
        for di, delta in enumerate(deltas):
            w = ooc_arl(ShiftScenario.location(dist, delta, tau), kind, config, reps,
                        (seed, ci, di, 0))
            n = normal_oracle_arl(theta * delta, col["zeta"], col["h"], tau, reps,
                                  (seed, ci, di, 1))
            gc.rows.append(GapRow(delta, w.arl, n.arl))
        out.append(gc)
    return GapTable(tau, kind.name, out)


def asymmetry_arl(lam: float, zeta: float, reps: int = 10_000, seed=0, h: Optional[float] = None,
                  tau: int = 50, arl0: float = 500.0) -> OocArlEstimate:
    """Two-sided W chart; standard normal through tau, standardized skew-normal after.

    Without ``h`` the two-sided limit for ``arl0`` is calibrated first.
    """
    if h is None:
        h = two_sided_limit("w", zeta, arl0, seed=seed)
    scen = ShiftScenario.swap(distlab.normal(), distlab.skew_normal(lam), tau)
    return ooc_arl(scen, "w", CusumConfig.symmetric(zeta, h, BOTH), reps, seed)


def two_sided_limit(score, zeta: float, arl0: float, reps: int = 10_000, seed=0) -> float:
    """Symmetric two-sided limit with in-control ARL ``arl0``."""
    from .calibrate import CalibrationRequest, solve_control_limit

    req = CalibrationRequest(score, [zeta], [arl0], reps=reps, verify_reps=4 * reps,
                             side=BOTH, seed=seed)
    return solve_control_limit(req).cell(zeta, arl0).h


def location_drift(score, dist: DistributionSpec, delta: float, reps: int = 10_000,
                   tau: int = 200, m: int = 200, seed=0):
    """Mean of post-change xi and its standard error for a location shift."""
    from .montecarlo import post_change_xi_means

    means = post_change_xi_means(score, reps, seed, tau, m, base=dist, shift=delta)
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(reps))


def dispersion_drift(dist: DistributionSpec, factor: float, reps: int = 10_000,
                     tau: int = 200, m: int = 200, seed=0):
    """Mean of post-change dispersion xi and its standard error for a scale change."""
    from .montecarlo import post_change_xi_means

    means = post_change_xi_means("w2", reps, seed, tau, m, base=dist, factor=factor)
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(reps))


# -- experiment manifests -----------------------------------------------------------

_GRID_S2 = [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 1.0, 1.25, 1.5]
_HEUR_COLUMNS = [
    {"dist": "normal", "zeta": 0.10, "h": 12.01, "theta0": 0.98},
    {"dist": "normal", "zeta": 0.25, "h": 7.25, "theta0": 0.98},
    {"dist": "t3", "zeta": 0.15, "h": 9.86, "theta0": 1.37},
    {"dist": "t3", "zeta": 0.35, "h": 5.66, "theta0": 1.37},
]

MANIFESTS = {
    "table2": {"kind": "heuristic", "score": "w", "tau": 50,
               "deltas": [0.125 * k for k in range(1, 13)], "columns": _HEUR_COLUMNS},
    "table_s2_1": {"kind": "heuristic", "score": "w", "tau": 100,
                   "deltas": _GRID_S2, "columns": _HEUR_COLUMNS},
    "table_s2_2": {"kind": "heuristic", "score": "w", "tau": 0,
                   "deltas": _GRID_S2, "columns": _HEUR_COLUMNS},
    "table3": {"kind": "asymmetry", "lambdas": [1, 3, 5], "zetas": [0.05, 0.15, 0.25],
               "tau": 50, "arl0": 500},
    "table4_1": {"kind": "vdw_vs_normal", "arl0": 500, "taus": [0, 50, 100],
                 "targets": [0.5, 1.0], "deltas": [0.25, 0.4, 0.5, 0.75, 1.0, 1.25, 1.5]},
    "table4_2": {"kind": "vdw_vs_normal", "arl0": 500, "taus": [50, 100], "targets": [2.0],
                 "deltas": [0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0], "h_vdw": {"1.0": 2.2},
                 "h_normal": {"1.0": 2.323}},
    "table_s4_1": {"kind": "vdw_vs_normal", "arl0": 1000, "taus": [0, 50, 100],
                   "targets": [0.5, 1.0], "deltas": [0.25, 0.4, 0.5, 0.75, 1.0, 1.25, 1.5]},
}


def load_manifest(source) -> dict:
    """A built-in manifest name, a path to a JSON file, or a dict."""
    if isinstance(source, dict):
        return dict(source)
    if source in MANIFESTS:
        return dict(MANIFESTS[source], name=source)
    with open(source) as fh:
        return json.load(fh)


@dataclass
class ExperimentResult:
    name: str
    header: list
    rows: list
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(self.header)
        w.writerows(self.rows)
        return buf.getvalue()


def vdw_vs_normal(arl0: float, tau: int, target: float, deltas: Sequence[float],
                  reps: int = 10_000, seed=0, h_vdw: Optional[float] = None,
                  h_normal: Optional[float] = None):
    """``V(delta) - N(delta)`` for the VdW chart on normal data vs the normal CUSUM.

    Both charts use ``zeta = target / 2`` and limits for ``arl0``.
    """
    zeta = target / 2.0
    if h_vdw is None:
        try:
            h_vdw = published_limit("vdw", zeta, arl0)
        except KeyError:
            from .calibrate import CalibrationRequest, solve_control_limit
            req = CalibrationRequest("vdw", [zeta], [arl0], seed=seed, verify_reps=4 * reps)
            h_vdw = solve_control_limit(req).cell(zeta, arl0).h
    if h_normal is None:
        h_normal, _ = normal_control_limit(zeta, arl0, reps=10 * reps, seed=seed)
    cfg = CusumConfig.upper_only(zeta, h_vdw)
    out = []
    for k, delta in enumerate(deltas):
        v = ooc_arl(ShiftScenario.location(distlab.normal(), delta, tau), "vdw", cfg, reps,
                    (seed, k, 0))
        n = normal_oracle_arl(delta, zeta, h_normal, tau, reps, (seed, k, 1))
        out.append((delta, v.arl, n.arl))
    return h_vdw, h_normal, out


def run_manifest(source, reps: Optional[int] = None, seed: int = 0) -> ExperimentResult:
    m = load_manifest(source)
    reps = reps or m.get("reps", 10_000)
    name = m.get("name", "experiment")
    kind = m["kind"]
    if kind == "heuristic":
        table = heuristic_gap_table(m.get("score", "w"), m["columns"], m["deltas"], m["tau"],
                                    reps, seed)
        text = list(csv.reader(io.StringIO(table.to_csv())))
        return ExperimentResult(name, text[0], text[1:], {"tau": m["tau"], "reps": reps})
    if kind == "asymmetry":
        header = ["lambda"] + [f"zeta={z:g}" for z in m["zetas"]]
        hs = {z: two_sided_limit("w", z, m["arl0"], seed=seed) for z in m["zetas"]}
        rows = []
        for lam in m["lambdas"]:
            rows.append([f"{lam:g}"] + [
                f"{asymmetry_arl(lam, z, reps, (seed, int(lam * 100)), hs[z], m['tau']).arl:.1f}"
                for z in m["zetas"]])
        return ExperimentResult(name, header, rows, {"h": hs, "reps": reps})
    if kind == "vdw_vs_normal":
        header = ["delta"]
        cols = []
        meta = {"reps": reps, "limits": {}}
        for tau in m["taus"]:
            for target in m["targets"]:
                hv = m.get("h_vdw", {}).get(f"{target / 2:g}") or m.get("h_vdw", {}).get(
                    f"{target / 2:.1f}")
                hn = m.get("h_normal", {}).get(f"{target / 2:g}") or m.get(
                    "h_normal", {}).get(f"{target / 2:.1f}")
                hv, hn, res = vdw_vs_normal(m["arl0"], tau, target, m["deltas"], reps,
                                            (seed, tau, int(target * 100)), hv, hn)
                meta["limits"][f"tau={tau},target={target:g}"] = (hv, hn)
                header.append(f"tau={tau},target={target:g}")
                # the table reports differences rounded up
                cols.append([math.ceil(v - n) for _, v, n in res])
        rows = [[f"{d:g}"] + [c[k] for c in cols] for k, d in enumerate(m["deltas"])]
        return ExperimentResult(name, header, rows, meta)
    raise ExperimentError(f"unknown experiment kind {kind!r}")
