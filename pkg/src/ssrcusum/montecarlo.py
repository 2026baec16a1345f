"""Replicated run-length simulation with reproducible, parallel-safe streams.

Replications are grouped in fixed-size blocks.  Block ``b`` draws from
``Generator(SeedSequence(seed, spawn_key=(b,)))``, so results depend only on
``(seed, reps, block_size)`` and never on the number of worker threads.
Kernels release the GIL; ``SSRCUSUM_WORKERS`` sets the default thread count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels as K
from .distlab import KDE, DistributionSpec, normal, uniform
from .engine import CusumConfig
from .scores import ScoreKind, score_spec

BLOCK_SIZE = 500
WORKERS_ENV = "SSRCUSUM_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class RunLengthSummary:
    """Monte Carlo average run length with its standard error."""

    arl: float
    se: float
    reps: int
    capped: int
    cap: int
    seed: object
    run_lengths: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def cap_rate(self) -> float:
        return self.capped / self.reps if self.reps else 0.0


def summarize(run_lengths: np.ndarray, cap: int, seed=0) -> RunLengthSummary:
    rl = np.asarray(run_lengths)
    capped = int(np.count_nonzero(rl > cap))
    done = rl[rl <= cap].astype(float)
    if done.size == 0:
        return RunLengthSummary(math.nan, math.nan, rl.size, capped, cap, seed, rl)
    se = done.std(ddof=1) / math.sqrt(done.size) if done.size > 1 else math.nan
    return RunLengthSummary(float(done.mean()), float(se), int(rl.size), capped, cap, seed, rl)


def block_generator(seed, block: int) -> np.random.Generator:
    """Generator for one block; ``seed`` may be an int or a tuple of ints."""
    entropy = list(seed) if isinstance(seed, (tuple, list)) else seed
    return np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(block,)))


def run_blocks(reps: int, seed: int, kernel: Callable, kind: Optional[ScoreKind] = None,
               block_size: int = BLOCK_SIZE, workers: Optional[int] = None,
               dtype=np.int64) -> np.ndarray:
    """Run ``kernel(g, out, nu)`` over all blocks and concatenate the outputs.

    A kernel returning ``-m`` asks for normalizers up to index ``m``; the
    table is extended and the block rerun from its own seed.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    table = score_spec(kind).normalizers if kind is not None else None
    nblocks = -(-reps // block_size)
    out = np.empty(reps, dtype=dtype)

    def one(b):
        chunk = out[b * block_size: min(reps, (b + 1) * block_size)]
        while True:
            nu = table.array(len(table)) if table is not None else np.ones(1)
            status = kernel(block_generator(seed, b), chunk, nu)
            if status >= 0:
                return
            table.extend(max(-status + 1, 2 * len(table)))

    workers = workers or default_workers()
    if workers == 1 or nblocks == 1:
        for b in range(nblocks):
            one(b)
    else:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(one, range(nblocks)))
    return out


def dist_array(dist: DistributionSpec) -> np.ndarray:
    return np.array([dist.code, dist.param, dist.loc, dist.scale], dtype=np.float64)


def _kde_payload(*dists):
    for d in dists:
        if d is not None and d.family == KDE:
            return np.ascontiguousarray(d.data, dtype=np.float64), float(d.bandwidth)
    return np.zeros(1), 0.0


def chart_run_lengths(score, config: CusumConfig, reps: int, seed: int,
                      base: Optional[DistributionSpec] = None,
                      post: Optional[DistributionSpec] = None,
                      tau: int = 0, shift: float = 0.0, factor: float = 1.0,
                      cap: int = 10**6, sampler: str = "data", init_len: int = 256,
                      workers: Optional[int] = None) -> np.ndarray:
    """Run lengths of a signed-sequential-rank chart.

    ``sampler="data"`` feeds real observations through the rank machinery:
    the first ``tau`` come from ``base`` and later ones are
    ``shift + factor * Y`` with ``Y ~ post`` (default ``base``).
    ``sampler="ranks"`` (in-control only) draws ``(sign, rank)`` straight from
    their null law, which is the same process at a fraction of the cost.
    """
    kind = ScoreKind.parse(score)
    zu, hu = float(config.zeta_up), float(config.h_up)
    zd, hd = float(config.zeta_down), float(config.h_down)
    up, down = config.upper, config.lower
    cap = int(cap)
    if sampler == "ranks":
        if tau != 0 or shift != 0.0 or factor != 1.0 or post is not None:
            raise ValueError("the rank sampler only simulates the in-control law")

        def kernel(g, out, nu):
            return K.run_block_ranks(g, out, int(kind), nu, zu, hu, zd, hd, up, down, cap)
    elif sampler == "data":
        base = base or uniform("none")
        pre_a = dist_array(base)
        post_a = dist_array(post or base)
        kdata, bw = _kde_payload(base, post)
        tau_, shift_, factor_, init_ = int(tau), float(shift), float(factor), int(init_len)

        def kernel(g, out, nu):
            return K.run_block_data(g, out, int(kind), nu, zu, hu, zd, hd, up, down, tau_,
                                    pre_a, post_a, shift_, factor_, kdata, bw, cap, init_)
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    return run_blocks(reps, seed, kernel, kind=kind, workers=workers)


def normal_run_lengths(config: CusumConfig, reps: int, seed: int, tau: int = 0,
                       delta: float = 0.0, cap: int = 10**6,
                       workers: Optional[int] = None) -> np.ndarray:
    """Run lengths of the normal CUSUM (xi ~ N(0,1), then N(delta,1) after tau)."""
    zu, hu = float(config.zeta_up), float(config.h_up)
    zd, hd = float(config.zeta_down), float(config.h_down)
    up, down = config.upper, config.lower
    tau_, delta_, cap_ = int(tau), float(delta), int(cap)

    def kernel(g, out, nu):
        return K.run_block_normal(g, out, zu, hu, zd, hd, up, down, tau_, delta_, cap_)

    return run_blocks(reps, seed, kernel, workers=workers)


def post_change_xi_means(score, reps: int, seed: int, tau: int, m: int,
                         base: Optional[DistributionSpec] = None,
                         post: Optional[DistributionSpec] = None,
                         shift: float = 0.0, factor: float = 1.0,
                         workers: Optional[int] = None) -> np.ndarray:
    """Per-replication average of xi over observations ``tau+1 .. tau+m``."""
    kind = ScoreKind.parse(score)
    base = base or normal()
    pre_a, post_a = dist_array(base), dist_array(post or base)
    kdata, bw = _kde_payload(base, post)
    if kind is not ScoreKind.W2:
        score_spec(kind).normalizers.extend(tau + m + 1)

    def kernel(g, out, nu):
        return K.post_change_xi_means(g, out, int(kind), nu, int(tau), int(m), pre_a, post_a,
                                      float(shift), float(factor), kdata, bw)

    return run_blocks(reps, seed, kernel, kind=kind, workers=workers, dtype=np.float64)
