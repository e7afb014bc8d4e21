"""Discrete-event Monte Carlo oracle for the threshold queue.

The simulator models the physical FCFS M/M/c system, not the analytic jump
process: under FCFS the delay realized by an arriving customer equals the
virtual queueing time at its arrival epoch, and by PASTA the per-customer
delays sample the stationary law directly.  Maximal independence from the
analytic code is the point.

Randomness is counter-based (a splitmix64 bijection of the draw index), so
results are a pure function of (params, config), chunking cannot change the
stream, and replication seeds come from the same documented constants.
Exponential variates use the inverse transform.
"""

from __future__ import annotations

import math
from bisect import insort
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import QueueParams

__all__ = [
    "SimConfig",
    "SimEstimate",
    "Estimate",
    "simulate",
    "simulate_replicated",
    "splitmix64",
    "pool_estimates",
]

# splitmix64 constants (Steele, Lea, Flood); the golden-ratio increment makes
# the generator a pure function of the draw counter.
_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_M2 = np.uint64(0x94D049BB133111EB)

_BATCHES = 32
_Z95 = 1.96
_CHUNK = 1 << 19


def splitmix64(seed: int, n: int, start: int = 0) -> np.ndarray:
    """n raw 64-bit outputs of the splitmix64 stream seeded at ``seed``.

    Output i is mix(seed + (start + i + 1) * gamma): a counter-based form of
    the usual state-advancing generator.
    """
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _SM_GAMMA
    z = (z ^ (z >> np.uint64(30))) * _SM_M1
    z = (z ^ (z >> np.uint64(27))) * _SM_M2
    return z ^ (z >> np.uint64(31))


def _uniforms(seed: int, n: int, start: int) -> np.ndarray:
    """Uniforms in [0, 1) from the top 53 bits of the stream."""
    return (splitmix64(seed, n, start) >> np.uint64(11)) * 2.0 ** -53


class Estimate(NamedTuple):
    value: float
    half_width: float


@dataclass(frozen=True)
class SimConfig:
    num_arrivals: int
    warmup_fraction: float = 0.1
    seed: int = 0
    grid: tuple[float, ...] = ()
    replications: int = 1

    def __post_init__(self):
        if self.num_arrivals < 1:
            raise ValueError("num_arrivals must be positive")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError("warmup_fraction must be in [0, 1)")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be sorted ascending")
        if self.replications < 1:
            raise ValueError("replications must be positive")


@dataclass(frozen=True)
class SimEstimate:
    p_wait_zero: Estimate
    cdf_points: tuple[Estimate, ...]
    mean_wait: Estimate
    class2_fraction: float
    seed_used: int
    num_used: int
    queue_len_seen: Estimate        # waiting count sampled at arrival epochs
    arrival_rate_measured: float
    warnings: tuple[str, ...] = ()


def _batch_estimate(batch_sums: np.ndarray, batch_counts: np.ndarray) -> Estimate:
    mask = batch_counts > 0
    means = batch_sums[mask] / batch_counts[mask]
    value = float(batch_sums.sum() / batch_counts.sum())
    if len(means) < 2:
        return Estimate(value, max(abs(value), 1.0))
    se = float(means.std(ddof=1) / math.sqrt(len(means)))
    return Estimate(value, max(_Z95 * se, 1e-15))


def simulate(params: QueueParams, config: SimConfig) -> SimEstimate:
    """Single event-driven FCFS run; statistics by batch means (32 batches).

    Per-arrival work: earliest-free-server lookup, threshold classification,
    one service draw.  The interarrival and service uniforms live in two
    disjoint counter ranges so the draw layout is set once and for all.
    """
    n = config.num_arrivals
    lam, k, c = params.lam, params.k, params.c
    warnings = []
    if not params.stable:
        warnings.append("unstable: statistics are meaningless")

    warmup = int(config.warmup_fraction * n)
    used = n - warmup
    batch_size = max(used // _BATCHES, 1)
    grid = np.asarray(config.grid, dtype=float)

    sum_w = np.zeros(_BATCHES)
    sum_zero = np.zeros(_BATCHES)
    sum_q = np.zeros(_BATCHES)
    sum_le = np.zeros((len(grid), _BATCHES))
    counts = np.zeros(_BATCHES)
    n_class2 = 0
    t_first = t_last = 0.0

    free = [0.0] * c                # sorted server free times
    pending: deque[float] = deque()  # service-start epochs not yet reached
    t = 0.0
    inv_mu1, inv_mu2 = 1.0 / params.mu1, 1.0 / params.mu2
    done = 0
    while done < n:
        m = min(_CHUNK, n - done)
        gaps = -np.log1p(-_uniforms(config.seed, m, done)) / lam
        arrivals = t + np.cumsum(gaps)
        t = float(arrivals[-1])
        draws = -np.log1p(-_uniforms(config.seed, m, n + done))
        arrivals_l = arrivals.tolist()
        draws_l = draws.tolist()
        waits = [0.0] * m
        qlens = [0] * m
        for i in range(m):
            ti = arrivals_l[i]
            while pending and pending[0] <= ti:
                pending.popleft()
            qlens[i] = len(pending)
            earliest = free[0]
            w = earliest - ti
            if w > 0.0:
                waits[i] = w
                start = earliest
                pending.append(start)   # start epochs are nondecreasing (FCFS)
            else:
                w = 0.0
                start = ti
            dur = draws_l[i] * (inv_mu1 if w <= k else inv_mu2)
            free[0] = start + dur
            if c > 1 and free[0] > free[1]:
                v = free.pop(0)
                insort(free, v)

        w_arr = np.asarray(waits)
        idx = np.arange(done, done + m)
        live = idx >= warmup
        if live.any():
            w_live = w_arr[live]
            t_live = arrivals[live]
            if counts.sum() == 0:
                t_first = float(t_live[0])
            t_last = float(t_live[-1])
            b = np.minimum((idx[live] - warmup) // batch_size, _BATCHES - 1)
            counts += np.bincount(b, minlength=_BATCHES)
            sum_w += np.bincount(b, weights=w_live, minlength=_BATCHES)
            sum_zero += np.bincount(b, weights=(w_live == 0.0), minlength=_BATCHES)
            sum_q += np.bincount(b, weights=np.asarray(qlens, float)[live], minlength=_BATCHES)
            for g, x in enumerate(grid):
                sum_le[g] += np.bincount(b, weights=(w_live <= x), minlength=_BATCHES)
            n_class2 += int((w_live > k).sum())
        done += m

    horizon = max(t_last - t_first, 1e-300)
    return SimEstimate(
        p_wait_zero=_batch_estimate(sum_zero, counts),
        cdf_points=tuple(_batch_estimate(sum_le[g], counts) for g in range(len(grid))),
        mean_wait=_batch_estimate(sum_w, counts),
        class2_fraction=n_class2 / used,
        seed_used=config.seed,
        num_used=used,
        queue_len_seen=_batch_estimate(sum_q, counts),
        arrival_rate_measured=used / horizon,
        warnings=tuple(warnings),
    )


def _pool(values: list[Estimate]) -> Estimate:
    r = len(values)
    value = sum(e.value for e in values) / r
    hw = math.sqrt(sum(e.half_width ** 2 for e in values)) / r
    return Estimate(value, max(hw, 1e-15))


def pool_estimates(runs: list[SimEstimate], base_seed: int) -> SimEstimate:
    """Deterministic pooling: plain averages, half-widths combined in quadrature."""
    r = len(runs)
    return SimEstimate(
        p_wait_zero=_pool([e.p_wait_zero for e in runs]),
        cdf_points=tuple(
            _pool([e.cdf_points[g] for e in runs]) for g in range(len(runs[0].cdf_points))
        ),
        mean_wait=_pool([e.mean_wait for e in runs]),
        class2_fraction=sum(e.class2_fraction for e in runs) / r,
        seed_used=base_seed,
        num_used=sum(e.num_used for e in runs),
        queue_len_seen=_pool([e.queue_len_seen for e in runs]),
        arrival_rate_measured=sum(e.arrival_rate_measured for e in runs) / r,
        warnings=tuple(dict.fromkeys(w for e in runs for w in e.warnings)),
    )


def simulate_replicated(params: QueueParams, config: SimConfig) -> SimEstimate:
    """Independent replications with seeds from the splitmix64 stream of the
    base seed; estimates pooled by ``pool_estimates``."""
    seeds = [int(s) for s in splitmix64(config.seed, config.replications)]
    runs = [
        simulate(params, SimConfig(
            num_arrivals=config.num_arrivals,
            warmup_fraction=config.warmup_fraction,
            seed=s,
            grid=config.grid,
            replications=1,
        ))
        for s in seeds
    ]
    return pool_estimates(runs, config.seed)
