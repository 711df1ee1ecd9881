"""Discrete-event simulation of the interruptible shared channel.

A single FIFO server works only while the channel is OFF; an ON period
suspends the job in service, which later resumes with its remaining work
(preemptive resume). Two channel clocks are available:

``"service"``
    The ON-OFF renewal process advances only while a job is being served,
    so interruptions hit work in progress and an idle server never waits
    on the channel. This is the queue whose mean delay the
    Pollaczek-Khinchine model with effective service times describes.
``"wall"``
    The ON-OFF process runs in real time whatever the queue does. A job
    reaching an idle server during ON first waits for the next OFF
    period, which adds delay the M/G/1 model does not capture.

The event loops are compiled with numba; their variates are drawn in bulk by
numpy from independent streams (arrivals, X, Y, Z), so a seed fixes the
output bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .distributions import ConfigurationError, DistSpec, sample_array, sample_residual_array, spawn_streams

try:
    from numba import njit
except ImportError:  # pragma: no cover - pure-Python fallback is slow but correct
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

CHANNEL_CLOCKS = ("service", "wall")


@njit(cache=True)
def _run_service_clock(arrivals, work, y, z, k0, iy, iz, off_left, last_dep, start, depart):
    n = arrivals.shape[0]
    for k in range(k0, n):
        snapshot = (iy, iz, off_left)
        begin = max(arrivals[k], last_dep)
        remaining = work[k]
        elapsed = 0.0
        while remaining > off_left:
            if iy >= y.shape[0] or iz >= z.shape[0]:
                return k, snapshot[0], snapshot[1], snapshot[2], last_dep
            remaining -= off_left
            elapsed += off_left + y[iy]
            off_left = z[iz]
            iy += 1
            iz += 1
        off_left -= remaining
        elapsed += remaining
        start[k] = begin
        last_dep = begin + elapsed
        depart[k] = last_dep
    return n, iy, iz, off_left, last_dep


@njit(cache=True)
def _run_wall_clock(arrivals, work, y, z, k0, iy, iz, off_start, off_end, last_dep, start, depart):
    n = arrivals.shape[0]
    for k in range(k0, n):
        snapshot = (iy, iz, off_start, off_end)
        begin = max(arrivals[k], last_dep)
        starved = False
        while off_end <= begin:
            if iy >= y.shape[0] or iz >= z.shape[0]:
                starved = True
                break
            off_start = off_end + y[iy]
            off_end = off_start + z[iz]
            iy += 1
            iz += 1
        if starved:
            return k, snapshot[0], snapshot[1], snapshot[2], snapshot[3], last_dep
        t = max(begin, off_start)
        first = t
        remaining = work[k]
        while remaining > off_end - t:
            if iy >= y.shape[0] or iz >= z.shape[0]:
                starved = True
                break
            remaining -= off_end - t
            off_start = off_end + y[iy]
            off_end = off_start + z[iz]
            t = off_start
            iy += 1
            iz += 1
        if starved:
            return k, snapshot[0], snapshot[1], snapshot[2], snapshot[3], last_dep
        start[k] = first
        last_dep = t + remaining
        depart[k] = last_dep
    return n, iy, iz, off_start, off_end, last_dep


@njit(cache=True)
def _isolated_effective_service(work, residual, y, z, iy, iz, out):
    n = work.shape[0]
    for i in range(n):
        remaining = work[i]
        off_left = residual[i]
        elapsed = 0.0
        while remaining > off_left:
            if iy >= y.shape[0] or iz >= z.shape[0]:
                return i, iy, iz
            remaining -= off_left
            elapsed += off_left + y[iy]
            off_left = z[iz]
            iy += 1
            iz += 1
        out[i] = elapsed + remaining
    return n, iy, iz


@dataclass(frozen=True)
class SimConfig:
    lambda_eff: float
    x: DistSpec
    y: DistSpec
    z: DistSpec
    n_jobs: int = 500_000
    warmup_fraction: float = 0.1
    seed: int = 0
    batches: int = 20
    channel: str = "service"

    def __post_init__(self):
        if not (self.lambda_eff >= 0 and math.isfinite(self.lambda_eff)):
            raise ConfigurationError(f"lambda_eff must be finite and >= 0, got {self.lambda_eff!r}")
        if not 0 <= self.warmup_fraction < 1:
            raise ConfigurationError(f"warmup_fraction must lie in [0, 1), got {self.warmup_fraction!r}")
        if self.batches < 2:
            raise ConfigurationError(f"need at least 2 batches, got {self.batches!r}")
        if self.n_jobs * (1 - self.warmup_fraction) < self.batches * 100:
            raise ConfigurationError(
                f"{self.n_jobs} jobs with warm-up {self.warmup_fraction} leave fewer than 100 jobs per batch"
            )
        if self.channel not in CHANNEL_CLOCKS:
            raise ConfigurationError(f"channel must be one of {CHANNEL_CLOCKS}, got {self.channel!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    @property
    def offered_load(self) -> float:
        return self.lambda_eff * self.x.mean * (1 + self.y.mean / self.z.mean)


@dataclass(frozen=True)
class SimTrace:
    """Per-job times of one run, in arrival order."""

    arrival: np.ndarray
    service_start: np.ndarray
    departure: np.ndarray

    @property
    def sojourn(self) -> np.ndarray:
        return self.departure - self.arrival

    @property
    def effective_service(self) -> np.ndarray:
        return self.departure - self.service_start


@dataclass(frozen=True)
class SimEstimate:
    mean_delay: float
    ci_halfwidth: float
    mean_effective_service: float
    second_moment_effective_service: float
    jobs_counted: int
    offered_load: float
    saturated: bool
    batch_means: tuple[float, ...] = field(default=())

    @property
    def empty(self) -> bool:
        return self.jobs_counted == 0


@dataclass(frozen=True)
class EffectiveServiceEstimate:
    m1: float
    m2: float
    se_m1: float
    se_m2: float
    n: int


def _period_buffer(cfg: SimConfig, total_time: float) -> int:
    cycle = cfg.y.mean + cfg.z.mean
    return int(1.2 * total_time / cycle) + 1024


def run_shared_queue(cfg: SimConfig) -> SimTrace:
    """Simulate ``cfg.n_jobs`` arrivals and return their per-job timeline."""
    if cfg.lambda_eff == 0:
        empty = np.empty(0)
        return SimTrace(empty, empty, empty)
    arr_rng, x_rng, y_rng, z_rng = spawn_streams(cfg.seed, 4)
    n = cfg.n_jobs
    arrivals = np.cumsum(arr_rng.exponential(1.0 / cfg.lambda_eff, n))
    work = sample_array(cfg.x, x_rng, n)
    horizon = max(float(arrivals[-1]), float(work.sum()) * (1 + cfg.y.mean / cfg.z.mean))
    if cfg.channel == "service":
        horizon = float(work.sum())
    chunk = _period_buffer(cfg, horizon)
    y = sample_array(cfg.y, y_rng, chunk)
    z = sample_array(cfg.z, z_rng, chunk)
    start = np.empty(n)
    depart = np.empty(n)

    k, iy, iz, last_dep = 0, 0, 1, 0.0
    if cfg.channel == "service":
        off_left = float(z[0])
        while True:
            k, iy, iz, off_left, last_dep = _run_service_clock(
                arrivals, work, y, z, k, iy, iz, off_left, last_dep, start, depart)
            if k == n:
                break
            y = np.concatenate([y, sample_array(cfg.y, y_rng, chunk)])
            z = np.concatenate([z, sample_array(cfg.z, z_rng, chunk)])
    else:
        off_start, off_end = 0.0, float(z[0])
        while True:
            k, iy, iz, off_start, off_end, last_dep = _run_wall_clock(
                arrivals, work, y, z, k, iy, iz, off_start, off_end, last_dep, start, depart)
            if k == n:
                break
            y = np.concatenate([y, sample_array(cfg.y, y_rng, chunk)])
            z = np.concatenate([z, sample_array(cfg.z, z_rng, chunk)])
    return SimTrace(arrivals, start, depart)


def batch_means_ci(values: np.ndarray, batches: int, level: float = 0.99) -> tuple[float, float, np.ndarray]:
    """Grand mean, Student-t half-width and the batch means of ``values``."""
    size = len(values) // batches
    means = values[: size * batches].reshape(batches, size).mean(axis=1)
    grand = float(means.mean())
    half = float(stats.t.ppf(0.5 + level / 2, batches - 1) * means.std(ddof=1) / math.sqrt(batches))
    return grand, half, means


def simulate_shared_queue(cfg: SimConfig) -> SimEstimate:
    """Steady-state mean sojourn time with a 99% batch-means confidence interval.

    The first ``warmup_fraction`` of jobs are discarded. ``saturated`` is set when
    the offered load ``lambda_eff * E[X] (1 + E[Y]/E[Z])`` is at least one, in
    which case the estimate describes a transient, not a steady state.
    """
    trace = run_shared_queue(cfg)
    load = cfg.offered_load
    if len(trace.arrival) == 0:
        return SimEstimate(0.0, 0.0, 0.0, 0.0, 0, load, False)
    skip = int(cfg.n_jobs * cfg.warmup_fraction)
    sojourn = trace.sojourn[skip:]
    service = trace.effective_service[skip:]
    mean, half, means = batch_means_ci(sojourn, cfg.batches)
    return SimEstimate(
        mean_delay=mean,
        ci_halfwidth=half,
        mean_effective_service=float(service.mean()),
        second_moment_effective_service=float(np.mean(service**2)),
        jobs_counted=len(sojourn),
        offered_load=load,
        saturated=load >= 1.0,
        batch_means=tuple(float(v) for v in means),
    )


def simulate_effective_service(x: DistSpec, y: DistSpec, z: DistSpec, n: int, seed: int = 0) -> EffectiveServiceEstimate:
    """Monte Carlo moments of X_e for independent jobs.

    Each job starts at an arbitrary point of an OFF period: the first OFF
    residual follows the stationary residual-life law of Z.
    """
    if n < 10_000:
        raise ConfigurationError(f"need n >= 10000 samples, got {n}")
    x_rng, y_rng, z_rng, r_rng = spawn_streams(seed, 4)
    work = sample_array(x, x_rng, n)
    residual = sample_residual_array(z, r_rng, n)
    chunk = int(1.2 * work.sum() / z.mean) + 1024
    y_buf = sample_array(y, y_rng, chunk)
    z_buf = sample_array(z, z_rng, chunk)
    out = np.empty(n)
    done, iy, iz = 0, 0, 0
    while True:
        done_now, iy, iz = _isolated_effective_service(work[done:], residual[done:], y_buf, z_buf, iy, iz, out[done:])
        done += done_now
        if done == n:
            break
        y_buf = np.concatenate([y_buf, sample_array(y, y_rng, chunk)])
        z_buf = np.concatenate([z_buf, sample_array(z, z_rng, chunk)])
    sq = out**2
    return EffectiveServiceEstimate(
        m1=float(out.mean()),
        m2=float(sq.mean()),
        se_m1=float(out.std(ddof=1) / math.sqrt(n)),
        se_m2=float(sq.std(ddof=1) / math.sqrt(n)),
        n=n,
    )
