"""Pre-generated arrival/service traces consumed by the event engines.

All randomness lives here: arrival instants, batch sizes and per-job service
requirements are drawn up front with numpy so that a trace is a pure function
of (workload, horizon, seed) and both event engines replay the identical
realization. Service requirements are expressed in milliseconds of dedicated
core time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import (
    PARALLEL_PER_CB,
    PARALLEL_PER_UE,
    PARALLEL_SUBFRAME,
    RadioWorkload,
    WorkloadSpec,
    code_blocks_per_tb,
    segment_bits,
)


@dataclass
class WorkloadTrace:
    """One realized workload: sorted batch arrivals and their jobs."""

    arrival: np.ndarray    # f8[n_batches], sorted, all <= horizon
    sizes: np.ndarray      # i8[n_batches], jobs per batch
    offsets: np.ndarray    # i8[n_batches + 1], job index ranges
    service: np.ndarray    # f8[n_jobs], required dedicated-core ms
    source: np.ndarray     # i8[n_batches], routing key (cell index)
    job_batch: np.ndarray  # i8[n_jobs], owning batch of each job

    @property
    def n_batches(self) -> int:
        return int(self.arrival.shape[0])

    @property
    def n_jobs(self) -> int:
        return int(self.service.shape[0])


def _empty_trace() -> WorkloadTrace:
    return WorkloadTrace(
        arrival=np.empty(0, dtype=np.float64),
        sizes=np.empty(0, dtype=np.int64),
        offsets=np.zeros(1, dtype=np.int64),
        service=np.empty(0, dtype=np.float64),
        source=np.empty(0, dtype=np.int64),
        job_batch=np.empty(0, dtype=np.int64),
    )


def _poisson_arrivals(rate: float, horizon: float, rng: np.random.Generator) -> np.ndarray:
    """Arrival instants of a Poisson process on (0, horizon]."""
    chunk = max(int(rate * horizon * 1.1) + 16, 64)
    gaps = rng.exponential(1.0 / rate, size=chunk)
    times = np.cumsum(gaps)
    while times.size == 0 or times[-1] <= horizon:
        gaps = rng.exponential(1.0 / rate, size=max(chunk // 4, 64))
        extra = times[-1] if times.size else 0.0
        times = np.concatenate([times, extra + np.cumsum(gaps)])
    return times[times <= horizon]


def build_trace(workload: WorkloadSpec, horizon: float,
                rng: np.random.Generator) -> WorkloadTrace:
    """Realize a Poisson batch-arrival trace with exponential job services."""
    arrival = _poisson_arrivals(workload.arrival_rate, horizon, rng)
    n = arrival.shape[0]
    if n == 0:
        return _empty_trace()
    sizes = workload.batch_law.sample(rng, n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    n_jobs = int(offsets[-1])
    service = rng.exponential(1.0 / workload.service_rate, size=n_jobs)
    return WorkloadTrace(
        arrival=arrival,
        sizes=sizes,
        offsets=offsets,
        service=service,
        source=np.zeros(n, dtype=np.int64),
        job_batch=np.repeat(np.arange(n, dtype=np.int64), sizes),
    )


def build_radio_trace(radio: RadioWorkload, horizon: float,
                      rng: np.random.Generator, service_bit_rate: float,
                      poisson_arrivals: bool = False) -> WorkloadTrace:
    """Realize a multi-cell subframe trace under the configured parallelism.

    Each cell fires one subframe per TTI starting at a uniformly random
    phase (their superposition is the usual Poisson stand-in); with
    ``poisson_arrivals`` the aggregate is drawn as a Poisson process of rate
    n_cells / TTI instead. Per-job service time is exponential with mean
    job_bits / service_bit_rate.
    """
    if service_bit_rate <= 0.0:
        raise ValueError(f"service_bit_rate must be > 0, got {service_bit_rate}")
    if poisson_arrivals:
        arrival = _poisson_arrivals(radio.n_cells / radio.tti_ms, horizon, rng)
        source = np.zeros(arrival.shape[0], dtype=np.int64)
    else:
        phases = rng.uniform(0.0, radio.tti_ms, size=radio.n_cells)
        per_cell = np.floor((horizon - phases) / radio.tti_ms).astype(np.int64) + 1
        per_cell = np.maximum(per_cell, 0)
        cell_of = np.repeat(np.arange(radio.n_cells, dtype=np.int64), per_cell)
        tick = np.arange(int(per_cell.sum()), dtype=np.int64)
        tick -= np.repeat(np.cumsum(per_cell) - per_cell, per_cell)
        times = phases[cell_of] + tick * radio.tti_ms
        order = np.argsort(times, kind="stable")
        arrival = times[order]
        source = cell_of[order]
    n = arrival.shape[0]
    if n == 0:
        return _empty_trace()

    n_ue = radio.ue_law.sample(rng, n)
    ue_starts = np.cumsum(n_ue) - n_ue
    ue_bits = radio.tb_bits_law.sample(rng, int(n_ue.sum()))

    if radio.parallelism == PARALLEL_SUBFRAME:
        job_bits = np.add.reduceat(ue_bits, ue_starts)
        sizes = np.ones(n, dtype=np.int64)
    elif radio.parallelism == PARALLEL_PER_UE:
        job_bits = ue_bits
        sizes = n_ue
    elif radio.parallelism == PARALLEL_PER_CB:
        counts = code_blocks_per_tb(ue_bits, radio.cb_max_bits)
        job_bits = segment_bits(ue_bits, counts)
        sizes = np.add.reduceat(counts, ue_starts)
    else:
        raise ValueError(f"unknown parallelism mode {radio.parallelism!r}")

    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    n_jobs = int(offsets[-1])
    service = rng.exponential(1.0, size=n_jobs) * (job_bits / service_bit_rate)
    return WorkloadTrace(
        arrival=arrival,
        sizes=sizes,
        offsets=offsets,
        service=service,
        source=source,
        job_batch=np.repeat(np.arange(n, dtype=np.int64), sizes),
    )
