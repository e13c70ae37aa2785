"""Deterministic, seeded discrete-event simulation of batch job processing.

A run realizes the workload as a pre-generated trace (all randomness drawn
up front from one seeded generator), replays it through an event kernel —
greedy FCFS, processor sharing, or FCFS over dedicated partitions, each with
optional batch reneging — and reduces the outcome to latency metrics.
Identical (seed, config) pairs give bit-identical metrics on every engine.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..model import (
    PARALLELISM_MODES,
    PROCESSOR_SHARING,
    RadioWorkload,
    SystemSpec,
    WorkloadSpec,
    _reject_unknown,
    offered_load,
)
from ._engines import DEFAULT_ENGINE, available_engines, get_engine
from ._trace import WorkloadTrace, build_radio_trace, build_trace

__all__ = [
    "SimConfig", "SimMetrics", "Estimate", "ReplicatedMetrics",
    "run", "run_radio", "run_impatient", "replicate",
    "available_engines", "DEFAULT_ENGINE",
]

DEFAULT_OCCUPANCY_CAP = 2048
_CI_LEVEL = 0.95
_BLOCKS = 20  # contiguous blocks for batch-means confidence intervals


@dataclass(frozen=True)
class SimConfig:
    """One simulation experiment: workload, system, horizon and seeding.

    ``warmup`` milliseconds are excluded from all metrics (default: 10% of
    the horizon). Radio workloads additionally need ``service_bit_rate``,
    the per-core decoding throughput in bits per ms, which converts a job's
    bit count into its mean service time; ``radio_poisson_arrivals``
    replaces the per-cell TTI clocks by a Poisson process of the same rate.
    """

    workload: WorkloadSpec | RadioWorkload
    system: SystemSpec
    horizon: float
    warmup: float | None = None
    seed: int = 0
    replications: int = 1
    service_bit_rate: float | None = None
    radio_poisson_arrivals: bool = False
    occupancy_cap: int = DEFAULT_OCCUPANCY_CAP

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if self.warmup is not None and not 0.0 <= self.warmup < self.horizon:
            raise ValueError(
                f"warmup must satisfy 0 <= warmup < horizon, got {self.warmup}"
            )
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if self.occupancy_cap < 2:
            raise ValueError(f"occupancy_cap must be >= 2, got {self.occupancy_cap}")
        if isinstance(self.workload, RadioWorkload):
            if self.service_bit_rate is None or self.service_bit_rate <= 0.0:
                raise ValueError(
                    "radio workloads need service_bit_rate > 0 (bits per ms per core)"
                )
        elif self.service_bit_rate is not None:
            raise ValueError("service_bit_rate only applies to radio workloads")

    @property
    def warmup_ms(self) -> float:
        return 0.1 * self.horizon if self.warmup is None else self.warmup

    def to_dict(self) -> dict:
        out = {
            "workload": self.workload.to_dict(),
            "system": self.system.to_dict(),
            "horizon": self.horizon,
            "seed": self.seed,
            "replications": self.replications,
        }
        if self.warmup is not None:
            out["warmup"] = self.warmup
        if self.service_bit_rate is not None:
            out["service_bit_rate"] = self.service_bit_rate
        if self.radio_poisson_arrivals:
            out["radio_poisson_arrivals"] = True
        if self.occupancy_cap != DEFAULT_OCCUPANCY_CAP:
            out["occupancy_cap"] = self.occupancy_cap
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "SimConfig":
        obj = dict(obj)
        wl = obj.pop("workload")
        workload = (RadioWorkload.from_dict(wl) if "n_cells" in wl
                    else WorkloadSpec.from_dict(wl))
        system = SystemSpec.from_dict(obj.pop("system"))
        horizon = float(obj.pop("horizon"))
        warmup = obj.pop("warmup", None)
        if warmup is not None:
            warmup = float(warmup)
        seed = int(obj.pop("seed", 0))
        replications = int(obj.pop("replications", 1))
        sbr = obj.pop("service_bit_rate", None)
        if sbr is not None:
            sbr = float(sbr)
        poisson = bool(obj.pop("radio_poisson_arrivals", False))
        occ_cap = int(obj.pop("occupancy_cap", DEFAULT_OCCUPANCY_CAP))
        _reject_unknown(obj, "simulation config")
        return cls(workload=workload, system=system, horizon=horizon,
                   warmup=warmup, seed=seed, replications=replications,
                   service_bit_rate=sbr, radio_poisson_arrivals=poisson,
                   occupancy_cap=occ_cap)


@dataclass(frozen=True)
class Estimate:
    """Point estimate with its standard error and 95% half-width."""

    value: float
    std_error: float
    ci_half_width: float
    n: int

    @property
    def upper(self) -> float:
        return self.value + self.ci_half_width

    @property
    def lower(self) -> float:
        return self.value - self.ci_half_width

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error,
                "ci_half_width": self.ci_half_width, "n": self.n}


def _t_ci(values: np.ndarray) -> Estimate:
    """t-based mean estimate over (nearly) independent values."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n == 0:
        return Estimate(math.nan, math.nan, math.nan, 0)
    value = float(values.mean())
    if n < 2:
        return Estimate(value, math.nan, math.nan, n)
    se = float(values.std(ddof=1) / math.sqrt(n))
    half = float(stats.t.ppf(0.5 + _CI_LEVEL / 2.0, n - 1) * se)
    return Estimate(value, se, half, n)


def _batch_means(samples: np.ndarray) -> Estimate:
    """Mean with a batch-means CI: consecutive samples are autocorrelated,
    so the error is judged from means of contiguous blocks."""
    n = samples.size
    if n == 0:
        return Estimate(math.nan, math.nan, math.nan, 0)
    value = float(samples.mean())
    k = min(_BLOCKS, n)
    if k < 2:
        return Estimate(value, math.nan, math.nan, n)
    m = n // k
    blocks = samples[: k * m].reshape(k, m).mean(axis=1)
    se = float(blocks.std(ddof=1) / math.sqrt(k))
    half = float(stats.t.ppf(0.5 + _CI_LEVEL / 2.0, k - 1) * se)
    return Estimate(value, se, half, n)


def _batch_quantile(samples: np.ndarray, q: float) -> Estimate:
    """Quantile point estimate with a batch-means CI over block quantiles."""
    n = samples.size
    if n == 0:
        return Estimate(math.nan, math.nan, math.nan, 0)
    value = float(np.quantile(samples, q))
    k = min(_BLOCKS, n)
    m = n // k
    if k < 2 or m < 2:
        return Estimate(value, math.nan, math.nan, n)
    blocks = np.quantile(samples[: k * m].reshape(k, m), q, axis=1)
    se = float(blocks.std(ddof=1) / math.sqrt(k))
    half = float(stats.t.ppf(0.5 + _CI_LEVEL / 2.0, k - 1) * se)
    return Estimate(value, se, half, n)


@dataclass
class SimMetrics:
    """Latency and accounting metrics of one replication.

    Per-batch arrays cover batches arriving at or after the warmup cut, in
    arrival order. Time averages (utilization, mean jobs in system) span
    [warmup, t_end]; the occupancy distribution spans [warmup, horizon].
    """

    arrival_ms: np.ndarray
    sojourn_ms: np.ndarray
    reneged: np.ndarray
    batches_observed: int
    reneged_fraction: float
    core_utilization: float
    mean_jobs_in_system: float
    mean_job_sojourn: float
    jobs_completed: int
    occupancy_pmf: np.ndarray
    t_end: float
    horizon: float
    warmup: float
    audit_violations: int
    fairness_error: float
    engine: str

    @property
    def p99(self) -> float:
        return self.quantile(0.99)

    def quantile(self, q: float) -> float:
        if self.sojourn_ms.size == 0:
            return math.nan
        return float(np.quantile(self.sojourn_ms, q))

    def p99_estimate(self) -> Estimate:
        return _batch_quantile(self.sojourn_ms, 0.99)

    def exceedance(self, deadline_ms: float) -> Estimate:
        """P(sojourn > deadline) with a 95% batch-means half-width."""
        return _batch_means((self.sojourn_ms > deadline_ms).astype(np.float64))

    def mean_sojourn(self) -> Estimate:
        return _batch_means(self.sojourn_ms)

    def empirical_cdf(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted sojourn values and the empirical CDF evaluated there."""
        ts = np.sort(self.sojourn_ms)
        return ts, np.arange(1, ts.size + 1, dtype=np.float64) / max(ts.size, 1)

    def to_dict(self, deadlines_ms: tuple[float, ...] = ()) -> dict:
        out = {
            "batches_observed": self.batches_observed,
            "jobs_completed": self.jobs_completed,
            "reneged_fraction": self.reneged_fraction,
            "core_utilization": self.core_utilization,
            "mean_jobs_in_system": self.mean_jobs_in_system,
            "mean_job_sojourn_ms": self.mean_job_sojourn,
            "mean_sojourn": self.mean_sojourn().to_dict(),
            "p99_ms": self.p99,
            "t_end": self.t_end,
            "horizon": self.horizon,
            "warmup": self.warmup,
            "audit_violations": self.audit_violations,
            "fairness_error": self.fairness_error,
            "engine": self.engine,
        }
        if deadlines_ms:
            out["exceedance"] = [
                {"deadline_ms": d, **self.exceedance(d).to_dict()}
                for d in deadlines_ms
            ]
        return out


@dataclass
class ReplicatedMetrics:
    """Metrics aggregated over independent replications (t-based CIs)."""

    runs: list

    @property
    def n_replications(self) -> int:
        return len(self.runs)

    @property
    def batches_observed(self) -> int:
        return sum(r.batches_observed for r in self.runs)

    @property
    def reneged_fraction(self) -> float:
        return float(np.mean([r.reneged_fraction for r in self.runs]))

    @property
    def core_utilization(self) -> float:
        return float(np.mean([r.core_utilization for r in self.runs]))

    def exceedance(self, deadline_ms: float) -> Estimate:
        return _t_ci([r.exceedance(deadline_ms).value for r in self.runs])

    def p99(self) -> Estimate:
        return _t_ci([r.p99 for r in self.runs])

    def mean_sojourn(self) -> Estimate:
        return _t_ci([r.mean_sojourn().value for r in self.runs])

    def to_dict(self, deadlines_ms: tuple[float, ...] = ()) -> dict:
        out = {
            "replications": self.n_replications,
            "batches_observed": self.batches_observed,
            "reneged_fraction": self.reneged_fraction,
            "core_utilization": self.core_utilization,
            "mean_sojourn": self.mean_sojourn().to_dict(),
            "p99": self.p99().to_dict(),
        }
        if deadlines_ms:
            out["exceedance"] = [
                {"deadline_ms": d, **self.exceedance(d).to_dict()}
                for d in deadlines_ms
            ]
        return out


def _offered_load_of(config: SimConfig) -> float:
    w = config.workload
    if isinstance(w, WorkloadSpec):
        return offered_load(w, config.system.cores)
    bits_per_ms = (w.n_cells / w.tti_ms) * w.ue_law.mean() * w.tb_bits_law.mean()
    return bits_per_ms / (config.service_bit_rate * config.system.cores)


def _warn_if_unstable(config: SimConfig):
    rho = _offered_load_of(config)
    if rho >= 1.0:
        warnings.warn(
            f"offered load {rho:.3f} >= 1: the system is unstable and the "
            "sojourn metrics will grow with the horizon",
            RuntimeWarning,
            stacklevel=3,
        )


def _realize(config: SimConfig, rng: np.random.Generator,
             workload=None) -> WorkloadTrace:
    w = config.workload if workload is None else workload
    if isinstance(w, RadioWorkload):
        return build_radio_trace(w, config.horizon, rng, config.service_bit_rate,
                                 poisson_arrivals=config.radio_poisson_arrivals)
    return build_trace(w, config.horizon, rng)


def _run_trace(config: SimConfig, trace: WorkloadTrace,
               engine: str | None) -> SimMetrics:
    mod = get_engine(engine)
    system = config.system
    deadline = system.deadline_ms if system.impatient else math.inf
    warmup = config.warmup_ms
    if system.discipline == PROCESSOR_SHARING:
        raw = mod.run_ps(trace.arrival, trace.sizes, trace.offsets,
                         trace.service, trace.job_batch, system.cores,
                         deadline, warmup, config.horizon, config.occupancy_cap)
    else:
        blocks = np.asarray(system.blocks(), dtype=np.int64)
        block_of_batch = trace.source % blocks.shape[0]
        raw = mod.run_fcfs(trace.arrival, trace.sizes, trace.offsets,
                           trace.service, trace.job_batch, block_of_batch,
                           blocks, deadline, warmup, config.horizon,
                           config.occupancy_cap)

    mask = trace.arrival >= warmup
    arrivals = trace.arrival[mask]
    sojourn = raw["depart"][mask] - arrivals
    reneged = raw["reneged"][mask]
    span = raw["t_end"] - warmup
    occ = raw["occupancy_time"]
    occ_total = occ.sum()
    n_done = raw["jobs_completed"]
    return SimMetrics(
        arrival_ms=arrivals,
        sojourn_ms=sojourn,
        reneged=reneged,
        batches_observed=int(arrivals.size),
        reneged_fraction=float(reneged.mean()) if reneged.size else 0.0,
        core_utilization=raw["area_busy"] / (system.cores * span) if span > 0 else 0.0,
        mean_jobs_in_system=raw["area_jobs"] / span if span > 0 else 0.0,
        mean_job_sojourn=raw["job_sojourn_sum"] / n_done if n_done else math.nan,
        jobs_completed=n_done,
        occupancy_pmf=occ / occ_total if occ_total > 0 else occ,
        t_end=raw["t_end"],
        horizon=config.horizon,
        warmup=warmup,
        audit_violations=raw["audit_violations"],
        fairness_error=raw["fairness_error"],
        engine=mod.ENGINE_NAME,
    )


def run(config: SimConfig, engine: str | None = None) -> SimMetrics:
    """Simulate one replication of ``config`` and return its metrics."""
    _warn_if_unstable(config)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    return _run_trace(config, _realize(config, rng), engine)


def run_radio(config: SimConfig, modes: tuple[str, ...] | None = None,
              engine: str | None = None) -> dict:
    """Simulate a radio workload once per parallelism mode.

    Every mode is fed the same seed, hence the identical cell phases, UE
    counts and transport-block sizes; only the job decomposition differs,
    making the per-mode sojourn metrics directly comparable.
    """
    if not isinstance(config.workload, RadioWorkload):
        raise TypeError("run_radio needs a RadioWorkload in config.workload")
    _warn_if_unstable(config)
    out = {}
    for mode in PARALLELISM_MODES if modes is None else modes:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed))
        radio = config.workload.with_parallelism(mode)
        out[mode] = _run_trace(config, _realize(config, rng, radio), engine)
    return out


def run_impatient(config: SimConfig, engine: str | None = None) -> SimMetrics:
    """Simulate with batch reneging; requires ``system.deadline_ms``."""
    if not config.system.impatient:
        raise ValueError("run_impatient needs system.deadline_ms to be set")
    return run(config, engine)


def _run_stream(args):
    config, seed_seq, engine = args
    rng = np.random.default_rng(seed_seq)
    return _run_trace(config, _realize(config, rng), engine)


def replicate(config: SimConfig, engine: str | None = None,
              workers: int | None = None) -> ReplicatedMetrics:
    """Run ``config.replications`` independent replications and aggregate.

    Per-replication generators come from ``SeedSequence(seed).spawn``, so the
    streams are mutually independent and no two replications share one.
    ``workers`` > 1 distributes replications over a process pool; results
    are merged in replication order either way.
    """
    if config.replications < 2:
        raise ValueError(
            f"replicate needs replications >= 2, got {config.replications}"
        )
    _warn_if_unstable(config)
    streams = np.random.SeedSequence(config.seed).spawn(config.replications)
    jobs = [(config, s, engine) for s in streams]
    if workers is None:
        workers = 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_stream, jobs))
    else:
        runs = [_run_stream(job) for job in jobs]
    return ReplicatedMetrics(runs=runs)
