"""Core-count dimensioning: smallest pool meeting a deadline-exceedance target.

The search scans core counts upward from the stability threshold and stops
at the first count whose deadline-exceedance probability is strictly below
the tolerance. The probability comes either from the exact batch sojourn
tail (analytic backend) or from seeded simulation, in which case the 95%
upper confidence bound must clear the tolerance so noise cannot
under-provision the pool.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .analytic import InstabilityError, batch_sojourn_tail, mxmc_stationary
from .model import GREEDY_FCFS, LatencyTarget, SystemSpec, WorkloadSpec
from .simulate import SimConfig, replicate, run

BACKEND_ANALYTIC = "analytic"
BACKEND_SIMULATION = "simulation"
BACKENDS = (BACKEND_ANALYTIC, BACKEND_SIMULATION)

DEFAULT_C_MAX_FACTOR = 4  # exceedance flattens far below this multiple of C_s


class DimensioningError(RuntimeError):
    """No core count up to c_max met the latency target."""


@dataclass(frozen=True)
class DimensioningResult:
    """Outcome of a dimensioning search.

    ``curve`` holds one (cores, exceedance, ci_half_width) row per evaluated
    core count in increasing order; the analytic backend reports half-widths
    of zero.
    """

    c_required: int
    c_stability: int
    curve: tuple[tuple[int, float, float], ...]
    backend: str
    target: LatencyTarget

    def to_dict(self) -> dict:
        return {
            "c_required": self.c_required,
            "c_stability": self.c_stability,
            "backend": self.backend,
            "target": self.target.to_dict(),
            "curve": [
                {"cores": c, "exceedance": p, "ci_half_width": h}
                for c, p, h in self.curve
            ],
        }


def min_stable_cores(workload: WorkloadSpec) -> int:
    """Smallest core count with offered load < 1: floor(lam*E[B]/mu) + 1."""
    work_rate = workload.arrival_rate * workload.batch_law.mean()
    return int(math.floor(work_rate / workload.service_rate)) + 1


def _default_sim_template(workload: WorkloadSpec, target: LatencyTarget,
                          cores: int) -> SimConfig:
    # Horizon sized so the target tolerance corresponds to >= ~200 expected
    # exceedance events, enough for a usable confidence bound.
    horizon = max(2000.0, 200.0 / (target.tolerance * workload.arrival_rate))
    return SimConfig(workload=workload, system=SystemSpec(cores=cores),
                     horizon=horizon)


def _sim_exceedance(template: SimConfig, cores: int, deadline_ms: float,
                    engine: str | None) -> tuple[float, float]:
    config = dataclasses.replace(
        template,
        system=SystemSpec(cores=cores, discipline=GREEDY_FCFS),
    )
    if config.replications >= 2:
        est = replicate(config, engine=engine).exceedance(deadline_ms)
    else:
        est = run(config, engine=engine).exceedance(deadline_ms)
    half = est.ci_half_width
    return est.value, half if math.isfinite(half) else 0.0


def required_cores(
    workload: WorkloadSpec,
    target: LatencyTarget,
    backend: str = BACKEND_ANALYTIC,
    c_max: int | None = None,
    sim_template: SimConfig | None = None,
    engine: str | None = None,
    accelerate: bool = False,
) -> DimensioningResult:
    """Find the smallest core count whose exceedance beats the tolerance.

    The scan starts at the stability threshold C_s and accepts the first
    count with P(sojourn > deadline) strictly below ``target.tolerance``
    (for the simulation backend: value plus 95% half-width below it). With
    ``accelerate`` the scan probes C_s + 2^k - 1 and bisects between the
    last failing and first passing counts, relying on exceedance being
    nonincreasing in the core count. ``sim_template`` supplies horizon,
    warmup, seed and replications for the simulation backend; its system
    field is replaced per evaluated count, and the shared seed means every
    count replays the same arrival trace.

    Raises InstabilityError when ``c_max`` cannot even stabilize the queue,
    DimensioningError when the scan exhausts ``c_max`` without a hit.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    c_s = min_stable_cores(workload)
    if c_max is None:
        c_max = DEFAULT_C_MAX_FACTOR * c_s
    if c_max < c_s:
        raise InstabilityError(
            f"c_max={c_max} is below the stability threshold C_s={c_s}"
        )
    if backend == BACKEND_SIMULATION and sim_template is None:
        sim_template = _default_sim_template(workload, target, c_s)

    cache: dict[int, tuple[float, float]] = {}

    def evaluate(cores: int) -> tuple[float, float]:
        if cores not in cache:
            if backend == BACKEND_ANALYTIC:
                tail = batch_sojourn_tail(workload, cores, [target.deadline_ms])
                cache[cores] = (float(tail.survival[0]), 0.0)
            else:
                cache[cores] = _sim_exceedance(
                    sim_template, cores, target.deadline_ms, engine
                )
        return cache[cores]

    def passes(cores: int) -> bool:
        value, half = evaluate(cores)
        return value + half < target.tolerance

    c_required = None
    if accelerate:
        last_fail = None
        k = 0
        while True:
            cores = min(c_s + (1 << k) - 1, c_max)
            if passes(cores):
                first_pass = cores
                break
            last_fail = cores
            if cores == c_max:
                first_pass = None
                break
            k += 1
        if first_pass is not None:
            lo, hi = last_fail, first_pass
            while lo is not None and hi - lo > 1:
                mid = (lo + hi) // 2
                if passes(mid):
                    hi = mid
                else:
                    lo = mid
            c_required = hi
    else:
        for cores in range(c_s, c_max + 1):
            if passes(cores):
                c_required = cores
                break

    curve = tuple(
        (cores, cache[cores][0], cache[cores][1]) for cores in sorted(cache)
    )
    if c_required is None:
        worst = min(value + half for value, half in cache.values())
        raise DimensioningError(
            f"no core count up to c_max={c_max} reaches exceedance < "
            f"{target.tolerance} (best upper bound {worst:.3g})"
        )
    return DimensioningResult(c_required=c_required, c_stability=c_s,
                              curve=curve, backend=backend, target=target)


def stability_profile(workload: WorkloadSpec, cores: int) -> dict:
    """Quick stability summary for one pool size (load, threshold, mean jobs)."""
    c_s = min_stable_cores(workload)
    rho = workload.offered_load(cores)
    out = {"cores": cores, "offered_load": rho, "c_stability": c_s,
           "stable": rho < 1.0}
    if rho < 1.0:
        out["mean_jobs_in_system"] = mxmc_stationary(workload, cores).mean()
    return out
