#!/usr/bin/env python3
"""Benchmark the compiled event kernel against the pure-Python twin.

Runs the same seeded configurations through both engines, checks that every
metric (including the raw departure times) is bit-identical, and reports
wall-clock timings with the resulting speedup. Usage:

    python benchmarks/bench_engines.py [--horizon MS] [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cranq.model import BatchLaw, SystemSpec, WorkloadSpec
from cranq.simulate import SimConfig, available_engines, run


def _scenarios(horizon: float) -> dict:
    geo = WorkloadSpec(1.0, BatchLaw.geometric(0.5), 1.0)
    return {
        "fcfs C=4 rho=0.5": SimConfig(
            workload=geo, system=SystemSpec(cores=4), horizon=horizon, seed=11
        ),
        "fcfs C=4 renege": SimConfig(
            workload=geo, system=SystemSpec(cores=4, deadline_ms=2.0),
            horizon=horizon, seed=11,
        ),
        "dedicated 2x2": SimConfig(
            workload=geo,
            system=SystemSpec(cores=4, discipline="dedicated", partition=(2, 2)),
            horizon=horizon, seed=11,
        ),
        "ps C=4": SimConfig(
            workload=geo, system=SystemSpec(cores=4, discipline="processor_sharing"),
            horizon=horizon, seed=11,
        ),
    }


def _time_run(config: SimConfig, engine: str, repeats: int):
    metrics = None
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        metrics = run(config, engine=engine)
        best = min(best, time.perf_counter() - start)
    return metrics, best


def _assert_identical(a, b, label: str):
    checks = {
        "sojourn_ms": np.array_equal(a.sojourn_ms, b.sojourn_ms),
        "reneged": np.array_equal(a.reneged, b.reneged),
        "occupancy_pmf": np.array_equal(a.occupancy_pmf, b.occupancy_pmf),
        "core_utilization": a.core_utilization == b.core_utilization,
        "mean_jobs_in_system": a.mean_jobs_in_system == b.mean_jobs_in_system,
        "mean_job_sojourn": a.mean_job_sojourn == b.mean_job_sojourn,
        "jobs_completed": a.jobs_completed == b.jobs_completed,
    }
    bad = [name for name, ok in checks.items() if not ok]
    if bad:
        raise AssertionError(f"{label}: engines disagree on {', '.join(bad)}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--horizon", type=float, default=200000.0,
                        help="simulated milliseconds per scenario")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats (best is reported)")
    args = parser.parse_args()

    engines = available_engines()
    if "cy" not in engines:
        print("compiled engine unavailable; timing the Python engine only")

    width = max(len(name) for name in _scenarios(1.0))
    header = f"{'scenario'.ljust(width)}  {'batches':>9}"
    for eng in engines:
        header += f"  {eng + ' [s]':>10}"
    if len(engines) > 1:
        header += f"  {'speedup':>8}"
    print(header)

    for name, config in _scenarios(args.horizon).items():
        timings = {}
        results = {}
        for eng in engines:
            results[eng], timings[eng] = _time_run(config, eng, args.repeats)
        if "cy" in results and "py" in results:
            _assert_identical(results["cy"], results["py"], name)
        n = next(iter(results.values())).batches_observed
        row = f"{name.ljust(width)}  {n:>9}"
        for eng in engines:
            row += f"  {timings[eng]:>10.3f}"
        if len(engines) > 1:
            row += f"  {timings['py'] / timings['cy']:>7.1f}x"
        print(row)

    if len(engines) > 1:
        print("all scenarios bit-identical across engines")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
