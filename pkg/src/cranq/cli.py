"""Command-line front end: config ingestion, experiment runs, serialization.

Subcommands
-----------
- ``analyze``    stationary occupancy law and batch sojourn tail (CSV series)
- ``simulate``   seeded event simulation; metrics JSON, optional sample CSV,
                 per-parallelism-mode CDF series for radio workloads
- ``dimension``  smallest core count meeting a latency target, plus the
                 exceedance-vs-cores curve
- ``fronthaul``  CPRI vs intra-PHY split bandwidth report, latency/distance
- ``sweep``      vary one numeric config field, one exceedance row per value

Conventions: configs are JSON; structured results are written as JSON and
plottable series as CSV, regardless of ``--format``, which only selects the
fronthaul report format. Every output file carries the toolkit version, the
SHA-256 of the effective config, and the seed, so identical config+seed
reruns produce identical bytes. Diagnostics go to stderr as JSON lines.
Exit codes: 0 success, 2 validation error, 3 unstable workload, 4
truncation failure, 5 core budget exhausted.
"""

from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .analytic import (
    InstabilityError,
    TruncationError,
    batch_sojourn_tail,
    mxmc_stationary,
)
from .dimension import (
    BACKEND_ANALYTIC,
    BACKEND_SIMULATION,
    DimensioningError,
    min_stable_cores,
    required_cores,
)
from .fronthaul import (
    FronthaulSpec,
    aggregation_report,
    distance_to_latency,
    latency_to_distance,
)
from .model import (
    GREEDY_FCFS,
    PARALLELISM_MODES,
    LatencyTarget,
    RadioWorkload,
    SystemSpec,
    WorkloadSpec,
    offered_load,
)
from .simulate import ReplicatedMetrics, SimConfig, replicate, run, run_radio

WORKERS_ENV = "CRANQ_WORKERS"


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args.config)
        _apply_overrides(config, args)
        handler = _HANDLERS[args.command]
        handler(config, args)
    except InstabilityError as exc:
        _diag("error", "instability", str(exc))
        return 3
    except TruncationError as exc:
        _diag("error", "truncation", str(exc))
        return 4
    except DimensioningError as exc:
        _diag("error", "dimensioning", str(exc))
        return 5
    except (ValueError, TypeError, KeyError, OSError) as exc:
        _diag("error", "validation", _describe(exc))
        return 2
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cranq",
        description="Dimensioning toolkit for pooled baseband processing.",
    )
    parser.add_argument("--version", action="version",
                        version=f"cranq {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config path")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--replications", type=int, default=None,
                        help="override the replication count")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="fronthaul report format (series are always CSV)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--backend", choices=("analytic", "sim"), default=None,
                        help="exceedance backend for dimension/sweep")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common],
                   help="stationary law and sojourn tail")
    sub.add_parser("simulate", parents=[common],
                   help="seeded discrete-event simulation")
    sub.add_parser("dimension", parents=[common],
                   help="search the minimal core count")
    sub.add_parser("fronthaul", parents=[common],
                   help="transport bandwidth and latency report")
    sub.add_parser("sweep", parents=[common],
                   help="one-parameter exceedance sweep")
    return parser


def _load_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError(f"config root must be a JSON object, got {type(obj).__name__}")
    return obj


def _apply_overrides(config: dict, args):
    has_sim = isinstance(config.get("sim"), dict)
    if args.seed is not None:
        config["seed"] = args.seed
        if has_sim:
            config["sim"]["seed"] = args.seed
    if args.replications is not None:
        config["replications"] = args.replications
        if has_sim:
            config["sim"]["replications"] = args.replications
    if args.backend is not None and args.command in ("dimension", "sweep"):
        config["backend"] = (BACKEND_SIMULATION if args.backend == "sim"
                             else BACKEND_ANALYTIC)


def _describe(exc: Exception) -> str:
    if isinstance(exc, KeyError):
        return f"missing config key: {exc.args[0]!r}"
    if isinstance(exc, OSError):
        return f"{exc.__class__.__name__}: {exc}"
    return str(exc)


def _diag(level: str, code: str, message: str):
    print(json.dumps({"level": level, "code": code, "message": message}),
          file=sys.stderr)


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        n = int(raw)
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


# --------------------------------------------------------------------------
# output plumbing

def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _meta(config: dict) -> dict:
    return {
        "tool": "cranq",
        "version": __version__,
        "config_sha256": _config_hash(config),
        "seed": config.get("seed", config.get("sim", {}).get("seed", 0)),
    }


def _out_path(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _write_json(args, name: str, meta: dict, result: dict) -> str:
    path = _out_path(args, name)
    payload = json.dumps({"meta": meta, "result": result}, indent=2) + "\n"
    _atomic_write(path, payload)
    _diag("info", "output", f"wrote {path}")
    return path


def _write_csv(args, name: str, meta: dict, header: list, rows) -> str:
    path = _out_path(args, name)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)
    _diag("info", "output", f"wrote {path}")
    return path


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


# --------------------------------------------------------------------------
# analyze

def cmd_analyze(config: dict, args):
    config = copy.deepcopy(config)
    workload = WorkloadSpec.from_dict(config["workload"])
    cores = int(config["cores"])
    grid = _time_grid(config)
    n_trunc = config.get("n_trunc")

    stationary = mxmc_stationary(workload, cores,
                                 n_trunc=None if n_trunc is None else int(n_trunc))
    tail = batch_sojourn_tail(workload, cores, grid, stationary=stationary)

    meta = _meta(config)
    _write_csv(args, "stationary.csv", meta, ["n", "prob"],
               ((n, repr(float(p))) for n, p in enumerate(stationary.probs)))
    _write_csv(args, "sojourn_tail.csv", meta, ["t", "survival"],
               ((repr(float(t)), repr(float(s)))
                for t, s in zip(tail.grid, tail.survival)))
    _write_json(args, "analyze.json", meta, {
        "offered_load": offered_load(workload, cores),
        "cores": cores,
        "truncation": stationary.truncation,
        "tail_mass_bound": stationary.tail_mass_bound,
        "mean_jobs_in_system": stationary.mean(),
    })


def _time_grid(config: dict) -> np.ndarray:
    if "times_ms" in config:
        return np.asarray([float(t) for t in config["times_ms"]], dtype=np.float64)
    grid = config.get("grid")
    if not grid:
        raise ValueError("config needs either 'times_ms' or 'grid'")
    start = float(grid.get("start_ms", 0.0))
    stop = float(grid["stop_ms"])
    points = int(grid.get("points", 101))
    if points < 1 or stop < start:
        raise ValueError(f"bad time grid: start={start} stop={stop} points={points}")
    return np.linspace(start, stop, points)


# --------------------------------------------------------------------------
# simulate

def cmd_simulate(config: dict, args):
    meta = _meta(config)
    config = copy.deepcopy(config)
    deadlines = tuple(float(d) for d in config.pop("deadlines_ms", ()))
    want_samples = bool(config.pop("samples_csv", False))
    modes = config.pop("modes", None)
    sim_config = SimConfig.from_dict(config)

    if isinstance(sim_config.workload, RadioWorkload):
        _simulate_radio(sim_config, modes, deadlines, want_samples, meta, args)
        return
    if modes is not None:
        raise ValueError("'modes' applies only to radio workloads")
    if sim_config.replications >= 2:
        rep = replicate(sim_config, workers=_workers())
        result = rep.to_dict(deadlines)
        samples = _pooled(rep)
    else:
        metrics = run(sim_config)
        result = metrics.to_dict(deadlines)
        samples = (metrics.arrival_ms, metrics.sojourn_ms, metrics.reneged)
    _write_json(args, "simulate.json", meta, result)
    if want_samples:
        _write_samples(args, meta, samples)


def _simulate_radio(sim_config, modes, deadlines, want_samples, meta, args):
    if modes is None:
        modes = PARALLELISM_MODES
    else:
        modes = tuple(modes)
        unknown = set(modes) - set(PARALLELISM_MODES)
        if unknown:
            raise ValueError(f"unknown parallelism modes: {sorted(unknown)}")
    per_mode = {}
    samples = {}
    if sim_config.replications >= 2:
        for mode in modes:
            cfg = dataclasses.replace(
                sim_config,
                workload=sim_config.workload.with_parallelism(mode),
            )
            rep = replicate(cfg, workers=_workers())
            per_mode[mode] = rep.to_dict(deadlines)
            samples[mode] = _pooled(rep)
    else:
        for mode, metrics in run_radio(sim_config, modes=modes).items():
            per_mode[mode] = metrics.to_dict(deadlines)
            samples[mode] = (metrics.arrival_ms, metrics.sojourn_ms,
                             metrics.reneged)
    _write_json(args, "simulate.json", meta, {"modes": per_mode})
    _write_cdf(args, meta, samples)
    if want_samples:
        flat = tuple(np.concatenate([samples[m][i] for m in modes])
                     for i in range(3))
        _write_samples(args, meta, flat)


def _pooled(rep: ReplicatedMetrics):
    arrivals = np.concatenate([r.arrival_ms for r in rep.runs])
    sojourn = np.concatenate([r.sojourn_ms for r in rep.runs])
    reneged = np.concatenate([r.reneged for r in rep.runs])
    return arrivals, sojourn, reneged


def _write_samples(args, meta, samples):
    arrivals, sojourn, reneged = samples
    rows = (
        (i, repr(float(a)), repr(float(s)), int(r))
        for i, (a, s, r) in enumerate(zip(arrivals, sojourn, reneged))
    )
    _write_csv(args, "samples.csv", meta,
               ["batch_id", "arrival_ms", "sojourn_ms", "reneged"], rows)


def _write_cdf(args, meta, samples: dict):
    def rows():
        for mode, (_, sojourn, _) in samples.items():
            ts = np.sort(sojourn)
            n = ts.size
            for k, t in enumerate(ts, start=1):
                yield mode, repr(float(t)), repr(k / n)
    _write_csv(args, "sojourn_cdf.csv", meta, ["mode", "t", "F"], rows())


# --------------------------------------------------------------------------
# dimension

def cmd_dimension(config: dict, args):
    config = copy.deepcopy(config)
    workload = WorkloadSpec.from_dict(config["workload"])
    target = LatencyTarget.from_dict(config["target"])
    backend = config.get("backend", BACKEND_ANALYTIC)
    c_max = config.get("c_max")
    template = None
    if backend == BACKEND_SIMULATION and "sim" in config:
        sim = dict(config["sim"])
        sim["workload"] = config["workload"]
        sim.setdefault("system", {"cores": min_stable_cores(workload)})
        template = SimConfig.from_dict(sim)
    result = required_cores(
        workload, target, backend=backend,
        c_max=None if c_max is None else int(c_max),
        sim_template=template,
        accelerate=bool(config.get("accelerate", False)),
    )
    meta = _meta(config)
    _write_json(args, "dimension.json", meta, result.to_dict())
    _write_csv(args, "dimension_curve.csv", meta,
               ["C", "exceedance", "ci_half_width"],
               ((c, repr(p), repr(h)) for c, p, h in result.curve))


# --------------------------------------------------------------------------
# fronthaul

def cmd_fronthaul(config: dict, args):
    config = copy.deepcopy(config)
    spec = FronthaulSpec.from_dict(config.get("spec", {}))
    n_cells = int(config.get("n_cells", 1))
    load_factor = float(config.get("load_factor", 1.0))
    report = aggregation_report(n_cells, spec, load_factor)
    budget = config.get("latency_budget_ms")
    if budget is not None:
        km = latency_to_distance(float(budget), spec.fiber_speed_mps)
        report["latency_budget_ms"] = float(budget)
        report["reach_km"] = km
        report["roundtrip_check_ms"] = distance_to_latency(
            km, spec.fiber_speed_mps)
    report["spec"] = spec.to_dict()

    meta = _meta(config)
    if args.format == "csv":
        rows = [
            ("cpri_bps", repr(report["per_cell"]["cpri_bps"]),
             repr(report["total"]["cpri_bps"])),
            ("split6_downlink_bps",
             repr(report["per_cell"]["split6_downlink_bps"]),
             repr(report["total"]["split6_downlink_bps"])),
            ("split6_uplink_bps",
             repr(report["per_cell"]["split6_uplink_bps"]),
             repr(report["total"]["split6_uplink_bps"])),
        ]
        _write_csv(args, "fronthaul.csv", meta, ["metric", "per_cell", "total"],
                   rows)
    else:
        _write_json(args, "fronthaul.json", meta, report)
    print(_fronthaul_table(report))


def _fronthaul_table(report: dict) -> str:
    n = report["n_cells"]
    rows = [
        ("metric", "per cell", f"total ({n} cells)"),
        ("CPRI (constant)",
         _fmt_rate(report["per_cell"]["cpri_bps"]),
         _fmt_rate(report["total"]["cpri_bps"])),
        ("split VI downlink (peak)",
         _fmt_rate(report["per_cell"]["split6_downlink_bps"]),
         _fmt_rate(report["total"]["split6_downlink_bps"])),
        ("split VI uplink (peak)",
         _fmt_rate(report["per_cell"]["split6_uplink_bps"]),
         _fmt_rate(report["total"]["split6_uplink_bps"])),
        ("CPRI / split VI downlink",
         f"{report['cpri_over_split6_downlink']:.2f}x", ""),
    ]
    if "reach_km" in report:
        rows.append((f"reach at {report['latency_budget_ms']} ms budget",
                     f"{report['reach_km']:.2f} km", ""))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    return "\n".join(
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in rows
    )


def _fmt_rate(bps: float) -> str:
    for unit, scale in (("Gbps", 1e9), ("Mbps", 1e6), ("kbps", 1e3)):
        if bps >= scale:
            return f"{bps / scale:.4g} {unit}"
    return f"{bps:.4g} bps"


# --------------------------------------------------------------------------
# sweep

def cmd_sweep(config: dict, args):
    config = copy.deepcopy(config)
    field = config["field"]
    values = _sweep_values(config["values"])
    deadline = float(config["deadline_ms"])
    backend = config.get("backend", BACKEND_ANALYTIC)
    base = {"workload": config["workload"], "system": config["system"]}
    _resolve_field(base, field)  # unknown sweep fields fail before any run

    rows = []
    for value in values:
        point = copy.deepcopy(base)
        holder, leaf = _resolve_field(point, field)
        holder[leaf] = value
        workload = WorkloadSpec.from_dict(point["workload"])
        system = SystemSpec.from_dict(point["system"])
        exceedance, half = _point_exceedance(
            workload, system, deadline, backend, config.get("sim"))
        rows.append((value, exceedance, half))

    meta = _meta(config)
    _write_csv(args, "sweep.csv", meta, [field, "exceedance", "ci_half_width"],
               ((repr(v) if isinstance(v, float) else v, repr(p), repr(h))
                for v, p, h in rows))


def _sweep_values(spec) -> list:
    if isinstance(spec, list):
        if not spec:
            raise ValueError("sweep values list is empty")
        return spec
    if isinstance(spec, dict):
        start = spec["start"]
        stop = spec["stop"]
        step = spec.get("step", 1)
        if step <= 0:
            raise ValueError(f"sweep step must be > 0, got {step}")
        out = []
        value = start
        while value <= stop + 1e-12:
            out.append(int(value) if float(value).is_integer() else value)
            value += step
        if not out:
            raise ValueError(f"empty sweep range {start}..{stop}")
        return out
    raise ValueError("sweep 'values' must be a list or a start/stop/step object")


def _resolve_field(tree: dict, path: str):
    holder = tree
    parts = path.split(".")
    for part in parts[:-1]:
        if not isinstance(holder, dict) or part not in holder:
            raise ValueError(f"unknown sweep field {path!r}")
        holder = holder[part]
    leaf = parts[-1]
    if not isinstance(holder, dict) or leaf not in holder:
        raise ValueError(f"unknown sweep field {path!r}")
    return holder, leaf


def _point_exceedance(workload, system, deadline, backend, sim_extra):
    if backend == BACKEND_ANALYTIC:
        if system.discipline != GREEDY_FCFS:
            raise ValueError(
                "the analytic backend models the greedy FCFS pool; use the "
                f"simulation backend for {system.discipline!r}"
            )
        if offered_load(workload, system.cores) >= 1.0:
            # Unstable points have no stationary tail; the sojourn exceeds
            # any deadline almost surely in the long run.
            return 1.0, 0.0
        tail = batch_sojourn_tail(workload, system.cores, [deadline])
        return float(tail.survival[0]), 0.0
    if backend != BACKEND_SIMULATION:
        raise ValueError(f"unknown backend {backend!r}")
    sim = dict(sim_extra or {})
    sim.setdefault("horizon", 20000.0)
    sim["workload"] = workload.to_dict()
    sim["system"] = system.to_dict()
    cfg = SimConfig.from_dict(sim)
    if cfg.replications >= 2:
        est = replicate(cfg, workers=_workers()).exceedance(deadline)
    else:
        est = run(cfg).exceedance(deadline)
    half = est.ci_half_width
    return est.value, half if math.isfinite(half) else 0.0


_HANDLERS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "dimension": cmd_dimension,
    "fronthaul": cmd_fronthaul,
    "sweep": cmd_sweep,
}


if __name__ == "__main__":
    sys.exit(main())
