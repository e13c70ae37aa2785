"""Command-line front end: exit codes, file outputs, reproducibility.

Commands run in-process through ``cranq.cli.main`` with outputs redirected
to per-test temporary directories; the shipped example configs are exercised
as-is so they cannot rot.
"""

import csv
import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

from cranq.cli import main

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def cli(capsys):
    """Invoke the CLI; returns (exit_code, stdout, stderr diagnostics)."""

    def invoke(*args):
        code = main([str(a) for a in args])
        captured = capsys.readouterr()
        diags = [json.loads(line) for line in captured.err.splitlines() if line]
        return code, captured.out, diags

    return invoke


def _write_config(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj, indent=2))
    return path


def _read_csv(path):
    """Rows of a series file, skipping the comment header."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if not row[0].startswith("#")]
    return rows[0], rows[1:]


def _comment_header(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].partition(": ")
            out[key] = value.strip()
    return out


MM1_ANALYZE = {
    "workload": {
        "arrival_rate": 0.5,
        "service_rate": 1.0,
        "batch": {"kind": "geometric", "q": 0.0},
    },
    "cores": 1,
    "times_ms": [0.0, 1.0, 2.0, 4.0, 8.0],
    "seed": 3,
}

SIM_SMALL = {
    "workload": {
        "arrival_rate": 1.0,
        "service_rate": 1.0,
        "batch": {"kind": "geometric", "q": 0.5},
    },
    "system": {"cores": 4},
    "horizon": 2000.0,
    "seed": 12,
    "deadlines_ms": [2.0],
    "samples_csv": True,
}


# ---------------------------------------------------------------------------
# analyze

def test_analyze_golden_mm1(cli, tmp_path):
    config = _write_config(tmp_path, "cfg.json", MM1_ANALYZE)
    code, _, _ = cli("analyze", "--config", config, "--out", tmp_path)
    assert code == 0

    _, tail_rows = _read_csv(tmp_path / "sojourn_tail.csv")
    for t_str, s_str in tail_rows:
        assert float(s_str) == pytest.approx(
            math.exp(-0.5 * float(t_str)), abs=1e-9
        )
    _, stat_rows = _read_csv(tmp_path / "stationary.csv")
    for n_str, p_str in stat_rows[:40]:
        assert float(p_str) == pytest.approx(0.5 * 0.5 ** int(n_str), abs=1e-9)

    payload = json.loads((tmp_path / "analyze.json").read_text())
    assert payload["meta"]["tool"] == "cranq"
    assert payload["meta"]["seed"] == 3
    assert len(payload["meta"]["config_sha256"]) == 64
    assert payload["result"]["offered_load"] == pytest.approx(0.5)
    # M/M/1 mean queue length rho/(1-rho)
    assert payload["result"]["mean_jobs_in_system"] == pytest.approx(1.0, abs=1e-8)


def test_analyze_csv_headers_carry_metadata(cli, tmp_path):
    config = _write_config(tmp_path, "cfg.json", MM1_ANALYZE)
    cli("analyze", "--config", config, "--out", tmp_path)
    header = _comment_header(tmp_path / "stationary.csv")
    assert header["tool"] == "cranq"
    assert header["seed"] == "3"
    assert len(header["config_sha256"]) == 64


def test_malformed_json_reports_position(cli, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"workload": }')
    code, _, diags = cli("analyze", "--config", bad, "--out", tmp_path)
    assert code == 2
    assert diags[-1]["code"] == "validation"
    assert "line 1 column" in diags[-1]["message"]


def test_unknown_config_key_rejected(cli, tmp_path):
    config = _write_config(tmp_path, "cfg.json",
                           {**MM1_ANALYZE, "colour": "red"})
    code, _, diags = cli("simulate", "--config", config, "--out", tmp_path)
    assert code == 2
    assert diags[-1]["code"] == "validation"


def test_unstable_workload_exits_3(cli, tmp_path):
    cfg = {**MM1_ANALYZE, "workload": {**MM1_ANALYZE["workload"],
                                       "arrival_rate": 1.2}}
    config = _write_config(tmp_path, "cfg.json", cfg)
    code, _, diags = cli("analyze", "--config", config, "--out", tmp_path)
    assert code == 3
    assert diags[-1]["code"] == "instability"


def test_truncation_failure_exits_4(cli, tmp_path):
    cfg = {
        "workload": {
            "arrival_rate": 0.099,
            "service_rate": 1.0,
            "batch": {"kind": "geometric", "q": 0.9},
        },
        "cores": 1,
        "times_ms": [1.0],
        "n_trunc": 10,
    }
    config = _write_config(tmp_path, "cfg.json", cfg)
    code, _, diags = cli("analyze", "--config", config, "--out", tmp_path)
    assert code == 4
    assert diags[-1]["code"] == "truncation"


def test_missing_key_exits_2(cli, tmp_path):
    config = _write_config(tmp_path, "cfg.json", {"cores": 1})
    code, _, diags = cli("analyze", "--config", config, "--out", tmp_path)
    assert code == 2
    assert "workload" in diags[-1]["message"]


# ---------------------------------------------------------------------------
# simulate

def test_simulate_deterministic_outputs(cli, tmp_path):
    config = _write_config(tmp_path, "cfg.json", SIM_SMALL)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli("simulate", "--config", config, "--out", out1)[0] == 0
    assert cli("simulate", "--config", config, "--out", out2)[0] == 0
    for name in ("simulate.json", "samples.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    payload = json.loads((out1 / "simulate.json").read_text())
    result = payload["result"]
    assert result["batches_observed"] > 0
    assert result["exceedance"][0]["deadline_ms"] == 2.0
    assert result["engine"] in ("cy", "py")

    header, rows = _read_csv(out1 / "samples.csv")
    assert header == ["batch_id", "arrival_ms", "sojourn_ms", "reneged"]
    assert len(rows) == result["batches_observed"]


def test_simulate_seed_override_changes_bytes(cli, tmp_path):
    config = _write_config(tmp_path, "cfg.json", SIM_SMALL)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    cli("simulate", "--config", config, "--out", out1)
    cli("simulate", "--config", config, "--out", out2, "--seed", 999)
    a = json.loads((out1 / "simulate.json").read_text())
    b = json.loads((out2 / "simulate.json").read_text())
    assert b["meta"]["seed"] == 999
    assert a["result"]["mean_sojourn"] != b["result"]["mean_sojourn"]


def test_simulate_replications(cli, tmp_path, monkeypatch):
    monkeypatch.setenv("CRANQ_WORKERS", "2")
    cfg = {k: v for k, v in SIM_SMALL.items() if k != "samples_csv"}
    cfg["replications"] = 3
    cfg["horizon"] = 1000.0
    config = _write_config(tmp_path, "cfg.json", cfg)
    code, _, _ = cli("simulate", "--config", config, "--out", tmp_path)
    assert code == 0
    result = json.loads((tmp_path / "simulate.json").read_text())["result"]
    assert result["replications"] == 3
    assert math.isfinite(result["exceedance"][0]["ci_half_width"])


def test_bad_worker_count_exits_2(cli, tmp_path, monkeypatch):
    monkeypatch.setenv("CRANQ_WORKERS", "0")
    cfg = {k: v for k, v in SIM_SMALL.items() if k != "samples_csv"}
    cfg["replications"] = 2
    config = _write_config(tmp_path, "cfg.json", cfg)
    assert cli("simulate", "--config", config, "--out", tmp_path)[0] == 2


def test_simulate_radio_writes_mode_series(cli, tmp_path):
    code, _, _ = cli("simulate", "--config", CONFIG_DIR / "simulate_radio.json",
                     "--out", tmp_path)
    assert code == 0
    payload = json.loads((tmp_path / "simulate.json").read_text())
    assert set(payload["result"]["modes"]) == {"subframe", "per_ue", "per_cb"}

    header, rows = _read_csv(tmp_path / "sojourn_cdf.csv")
    assert header == ["mode", "t", "F"]
    assert {row[0] for row in rows} == {"subframe", "per_ue", "per_cb"}
    by_mode = {}
    for mode, _, f in rows:
        by_mode.setdefault(mode, []).append(float(f))
    for series in by_mode.values():
        assert series == sorted(series)
        assert series[-1] == pytest.approx(1.0)


def test_modes_rejected_for_plain_workload(cli, tmp_path):
    cfg = {k: v for k, v in SIM_SMALL.items() if k != "samples_csv"}
    cfg["modes"] = ["per_ue"]
    config = _write_config(tmp_path, "cfg.json", cfg)
    assert cli("simulate", "--config", config, "--out", tmp_path)[0] == 2


# ---------------------------------------------------------------------------
# dimension

DIMENSION_TOY = {
    "workload": {
        "arrival_rate": 0.5,
        "service_rate": 1.0,
        "batch": {"kind": "geometric", "q": 0.0},
    },
    "target": {"deadline_ms": 100.0, "tolerance": 0.01},
    "seed": 5,
}


def test_dimension_toy(cli, tmp_path):
    config = _write_config(tmp_path, "cfg.json", DIMENSION_TOY)
    code, _, _ = cli("dimension", "--config", config, "--out", tmp_path)
    assert code == 0
    result = json.loads((tmp_path / "dimension.json").read_text())["result"]
    assert result["c_required"] == 1
    assert result["backend"] == "analytic"

    header, rows = _read_csv(tmp_path / "dimension_curve.csv")
    assert header == ["C", "exceedance", "ci_half_width"]
    cores = [int(r[0]) for r in rows]
    assert cores == sorted(cores) and len(set(cores)) == len(cores)


def test_dimension_backend_flag(cli, tmp_path):
    cfg = dict(DIMENSION_TOY)
    cfg["target"] = {"deadline_ms": 20.0, "tolerance": 0.05}
    cfg["sim"] = {"horizon": 4000.0, "seed": 5}
    config = _write_config(tmp_path, "cfg.json", cfg)
    code, _, _ = cli("dimension", "--config", config, "--out", tmp_path,
                     "--backend", "sim")
    assert code == 0
    result = json.loads((tmp_path / "dimension.json").read_text())["result"]
    assert result["backend"] == "simulation"
    assert result["c_required"] >= 1


def test_dimension_budget_exhausted_exits_5(cli, tmp_path):
    cfg = {
        "workload": {
            "arrival_rate": 1.0,
            "service_rate": 1.0,
            "batch": {"kind": "geometric", "q": 0.5},
        },
        "target": {"deadline_ms": 0.05, "tolerance": 1e-6},
        "c_max": 3,
    }
    config = _write_config(tmp_path, "cfg.json", cfg)
    code, _, diags = cli("dimension", "--config", config, "--out", tmp_path)
    assert code == 5
    assert diags[-1]["code"] == "dimensioning"


def test_dimension_calibration_config(cli, tmp_path):
    # the documented calibration point: both backends settle on C_r = 50
    code, _, _ = cli("dimension", "--config",
                     CONFIG_DIR / "dimension_calibration.json",
                     "--out", tmp_path)
    assert code == 0
    result = json.loads((tmp_path / "dimension.json").read_text())["result"]
    assert result["c_stability"] == 48
    assert result["c_required"] == 50


# ---------------------------------------------------------------------------
# fronthaul

def test_fronthaul_report(cli, tmp_path):
    code, out, _ = cli("fronthaul", "--config",
                       CONFIG_DIR / "fronthaul_20mhz.json", "--out", tmp_path)
    assert code == 0
    result = json.loads((tmp_path / "fronthaul.json").read_text())["result"]
    assert result["per_cell"]["split6_downlink_bps"] == pytest.approx(100.8e6)
    assert result["per_cell"]["cpri_bps"] == pytest.approx(1.2288e9)
    assert result["total"]["cpri_bps"] == pytest.approx(122.88e9)
    assert result["reach_km"] == pytest.approx(254.25)
    # human-readable table on stdout
    assert "1.229 Gbps" in out
    assert "100.8 Mbps" in out
    assert "254.25 km" in out


def test_fronthaul_csv_format(cli, tmp_path):
    code, _, _ = cli("fronthaul", "--config",
                     CONFIG_DIR / "fronthaul_20mhz.json", "--out", tmp_path,
                     "--format", "csv")
    assert code == 0
    header, rows = _read_csv(tmp_path / "fronthaul.csv")
    assert header == ["metric", "per_cell", "total"]
    per_cell = {row[0]: float(row[1]) for row in rows}
    assert per_cell["split6_uplink_bps"] == pytest.approx(806.4e6)


# ---------------------------------------------------------------------------
# sweep

def test_sweep_cores(cli, tmp_path):
    code, _, _ = cli("sweep", "--config", CONFIG_DIR / "sweep_cores.json",
                     "--out", tmp_path)
    assert code == 0
    header, rows = _read_csv(tmp_path / "sweep.csv")
    assert header == ["system.cores", "exceedance", "ci_half_width"]
    assert [int(r[0]) for r in rows] == list(range(3, 11))
    values = [float(r[1]) for r in rows]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_sweep_batch_q_monotone(cli, tmp_path):
    # heavier batches at fixed cores can only worsen the exceedance
    code, _, _ = cli("sweep", "--config", CONFIG_DIR / "sweep_batch_q.json",
                     "--out", tmp_path)
    assert code == 0
    _, rows = _read_csv(tmp_path / "sweep.csv")
    values = [float(r[1]) for r in rows]
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_sweep_unknown_field_exits_2(cli, tmp_path):
    cfg = json.loads((CONFIG_DIR / "sweep_cores.json").read_text())
    cfg["field"] = "system.threads"
    config = _write_config(tmp_path, "cfg.json", cfg)
    code, _, diags = cli("sweep", "--config", config, "--out", tmp_path)
    assert code == 2
    assert "unknown sweep field" in diags[-1]["message"]


def test_sweep_empty_values_exits_2(cli, tmp_path):
    cfg = json.loads((CONFIG_DIR / "sweep_cores.json").read_text())
    cfg["values"] = []
    config = _write_config(tmp_path, "cfg.json", cfg)
    assert cli("sweep", "--config", config, "--out", tmp_path)[0] == 2


# ---------------------------------------------------------------------------
# shipped configs stay valid

def test_all_shipped_configs_run(cli, tmp_path):
    commands = {
        "analyze_batch.json": "analyze",
        "simulate_batch.json": "simulate",
        "simulate_radio.json": "simulate",
        "dimension_calibration.json": "dimension",
        "fronthaul_20mhz.json": "fronthaul",
        "sweep_cores.json": "sweep",
        "sweep_batch_q.json": "sweep",
    }
    shipped = {p.name for p in CONFIG_DIR.glob("*.json")}
    assert shipped == set(commands)
    for name, command in commands.items():
        out = tmp_path / name.removesuffix(".json")
        code, _, _ = cli(command, "--config", CONFIG_DIR / name, "--out", out)
        assert code == 0, name
        assert any(os.scandir(out))
