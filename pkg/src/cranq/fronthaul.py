"""Fronthaul bandwidth and latency arithmetic for centralized RAN.

Two transport options are compared. A CPRI-style link carries time-domain
IQ samples, so its bit rate is fixed by the sampling configuration and does
not react to traffic. An intra-PHY split (split VI) carries modulation bits
downlink and LLR soft bits uplink, so its rate scales with the served load
— lower on average, but no longer constant. Latency budgets translate to
one-way fiber distances at the propagation speed of light in fiber.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

FIBER_SPEED_MPS = 2.25e8  # speed of light in optical fiber

# LTE channelization: bandwidth (MHz) -> (paired resource blocks, Msps)
_LTE_GRID = {
    1.4: (6, 1.92),
    3.0: (15, 3.84),
    5.0: (25, 7.68),
    10.0: (50, 15.36),
    15.0: (75, 23.04),
    20.0: (100, 30.72),
}

_MODULATION_BITS = (2, 4, 6)  # QPSK, 16-QAM, 64-QAM


@dataclass(frozen=True)
class FronthaulSpec:
    """One cell's transport-relevant radio parameters.

    Defaults describe a 20 MHz LTE cell with normal cyclic prefix, 64-QAM,
    15-bit IQ samples, 8b/10b line coding and one antenna port. Use
    ``for_bandwidth`` to pick the matching PRB count and sample rate for
    another channel bandwidth.
    """

    cell_bandwidth_mhz: float = 20.0
    n_prb: int = 100
    antennas: int = 1
    sample_rate_msps: float = 30.72
    iq_sample_bits: int = 15
    line_coding_overhead: float = 10.0 / 8.0
    cpri_control_overhead: float = 16.0 / 15.0
    modulation_bits: int = 6
    llr_bits: int = 8
    symbols_per_subframe: int = 14
    subcarriers_per_prb: int = 12
    fiber_speed_mps: float = FIBER_SPEED_MPS

    def __post_init__(self):
        if float(self.cell_bandwidth_mhz) not in _LTE_GRID:
            raise ValueError(
                f"cell_bandwidth_mhz must be one of {sorted(_LTE_GRID)}, "
                f"got {self.cell_bandwidth_mhz}"
            )
        for name in ("n_prb", "antennas", "iq_sample_bits", "llr_bits",
                     "symbols_per_subframe", "subcarriers_per_prb"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.sample_rate_msps <= 0.0:
            raise ValueError(f"sample_rate_msps must be > 0, got {self.sample_rate_msps}")
        if self.modulation_bits not in _MODULATION_BITS:
            raise ValueError(
                f"modulation_bits must be one of {_MODULATION_BITS}, "
                f"got {self.modulation_bits}"
            )
        if self.line_coding_overhead < 1.0 or self.cpri_control_overhead < 1.0:
            raise ValueError("overhead ratios must be >= 1")
        if self.fiber_speed_mps <= 0.0:
            raise ValueError(f"fiber_speed_mps must be > 0, got {self.fiber_speed_mps}")

    @classmethod
    def for_bandwidth(cls, mhz: float, **overrides) -> "FronthaulSpec":
        """Spec for a standard LTE bandwidth, PRBs and sample rate included."""
        key = float(mhz)
        if key not in _LTE_GRID:
            raise ValueError(f"no LTE channelization for {mhz} MHz")
        n_prb, msps = _LTE_GRID[key]
        kwargs = {"cell_bandwidth_mhz": key, "n_prb": n_prb,
                  "sample_rate_msps": msps}
        kwargs.update(overrides)
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "cell_bandwidth_mhz": self.cell_bandwidth_mhz,
            "n_prb": self.n_prb,
            "antennas": self.antennas,
            "sample_rate_msps": self.sample_rate_msps,
            "iq_sample_bits": self.iq_sample_bits,
            "line_coding_overhead": self.line_coding_overhead,
            "cpri_control_overhead": self.cpri_control_overhead,
            "modulation_bits": self.modulation_bits,
            "llr_bits": self.llr_bits,
            "symbols_per_subframe": self.symbols_per_subframe,
            "subcarriers_per_prb": self.subcarriers_per_prb,
            "fiber_speed_mps": self.fiber_speed_mps,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FronthaulSpec":
        obj = dict(obj)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ValueError(f"unknown fronthaul keys: {', '.join(unknown)}")
        if "cell_bandwidth_mhz" in obj:
            mhz = float(obj.pop("cell_bandwidth_mhz"))
            return cls.for_bandwidth(mhz, **obj)
        return cls(**obj)


def cpri_rate(spec: FronthaulSpec) -> float:
    """Constant CPRI line rate in bits/s (traffic-independent).

    Time-domain I and Q samples for every antenna, inflated by the control
    words (16/15) and the line coding (10/8). The 20 MHz single-antenna
    default lands on 1.2288 Gbps, the classic option-2 line rate.
    """
    return (spec.sample_rate_msps * 1e6 * 2.0 * spec.iq_sample_bits
            * spec.antennas * spec.cpri_control_overhead
            * spec.line_coding_overhead)


def split6_downlink_rate(spec: FronthaulSpec, load_factor: float = 1.0) -> float:
    """Peak downlink rate of the intra-PHY split in bits/s.

    Hard modulation bits for every resource element of a subframe, per
    antenna layer: n_prb x 12 subcarriers x 14 symbols x bits/symbol each
    millisecond. ``load_factor`` scales from peak to an average-load rate.
    """
    _check_load_factor(load_factor)
    bits_per_subframe = (spec.n_prb * spec.subcarriers_per_prb
                         * spec.symbols_per_subframe * spec.modulation_bits
                         * spec.antennas)
    return bits_per_subframe * 1e3 * load_factor


def split6_uplink_rate(spec: FronthaulSpec, load_factor: float = 1.0) -> float:
    """Peak uplink rate of the intra-PHY split in bits/s.

    The uplink carries one LLR per coded bit, ``llr_bits`` wide, so it is
    exactly ``llr_bits`` times the downlink hard-bit rate.
    """
    return split6_downlink_rate(spec, load_factor) * spec.llr_bits


def latency_to_distance(budget_ms: float,
                        fiber_speed_mps: float = FIBER_SPEED_MPS) -> float:
    """One-way fiber distance in km reachable within a latency budget."""
    if budget_ms < 0.0:
        raise ValueError(f"latency budget must be >= 0, got {budget_ms}")
    return fiber_speed_mps * (budget_ms * 1e-3) * 1e-3


def distance_to_latency(distance_km: float,
                        fiber_speed_mps: float = FIBER_SPEED_MPS) -> float:
    """One-way propagation latency in ms over a fiber distance in km."""
    if distance_km < 0.0:
        raise ValueError(f"distance must be >= 0, got {distance_km}")
    return distance_km * 1e3 / fiber_speed_mps * 1e3


def aggregation_report(n_cells: int, spec: FronthaulSpec,
                       load_factor: float = 1.0) -> dict:
    """Compare CPRI and split VI transport needs for an aggregation site.

    Reports per-cell and total rates plus the CPRI-to-split-VI downlink
    ratio. The split VI figures are peak rates unless ``load_factor``
    scales them; unlike CPRI they move with the traffic, which the report
    flags for capacity-planning purposes.
    """
    if n_cells < 1:
        raise ValueError(f"n_cells must be >= 1, got {n_cells}")
    per_cell = {
        "cpri_bps": cpri_rate(spec),
        "split6_downlink_bps": split6_downlink_rate(spec, load_factor),
        "split6_uplink_bps": split6_uplink_rate(spec, load_factor),
    }
    total = {key: value * n_cells for key, value in per_cell.items()}
    return {
        "n_cells": n_cells,
        "load_factor": load_factor,
        "per_cell": per_cell,
        "total": total,
        "cpri_over_split6_downlink": per_cell["cpri_bps"]
        / per_cell["split6_downlink_bps"],
        "traffic_dependent": {"cpri": False, "split6": True},
    }


def _check_load_factor(load_factor: float):
    if not 0.0 <= load_factor <= 1.0:
        raise ValueError(f"load_factor must be in [0, 1], got {load_factor}")
