"""Transport bandwidth calculators and the latency/distance conversion."""

import dataclasses

import pytest

from cranq.fronthaul import (
    FIBER_SPEED_MPS,
    FronthaulSpec,
    aggregation_report,
    cpri_rate,
    distance_to_latency,
    latency_to_distance,
    split6_downlink_rate,
    split6_uplink_rate,
)

SPEC_20MHZ = FronthaulSpec.for_bandwidth(20)


def test_cpri_rate_20mhz():
    # 30.72 Msps x 30 sample bits x 16/15 x 10/8 = 1.2288 Gbps
    assert cpri_rate(SPEC_20MHZ) == pytest.approx(1.2288e9)


def test_cpri_scales_with_antennas():
    two = dataclasses.replace(SPEC_20MHZ, antennas=2)
    assert cpri_rate(two) == pytest.approx(2 * cpri_rate(SPEC_20MHZ))


def test_cpri_ignores_traffic_parameters():
    # constant-bit-rate property: modulation plays no role in the I/Q stream
    qpsk = dataclasses.replace(SPEC_20MHZ, modulation_bits=2)
    assert cpri_rate(qpsk) == cpri_rate(SPEC_20MHZ)
    assert split6_downlink_rate(SPEC_20MHZ, load_factor=0.0) == 0.0
    assert cpri_rate(SPEC_20MHZ) == cpri_rate(SPEC_20MHZ)  # no load argument


def test_split6_downlink_anchor():
    # 100 PRB x 12 subcarriers x 14 symbols x 6 bits per ms = 100.8 Mbps
    rate = split6_downlink_rate(SPEC_20MHZ)
    assert rate == pytest.approx(100.8e6)
    assert abs(rate / 100e6 - 1.0) < 0.01  # lands within 1% of "100 Mbps"


def test_split6_downlink_modulation_ratio():
    qpsk = dataclasses.replace(SPEC_20MHZ, modulation_bits=2)
    assert split6_downlink_rate(qpsk) == pytest.approx(
        split6_downlink_rate(SPEC_20MHZ) / 3.0
    )
    two_layers = dataclasses.replace(SPEC_20MHZ, antennas=2)
    assert split6_downlink_rate(two_layers) == pytest.approx(2 * 100.8e6)


def test_split6_uplink_soft_bits():
    assert split6_uplink_rate(SPEC_20MHZ) == pytest.approx(806.4e6)
    hard = dataclasses.replace(SPEC_20MHZ, llr_bits=1)
    assert split6_uplink_rate(hard) == pytest.approx(split6_downlink_rate(hard))
    # soft/hard ratio is exactly the LLR width
    assert split6_uplink_rate(SPEC_20MHZ) / split6_downlink_rate(
        SPEC_20MHZ
    ) == pytest.approx(SPEC_20MHZ.llr_bits)


def test_split6_monotone_in_bit_widths():
    rates = [split6_downlink_rate(dataclasses.replace(SPEC_20MHZ, modulation_bits=m))
             for m in (2, 4, 6)]
    assert rates[0] < rates[1] < rates[2]
    ul = [split6_uplink_rate(dataclasses.replace(SPEC_20MHZ, llr_bits=w))
          for w in (4, 8, 16)]
    assert ul[0] < ul[1] < ul[2]


def test_load_factor_bounds():
    assert split6_downlink_rate(SPEC_20MHZ, load_factor=0.5) == pytest.approx(50.4e6)
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            split6_downlink_rate(SPEC_20MHZ, load_factor=bad)
        with pytest.raises(ValueError):
            split6_uplink_rate(SPEC_20MHZ, load_factor=bad)


def test_latency_distance_conversion():
    # 1.13 ms one way over fiber at 2.25e8 m/s reaches 254.25 km
    km = latency_to_distance(1.13)
    assert km == pytest.approx(254.25)
    assert abs(km / 250.0 - 1.0) < 0.02
    assert latency_to_distance(0.0) == 0.0
    assert distance_to_latency(latency_to_distance(0.472)) == pytest.approx(
        0.472, abs=1e-12
    )
    with pytest.raises(ValueError):
        latency_to_distance(-1.0)


def test_aggregation_report_totals():
    report = aggregation_report(100, SPEC_20MHZ)
    assert report["n_cells"] == 100
    assert report["total"]["cpri_bps"] == pytest.approx(122.88e9)
    assert report["total"]["split6_downlink_bps"] == pytest.approx(10.08e9)
    assert report["cpri_over_split6_downlink"] == pytest.approx(12.19, abs=0.01)
    # CPRI stays constant under load; the split rates follow the traffic
    assert report["traffic_dependent"]["cpri"] is False
    assert report["traffic_dependent"]["split6"] is True

    single = aggregation_report(1, SPEC_20MHZ)
    assert single["total"] == single["per_cell"]
    assert single["per_cell"]["cpri_bps"] == pytest.approx(cpri_rate(SPEC_20MHZ))
    with pytest.raises(ValueError):
        aggregation_report(0, SPEC_20MHZ)


def test_rates_linear_in_cells():
    r10 = aggregation_report(10, SPEC_20MHZ)["total"]
    r1 = aggregation_report(1, SPEC_20MHZ)["total"]
    for key in ("cpri_bps", "split6_downlink_bps", "split6_uplink_bps"):
        assert r10[key] == pytest.approx(10 * r1[key])


def test_bandwidth_grid():
    five = FronthaulSpec.for_bandwidth(5)
    assert five.n_prb == 25
    assert five.sample_rate_msps == pytest.approx(7.68)
    assert cpri_rate(five) == pytest.approx(1.2288e9 / 4.0)
    with pytest.raises(ValueError):
        FronthaulSpec.for_bandwidth(7)
    # overrides beat the grid defaults
    custom = FronthaulSpec.for_bandwidth(20, antennas=4)
    assert custom.antennas == 4
    assert custom.n_prb == 100


def test_spec_validation_and_round_trip():
    spec = FronthaulSpec.for_bandwidth(10, modulation_bits=4)
    assert FronthaulSpec.from_dict(spec.to_dict()) == spec
    assert FronthaulSpec.from_dict({"cell_bandwidth_mhz": 20}) == SPEC_20MHZ
    with pytest.raises(ValueError):
        FronthaulSpec.from_dict({"cell_bandwidth_mhz": 20, "duplex": "tdd"})
    with pytest.raises(ValueError):
        dataclasses.replace(SPEC_20MHZ, modulation_bits=5)
    with pytest.raises(ValueError):
        dataclasses.replace(SPEC_20MHZ, line_coding_overhead=0.9)
    with pytest.raises(ValueError):
        dataclasses.replace(SPEC_20MHZ, antennas=0)
    with pytest.raises(ValueError):
        dataclasses.replace(SPEC_20MHZ, fiber_speed_mps=0.0)


def test_default_fiber_speed():
    assert SPEC_20MHZ.fiber_speed_mps == FIBER_SPEED_MPS == 2.25e8
