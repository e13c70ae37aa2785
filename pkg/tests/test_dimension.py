"""Core-count search: stability threshold, scan logic, backend agreement."""

import pytest

from cranq.analytic import InstabilityError, batch_sojourn_tail
from cranq.dimension import (
    BACKEND_ANALYTIC,
    BACKEND_SIMULATION,
    DimensioningError,
    min_stable_cores,
    required_cores,
    stability_profile,
)
from cranq.model import BatchLaw, LatencyTarget, SystemSpec, WorkloadSpec
from cranq.simulate import SimConfig

GEO_HALF = BatchLaw.geometric(0.5)


def test_min_stable_cores():
    assert min_stable_cores(WorkloadSpec(1.0, BatchLaw.deterministic(2), 1.0)) == 3
    assert min_stable_cores(WorkloadSpec(0.5, BatchLaw.geometric(0.0), 1.0)) == 1
    assert min_stable_cores(WorkloadSpec(100.0, GEO_HALF, 2.0)) == 101


def test_required_cores_toy():
    # a 100 ms deadline is practically never exceeded once the queue is stable
    w = WorkloadSpec(0.5, BatchLaw.geometric(0.0), 1.0)
    result = required_cores(w, LatencyTarget(100.0, 0.01))
    assert result.c_required == 1
    assert result.c_stability == 1
    assert result.backend == BACKEND_ANALYTIC


def test_required_cores_monotone_in_tolerance():
    # note the exceedance floor: even unlimited cores cannot beat the tail
    # of the service times themselves, so tolerances sit above that floor
    w = WorkloadSpec(1.0, GEO_HALF, 2.0)
    strict = required_cores(w, LatencyTarget(3.0, 0.01)).c_required
    loose = required_cores(w, LatencyTarget(3.0, 0.1)).c_required
    assert strict >= loose


def test_required_cores_monotone_in_parameters():
    # tighter deadlines, rarer tolerances, more traffic, bigger batches:
    # each can only push the required count up
    def c_r(lam=1.0, q=0.5, deadline=3.0, tol=0.05):
        w = WorkloadSpec(lam, BatchLaw.geometric(q), 2.0)
        return required_cores(w, LatencyTarget(deadline, tol)).c_required

    by_deadline = [c_r(deadline=d) for d in (6.0, 4.0, 3.0)]
    assert by_deadline == sorted(by_deadline)
    by_tol = [c_r(tol=e) for e in (0.2, 0.05, 0.01)]
    assert by_tol == sorted(by_tol)
    by_lam = [c_r(lam=l) for l in (0.5, 1.0, 1.5)]
    assert by_lam == sorted(by_lam)
    by_q = [c_r(q=q) for q in (0.2, 0.5, 0.7)]
    assert by_q == sorted(by_q)


def test_curve_shape():
    w = WorkloadSpec(1.0, GEO_HALF, 2.0)
    result = required_cores(w, LatencyTarget(3.0, 0.01))
    cores = [c for c, _, _ in result.curve]
    values = [p for _, p, _ in result.curve]
    halves = [h for _, _, h in result.curve]
    assert cores == sorted(cores)
    assert len(set(cores)) == len(cores)
    assert all(a >= b for a, b in zip(values, values[1:]))  # nonincreasing
    assert all(h == 0.0 for h in halves)  # analytic tail is exact
    assert result.c_required >= result.c_stability
    assert cores[0] == result.c_stability
    # the accepted count is strictly inside the tolerance, its predecessor not
    accepted = dict((c, p) for c, p, _ in result.curve)
    assert accepted[result.c_required] < 0.01
    assert accepted[result.c_required - 1] >= 0.01
    out = result.to_dict()
    assert out["c_required"] == result.c_required
    assert out["curve"][0]["cores"] == result.c_stability


def test_accelerated_scan_matches_linear():
    for lam, tol in [(2.0, 0.01), (1.0, 0.05), (0.5, 0.1)]:
        w = WorkloadSpec(lam, GEO_HALF, 2.0)
        target = LatencyTarget(3.0, tol)
        linear = required_cores(w, target)
        fast = required_cores(w, target, accelerate=True)
        assert fast.c_required == linear.c_required
        assert fast.c_stability == linear.c_stability


def test_exhausted_core_budget():
    w = WorkloadSpec(1.0, GEO_HALF, 1.0)
    with pytest.raises(DimensioningError):
        required_cores(w, LatencyTarget(0.05, 1e-6), c_max=min_stable_cores(w))
    with pytest.raises(InstabilityError):
        required_cores(w, LatencyTarget(2.0, 0.01), c_max=2)  # C_s = 3


def test_unknown_backend_rejected():
    w = WorkloadSpec(1.0, GEO_HALF, 1.0)
    with pytest.raises(ValueError):
        required_cores(w, LatencyTarget(2.0, 0.01), backend="exact")


def test_backends_agree_on_c_required():
    # single-job sanity case: the two backends must pick the same count
    w = WorkloadSpec(1.5, BatchLaw.geometric(0.0), 1.0)
    target = LatencyTarget(6.0, 0.01)
    analytic = required_cores(w, target)
    template = SimConfig(
        workload=w, system=SystemSpec(cores=min_stable_cores(w)),
        horizon=700000.0, warmup=10000.0, seed=97,
    )
    simulated = required_cores(w, target, backend=BACKEND_SIMULATION,
                               sim_template=template)
    assert simulated.c_required == analytic.c_required
    assert simulated.backend == BACKEND_SIMULATION
    # the conservative rule: first count whose upper CI bound clears epsilon
    for cores, value, half in simulated.curve:
        if cores < simulated.c_required:
            assert value + half >= target.tolerance
    accepted = {c: (p, h) for c, p, h in simulated.curve}[simulated.c_required]
    assert accepted[0] + accepted[1] < target.tolerance


def test_simulation_backend_default_template():
    w = WorkloadSpec(0.5, BatchLaw.geometric(0.0), 1.0)
    result = required_cores(w, LatencyTarget(20.0, 0.05),
                            backend=BACKEND_SIMULATION)
    assert result.c_required >= 1
    assert all(h >= 0.0 for _, _, h in result.curve)


def test_exceedance_diverges_below_stability():
    # one core short of C_s: the backlog grows forever, so the exceedance
    # climbs toward 1 as the horizon stretches (no stationary tail exists)
    from cranq.simulate import run

    w = WorkloadSpec(1.0, GEO_HALF, 1.0)
    cores = min_stable_cores(w) - 1
    values = []
    for horizon in (1000.0, 8000.0):
        config = SimConfig(workload=w, system=SystemSpec(cores=cores),
                           horizon=horizon, seed=101)
        with pytest.warns(RuntimeWarning):
            metrics = run(config)
        values.append(metrics.exceedance(2.0).value)
    assert values[1] >= values[0]
    assert values[1] > 0.95


def test_stability_profile():
    w = WorkloadSpec(1.0, GEO_HALF, 1.0)
    stable = stability_profile(w, 4)
    assert stable["stable"] and stable["c_stability"] == 3
    assert stable["mean_jobs_in_system"] > 0
    unstable = stability_profile(w, 2)
    assert not unstable["stable"]
    assert "mean_jobs_in_system" not in unstable


def test_analytic_curve_matches_tail_solver():
    # the recorded exceedances are exactly the phase-type tail values
    w = WorkloadSpec(1.0, GEO_HALF, 2.0)
    target = LatencyTarget(3.0, 0.01)
    result = required_cores(w, target)
    for cores, value, _ in result.curve:
        tail = batch_sojourn_tail(w, cores, [target.deadline_ms])
        assert value == pytest.approx(float(tail.survival[0]), rel=1e-12)
