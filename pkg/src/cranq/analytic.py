"""Exact numerical analysis of the batch-arrival multi-core queue.

The queue has Poisson batch arrivals (rate lambda, iid batch sizes B),
exponential job service (rate mu per core) and C cores serving in FCFS
order. Two quantities are computed without simulation:

- the stationary law of the number of jobs in system, from the level
  crossing balance ``min(n, C) mu pi_n = lambda sum_j pi_j P(B >= n - j)``
  on a truncated state space;
- the survival function of a batch's sojourn time (arrival until its last
  job completes), by uniformizing an absorbing chain over (jobs ahead of
  the tagged batch, tagged jobs remaining); an arriving batch sees the
  stationary state, and under FCFS later arrivals never delay it.

Single-job closed forms (Erlang C, M/M/C sojourn, M/M/1-PS mean) are kept
alongside as independent cross-checks of the batch machinery at B == 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse, stats

from .model import WorkloadSpec, offered_load

METHOD_PHASE_TYPE = "phase_type"
METHOD_MONTE_CARLO = "monte_carlo"

# Accepted stationary solutions must hold this much mass below 0.9 * N_trunc.
TAIL_MASS_LIMIT = 1e-8
# Probability mass ignored when truncating mixing distributions.
MASS_EPS = 1e-12
# Poisson tail left out of the uniformization sum.
UNIFORMIZATION_EPS = 1e-10

_MAX_DOUBLINGS = 16
_RESCALE_LIMIT = 1e250


class InstabilityError(ValueError):
    """Offered load is at or above capacity for the requested core count."""


class TruncationError(RuntimeError):
    """State-space truncation left too much probability mass unaccounted."""


@dataclass(frozen=True)
class StationaryDistribution:
    """Stationary law of jobs in system on states 0..truncation."""

    probs: np.ndarray
    truncation: int
    tail_mass_bound: float

    def mean(self) -> float:
        return float(np.arange(self.probs.shape[0]) @ self.probs)

    def tail(self, n: int) -> float:
        """P(N > n)."""
        if n < 0:
            return 1.0
        return float(self.probs[n + 1:].sum())


@dataclass(frozen=True)
class SojournTail:
    """Batch sojourn survival P(T > t) on a time grid."""

    grid: np.ndarray
    survival: np.ndarray
    method: str

    def at(self, t: float) -> float:
        """Survival at a grid point (interpolated between points)."""
        return float(np.interp(t, self.grid, self.survival))


def erlang_c(cores: int, offered: float) -> float:
    """Erlang C probability that an arriving job must wait.

    ``offered`` is the offered traffic in erlangs (lambda/mu for single
    jobs); requires offered < cores.
    """
    if cores < 1:
        raise ValueError(f"cores must be >= 1, got {cores}")
    if offered <= 0.0:
        return 0.0
    if offered >= cores:
        raise InstabilityError(
            f"offered traffic {offered} erlangs >= {cores} cores"
        )
    # Erlang B recursion, then the standard B -> C conversion; stable for
    # any core count (no factorials).
    b = 1.0
    for k in range(1, cores + 1):
        b = offered * b / (k + offered * b)
    return cores * b / (cores - offered * (1.0 - b))


def mmc_sojourn_tail(cores: int, lam: float, mu: float, t) -> np.ndarray | float:
    """Exact M/M/C sojourn survival P(T > t) for single-job arrivals.

    The sojourn is the sum of the waiting time (an atom at zero plus an
    Exp(C mu - lambda) tail of mass Erlang C) and an independent Exp(mu)
    service; the resonant case C mu - lambda == mu is handled by its limit.
    """
    if lam >= cores * mu:
        raise InstabilityError(f"lambda={lam} >= C*mu={cores * mu}")
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0.0):
        raise ValueError("t must be >= 0")
    p_wait = erlang_c(cores, lam / mu)
    nu = cores * mu - lam
    if abs(nu - mu) < 1e-12 * mu:
        # W' + S with equal rates is Gamma(2, mu)
        tail = (1.0 - p_wait) * np.exp(-mu * t_arr) + p_wait * (
            1.0 + mu * t_arr
        ) * np.exp(-mu * t_arr)
    else:
        sum_tail = (nu * np.exp(-mu * t_arr) - mu * np.exp(-nu * t_arr)) / (nu - mu)
        tail = (1.0 - p_wait) * np.exp(-mu * t_arr) + p_wait * sum_tail
    if np.ndim(t) == 0:
        return float(tail)
    return tail


def ps_mean_sojourn(lam: float, mu: float) -> float:
    """Mean sojourn 1/(mu - lambda) in the single-job processor-sharing queue.

    Batch-arrival PS has no comparable closed form here; use the simulator.
    """
    if lam >= mu:
        raise InstabilityError(f"lambda={lam} >= mu={mu}")
    return 1.0 / (mu - lam)


def default_truncation(workload: WorkloadSpec, cores: int) -> int:
    rho = offered_load(workload, cores)
    mean_b = workload.batch_law.mean()
    return max(10 * cores, int(math.ceil(50.0 * mean_b / (1.0 - rho))))


def mxmc_stationary(
    workload: WorkloadSpec,
    cores: int,
    n_trunc: int | None = None,
) -> StationaryDistribution:
    """Stationary distribution of jobs in system for the batch queue.

    With ``n_trunc=None`` the truncation starts at
    ``max(10 C, 50 E[B]/(1-rho))`` and doubles until the mass above
    0.9 * N_trunc drops below 1e-8; an explicit ``n_trunc`` is used as-is
    and raises ``TruncationError`` if that bound fails.
    """
    rho = offered_load(workload, cores)
    if rho >= 1.0:
        raise InstabilityError(f"offered load {rho} >= 1 at C={cores}")
    if n_trunc is not None:
        if n_trunc < 10 * cores:
            raise ValueError(f"n_trunc={n_trunc} below 10*C={10 * cores}")
        dist = _stationary_at(workload, cores, n_trunc)
        if dist.tail_mass_bound >= TAIL_MASS_LIMIT:
            raise TruncationError(
                f"tail mass bound {dist.tail_mass_bound:.3e} at "
                f"n_trunc={n_trunc} exceeds {TAIL_MASS_LIMIT}"
            )
        return dist
    n = default_truncation(workload, cores)
    for _ in range(_MAX_DOUBLINGS):
        dist = _stationary_at(workload, cores, n)
        if dist.tail_mass_bound < TAIL_MASS_LIMIT:
            return dist
        n *= 2
    raise TruncationError(
        f"tail mass bound still {dist.tail_mass_bound:.3e} at n_trunc={n // 2}"
    )


def _stationary_at(workload: WorkloadSpec, cores: int, n_trunc: int) -> StationaryDistribution:
    """Solve the level-crossing recursion on states 0..n_trunc."""
    lam = workload.arrival_rate
    mu = workload.service_rate
    law = workload.batch_law
    kmax = min(law.support_bound(MASS_EPS / max(lam, 1.0)), n_trunc)
    surv = law.survivor(kmax)  # P(B >= k), k = 1..kmax

    pi = np.zeros(n_trunc + 1, dtype=np.float64)
    pi[0] = 1.0
    for n in range(1, n_trunc + 1):
        kk = min(kmax, n)
        # up-crossings into {n, n+1, ...} from each state below n
        inflow = float(surv[:kk] @ pi[n - kk:n][::-1])
        pi[n] = lam * inflow / (min(n, cores) * mu)
        if pi[n] > _RESCALE_LIMIT:  # normalization absorbs the rescaling
            pi[: n + 1] /= _RESCALE_LIMIT
    total = pi.sum()
    probs = pi / total
    cutoff = int(0.9 * n_trunc)
    tail_bound = float(probs[cutoff + 1:].sum())
    return StationaryDistribution(probs=probs, truncation=n_trunc,
                                  tail_mass_bound=tail_bound)


def truncated_generator(workload: WorkloadSpec, cores: int, n_trunc: int):
    """Sparse generator of the truncated chain (overshoot lumped at n_trunc).

    Provided so callers can audit the global balance residual ||pi Q||_inf
    of a stationary solution.
    """
    lam = workload.arrival_rate
    mu = workload.service_rate
    law = workload.batch_law
    surv = law.survivor(n_trunc + 1)  # P(B >= k), k = 1..n_trunc+1
    pmf_exact = surv[:-1] - surv[1:]  # P(B = k), k = 1..n_trunc
    kmax = min(law.support_bound(MASS_EPS / max(lam, 1.0)), n_trunc)

    states = np.arange(n_trunc + 1, dtype=np.int64)
    rows = [states[1:]]
    cols = [states[:-1]]
    vals = [np.minimum(states[1:], cores) * mu]
    # arrivals landing strictly inside the truncation
    for k in range(1, kmax + 1):
        if pmf_exact[k - 1] == 0.0 or k >= n_trunc:
            continue
        src = states[: n_trunc - k]
        rows.append(src)
        cols.append(src + k)
        vals.append(np.full(src.shape[0], lam * pmf_exact[k - 1]))
    # overshoot mass, lumped onto the edge state
    src = states[:-1]
    rows.append(src)
    cols.append(np.full(src.shape[0], n_trunc, dtype=np.int64))
    vals.append(lam * surv[n_trunc - src - 1])
    q = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_trunc + 1, n_trunc + 1),
    ).tocsr()
    q -= sparse.diags(np.asarray(q.sum(axis=1)).ravel())
    return q


def batch_sojourn_tail(
    workload: WorkloadSpec,
    cores: int,
    grid,
    stationary: StationaryDistribution | None = None,
) -> SojournTail:
    """Survival P(T > t) of a batch's sojourn under FCFS on ``cores`` cores.

    A tagged batch of size b arrives on the stationary state n (PASTA) and
    is tracked through the absorbing chain over (a, r) = (jobs ahead
    remaining, tagged jobs remaining): min(a, C) cores drain the jobs
    ahead, min(r, C - min(a, C)) drain the tagged ones, and absorption at
    r = 0 marks completion. The transient solve uses uniformization at rate
    C mu with an error budget of 1e-10, mixed over (n, b).
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    if grid.size == 0:
        raise ValueError("empty time grid")
    if np.any(grid < 0.0) or np.any(np.diff(grid) < 0.0):
        raise ValueError("grid must be nondecreasing and nonnegative")
    if stationary is None:
        stationary = mxmc_stationary(workload, cores)

    mu = workload.service_rate
    law = workload.batch_law

    # Ahead-state support: keep mass 1 - MASS_EPS, lump the leftover.
    cum = np.cumsum(stationary.probs)
    a_max = int(np.searchsorted(cum, 1.0 - MASS_EPS))
    a_max = max(a_max, cores)
    a_max = min(a_max, stationary.truncation)
    pa = stationary.probs[: a_max + 1].copy()
    pa[a_max] += max(0.0, 1.0 - pa.sum())

    b_max = law.support_bound(MASS_EPS)
    pb = law.pmf(b_max)

    # W[a, j] = P(state (a, r = j+1)); column 0 feeds absorption.
    w = np.outer(pa, pb)
    alive0 = w.sum()

    n_ahead = np.minimum(np.arange(a_max + 1), cores)
    lam_unif = cores * mu
    p_ahead = (n_ahead * mu / lam_unif)[:, None]
    idle = (cores - n_ahead)[:, None]
    r_index = np.arange(1, b_max + 1)[None, :]
    p_tagged = np.minimum(r_index, idle) * mu / lam_unif

    t_max = float(grid[-1])
    if t_max == 0.0:
        n_steps = 0
    else:
        n_steps = int(stats.poisson.isf(UNIFORMIZATION_EPS, lam_unif * t_max)) + 1
    alive = np.empty(n_steps + 1, dtype=np.float64)
    alive[0] = alive0
    for k in range(1, n_steps + 1):
        flow_a = w * p_ahead
        flow_r = w * p_tagged
        w -= flow_a
        w -= flow_r
        w[:-1, :] += flow_a[1:, :]
        w[:, :-1] += flow_r[:, 1:]
        alive[k] = alive[k - 1] - float(flow_r[:, 0].sum())
        if alive[k] < 1e-16:
            alive[k + 1:] = alive[k]
            break

    weights = stats.poisson.pmf(
        np.arange(n_steps + 1)[None, :], (lam_unif * grid)[:, None]
    )
    survival = weights @ alive
    survival = np.clip(survival, 0.0, 1.0)
    return SojournTail(grid=grid, survival=survival, method=METHOD_PHASE_TYPE)


def sojourn_tail_from_samples(samples, grid) -> SojournTail:
    """Empirical survival of sojourn samples on a grid (Monte Carlo method)."""
    samples = np.sort(np.asarray(samples, dtype=np.float64))
    grid = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    if samples.size == 0:
        raise ValueError("no sojourn samples")
    exceed = samples.size - np.searchsorted(samples, grid, side="right")
    return SojournTail(
        grid=grid,
        survival=exceed / samples.size,
        method=METHOD_MONTE_CARLO,
    )
