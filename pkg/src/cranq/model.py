"""Domain types for batch processing of radio subframes on a multi-core pool.

Conventions used across the toolkit:

- the base time unit is the millisecond (one subframe period), so all rates
  are per millisecond;
- a *batch* is the set of parallel-runnable jobs released together (one
  subframe worth of work), and a batch's sojourn time runs from its arrival
  until its last job completes;
- batch-size laws are laws on the positive integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GEOMETRIC = "geometric"
DETERMINISTIC = "deterministic"
EMPIRICAL = "empirical"

GREEDY_FCFS = "greedy_fcfs"
PROCESSOR_SHARING = "processor_sharing"
DEDICATED = "dedicated"

PARALLEL_SUBFRAME = "subframe"
PARALLEL_PER_UE = "per_ue"
PARALLEL_PER_CB = "per_cb"

PARALLELISM_MODES = (PARALLEL_SUBFRAME, PARALLEL_PER_UE, PARALLEL_PER_CB)

# 24-bit CRC appended to every code block carved out of an oversized
# transport block; payload per block shrinks accordingly.
CB_CRC_BITS = 24

_PMF_SUM_TOL = 1e-12


@dataclass(frozen=True)
class BatchLaw:
    """Law of the number of jobs released per batch (support {1, 2, ...}).

    Use the constructors: ``BatchLaw.geometric(q)`` with mean 1/(1-q),
    ``BatchLaw.deterministic(k)``, or ``BatchLaw.empirical({k: p})`` for
    trace-calibrated laws.
    """

    kind: str
    q: float = 0.0
    k: int = 1
    pmf_items: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.kind == GEOMETRIC:
            if not 0.0 <= self.q < 1.0:
                raise ValueError(f"geometric parameter q={self.q} outside [0, 1)")
        elif self.kind == DETERMINISTIC:
            if self.k < 1:
                raise ValueError(f"deterministic batch size must be >= 1, got {self.k}")
        elif self.kind == EMPIRICAL:
            if not self.pmf_items:
                raise ValueError("empirical batch law needs a nonempty pmf")
            total = 0.0
            for value, prob in self.pmf_items:
                if value < 1:
                    raise ValueError(f"batch size {value} < 1 in empirical pmf")
                if prob < 0.0:
                    raise ValueError(f"negative probability for batch size {value}")
                total += prob
            if abs(total - 1.0) > _PMF_SUM_TOL:
                raise ValueError(f"empirical pmf sums to {total!r}, not 1")
        else:
            raise ValueError(f"unknown batch law kind {self.kind!r}")

    @classmethod
    def geometric(cls, q: float) -> "BatchLaw":
        return cls(kind=GEOMETRIC, q=float(q))

    @classmethod
    def deterministic(cls, k: int) -> "BatchLaw":
        return cls(kind=DETERMINISTIC, k=int(k))

    @classmethod
    def empirical(cls, pmf: dict[int, float]) -> "BatchLaw":
        items = tuple(sorted((int(k), float(p)) for k, p in pmf.items()))
        return cls(kind=EMPIRICAL, pmf_items=items)

    def mean(self) -> float:
        if self.kind == GEOMETRIC:
            return 1.0 / (1.0 - self.q)
        if self.kind == DETERMINISTIC:
            return float(self.k)
        return sum(v * p for v, p in self.pmf_items)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` batch sizes as an int64 array."""
        if self.kind == GEOMETRIC:
            return rng.geometric(1.0 - self.q, size=size).astype(np.int64)
        if self.kind == DETERMINISTIC:
            return np.full(size, self.k, dtype=np.int64)
        values = np.array([v for v, _ in self.pmf_items], dtype=np.int64)
        probs = np.array([p for _, p in self.pmf_items], dtype=np.float64)
        return rng.choice(values, size=size, p=probs / probs.sum())

    def pmf(self, kmax: int) -> np.ndarray:
        """P(B=k) for k=1..kmax with the tail mass lumped onto kmax."""
        if kmax < 1:
            raise ValueError("kmax must be >= 1")
        out = np.zeros(kmax, dtype=np.float64)
        if self.kind == GEOMETRIC:
            ks = np.arange(1, kmax + 1)
            out = (1.0 - self.q) * self.q ** (ks - 1)
            out[-1] = self.q ** (kmax - 1)  # tail P(B >= kmax)
        elif self.kind == DETERMINISTIC:
            out[min(self.k, kmax) - 1] = 1.0
        else:
            for v, p in self.pmf_items:
                out[min(v, kmax) - 1] += p
        return out

    def survivor(self, kmax: int) -> np.ndarray:
        """P(B >= k) for k=1..kmax."""
        if self.kind == GEOMETRIC:
            return self.q ** np.arange(kmax, dtype=np.float64)
        out = np.zeros(kmax, dtype=np.float64)
        for v, p in self._items():
            out[: min(v, kmax)] += p
        return out

    def support_bound(self, eps: float = 1e-12) -> int:
        """Smallest K with P(B > K) <= eps."""
        if self.kind == GEOMETRIC:
            if self.q == 0.0:
                return 1
            return max(1, int(math.ceil(math.log(eps) / math.log(self.q))))
        return max(v for v, _ in self._items())

    def _items(self):
        if self.kind == DETERMINISTIC:
            return ((self.k, 1.0),)
        return self.pmf_items

    def to_dict(self) -> dict:
        if self.kind == GEOMETRIC:
            return {"kind": GEOMETRIC, "q": self.q}
        if self.kind == DETERMINISTIC:
            return {"kind": DETERMINISTIC, "k": self.k}
        return {"kind": EMPIRICAL, "pmf": {str(v): p for v, p in self.pmf_items}}

    @classmethod
    def from_dict(cls, obj: dict) -> "BatchLaw":
        obj = dict(obj)
        kind = obj.pop("kind", None)
        if kind == GEOMETRIC:
            q = obj.pop("q")
            _reject_unknown(obj, "batch law")
            return cls.geometric(q)
        if kind == DETERMINISTIC:
            k = obj.pop("k")
            _reject_unknown(obj, "batch law")
            return cls.deterministic(k)
        if kind == EMPIRICAL:
            pmf = obj.pop("pmf")
            _reject_unknown(obj, "batch law")
            return cls.empirical({int(k): float(p) for k, p in pmf.items()})
        raise ValueError(f"unknown batch law kind {kind!r}")


@dataclass(frozen=True)
class WorkloadSpec:
    """Aggregate workload offered to the compute pool."""

    arrival_rate: float  # batches per ms
    batch_law: BatchLaw
    service_rate: float  # job completions per ms per core

    def __post_init__(self):
        if self.arrival_rate <= 0.0:
            raise ValueError(f"arrival_rate must be > 0, got {self.arrival_rate}")
        if self.service_rate <= 0.0:
            raise ValueError(f"service_rate must be > 0, got {self.service_rate}")

    def offered_load(self, cores: int) -> float:
        return offered_load(self, cores)

    def to_dict(self) -> dict:
        return {
            "arrival_rate": self.arrival_rate,
            "service_rate": self.service_rate,
            "batch": self.batch_law.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "WorkloadSpec":
        obj = dict(obj)
        rate = float(obj.pop("arrival_rate"))
        mu = float(obj.pop("service_rate"))
        law = BatchLaw.from_dict(obj.pop("batch"))
        _reject_unknown(obj, "workload")
        return cls(arrival_rate=rate, batch_law=law, service_rate=mu)


@dataclass(frozen=True)
class SystemSpec:
    """Compute pool: core count, scheduling discipline, optional impatience.

    ``deadline_ms`` enables batch-level reneging: a batch whose sojourn
    reaches the deadline is cancelled outright and its cores freed.
    ``partition`` is required for the dedicated discipline and must sum to
    ``cores``; batch sources are mapped round-robin onto partition blocks.
    """

    cores: int
    discipline: str = GREEDY_FCFS
    partition: tuple[int, ...] | None = None
    deadline_ms: float | None = None

    def __post_init__(self):
        if self.cores < 1:
            raise ValueError(f"cores must be >= 1, got {self.cores}")
        if self.discipline not in (GREEDY_FCFS, PROCESSOR_SHARING, DEDICATED):
            raise ValueError(f"unknown discipline {self.discipline!r}")
        if self.discipline == DEDICATED:
            if not self.partition:
                raise ValueError("dedicated discipline requires a partition")
            part = tuple(int(c) for c in self.partition)
            if any(c < 1 for c in part):
                raise ValueError(f"partition entries must be >= 1, got {part}")
            if sum(part) != self.cores:
                raise ValueError(
                    f"partition {part} sums to {sum(part)}, expected {self.cores}"
                )
            object.__setattr__(self, "partition", part)
        elif self.partition is not None:
            raise ValueError("partition is only meaningful for the dedicated discipline")
        if self.deadline_ms is not None and not self.deadline_ms > 0.0:
            raise ValueError(f"deadline_ms must be > 0, got {self.deadline_ms}")

    @property
    def impatient(self) -> bool:
        return self.deadline_ms is not None

    def blocks(self) -> tuple[int, ...]:
        """Core counts per scheduling block (a single block unless dedicated)."""
        if self.discipline == DEDICATED:
            return self.partition
        return (self.cores,)

    def to_dict(self) -> dict:
        out = {"cores": self.cores, "discipline": self.discipline}
        if self.partition is not None:
            out["partition"] = list(self.partition)
        if self.deadline_ms is not None:
            out["deadline_ms"] = self.deadline_ms
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "SystemSpec":
        obj = dict(obj)
        cores = int(obj.pop("cores"))
        discipline = obj.pop("discipline", GREEDY_FCFS)
        partition = obj.pop("partition", None)
        if partition is not None:
            partition = tuple(int(c) for c in partition)
        deadline = obj.pop("deadline_ms", None)
        if deadline is not None:
            deadline = float(deadline)
        _reject_unknown(obj, "system")
        return cls(cores=cores, discipline=discipline, partition=partition,
                   deadline_ms=deadline)


@dataclass(frozen=True)
class RadioWorkload:
    """Per-cell subframe workload and the chosen parallelism granularity.

    Each cell releases one batch per TTI. ``ue_law`` gives the number of
    scheduled UEs per subframe and ``tb_bits_law`` the transport-block size
    per UE in bits. The parallelism mode controls how a subframe decomposes
    into jobs: one job for the whole subframe, one per UE, or one per code
    block after segmentation.
    """

    n_cells: int
    ue_law: BatchLaw
    tb_bits_law: BatchLaw
    tti_ms: float = 1.0
    cb_max_bits: int = 6144
    parallelism: str = PARALLEL_SUBFRAME

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError(f"n_cells must be >= 1, got {self.n_cells}")
        if self.tti_ms <= 0.0:
            raise ValueError(f"tti_ms must be > 0, got {self.tti_ms}")
        if self.cb_max_bits < 40:
            raise ValueError(f"cb_max_bits must be >= 40, got {self.cb_max_bits}")
        if self.parallelism not in PARALLELISM_MODES:
            raise ValueError(f"unknown parallelism mode {self.parallelism!r}")

    def with_parallelism(self, mode: str) -> "RadioWorkload":
        return RadioWorkload(
            n_cells=self.n_cells, ue_law=self.ue_law, tb_bits_law=self.tb_bits_law,
            tti_ms=self.tti_ms, cb_max_bits=self.cb_max_bits, parallelism=mode,
        )

    def to_dict(self) -> dict:
        return {
            "n_cells": self.n_cells,
            "tti_ms": self.tti_ms,
            "ue_per_subframe": self.ue_law.to_dict(),
            "tb_bits": self.tb_bits_law.to_dict(),
            "cb_max_bits": self.cb_max_bits,
            "parallelism": self.parallelism,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RadioWorkload":
        obj = dict(obj)
        n_cells = int(obj.pop("n_cells"))
        ue_law = BatchLaw.from_dict(obj.pop("ue_per_subframe"))
        tb_law = BatchLaw.from_dict(obj.pop("tb_bits"))
        tti = float(obj.pop("tti_ms", 1.0))
        cb_max = int(obj.pop("cb_max_bits", 6144))
        mode = obj.pop("parallelism", PARALLEL_SUBFRAME)
        _reject_unknown(obj, "radio workload")
        return cls(n_cells=n_cells, ue_law=ue_law, tb_bits_law=tb_law,
                   tti_ms=tti, cb_max_bits=cb_max, parallelism=mode)


@dataclass(frozen=True)
class LatencyTarget:
    """Deadline and tolerated probability of exceeding it."""

    deadline_ms: float
    tolerance: float

    def __post_init__(self):
        if self.deadline_ms <= 0.0:
            raise ValueError(f"deadline_ms must be > 0, got {self.deadline_ms}")
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError(f"tolerance must be in (0, 1), got {self.tolerance}")

    def to_dict(self) -> dict:
        return {"deadline_ms": self.deadline_ms, "tolerance": self.tolerance}

    @classmethod
    def from_dict(cls, obj: dict) -> "LatencyTarget":
        obj = dict(obj)
        deadline = float(obj.pop("deadline_ms"))
        tolerance = float(obj.pop("tolerance"))
        _reject_unknown(obj, "target")
        return cls(deadline_ms=deadline, tolerance=tolerance)


@dataclass(frozen=True)
class JobBatch:
    """One decomposed subframe: per-job bit counts plus the sampled UE sizes."""

    job_bits: np.ndarray  # int64, one entry per job
    ue_bits: np.ndarray   # int64, one entry per UE

    @property
    def n_jobs(self) -> int:
        return int(self.job_bits.shape[0])

    @property
    def total_bits(self) -> int:
        return int(self.job_bits.sum())


def offered_load(workload: WorkloadSpec, cores: int) -> float:
    """Load rho = lambda * E[B] / (mu * C); the pool is stable iff rho < 1."""
    if cores < 1:
        raise ValueError(f"cores must be >= 1, got {cores}")
    return workload.arrival_rate * workload.batch_law.mean() / (
        workload.service_rate * cores
    )


def is_stable(workload: WorkloadSpec, cores: int) -> bool:
    return offered_load(workload, cores) < 1.0


def subframe_service_mean(workload: WorkloadSpec) -> float:
    """Mean total service time of one subframe, 1/((1-q)*mu).

    Valid only for geometric batch sizes, where the subframe total is again
    exponential; other laws have no such reduction.
    """
    if workload.batch_law.kind != GEOMETRIC:
        raise ValueError(
            "subframe service mean holds only for geometric batch sizes, "
            f"got {workload.batch_law.kind!r}"
        )
    return 1.0 / ((1.0 - workload.batch_law.q) * workload.service_rate)


def code_blocks_per_tb(tb_bits, cb_max_bits: int):
    """Number of code blocks for transport blocks of ``tb_bits`` bits.

    A block at or under the ceiling stays whole; a larger one is split into
    ceil(bits / (cb_max_bits - 24)) blocks, each losing 24 bits to its CRC.
    Accepts a scalar or an int64 array.
    """
    payload = cb_max_bits - CB_CRC_BITS
    bits = np.asarray(tb_bits, dtype=np.int64)
    counts = np.where(bits > cb_max_bits, -(-bits // payload), 1).astype(np.int64)
    if np.ndim(tb_bits) == 0:
        return int(counts)
    return counts


def segment_bits(tb_bits: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Split each TB's bits evenly over its code blocks, conserving totals.

    The first ``bits mod count`` blocks of a TB get one extra bit so the
    integer per-job bit counts sum exactly to the TB size.
    """
    tb_bits = np.asarray(tb_bits, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    base = tb_bits // counts
    extra = tb_bits - base * counts
    job_bits = np.repeat(base, counts)
    # index of each job within its TB, then +1 bit for the first `extra`
    ends = np.cumsum(counts)
    starts = ends - counts
    within = np.arange(ends[-1] if counts.size else 0, dtype=np.int64)
    within -= np.repeat(starts, counts)
    job_bits += (within < np.repeat(extra, counts)).astype(np.int64)
    return job_bits


def decompose_subframe(radio: RadioWorkload, rng: np.random.Generator) -> JobBatch:
    """Sample one subframe and decompose it per the parallelism mode.

    Draws the UE count, then one TB size per UE; total bits are conserved
    exactly whichever mode is selected.
    """
    n_ue = int(radio.ue_law.sample(rng, 1)[0])
    ue_bits = radio.tb_bits_law.sample(rng, n_ue)
    if radio.parallelism == PARALLEL_SUBFRAME:
        job_bits = np.array([ue_bits.sum()], dtype=np.int64)
    elif radio.parallelism == PARALLEL_PER_UE:
        job_bits = ue_bits.copy()
    else:
        counts = code_blocks_per_tb(ue_bits, radio.cb_max_bits)
        job_bits = segment_bits(ue_bits, counts)
    return JobBatch(job_bits=job_bits, ue_bits=ue_bits)


def _reject_unknown(obj: dict, where: str):
    if obj:
        keys = ", ".join(sorted(map(str, obj)))
        raise ValueError(f"unknown {where} keys: {keys}")
