"""cranq: dimensioning toolkit for pooled baseband processing.

Models a multi-core pool decoding radio subframes as a batch-arrival
multi-server queue. Four entry points cover the workflow: ``analytic``
(stationary law and sojourn tails), ``simulate`` (seeded event simulation
of FCFS / processor sharing / dedicated pools with optional reneging),
``dimension`` (smallest core count meeting a latency target) and
``fronthaul`` (transport bandwidth and latency-distance budgets).
"""

from .analytic import (
    InstabilityError,
    SojournTail,
    StationaryDistribution,
    TruncationError,
    batch_sojourn_tail,
    erlang_c,
    mmc_sojourn_tail,
    mxmc_stationary,
    ps_mean_sojourn,
)
from .dimension import (
    DimensioningError,
    DimensioningResult,
    min_stable_cores,
    required_cores,
)
from .fronthaul import (
    FronthaulSpec,
    aggregation_report,
    cpri_rate,
    distance_to_latency,
    latency_to_distance,
    split6_downlink_rate,
    split6_uplink_rate,
)
from .model import (
    BatchLaw,
    JobBatch,
    LatencyTarget,
    RadioWorkload,
    SystemSpec,
    WorkloadSpec,
    code_blocks_per_tb,
    decompose_subframe,
    is_stable,
    offered_load,
)
from .simulate import (
    Estimate,
    ReplicatedMetrics,
    SimConfig,
    SimMetrics,
    available_engines,
    replicate,
    run,
    run_impatient,
    run_radio,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "BatchLaw", "WorkloadSpec", "SystemSpec", "RadioWorkload", "JobBatch",
    "LatencyTarget", "offered_load", "is_stable", "code_blocks_per_tb",
    "decompose_subframe",
    # analytic
    "StationaryDistribution", "SojournTail", "InstabilityError",
    "TruncationError", "erlang_c", "mmc_sojourn_tail", "ps_mean_sojourn",
    "mxmc_stationary", "batch_sojourn_tail",
    # simulate
    "SimConfig", "SimMetrics", "Estimate", "ReplicatedMetrics", "run",
    "run_radio", "run_impatient", "replicate", "available_engines",
    # dimension
    "DimensioningResult", "DimensioningError", "min_stable_cores",
    "required_cores",
    # fronthaul
    "FronthaulSpec", "cpri_rate", "split6_downlink_rate",
    "split6_uplink_rate", "latency_to_distance", "distance_to_latency",
    "aggregation_report",
]
