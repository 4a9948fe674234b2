"""Flow-level traffic engineering simulator and library.

Compares content-size-aware path allocation (minimum backlog policy and
its thresholded variant) against min-MLU weighted-random splitting on a
deterministic fluid max-min fair network model.
"""

__version__ = "0.1.0"

from .engine import EngineConfig, FlowRecord, RunResult, compute_fair_rates, response_time, run
from .kpaths import Path, PathSet, build_pathsets, dijkstra_shortest, yen_k_shortest
from .minmlu import (
    Demand,
    DemandMatrix,
    MinMluResult,
    WeightAssignment,
    compute_min_mlu_weights,
    link_utilizations,
    scale_demands,
)
from .policies import (
    ControllerView,
    MinBacklog,
    ThresholdedMinBacklog,
    WeightedRandom,
    path_backlog,
    select_mbp,
    select_thresholded,
    select_weighted_random,
)
from .topology import Link, Topology, build_abilene, link_between, parse_topology, serialize_topology
from .traffic import (
    Bimodal,
    Deterministic,
    FlowArrival,
    Pareto,
    SizeDistribution,
    generate_arrivals,
    make_distribution,
    parse_traffic_matrix,
)
from .experiment import (
    ComparisonReport,
    ExperimentConfig,
    emit_report,
    run_comparison,
    run_motivating_example,
    run_threshold_sweep,
)

__all__ = [
    "__version__",
    "Link",
    "Topology",
    "build_abilene",
    "link_between",
    "parse_topology",
    "serialize_topology",
    "Path",
    "PathSet",
    "dijkstra_shortest",
    "yen_k_shortest",
    "build_pathsets",
    "Demand",
    "DemandMatrix",
    "WeightAssignment",
    "MinMluResult",
    "link_utilizations",
    "compute_min_mlu_weights",
    "scale_demands",
    "SizeDistribution",
    "Deterministic",
    "Pareto",
    "Bimodal",
    "make_distribution",
    "FlowArrival",
    "generate_arrivals",
    "parse_traffic_matrix",
    "ControllerView",
    "path_backlog",
    "select_mbp",
    "select_weighted_random",
    "select_thresholded",
    "MinBacklog",
    "WeightedRandom",
    "ThresholdedMinBacklog",
    "EngineConfig",
    "FlowRecord",
    "RunResult",
    "compute_fair_rates",
    "run",
    "response_time",
    "ExperimentConfig",
    "ComparisonReport",
    "run_comparison",
    "run_threshold_sweep",
    "run_motivating_example",
    "emit_report",
]
