"""Experiment orchestration: policy comparisons, threshold sweeps, reports.

A comparison run sweeps the demand matrix over load scale factors. Per
scale it solves the min-MLU LP once, then per replication generates one
arrival stream that every policy consumes identically, so response-time
differences are purely due to path selection. Results aggregate in sorted
(scale, policy, replication) order and serialize byte-stably.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, fields, replace
from importlib import resources

import numpy as np

from .engine import EngineConfig, RunResult, run
from .kpaths import PathSet, build_pathsets, yen_k_shortest
from .minmlu import (
    Demand,
    DemandMatrix,
    MinMluResult,
    WeightAssignment,
    compute_min_mlu_weights,
    scale_demands,
)
from .policies import BRANCH_MBP, MinBacklog, ThresholdedMinBacklog, WeightedRandom
from .topology import Link, Topology, build_abilene, load_topology_file
from .traffic import (
    DEFAULT_MEAN_SIZE,
    FlowArrival,
    SizeDistribution,
    generate_arrivals,
    make_distribution,
    parse_traffic_matrix,
)

__all__ = [
    "ExperimentConfig",
    "CellResult",
    "GainRow",
    "ThresholdRow",
    "CheckpointRow",
    "ComparisonReport",
    "run_comparison",
    "run_threshold_sweep",
    "run_motivating_example",
    "emit_report",
    "stream_hash",
    "parse_config_file",
    "builtin_traffic_matrix",
    "gravity_matrix",
    "MOTIVATING_SEEDS",
]

POLICY_ALIASES = {"mbp": "mbp", "wr": "weighted_random", "weighted_random": "weighted_random"}

MOTIVATING_SEEDS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a comparison or sweep needs; mirrors the CLI flags."""

    topology: str = "abilene"  # "abilene" or a topology file path
    traffic: str = "builtin"  # "builtin" synthetic Abilene matrix or a file path
    dist: str = "pareto"
    mean_size: float = DEFAULT_MEAN_SIZE
    k: int = 3
    policies: tuple[str, ...] = ("mbp", "weighted_random")
    scales: tuple[float, ...] = (1.0, 1.2, 1.4, 1.6)
    thresholds: tuple[float, ...] = ()
    horizon: float = 2000.0
    warmup: float | None = None  # defaults to 10% of the horizon
    seed: int = 1
    reps: int = 5
    out: str | None = None
    view_mode: str = "exact"
    pareto_shape: float = 1.5
    bimodal_small: float = 10_000.0
    bimodal_large: float = 10_000_000.0

    def __post_init__(self) -> None:
        if any(s <= 0 for s in self.scales):
            raise ValueError("scale factors must be positive")
        if any(t < 0 for t in self.thresholds):
            raise ValueError("thresholds must be non-negative")
        if self.reps < 1:
            raise ValueError("replication count must be >= 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.effective_warmup >= self.horizon:
            raise ValueError("warm-up must be shorter than the horizon")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        for name in self.policies:
            if name not in POLICY_ALIASES:
                raise ValueError(f"unknown policy {name!r}")

    @property
    def effective_warmup(self) -> float:
        return 0.1 * self.horizon if self.warmup is None else self.warmup

    def replication_seed(self, rep: int) -> int:
        return self.seed + rep


def _coerce(name: str, value: str):
    typed = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in typed:
        raise ValueError(f"unknown config key {name!r}")
    if name in ("policies",):
        return tuple(p.strip() for p in value.split(",") if p.strip())
    if name in ("scales", "thresholds"):
        return tuple(float(v) for v in value.split(",") if v.strip())
    if name in ("k", "seed", "reps"):
        return int(value)
    if name in ("mean_size", "horizon", "warmup", "pareto_shape", "bimodal_small", "bimodal_large"):
        return float(value)
    return value


def parse_config_file(path) -> dict:
    """Read `key = value` lines (# comments) into config overrides."""
    overrides = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            overrides[key.strip()] = _coerce(key.strip(), value.strip())
    return overrides


@dataclass(frozen=True)
class CellResult:
    """One (scale, policy, replication) simulation outcome."""

    scale: float
    policy: str
    replication: int
    seed: int
    flows: int
    mean_response_s: float
    peak_mlu: float
    stream_hash: str


@dataclass(frozen=True)
class GainRow:
    scale: float
    gain: float


@dataclass(frozen=True)
class ThresholdRow:
    threshold_bytes: float
    gain: float
    allocation_frequency: float


@dataclass(frozen=True)
class CheckpointRow:
    policy: str
    delivered: int
    mean_response_s: float


@dataclass
class ComparisonReport:
    """Aggregated experiment outcome, ready for serialization."""

    cells: list[CellResult] = field(default_factory=list)
    gains: list[GainRow] = field(default_factory=list)
    thresholds: list[ThresholdRow] = field(default_factory=list)
    checkpoints: list[CheckpointRow] = field(default_factory=list)
    lp_mlu: dict[float, MinMluResult] = field(default_factory=dict)
    config_echo: dict[str, str] = field(default_factory=dict)

    def cell_mean(self, scale: float, policy: str) -> float:
        values = [
            c.mean_response_s for c in self.cells if c.scale == scale and c.policy == policy
        ]
        if not values:
            raise KeyError(f"no cells for scale={scale} policy={policy}")
        return float(np.mean(values))


def stream_hash(arrivals) -> str:
    """Stable digest of an arrival stream for cross-policy stream checks."""
    digest = hashlib.sha256()
    for a in arrivals:
        digest.update(
            f"{a.flow_id},{a.src},{a.dst},{a.arrival_time.hex()},{a.size.hex()}\n".encode()
        )
    return digest.hexdigest()


def load_experiment_topology(config: ExperimentConfig) -> Topology:
    if config.topology == "abilene":
        return build_abilene()
    return load_topology_file(config.topology)


def builtin_traffic_matrix(mean_size: float = DEFAULT_MEAN_SIZE) -> DemandMatrix:
    """The shipped synthetic Abilene matrix (gravity model, calibrated load)."""
    text = resources.files("flowte.data").joinpath("abilene_traffic.csv").read_text("utf-8")
    return parse_traffic_matrix(text, mean_size=mean_size)


def load_base_matrix(config: ExperimentConfig, topology: Topology) -> DemandMatrix:
    if config.traffic == "builtin":
        return builtin_traffic_matrix(config.mean_size)
    with open(config.traffic, "r", encoding="utf-8") as fh:
        return parse_traffic_matrix(fh.read(), mean_size=config.mean_size, nodes=topology.nodes)


def _distribution(config: ExperimentConfig) -> SizeDistribution:
    return make_distribution(
        config.dist,
        config.mean_size,
        pareto_shape=config.pareto_shape,
        bimodal_small=config.bimodal_small,
        bimodal_large=config.bimodal_large,
    )


def _build_policy(name: str, weights: WeightAssignment):
    canonical = POLICY_ALIASES[name]
    if canonical == "mbp":
        return MinBacklog()
    return WeightedRandom(weights)


def _measured(result: RunResult, warmup: float) -> tuple[int, float]:
    records = [r for r in result.records if r.arrival_s >= warmup]
    if not records:
        raise ValueError("no flows arrived after the warm-up window")
    return len(records), float(np.mean([r.response_s for r in records]))


def _echo(config: ExperimentConfig) -> dict[str, str]:
    echo = {}
    for f in fields(config):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            echo[f.name] = ",".join(str(v) for v in value)
        else:
            echo[f.name] = str(value)
    echo["warmup"] = str(config.effective_warmup)
    return echo


def _simulate_cell(topology, pathsets, arrivals, policy, config, rep, shash) -> CellResult:
    engine_cfg = EngineConfig(
        view_mode=config.view_mode, policy_seed=config.replication_seed(rep)
    )
    result = run(arrivals, topology, pathsets, policy, engine_cfg)
    flows, mean_response = _measured(result, config.effective_warmup)
    return CellResult(
        scale=0.0,  # caller fills in
        policy=result.policy_label,
        replication=rep,
        seed=config.replication_seed(rep),
        flows=flows,
        mean_response_s=mean_response,
        peak_mlu=max(result.link_peak_utilization.values()),
        stream_hash=shash,
    )


def run_comparison(config: ExperimentConfig) -> ComparisonReport:
    """Compare the configured policies over every load scale factor.

    Per scale: solve the min-MLU LP once; per replication, generate one
    arrival stream and run every policy on it. Scales whose LP optimum
    exceeds 1 are flagged infeasible and skipped (the network would never
    drain near that operating point).
    """
    topology = load_experiment_topology(config)
    base = load_base_matrix(config, topology)
    dist = _distribution(config)
    pairs = [pair for pair, d in base if d.offered_load > 0]
    pathsets = build_pathsets(topology, pairs, config.k)

    report = ComparisonReport(config_echo=_echo(config))
    for scale in sorted(set(config.scales)):
        demands = scale_demands(base, scale)
        lp = compute_min_mlu_weights(topology, demands, pathsets)
        report.lp_mlu[scale] = lp
        if not lp.feasible:
            continue
        policies = [_build_policy(name, lp.weights) for name in config.policies]
        for rep in range(config.reps):
            arrivals = generate_arrivals(
                demands, dist, config.horizon, config.replication_seed(rep)
            )
            shash = stream_hash(arrivals)
            for policy in policies:
                cell = _simulate_cell(topology, pathsets, arrivals, policy, config, rep, shash)
                report.cells.append(replace(cell, scale=scale))
        labels = {POLICY_ALIASES[p] for p in config.policies}
        if {"mbp", "weighted_random"} <= labels:
            rt_wr = report.cell_mean(scale, "weighted_random")
            rt_mbp = report.cell_mean(scale, "mbp")
            report.gains.append(GainRow(scale=scale, gain=(rt_wr - rt_mbp) / rt_wr))
    report.cells.sort(key=lambda c: (c.scale, c.policy, c.replication))
    return report


def run_threshold_sweep(config: ExperimentConfig) -> ComparisonReport:
    """Thresholded allocation sweep at a single load scale.

    Runs weighted random once per replication plus one thresholded run per
    threshold value on the common streams; gains are measured against the
    weighted-random mean. Threshold 0 reproduces pure backlog-aware
    allocation and +inf reproduces weighted random.
    """
    if len(set(config.scales)) != 1:
        raise ValueError("threshold sweep needs exactly one scale factor")
    if not config.thresholds:
        raise ValueError("threshold sweep needs a non-empty threshold list")
    scale = config.scales[0]

    topology = load_experiment_topology(config)
    base = load_base_matrix(config, topology)
    dist = _distribution(config)
    pairs = [pair for pair, d in base if d.offered_load > 0]
    pathsets = build_pathsets(topology, pairs, config.k)

    demands = scale_demands(base, scale)
    lp = compute_min_mlu_weights(topology, demands, pathsets)
    report = ComparisonReport(config_echo=_echo(config))
    report.lp_mlu[scale] = lp
    if not lp.feasible:
        return report

    thresholds = sorted(set(config.thresholds))
    mbp_fraction: dict[float, list[float]] = {t: [] for t in thresholds}
    for rep in range(config.reps):
        arrivals = generate_arrivals(demands, dist, config.horizon, config.replication_seed(rep))
        shash = stream_hash(arrivals)
        wr_cell = _simulate_cell(
            topology, pathsets, arrivals, WeightedRandom(lp.weights), config, rep, shash
        )
        report.cells.append(replace(wr_cell, scale=scale))
        for threshold in thresholds:
            policy = ThresholdedMinBacklog(threshold=threshold, weights=lp.weights)
            engine_cfg = EngineConfig(
                view_mode=config.view_mode,
                policy_seed=config.replication_seed(rep),
                capture_decisions=True,
            )
            result = run(arrivals, topology, pathsets, policy, engine_cfg)
            flows, mean_response = _measured(result, config.effective_warmup)
            report.cells.append(
                CellResult(
                    scale=scale,
                    policy=result.policy_label,
                    replication=rep,
                    seed=config.replication_seed(rep),
                    flows=flows,
                    mean_response_s=mean_response,
                    peak_mlu=max(result.link_peak_utilization.values()),
                    stream_hash=shash,
                )
            )
            n_mbp = sum(1 for r in result.records if r.policy_branch == BRANCH_MBP)
            mbp_fraction[threshold].append(n_mbp / len(result.records))

    rt_wr = report.cell_mean(scale, "weighted_random")
    for threshold in thresholds:
        policy_label = ThresholdedMinBacklog(threshold=threshold, weights=lp.weights).label
        rt_t = report.cell_mean(scale, policy_label)
        report.thresholds.append(
            ThresholdRow(
                threshold_bytes=threshold,
                gain=(rt_wr - rt_t) / rt_wr,
                allocation_frequency=float(np.mean(mbp_fraction[threshold])),
            )
        )
    report.cells.sort(key=lambda c: (c.scale, c.policy, c.replication))
    return report


def _motivating_topology() -> Topology:
    links = []
    for src, dst in (("1", "2"), ("2", "3"), ("1", "3")):
        links.append(Link(src=src, dst=dst, capacity=1.0, latency=0.01, ospf_weight=1.0))
    return Topology(links)


def run_motivating_example(
    seed: int = 1,
    contents: int = 800,
    dist: SizeDistribution | None = None,
) -> ComparisonReport:
    """Three-node head-to-head: backlog-aware vs the fixed (1/3, 2/3) split.

    Unit-capacity links carry two unit-intensity-0.5 demands; `contents`
    transfers from node 1 to node 3 are policied, with mean response time
    checkpointed after 1/4, 1/2 and all of them complete.
    """
    if contents < 4:
        raise ValueError("need at least 4 contents for checkpoints")
    topology = _motivating_topology()
    dist = dist or make_distribution("pareto", 1.0)
    demands = DemandMatrix(
        {
            ("1", "3"): Demand(rate=0.5 / dist.mean, mean_size=dist.mean),
            ("2", "3"): Demand(rate=0.5 / dist.mean, mean_size=dist.mean),
        }
    )
    pathsets = {
        ("1", "3"): yen_k_shortest(topology, "1", "3", 2),
        ("2", "3"): yen_k_shortest(topology, "2", "3", 1),
    }
    # Paths for 1->3 sort direct-first; the fixed baseline puts 1/3 on the
    # two-hop path through node 2 and 2/3 on the direct link.
    weights = WeightAssignment({("1", "3"): (2.0 / 3.0, 1.0 / 3.0), ("2", "3"): (1.0,)})

    horizon = contents / demands.demand("1", "3").rate * 1.25
    while True:
        arrivals = generate_arrivals(demands, dist, horizon, seed)
        policied = [a for a in arrivals if (a.src, a.dst) == ("1", "3")]
        if len(policied) >= contents:
            break
        horizon *= 2.0
    cutoff = policied[contents - 1].arrival_time
    kept_ids = {a.flow_id for a in policied[:contents]}
    arrivals = [
        a
        for a in arrivals
        if a.arrival_time <= cutoff and ((a.src, a.dst) != ("1", "3") or a.flow_id in kept_ids)
    ]
    shash = stream_hash(arrivals)

    report = ComparisonReport(
        config_echo={
            "experiment": "motivating",
            "contents": str(contents),
            "seed": str(seed),
            "dist": type(dist).__name__.lower(),
            "mean_size": str(dist.mean),
        }
    )
    checkpoints = (contents // 4, contents // 2, contents)
    means_at_end = {}
    for policy in (MinBacklog(), WeightedRandom(weights)):
        engine_cfg = EngineConfig(policy_seed=seed)
        result = run(arrivals, topology, pathsets, policy, engine_cfg)
        measured = sorted(
            (r for r in result.records if (r.src, r.dst) == ("1", "3")),
            key=lambda r: r.completion_s,
        )
        for n in checkpoints:
            mean_n = float(np.mean([r.response_s for r in measured[:n]]))
            report.checkpoints.append(
                CheckpointRow(policy=result.policy_label, delivered=n, mean_response_s=mean_n)
            )
        mean_all = float(np.mean([r.response_s for r in measured]))
        means_at_end[result.policy_label] = mean_all
        report.cells.append(
            CellResult(
                scale=1.0,
                policy=result.policy_label,
                replication=0,
                seed=seed,
                flows=len(measured),
                mean_response_s=mean_all,
                peak_mlu=max(result.link_peak_utilization.values()),
                stream_hash=shash,
            )
        )
    gain = (means_at_end["weighted_random"] - means_at_end["mbp"]) / means_at_end["weighted_random"]
    report.gains.append(GainRow(scale=1.0, gain=gain))
    report.cells.sort(key=lambda c: (c.scale, c.policy, c.replication))
    return report


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def emit_report(report: ComparisonReport, directory) -> list[str]:
    """Write summary.csv, gains.csv, allocations.csv and the config echo.

    Motivating-example checkpoints additionally land in checkpoints.csv.
    Identical reports emit byte-identical files. Returns the paths written.
    """
    os.makedirs(directory, exist_ok=True)
    written = []

    path = os.path.join(directory, "summary.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("scale,policy,replication,seed,flows,mean_response_s,peak_mlu\n")
        for c in report.cells:
            fh.write(
                f"{_fmt(c.scale)},{c.policy},{c.replication},{c.seed},{c.flows},"
                f"{_fmt(c.mean_response_s)},{_fmt(c.peak_mlu)}\n"
            )
    written.append(path)

    path = os.path.join(directory, "gains.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("scale,gain\n")
        for g in sorted(report.gains, key=lambda g: g.scale):
            fh.write(f"{_fmt(g.scale)},{_fmt(g.gain)}\n")
    written.append(path)

    path = os.path.join(directory, "allocations.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("threshold_bytes,gain,allocation_frequency\n")
        for t in sorted(report.thresholds, key=lambda t: t.threshold_bytes):
            fh.write(
                f"{_fmt(t.threshold_bytes)},{_fmt(t.gain)},{_fmt(t.allocation_frequency)}\n"
            )
    written.append(path)

    if report.checkpoints:
        path = os.path.join(directory, "checkpoints.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("policy,delivered,mean_response_s\n")
            for ck in sorted(report.checkpoints, key=lambda c: (c.policy, c.delivered)):
                fh.write(f"{ck.policy},{ck.delivered},{_fmt(ck.mean_response_s)}\n")
        written.append(path)

    path = os.path.join(directory, "config.txt")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(report.config_echo):
            fh.write(f"{key} = {report.config_echo[key]}\n")
        for scale in sorted(report.lp_mlu):
            lp = report.lp_mlu[scale]
            flag = "" if lp.feasible else " (infeasible)"
            fh.write(f"lp_mlu[{_fmt(scale)}] = {_fmt(lp.mlu)}{flag}\n")
    written.append(path)
    return written


def gravity_matrix(
    topology: Topology,
    seed: int = 7,
    mean_size: float = DEFAULT_MEAN_SIZE,
) -> DemandMatrix:
    """All-pairs gravity-model demand matrix with seeded node masses.

    Loads are proportional to the product of the endpoint masses; the
    caller rescales to a target operating point.
    """
    rng = np.random.default_rng(seed)
    nodes = sorted(topology.nodes)
    mass = {n: rng.uniform(0.5, 1.5) for n in nodes}
    entries = {}
    for src in nodes:
        for dst in nodes:
            if src == dst:
                continue
            load = mass[src] * mass[dst] * 1e6  # arbitrary pre-calibration unit
            entries[(src, dst)] = Demand(rate=load / mean_size, mean_size=mean_size)
    return DemandMatrix(entries)


def calibrate_matrix_to_mlu(
    topology: Topology,
    matrix: DemandMatrix,
    target_mlu: float,
    k: int = 3,
) -> DemandMatrix:
    """Rescale a matrix so its min-MLU LP optimum equals `target_mlu`."""
    pairs = [pair for pair, d in matrix if d.offered_load > 0]
    pathsets = build_pathsets(topology, pairs, k)
    base = compute_min_mlu_weights(topology, matrix, pathsets)
    if base.mlu <= 0:
        raise ValueError("matrix has no load to calibrate")
    return scale_demands(matrix, target_mlu / base.mlu)
