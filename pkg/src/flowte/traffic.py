"""Poisson flow arrivals and content-size distributions.

Every (src, dst) pair gets its own PCG64 stream keyed by the master seed
and a digest of the pair's node ids, so adding or removing pairs never
perturbs the streams of the others. Identical inputs reproduce arrival
streams bit for bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .minmlu import Demand, DemandMatrix, Pair
from .topology import MBPS

__all__ = [
    "SizeDistribution",
    "Deterministic",
    "Pareto",
    "Bimodal",
    "make_distribution",
    "FlowArrival",
    "generate_arrivals",
    "parse_traffic_matrix",
    "serialize_traffic_matrix",
    "pair_rng",
    "DEFAULT_MEAN_SIZE",
]

DEFAULT_MEAN_SIZE = 3_000_000.0  # bytes

DEFAULT_PARETO_SHAPE = 1.5
DEFAULT_BIMODAL_SMALL = 10_000.0  # mice
DEFAULT_BIMODAL_LARGE = 10_000_000.0  # elephants

TRAFFIC_HEADER = "src,dst,rate_mbps"


class SizeDistribution:
    """Content-size law with a finite, analytically known mean."""

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> float:
        raise NotImplementedError

    def percentile(self, q: float) -> float:
        """Inverse CDF at q in [0, 1]."""
        raise NotImplementedError


@dataclass(frozen=True)
class Deterministic(SizeDistribution):
    size: float

    def __post_init__(self) -> None:
        if not self.size > 0:
            raise ValueError("size must be positive")

    @property
    def mean(self) -> float:
        return self.size

    def sample(self, rng) -> float:
        return self.size

    def percentile(self, q) -> float:
        return self.size


@dataclass(frozen=True)
class Pareto(SizeDistribution):
    """Pareto(shape, scale): density shape*scale^shape / x^(shape+1) for x >= scale."""

    shape: float
    scale: float

    def __post_init__(self) -> None:
        if self.shape <= 1.0:
            raise ValueError("pareto shape must exceed 1 for a finite mean")
        if not self.scale > 0:
            raise ValueError("pareto scale must be positive")

    @classmethod
    def from_mean(cls, mean: float, shape: float = DEFAULT_PARETO_SHAPE) -> "Pareto":
        if shape <= 1.0:
            raise ValueError("pareto shape must exceed 1 for a finite mean")
        return cls(shape=shape, scale=mean * (shape - 1.0) / shape)

    @property
    def mean(self) -> float:
        return self.shape * self.scale / (self.shape - 1.0)

    def sample(self, rng) -> float:
        # Inverse-CDF from one uniform draw: x_m * u^(-1/alpha)
        u = rng.random()
        return self.scale * (1.0 - u) ** (-1.0 / self.shape)

    def percentile(self, q) -> float:
        if not 0.0 <= q < 1.0:
            raise ValueError("q must be in [0, 1)")
        return self.scale * (1.0 - q) ** (-1.0 / self.shape)


@dataclass(frozen=True)
class Bimodal(SizeDistribution):
    """Two-point mice/elephants mixture."""

    small: float
    large: float
    p_large: float

    def __post_init__(self) -> None:
        if not (0 < self.small <= self.large):
            raise ValueError("need 0 < small <= large")
        if not 0.0 <= self.p_large <= 1.0:
            raise ValueError("p_large must lie in [0, 1]")

    @classmethod
    def from_mean(
        cls,
        mean: float,
        small: float = DEFAULT_BIMODAL_SMALL,
        large: float = DEFAULT_BIMODAL_LARGE,
    ) -> "Bimodal":
        if not small <= mean <= large:
            raise ValueError(f"mean {mean} outside [{small}, {large}]")
        return cls(small=small, large=large, p_large=(mean - small) / (large - small))

    @property
    def mean(self) -> float:
        return (1.0 - self.p_large) * self.small + self.p_large * self.large

    def sample(self, rng) -> float:
        return self.large if rng.random() < self.p_large else self.small

    def percentile(self, q) -> float:
        if not 0.0 <= q <= 1.0:
            raise ValueError("q must be in [0, 1]")
        return self.small if q < 1.0 - self.p_large else self.large


def make_distribution(
    kind: str,
    mean_size: float,
    *,
    pareto_shape: float = DEFAULT_PARETO_SHAPE,
    bimodal_small: float = DEFAULT_BIMODAL_SMALL,
    bimodal_large: float = DEFAULT_BIMODAL_LARGE,
) -> SizeDistribution:
    kind = kind.lower()
    if kind == "deterministic":
        return Deterministic(size=mean_size)
    if kind == "pareto":
        return Pareto.from_mean(mean_size, shape=pareto_shape)
    if kind == "bimodal":
        return Bimodal.from_mean(mean_size, small=bimodal_small, large=bimodal_large)
    raise ValueError(f"unknown size distribution {kind!r}")


@dataclass(frozen=True)
class FlowArrival:
    """One content transfer request entering the network."""

    flow_id: int
    src: str
    dst: str
    arrival_time: float
    size: float

    def __post_init__(self) -> None:
        if not self.size > 0:
            raise ValueError("flow size must be positive")
        if self.arrival_time < 0:
            raise ValueError("arrival time must be non-negative")


def pair_rng(seed: int, src: str, dst: str, stream: str = "arrivals") -> np.random.Generator:
    """Independent PCG64 stream for one pair, keyed by pair identity.

    The spawn key is a SHA-256 digest of (stream tag, src, dst), so streams
    depend only on the pair's node ids, never on enumeration order.
    """
    digest = hashlib.sha256(f"{stream}\x1f{src}\x1f{dst}".encode()).digest()
    words = tuple(int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4))
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=words))


def generate_arrivals(
    demands: DemandMatrix,
    dist: SizeDistribution,
    horizon: float,
    seed: int,
) -> list[FlowArrival]:
    """Merged, time-ordered Poisson arrivals over all demand pairs.

    Each pair's Poisson rate is offered_load / dist.mean, so the realized
    byte load converges to the matrix value whatever the size law. Flow ids
    are assigned in merged arrival order.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    mean = dist.mean
    if not np.isfinite(mean) or mean <= 0:
        raise ValueError("size distribution must have a positive finite mean")

    events: list[tuple[float, str, str, int, float]] = []
    for (src, dst), demand in demands:
        lam = demand.offered_load / mean
        if lam <= 0.0:
            continue
        rng = pair_rng(seed, src, dst)
        t = 0.0
        seq = 0
        while True:
            t += rng.exponential(1.0 / lam)
            if t > horizon:
                break
            size = dist.sample(rng)
            events.append((t, src, dst, seq, size))
            seq += 1
    events.sort(key=lambda e: (e[0], e[1], e[2], e[3]))
    return [
        FlowArrival(flow_id=i, src=src, dst=dst, arrival_time=t, size=size)
        for i, (t, src, dst, _, size) in enumerate(events)
    ]


def parse_traffic_matrix(
    text: str,
    *,
    mean_size: float = DEFAULT_MEAN_SIZE,
    nodes=None,
) -> DemandMatrix:
    """Parse `src,dst,rate_mbps` rows into a DemandMatrix.

    Rates are average offered load in Mbps; arrival rates are derived as
    load / mean_size. When `nodes` is given, unknown node ids are rejected.
    """
    if not mean_size > 0:
        raise ValueError("mean_size must be positive")
    entries: dict[Pair, Demand] = {}
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != TRAFFIC_HEADER:
                raise ValueError(f"line {lineno}: expected header {TRAFFIC_HEADER!r}")
            header_seen = True
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 3:
            raise ValueError(f"line {lineno}: expected 3 comma-separated fields")
        src, dst = fields[0], fields[1]
        try:
            rate_mbps = float(fields[2])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if rate_mbps < 0:
            raise ValueError(f"line {lineno}: negative rate for {src}->{dst}")
        if src == dst:
            raise ValueError(f"line {lineno}: self-pair {src}->{dst}")
        if nodes is not None and (src not in nodes or dst not in nodes):
            raise ValueError(f"line {lineno}: unknown node in pair {src}->{dst}")
        if (src, dst) in entries:
            raise ValueError(f"line {lineno}: duplicate pair {src}->{dst}")
        load = rate_mbps * MBPS
        entries[(src, dst)] = Demand(rate=load / mean_size, mean_size=mean_size)
    if not header_seen:
        raise ValueError("empty traffic matrix file: missing header")
    return DemandMatrix(entries)


def serialize_traffic_matrix(demands: DemandMatrix) -> str:
    """Emit the parseable `src,dst,rate_mbps` format sorted by pair."""
    lines = [TRAFFIC_HEADER]
    for (src, dst), demand in demands:
        lines.append(f"{src},{dst},{demand.offered_load / MBPS:.12g}")
    return "\n".join(lines) + "\n"
