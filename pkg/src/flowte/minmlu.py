"""Min-MLU path-split weights via linear programming.

The LP minimizes t subject to per-pair simplex constraints on the split
weights and per-link utilization <= t. Utilization of a link is the sum of
arrival_rate * weight * mean_size over the paths crossing it, divided by
the link capacity. The t <= 1 feasibility bound is reported as a flag
rather than enforced, so load sweeps can probe past saturation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import linprog

from .kpaths import PathSet
from .topology import LinkId, Topology

__all__ = [
    "Demand",
    "DemandMatrix",
    "WeightAssignment",
    "MinMluResult",
    "link_utilizations",
    "compute_min_mlu_weights",
    "scale_demands",
    "write_weights_csv",
    "read_weights_csv",
]

Pair = tuple[str, str]

WEIGHT_SUM_TOL = 1e-9
LP_TOL = 1e-6


@dataclass(frozen=True)
class Demand:
    """Arrival rate in flows/second and mean content size in bytes."""

    rate: float
    mean_size: float

    def __post_init__(self) -> None:
        if self.rate < 0:
            raise ValueError("arrival rate must be non-negative")
        if not self.mean_size > 0:
            raise ValueError("mean size must be positive")

    @property
    def offered_load(self) -> float:
        """bytes/second offered by this demand."""
        return self.rate * self.mean_size


class DemandMatrix:
    """Per (src, dst) demand entries; no self-pairs."""

    def __init__(self, entries: Mapping[Pair, Demand]):
        for (src, dst) in entries:
            if src == dst:
                raise ValueError(f"demand matrix entry {src}->{dst} is a self-pair")
        self._entries = dict(sorted(entries.items()))

    @property
    def entries(self) -> dict[Pair, Demand]:
        return dict(self._entries)

    @property
    def pairs(self) -> tuple[Pair, ...]:
        return tuple(self._entries)

    def demand(self, src: str, dst: str) -> Demand:
        return self._entries[(src, dst)]

    def offered_load(self, src: str, dst: str) -> float:
        return self._entries[(src, dst)].offered_load

    @property
    def total_offered_load(self) -> float:
        return sum(d.offered_load for d in self._entries.values())

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries.items())

    def __contains__(self, pair: Pair) -> bool:
        return pair in self._entries

    def __eq__(self, other) -> bool:
        if not isinstance(other, DemandMatrix):
            return NotImplemented
        return self._entries == other._entries

    def __repr__(self) -> str:
        return f"DemandMatrix({len(self._entries)} pairs, {self.total_offered_load:g} B/s)"


def scale_demands(demands: DemandMatrix, factor: float) -> DemandMatrix:
    """Multiply every arrival rate by `factor`; mean sizes are unchanged."""
    if not factor > 0:
        raise ValueError("scale factor must be positive")
    return DemandMatrix(
        {pair: Demand(rate=d.rate * factor, mean_size=d.mean_size) for pair, d in demands}
    )


class WeightAssignment:
    """Per-pair path-split weights; each vector lies on the unit simplex."""

    def __init__(self, weights: Mapping[Pair, tuple[float, ...]]):
        cleaned = {}
        for pair, vec in sorted(weights.items()):
            vec = tuple(float(w) for w in vec)
            if not vec:
                raise ValueError(f"empty weight vector for {pair}")
            if any(w < -WEIGHT_SUM_TOL or w > 1 + WEIGHT_SUM_TOL for w in vec):
                raise ValueError(f"weights for {pair} outside [0, 1]: {vec}")
            if abs(sum(vec) - 1.0) > WEIGHT_SUM_TOL:
                raise ValueError(f"weights for {pair} do not sum to 1: {vec}")
            cleaned[pair] = vec
        self._weights = cleaned

    @property
    def pairs(self) -> tuple[Pair, ...]:
        return tuple(self._weights)

    def vector(self, src: str, dst: str) -> tuple[float, ...]:
        return self._weights[(src, dst)]

    def __getitem__(self, pair: Pair) -> tuple[float, ...]:
        return self._weights[pair]

    def __contains__(self, pair: Pair) -> bool:
        return pair in self._weights

    def __iter__(self):
        return iter(self._weights.items())

    def __len__(self) -> int:
        return len(self._weights)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightAssignment):
            return NotImplemented
        return self._weights == other._weights


@dataclass(frozen=True)
class MinMluResult:
    """LP outcome: split weights, objective value, and the utilization map."""

    weights: WeightAssignment
    mlu: float
    utilizations: dict[LinkId, float]
    feasible: bool  # False when the optimum exceeds the t <= 1 bound


def link_utilizations(
    topology: Topology,
    demands: DemandMatrix,
    pathsets: Mapping[Pair, PathSet],
    weights: WeightAssignment,
) -> dict[LinkId, float]:
    """Per-link utilization under the given split weights (zero-load links included)."""
    load: dict[LinkId, float] = {link.id: 0.0 for link in topology.links}
    for pair, demand in demands:
        if demand.offered_load == 0.0:
            continue
        pathset = pathsets[pair]
        vec = weights[pair]
        if len(vec) != len(pathset):
            raise ValueError(
                f"weight vector length {len(vec)} != {len(pathset)} paths for {pair}"
            )
        for w, path in zip(vec, pathset):
            if w == 0.0:
                continue
            contribution = demand.rate * w * demand.mean_size
            for link_id in path.links:
                load[link_id] += contribution
    return {
        link.id: load[link.id] / link.capacity for link in topology.links
    }


def _positive_pairs(demands: DemandMatrix) -> list[Pair]:
    return [pair for pair, d in demands if d.offered_load > 0.0]


def compute_min_mlu_weights(
    topology: Topology,
    demands: DemandMatrix,
    pathsets: Mapping[Pair, PathSet],
) -> MinMluResult:
    """Solve for the split weights minimizing the maximum link utilization.

    Deterministic: pairs enter the LP in sorted order and paths in PathSet
    order, so equal inputs produce identical (possibly degenerate) optima.
    Zero-load pairs get the fixed vector (1, 0, ..., 0).
    """
    pairs = _positive_pairs(demands)
    for pair in pairs:
        if pair not in pathsets or len(pathsets[pair]) == 0:
            raise ValueError(f"no candidate paths for loaded demand pair {pair}")

    links = topology.links
    link_index = {link.id: i for i, link in enumerate(links)}
    n_links = len(links)

    offsets: dict[Pair, int] = {}
    n_vars = 0
    for pair in pairs:
        offsets[pair] = n_vars
        n_vars += len(pathsets[pair])
    t_index = n_vars
    n_vars += 1

    if pairs:
        c = np.zeros(n_vars)
        c[t_index] = 1.0

        a_eq = np.zeros((len(pairs), n_vars))
        b_eq = np.ones(len(pairs))
        for row, pair in enumerate(pairs):
            k = len(pathsets[pair])
            a_eq[row, offsets[pair] : offsets[pair] + k] = 1.0

        a_ub = np.zeros((n_links, n_vars))
        a_ub[:, t_index] = -1.0
        for pair in pairs:
            demand = demands.demand(*pair)
            for k, path in enumerate(pathsets[pair]):
                col = offsets[pair] + k
                for link_id in path.links:
                    i = link_index[link_id]
                    a_ub[i, col] += demand.offered_load / links[i].capacity
        b_ub = np.zeros(n_links)

        bounds = [(0.0, 1.0)] * (n_vars - 1) + [(0.0, None)]
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if not res.success:
            raise RuntimeError(f"min-MLU LP failed: {res.message}")
        x = res.x
    else:
        x = np.zeros(1)

    vectors: dict[Pair, tuple[float, ...]] = {}
    for pair, d in demands:
        pathset = pathsets.get(pair)
        k = len(pathset) if pathset is not None else 1
        if pair in offsets:
            raw = np.clip(x[offsets[pair] : offsets[pair] + k], 0.0, 1.0)
            raw = raw / raw.sum()
            vectors[pair] = tuple(float(w) for w in raw)
        else:
            vectors[pair] = (1.0,) + (0.0,) * (k - 1)

    weights = WeightAssignment(vectors)
    utilizations = link_utilizations(topology, demands, pathsets, weights)
    mlu = max(utilizations.values(), default=0.0)
    return MinMluResult(weights=weights, mlu=mlu, utilizations=utilizations, feasible=mlu <= 1.0)


def write_weights_csv(weights: WeightAssignment, fh) -> None:
    """Export as `src,dst,path_index,weight` rows with 12 significant digits."""
    fh.write("src,dst,path_index,weight\n")
    for (src, dst), vec in weights:
        for k, w in enumerate(vec):
            fh.write(f"{src},{dst},{k},{w:.12g}\n")


def read_weights_csv(fh) -> WeightAssignment:
    """Read back the export format of :func:`write_weights_csv`."""
    header = fh.readline().strip()
    if header != "src,dst,path_index,weight":
        raise ValueError(f"unexpected weights header: {header!r}")
    raw: dict[Pair, dict[int, float]] = {}
    for lineno, line in enumerate(fh, start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise ValueError(f"line {lineno}: expected 4 fields")
        src, dst, idx, w = fields[0], fields[1], int(fields[2]), float(fields[3])
        raw.setdefault((src, dst), {})[idx] = w
    vectors = {}
    for pair, by_index in raw.items():
        if sorted(by_index) != list(range(len(by_index))):
            raise ValueError(f"non-contiguous path indices for {pair}")
        vectors[pair] = tuple(by_index[i] for i in range(len(by_index)))
    return WeightAssignment(vectors)
