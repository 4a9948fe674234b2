"""Path-selection policies over a controller view of link backlog.

Backlog is normalized: remaining bytes of the flows crossing a link
divided by the link capacity, i.e. seconds of queued work. The minimum
backlog policy sends an arriving flow down the candidate path whose
worst-link backlog is smallest; the thresholded variant applies it only
to flows at or above a size threshold and falls back to weighted-random
splitting for the rest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .kpaths import Path, PathSet
from .minmlu import WeightAssignment
from .topology import LinkId, Topology

__all__ = [
    "ControllerView",
    "path_backlog",
    "select_mbp",
    "select_weighted_random",
    "select_thresholded",
    "Decision",
    "MinBacklog",
    "WeightedRandom",
    "ThresholdedMinBacklog",
    "write_decision_log",
]

BRANCH_MBP = "mbp"
BRANCH_RANDOM = "random"

_WEIGHT_TOL = 1e-9


class ControllerView:
    """Per-link normalized backlog in seconds, as the controller sees it.

    Two modes:

    * ``exact``: backlog of a link is the sum of remaining bytes over the
      active flows crossing it, divided by capacity. The view tracks each
      allocated flow's remaining bytes; a completed flow's contribution
      vanishes exactly.
    * ``counter``: a per-link counter incremented by size/capacity on
      allocation and drained over time by the bytes the link transmits
      (capped at capacity), floored at zero. No per-flow state.
    """

    EXACT = "exact"
    COUNTER = "counter"

    def __init__(self, topology: Topology, mode: str = EXACT):
        if mode not in (self.EXACT, self.COUNTER):
            raise ValueError(f"unknown controller view mode {mode!r}")
        self.mode = mode
        self._capacity = {link.id: link.capacity for link in topology.links}
        # exact mode state
        self._flow_remaining: dict[int, float] = {}
        self._flow_links: dict[int, tuple[LinkId, ...]] = {}
        self._link_flows: dict[LinkId, set[int]] = {lid: set() for lid in self._capacity}
        # counter mode state
        self._counter: dict[LinkId, float] = {lid: 0.0 for lid in self._capacity}

    def backlog(self, link_id: LinkId) -> float:
        if link_id not in self._capacity:
            raise KeyError(f"link {link_id} not in controller view")
        if self.mode == self.EXACT:
            flows = self._link_flows[link_id]
            if not flows:
                return 0.0
            return sum(self._flow_remaining[f] for f in flows) / self._capacity[link_id]
        return self._counter[link_id]

    def update_on_allocation(self, flow_id: int, path: Path, size: float) -> None:
        """Register a newly allocated flow of `size` bytes on `path`."""
        if not size > 0:
            raise ValueError("allocation size must be positive")
        for link_id in path.links:
            if link_id not in self._capacity:
                raise KeyError(f"link {link_id} not in controller view")
        if self.mode == self.EXACT:
            if flow_id in self._flow_remaining:
                raise ValueError(f"flow {flow_id} already allocated")
            self._flow_remaining[flow_id] = size
            self._flow_links[flow_id] = path.links
            for link_id in path.links:
                self._link_flows[link_id].add(flow_id)
        else:
            for link_id in path.links:
                self._counter[link_id] += size / self._capacity[link_id]

    def update_on_progress(self, flow_id: int, bytes_transferred: float) -> None:
        """Report bytes transferred by one flow (exact mode bookkeeping)."""
        if bytes_transferred < 0:
            raise ValueError("progress must be non-negative")
        if self.mode != self.EXACT:
            return  # counter mode drains through advance_time()
        remaining = self._flow_remaining[flow_id] - bytes_transferred
        self._flow_remaining[flow_id] = remaining if remaining > 0.0 else 0.0

    def update_on_completion(self, flow_id: int) -> None:
        """Drop a finished flow; its backlog contribution becomes exactly zero."""
        if self.mode != self.EXACT:
            return
        for link_id in self._flow_links.pop(flow_id):
            self._link_flows[link_id].discard(flow_id)
        del self._flow_remaining[flow_id]

    def advance_time(self, dt: float, link_rates: dict[LinkId, float]) -> None:
        """Drain counter-mode backlog over `dt` seconds of transmission.

        `link_rates` holds aggregate transmission rates in bytes/s; links
        absent from it are idle. Drain per link is min(capacity, rate) * dt
        normalized by capacity, floored at zero.
        """
        if dt < 0:
            raise ValueError("dt must be non-negative")
        if self.mode != self.COUNTER:
            return
        for link_id, rate in link_rates.items():
            if rate <= 0.0:
                continue
            cap = self._capacity[link_id]
            drained = self._counter[link_id] - min(cap, rate) * dt / cap
            self._counter[link_id] = drained if drained > 0.0 else 0.0

    def snapshot(self) -> dict[LinkId, float]:
        """Current backlog of every link (mostly for tests and logging)."""
        return {lid: self.backlog(lid) for lid in self._capacity}


def path_backlog(view: ControllerView, path: Path) -> float:
    """Worst-link normalized backlog along `path`, in seconds."""
    return max(view.backlog(link_id) for link_id in path.links)


def select_mbp(view: ControllerView, pathset: PathSet) -> int:
    """Index of the path with minimal worst-link backlog; ties to lowest index."""
    if len(pathset) == 0:
        raise ValueError("empty path set")
    best_index = 0
    best = path_backlog(view, pathset[0])
    for k in range(1, len(pathset)):
        b = path_backlog(view, pathset[k])
        if b < best:
            best = b
            best_index = k
    return best_index


def select_weighted_random(weights, rng: np.random.Generator) -> int:
    """Sample a path index from a split-weight vector using one uniform draw."""
    vec = tuple(float(w) for w in weights)
    if not vec or any(w < -_WEIGHT_TOL for w in vec) or abs(sum(vec) - 1.0) > 1e-6:
        raise ValueError(f"malformed weight vector {vec}")
    u = rng.random()
    acc = 0.0
    for k, w in enumerate(vec):
        acc += w
        if u < acc:
            return k
    return len(vec) - 1  # guard against cumulative rounding


class Decision(NamedTuple):
    """One allocation decision: chosen path index, branch, backlog read (if any)."""

    path_index: int
    branch: str
    max_backlog: float | None


def select_thresholded(
    view: ControllerView,
    pathset: PathSet,
    size: float,
    threshold: float,
    weights,
    rng: np.random.Generator,
) -> Decision:
    """Backlog-aware allocation for sizes >= threshold, weighted-random otherwise."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    if size >= threshold:
        index = select_mbp(view, pathset)
        return Decision(index, BRANCH_MBP, path_backlog(view, pathset[index]))
    return Decision(select_weighted_random(weights, rng), BRANCH_RANDOM, None)


@dataclass(frozen=True)
class MinBacklog:
    """Always pick the candidate path with the least worst-link backlog."""

    label = "mbp"

    def decide(self, view, pathset, src, dst, size, rng) -> Decision:
        index = select_mbp(view, pathset)
        return Decision(index, BRANCH_MBP, path_backlog(view, pathset[index]))


@dataclass(frozen=True)
class WeightedRandom:
    """Stateless random splitting over precomputed path weights."""

    weights: WeightAssignment

    label = "weighted_random"

    def decide(self, view, pathset, src, dst, size, rng) -> Decision:
        return Decision(
            select_weighted_random(self.weights[(src, dst)], rng), BRANCH_RANDOM, None
        )


@dataclass(frozen=True)
class ThresholdedMinBacklog:
    """Backlog-aware for elephants (size >= threshold), weighted-random for mice."""

    threshold: float
    weights: WeightAssignment

    @property
    def label(self) -> str:
        return f"thresholded_mbp@{self.threshold:g}"

    def decide(self, view, pathset, src, dst, size, rng) -> Decision:
        return select_thresholded(
            view, pathset, size, self.threshold, self.weights[(src, dst)], rng
        )


def write_decision_log(records, fh) -> None:
    """CSV decision log: flow_id,policy,branch,chosen_path_index,max_backlog_s.

    `records` yields (flow_id, policy_label, Decision) triples; the backlog
    column is empty for random-branch decisions (no backlog was read).
    """
    fh.write("flow_id,policy,branch,chosen_path_index,max_backlog_s\n")
    for flow_id, policy_label, decision in records:
        backlog = "" if decision.max_backlog is None else f"{decision.max_backlog:.12g}"
        fh.write(
            f"{flow_id},{policy_label},{decision.branch},{decision.path_index},{backlog}\n"
        )
