"""K shortest loop-free paths under OSPF link weights.

Yen's algorithm over a Dijkstra subroutine. All tie-breaks are
lexicographic on the node sequence so results are reproducible.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .topology import LinkId, Topology, TopologyError

__all__ = [
    "Path",
    "PathSet",
    "dijkstra_shortest",
    "yen_k_shortest",
    "build_pathsets",
    "format_pathset",
]

DEFAULT_K = 3


@dataclass(frozen=True)
class Path:
    """A loop-free directed path: node sequence plus the implied links."""

    nodes: tuple[str, ...]
    links: tuple[LinkId, ...]
    total_weight: float

    def __post_init__(self) -> None:
        if len(self.nodes) < 2:
            raise ValueError("path needs at least two nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"path revisits a node: {self.nodes}")
        expected = tuple(zip(self.nodes[:-1], self.nodes[1:]))
        if self.links != expected:
            raise ValueError("path links do not match node sequence")

    @property
    def src(self) -> str:
        return self.nodes[0]

    @property
    def dst(self) -> str:
        return self.nodes[-1]

    def __len__(self) -> int:
        return len(self.links)

    @classmethod
    def from_nodes(cls, topology: Topology, nodes) -> "Path":
        nodes = tuple(nodes)
        links = []
        weight = 0.0
        for u, v in zip(nodes[:-1], nodes[1:]):
            link = topology.link(u, v)
            if link is None:
                raise TopologyError(f"no link {u}->{v}")
            links.append(link.id)
            weight += link.ospf_weight
        return cls(nodes=nodes, links=tuple(links), total_weight=weight)


@dataclass(frozen=True)
class PathSet:
    """Candidate paths for one (src, dst) demand, ascending (weight, nodes)."""

    src: str
    dst: str
    paths: tuple[Path, ...]

    def __post_init__(self) -> None:
        keys = [(p.total_weight, p.nodes) for p in self.paths]
        if keys != sorted(keys):
            raise ValueError("paths not sorted by (total_weight, node sequence)")
        if len(set(p.nodes for p in self.paths)) != len(self.paths):
            raise ValueError("duplicate paths in path set")
        for p in self.paths:
            if p.src != self.src or p.dst != self.dst:
                raise ValueError(f"path {p.nodes} does not join {self.src}->{self.dst}")

    def __len__(self) -> int:
        return len(self.paths)

    def __getitem__(self, index: int) -> Path:
        return self.paths[index]

    def __iter__(self):
        return iter(self.paths)


def _dijkstra(topology, src, dst, banned_nodes=frozenset(), banned_links=frozenset()):
    """Shortest path by (weight, lexicographic node sequence); None if unreachable.

    The heap key is the (distance, node tuple) pair; ospf_weight > 0
    guarantees the key strictly increases along every edge, so the first
    settlement of a node carries its lexicographically-least optimal path.
    """
    settled: set[str] = set()
    heap = [(0.0, (src,))]
    while heap:
        dist, nodes = heapq.heappop(heap)
        here = nodes[-1]
        if here in settled:
            continue
        settled.add(here)
        if here == dst:
            return Path.from_nodes(topology, nodes)
        for link in topology.out_links(here):
            nxt = link.dst
            if nxt in settled or nxt in banned_nodes or link.id in banned_links:
                continue
            heapq.heappush(heap, (dist + link.ospf_weight, nodes + (nxt,)))
    return None


def dijkstra_shortest(topology: Topology, src: str, dst: str) -> Path | None:
    """Minimum-weight path src->dst, or None if unreachable."""
    topology.require_node(src)
    topology.require_node(dst)
    if src == dst:
        raise ValueError("src and dst must differ")
    return _dijkstra(topology, src, dst)


def yen_k_shortest(topology: Topology, src: str, dst: str, k: int = DEFAULT_K) -> PathSet:
    """Up to k distinct loop-free paths in ascending (weight, node order).

    Unreachable pairs yield an empty PathSet; the caller decides severity.
    """
    topology.require_node(src)
    topology.require_node(dst)
    if src == dst:
        raise ValueError("src and dst must differ")
    if k < 1:
        raise ValueError("k must be >= 1")

    first = _dijkstra(topology, src, dst)
    if first is None:
        return PathSet(src=src, dst=dst, paths=())
    found = [first]
    seen_nodes = {first.nodes}
    candidates: list[tuple[float, tuple[str, ...]]] = []
    in_candidates: set[tuple[str, ...]] = set()

    while len(found) < k:
        prev = found[-1].nodes
        for i in range(len(prev) - 1):
            spur = prev[i]
            root = prev[: i + 1]
            # Hide links already used by found paths that share this root,
            # and root nodes other than the spur, by filtering (no mutation).
            banned_links = {
                (p.nodes[i], p.nodes[i + 1])
                for p in found
                if len(p.nodes) > i + 1 and p.nodes[: i + 1] == root
            }
            banned_nodes = frozenset(root[:-1])
            spur_path = _dijkstra(topology, spur, dst, banned_nodes, banned_links)
            if spur_path is None:
                continue
            total_nodes = root[:-1] + spur_path.nodes
            if total_nodes in seen_nodes or total_nodes in in_candidates:
                continue
            total = Path.from_nodes(topology, total_nodes)
            heapq.heappush(candidates, (total.total_weight, total.nodes))
            in_candidates.add(total.nodes)
        if not candidates:
            break
        _, best_nodes = heapq.heappop(candidates)
        in_candidates.discard(best_nodes)
        best = Path.from_nodes(topology, best_nodes)
        found.append(best)
        seen_nodes.add(best.nodes)

    return PathSet(src=src, dst=dst, paths=tuple(found))


def build_pathsets(topology: Topology, pairs, k: int = DEFAULT_K) -> dict[tuple[str, str], PathSet]:
    """One PathSet per demand pair; unreachable pairs are a hard error."""
    pathsets = {}
    for src, dst in sorted(set(pairs)):
        ps = yen_k_shortest(topology, src, dst, k)
        if len(ps) == 0:
            raise TopologyError(f"demand pair {src}->{dst} is unreachable")
        pathsets[(src, dst)] = ps
    return pathsets


def format_pathset(pathset: PathSet) -> str:
    """Debug listing: one path per line, node sequence plus weight."""
    lines = []
    for path in pathset:
        lines.append(f"{'->'.join(path.nodes)} weight={path.total_weight:g}")
    return "\n".join(lines) + ("\n" if lines else "")
