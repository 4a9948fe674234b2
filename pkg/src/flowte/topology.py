"""Directed capacitated network graphs and topology file I/O.

Canonical units everywhere in this package: bytes, seconds, bytes/second.
Topology files carry capacities in Mbps (1 Mbps = 125000 bytes/s) and are
converted on parse.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

__all__ = [
    "MBPS",
    "Link",
    "Topology",
    "TopologyError",
    "parse_topology",
    "serialize_topology",
    "load_topology_file",
    "build_abilene",
    "link_between",
    "ABILENE_NODES",
]

MBPS = 125_000.0  # bytes/second per Mbps

TOPOLOGY_HEADER = "src,dst,capacity_mbps,latency_s,ospf_weight"

LinkId = tuple[str, str]


class TopologyError(ValueError):
    """Malformed topology file or invalid graph structure."""


@dataclass(frozen=True)
class Link:
    """One directed link. Capacity in bytes/s, latency in seconds."""

    src: str
    dst: str
    capacity: float
    latency: float
    ospf_weight: float

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise TopologyError(f"self-loop link {self.src}->{self.dst}")
        if not self.capacity > 0:
            raise TopologyError(f"link {self.src}->{self.dst}: capacity must be positive")
        if not self.ospf_weight > 0:
            raise TopologyError(f"link {self.src}->{self.dst}: ospf_weight must be positive")
        if self.latency < 0:
            raise TopologyError(f"link {self.src}->{self.dst}: latency must be non-negative")

    @property
    def id(self) -> LinkId:
        return (self.src, self.dst)


class Topology:
    """Immutable directed graph with at most one link per ordered node pair."""

    def __init__(self, links, nodes=None):
        links = tuple(sorted(links, key=lambda l: l.id))
        by_pair: dict[LinkId, Link] = {}
        endpoints: set[str] = set()
        for link in links:
            if link.id in by_pair:
                raise TopologyError(f"duplicate link {link.src}->{link.dst}")
            by_pair[link.id] = link
            endpoints.add(link.src)
            endpoints.add(link.dst)
        if nodes is None:
            node_set = frozenset(endpoints)
        else:
            node_set = frozenset(nodes)
            undeclared = endpoints - node_set
            if undeclared:
                raise TopologyError(f"link endpoints not declared as nodes: {sorted(undeclared)}")
        out: dict[str, list[Link]] = {n: [] for n in sorted(node_set)}
        for link in links:
            out[link.src].append(link)
        self._links = links
        self._by_pair = by_pair
        self._nodes = node_set
        self._out = {n: tuple(ls) for n, ls in out.items()}

    @property
    def nodes(self) -> frozenset[str]:
        return self._nodes

    @property
    def links(self) -> tuple[Link, ...]:
        return self._links

    def has_node(self, node: str) -> bool:
        return node in self._nodes

    def require_node(self, node: str) -> None:
        if node not in self._nodes:
            raise TopologyError(f"unknown node {node!r}")

    def link(self, src: str, dst: str) -> Link | None:
        """The unique directed link src->dst, or None if absent."""
        self.require_node(src)
        self.require_node(dst)
        return self._by_pair.get((src, dst))

    def link_by_id(self, link_id: LinkId) -> Link:
        try:
            return self._by_pair[link_id]
        except KeyError:
            raise TopologyError(f"unknown link {link_id[0]}->{link_id[1]}") from None

    def out_links(self, node: str) -> tuple[Link, ...]:
        self.require_node(node)
        return self._out[node]

    def path_latency(self, link_ids) -> float:
        """Sum of one-way link latencies along a sequence of link ids."""
        return sum(self.link_by_id(lid).latency for lid in link_ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Topology):
            return NotImplemented
        return self._nodes == other._nodes and self._links == other._links

    def __hash__(self):
        return hash((self._nodes, self._links))

    def __repr__(self) -> str:
        return f"Topology({len(self._nodes)} nodes, {len(self._links)} links)"


def link_between(topology: Topology, src: str, dst: str) -> Link | None:
    """The unique directed link src->dst, or None if no such link exists."""
    return topology.link(src, dst)


def parse_topology(text: str) -> Topology:
    """Parse a topology CSV with header `src,dst,capacity_mbps,latency_s,ospf_weight`.

    Lines starting with `#` are comments. Any malformed line rejects the
    whole file with its line number.
    """
    links = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != TOPOLOGY_HEADER:
                raise TopologyError(f"line {lineno}: expected header {TOPOLOGY_HEADER!r}")
            header_seen = True
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 5:
            raise TopologyError(f"line {lineno}: expected 5 comma-separated fields, got {len(fields)}")
        src, dst = fields[0], fields[1]
        if not src or not dst:
            raise TopologyError(f"line {lineno}: empty node id")
        try:
            capacity_mbps = float(fields[2])
            latency = float(fields[3])
            weight = float(fields[4])
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: {exc}") from None
        try:
            links.append(
                Link(
                    src=src,
                    dst=dst,
                    capacity=capacity_mbps * MBPS,
                    latency=latency,
                    ospf_weight=weight,
                )
            )
        except TopologyError as exc:
            raise TopologyError(f"line {lineno}: {exc}") from None
    if not header_seen:
        raise TopologyError("empty topology file: missing header")
    try:
        return Topology(links)
    except TopologyError as exc:
        raise TopologyError(str(exc)) from None


def serialize_topology(topology: Topology) -> str:
    """Emit the parseable CSV format, links sorted by (src, dst)."""
    lines = [TOPOLOGY_HEADER]
    for link in topology.links:
        lines.append(
            f"{link.src},{link.dst},{link.capacity / MBPS!r},{link.latency!r},{link.ospf_weight!r}"
        )
    return "\n".join(lines) + "\n"


def load_topology_file(path) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_topology(fh.read())


ABILENE_NODES = (
    "ATLA",  # Atlanta
    "CHIN",  # Chicago
    "DNVR",  # Denver
    "HSTN",  # Houston
    "IPLS",  # Indianapolis
    "KSCY",  # Kansas City
    "LOSA",  # Los Angeles
    "NYCM",  # New York
    "SNVA",  # Sunnyvale
    "STTL",  # Seattle
    "WASH",  # Washington DC
)


def build_abilene() -> Topology:
    """The 11-node Abilene backbone from the shipped fixture.

    All links 9920 Mbps except the Indianapolis-Atlanta pair at 2480 Mbps
    (both directions); 10 ms latency per link; IGP weights from the fixture.
    """
    data = resources.files("flowte.data").joinpath("abilene_topology.csv").read_text("utf-8")
    return parse_topology(data)
