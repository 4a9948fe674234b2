import numpy as np
import pytest

from flowte.kpaths import (
    Path,
    PathSet,
    build_pathsets,
    dijkstra_shortest,
    format_pathset,
    yen_k_shortest,
)
from flowte.topology import Link, Topology, TopologyError

from .oracles import k_shortest_by_enumeration


def make_topology(edges):
    """edges: iterable of (src, dst, weight); unit capacity, zero latency."""
    return Topology([Link(s, d, 1.0, 0.0, w) for s, d, w in edges])


def random_topology(rng, n_nodes, p_edge=0.5):
    nodes = [chr(ord("A") + i) for i in range(n_nodes)]
    edges = []
    for u in nodes:
        for v in nodes:
            if u != v and rng.random() < p_edge:
                edges.append((u, v, float(rng.integers(1, 10))))
    return make_topology(edges)


class TestDijkstra:
    def test_triangle_prefers_direct(self, triangle):
        path = dijkstra_shortest(triangle, "1", "3")
        assert path.nodes == ("1", "3")
        assert path.total_weight == 1.0

    def test_single_link(self):
        topo = make_topology([("A", "B", 2.0)])
        path = dijkstra_shortest(topo, "A", "B")
        assert path.nodes == ("A", "B")
        assert path.total_weight == 2.0

    def test_disconnected_pair(self):
        topo = make_topology([("A", "B", 1.0), ("C", "A", 1.0)])
        assert dijkstra_shortest(topo, "A", "C") is None

    def test_unknown_node(self, triangle):
        with pytest.raises(TopologyError, match="unknown node"):
            dijkstra_shortest(triangle, "1", "9")

    def test_same_src_dst_rejected(self, triangle):
        with pytest.raises(ValueError):
            dijkstra_shortest(triangle, "1", "1")

    def test_equal_weight_tie_breaks_lexicographically(self):
        # two equal-cost routes A->B->D and A->C->D; B < C wins
        topo = make_topology(
            [("A", "B", 1.0), ("A", "C", 1.0), ("B", "D", 1.0), ("C", "D", 1.0)]
        )
        assert dijkstra_shortest(topo, "A", "D").nodes == ("A", "B", "D")


class TestYen:
    def test_triangle_two_paths(self, triangle):
        ps = yen_k_shortest(triangle, "1", "3", 2)
        assert [p.nodes for p in ps] == [("1", "3"), ("1", "2", "3")]
        assert [p.total_weight for p in ps] == [1.0, 2.0]

    def test_k_larger_than_path_count(self, triangle):
        ps = yen_k_shortest(triangle, "1", "3", 5)
        assert len(ps) == 2

    def test_unreachable_yields_empty(self):
        topo = make_topology([("A", "B", 1.0), ("C", "B", 1.0)])
        assert len(yen_k_shortest(topo, "A", "C", 3)) == 0

    def test_k_must_be_positive(self, triangle):
        with pytest.raises(ValueError):
            yen_k_shortest(triangle, "1", "3", 0)

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_enumeration_oracle(self, seed):
        rng = np.random.default_rng(seed)
        topo = random_topology(rng, n_nodes=6)
        nodes = sorted(topo.nodes)
        for src in nodes:
            for dst in nodes:
                if src == dst:
                    continue
                got = [p.nodes for p in yen_k_shortest(topo, src, dst, 3)]
                assert got == k_shortest_by_enumeration(topo, src, dst, 3)

    def test_deterministic(self, abilene):
        a = yen_k_shortest(abilene, "STTL", "ATLA", 3)
        b = yen_k_shortest(abilene, "STTL", "ATLA", 3)
        assert [p.nodes for p in a] == [p.nodes for p in b]

    def test_pathset_invariants_on_abilene(self, abilene):
        nodes = sorted(abilene.nodes)
        for src in nodes:
            for dst in nodes:
                if src == dst:
                    continue
                ps = yen_k_shortest(abilene, src, dst, 3)
                weights = [p.total_weight for p in ps]
                assert weights == sorted(weights)
                assert len({p.nodes for p in ps}) == len(ps)


class TestBuildPathsets:
    def test_abilene_all_pairs_nonempty(self, abilene):
        pairs = [(s, d) for s in abilene.nodes for d in abilene.nodes if s != d]
        pathsets = build_pathsets(abilene, pairs, 3)
        assert len(pathsets) == 110
        assert all(len(ps) >= 1 for ps in pathsets.values())

    def test_empty_demand_set(self, abilene):
        assert build_pathsets(abilene, [], 3) == {}

    def test_single_path_pair(self):
        topo = make_topology([("A", "B", 1.0)])
        pathsets = build_pathsets(topo, [("A", "B")], 3)
        assert len(pathsets[("A", "B")]) == 1

    def test_unreachable_pair_is_hard_error(self):
        topo = make_topology([("A", "B", 1.0), ("C", "B", 1.0)])
        with pytest.raises(TopologyError, match="A->C"):
            build_pathsets(topo, [("A", "C")], 3)


def test_path_validation_rejects_loops():
    with pytest.raises(ValueError, match="revisits"):
        Path(nodes=("A", "B", "A"), links=(("A", "B"), ("B", "A")), total_weight=2.0)


def test_pathset_validation_rejects_unsorted(triangle):
    direct = Path.from_nodes(triangle, ("1", "3"))
    via = Path.from_nodes(triangle, ("1", "2", "3"))
    with pytest.raises(ValueError, match="sorted"):
        PathSet(src="1", dst="3", paths=(via, direct))


def test_format_pathset(triangle):
    ps = yen_k_shortest(triangle, "1", "3", 2)
    text = format_pathset(ps)
    assert text == "1->3 weight=1\n1->2->3 weight=2\n"
