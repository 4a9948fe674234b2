import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flowte.kpaths import build_pathsets, yen_k_shortest
from flowte.minmlu import (
    Demand,
    DemandMatrix,
    MinMluResult,
    WeightAssignment,
    compute_min_mlu_weights,
    link_utilizations,
    read_weights_csv,
    scale_demands,
    write_weights_csv,
)
from flowte.topology import Link, Topology

from .oracles import grid_search_min_mlu


def make_topology(edges):
    return Topology([Link(s, d, cap, 0.0, w) for s, d, cap, w in edges])


def random_instance(rng, max_nodes=5, max_demands=3, k=3):
    """Random connected-enough instance with a tractable joint grid."""
    while True:
        n = int(rng.integers(3, max_nodes + 1))
        nodes = [chr(ord("A") + i) for i in range(n)]
        edges = []
        for u in nodes:
            for v in nodes:
                if u != v and rng.random() < 0.6:
                    edges.append((u, v, float(rng.integers(1, 4)), float(rng.integers(1, 5))))
        if not edges:
            continue
        topo = make_topology(edges)
        candidates = [
            (u, v)
            for u in nodes
            for v in nodes
            if u != v and yen_k_shortest(topo, u, v, 1).paths
        ]
        if not candidates:
            continue
        rng.shuffle(candidates)
        pairs = candidates[: int(rng.integers(1, max_demands + 1))]
        pathsets = build_pathsets(topo, pairs, k)
        # keep the exhaustive grid oracle tractable
        grid_sizes = {1: 1, 2: 101, 3: 5151}
        joint = 1
        for ps in pathsets.values():
            joint *= grid_sizes[len(ps)]
        if joint > 600_000:
            continue
        total_cap = min(cap for _, _, cap, _ in edges)
        demands = DemandMatrix(
            {
                pair: Demand(rate=float(rng.uniform(0.1, 1.0)) * total_cap, mean_size=1.0)
                for pair in pairs
            }
        )
        return topo, demands, pathsets


class TestLinkUtilizations:
    def test_triangle_hand_example(self, triangle, triangle_pathsets, triangle_demands):
        weights = WeightAssignment({("1", "3"): (2 / 3, 1 / 3), ("2", "3"): (1.0,)})
        u = link_utilizations(triangle, triangle_demands, triangle_pathsets, weights)
        assert u[("2", "3")] == pytest.approx(0.5 + 0.5 / 3)
        assert u[("1", "3")] == pytest.approx(1 / 3)
        assert u[("1", "2")] == pytest.approx(1 / 6)

    def test_zero_demands(self, triangle, triangle_pathsets):
        demands = DemandMatrix({("1", "3"): Demand(0.0, 1.0)})
        weights = WeightAssignment({("1", "3"): (1.0, 0.0)})
        u = link_utilizations(triangle, demands, triangle_pathsets, weights)
        assert set(u) == {l.id for l in triangle.links}
        assert all(v == 0.0 for v in u.values())

    def test_saturating_single_path(self):
        topo = make_topology([("A", "B", 4.0, 1.0)])
        pathsets = build_pathsets(topo, [("A", "B")], 1)
        demands = DemandMatrix({("A", "B"): Demand(rate=4.0, mean_size=1.0)})
        weights = WeightAssignment({("A", "B"): (1.0,)})
        u = link_utilizations(topo, demands, pathsets, weights)
        assert u[("A", "B")] == pytest.approx(1.0)

    def test_length_mismatch_rejected(self, triangle, triangle_pathsets, triangle_demands):
        weights = WeightAssignment({("1", "3"): (1.0,), ("2", "3"): (1.0,)})
        with pytest.raises(ValueError, match="length"):
            link_utilizations(triangle, triangle_demands, triangle_pathsets, weights)


class TestComputeMinMlu:
    def test_triangle_balance(self, triangle, triangle_pathsets):
        demands = DemandMatrix(
            {("1", "3"): Demand(1.0, 1.0), ("2", "3"): Demand(0.5, 1.0)}
        )
        res = compute_min_mlu_weights(triangle, demands, triangle_pathsets)
        # balancing 0.5 + pi = 1 - pi across the two loaded links
        assert res.mlu == pytest.approx(0.75, abs=1e-6)
        assert res.weights[("1", "3")][0] == pytest.approx(0.75, abs=1e-6)  # direct
        assert res.weights[("1", "3")][1] == pytest.approx(0.25, abs=1e-6)  # via node 2
        assert res.feasible

    def test_single_path_demands_have_no_freedom(self):
        topo = make_topology([("A", "B", 2.0, 1.0), ("B", "C", 1.0, 1.0)])
        pathsets = build_pathsets(topo, [("A", "C"), ("B", "C")], 3)
        demands = DemandMatrix(
            {("A", "C"): Demand(0.5, 1.0), ("B", "C"): Demand(0.25, 1.0)}
        )
        res = compute_min_mlu_weights(topo, demands, pathsets)
        assert res.weights[("A", "C")] == (1.0,)
        assert res.weights[("B", "C")] == (1.0,)
        assert res.mlu == pytest.approx(0.75)

    def test_zero_load_pair_gets_degenerate_vector(self, triangle, triangle_pathsets):
        demands = DemandMatrix(
            {("1", "3"): Demand(0.0, 1.0), ("2", "3"): Demand(0.5, 1.0)}
        )
        res = compute_min_mlu_weights(triangle, demands, triangle_pathsets)
        assert res.weights[("1", "3")] == (1.0, 0.0)

    def test_missing_pathset_for_loaded_pair(self, triangle):
        demands = DemandMatrix({("1", "3"): Demand(1.0, 1.0)})
        with pytest.raises(ValueError, match="no candidate paths"):
            compute_min_mlu_weights(triangle, demands, {})

    def test_infeasible_flagged_but_reported(self):
        topo = make_topology([("A", "B", 1.0, 1.0)])
        pathsets = build_pathsets(topo, [("A", "B")], 1)
        demands = DemandMatrix({("A", "B"): Demand(2.0, 1.0)})
        res = compute_min_mlu_weights(topo, demands, pathsets)
        assert not res.feasible
        assert res.mlu == pytest.approx(2.0)

    def test_result_internally_consistent(self, triangle, triangle_pathsets, triangle_demands):
        res = compute_min_mlu_weights(triangle, triangle_demands, triangle_pathsets)
        recomputed = link_utilizations(
            triangle, triangle_demands, triangle_pathsets, res.weights
        )
        assert res.mlu == pytest.approx(max(recomputed.values()), abs=1e-9)
        for link_id, u in recomputed.items():
            assert res.utilizations[link_id] == pytest.approx(u, abs=1e-9)

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_grid_oracle(self, seed):
        rng = np.random.default_rng(100 + seed)
        topo, demands, pathsets = random_instance(rng)
        res = compute_min_mlu_weights(topo, demands, pathsets)
        best, _ = grid_search_min_mlu(topo, demands, pathsets, resolution=0.01)
        assert res.mlu <= best + 0.01
        recomputed = link_utilizations(topo, demands, pathsets, res.weights)
        assert res.mlu == pytest.approx(max(recomputed.values()), abs=1e-9)

    def test_deterministic(self, triangle, triangle_pathsets, triangle_demands):
        a = compute_min_mlu_weights(triangle, triangle_demands, triangle_pathsets)
        b = compute_min_mlu_weights(triangle, triangle_demands, triangle_pathsets)
        assert a.weights == b.weights
        assert a.mlu == b.mlu


class TestScaleDemands:
    def test_identity(self, triangle_demands):
        assert scale_demands(triangle_demands, 1.0) == triangle_demands

    def test_doubling_offered_load(self, triangle_demands):
        doubled = scale_demands(triangle_demands, 2.0)
        for pair, d in triangle_demands:
            assert doubled.offered_load(*pair) == pytest.approx(2 * d.offered_load)
            assert doubled.demand(*pair).mean_size == d.mean_size

    def test_non_positive_factor(self, triangle_demands):
        with pytest.raises(ValueError):
            scale_demands(triangle_demands, 0.0)

    def test_lp_objective_scales_linearly(self, triangle, triangle_pathsets, triangle_demands):
        base = compute_min_mlu_weights(triangle, triangle_demands, triangle_pathsets)
        for factor in (1.2, 1.6, 2.0):
            scaled = compute_min_mlu_weights(
                triangle, scale_demands(triangle_demands, factor), triangle_pathsets
            )
            assert scaled.mlu == pytest.approx(factor * base.mlu, abs=1e-6)


class TestWeightAssignment:
    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError, match="sum to 1"):
            WeightAssignment({("A", "B"): (0.5, 0.4)})

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match=r"outside \[0, 1\]"):
            WeightAssignment({("A", "B"): (1.5, -0.5)})

    @given(st.lists(st.floats(min_value=0.001, max_value=1.0), min_size=1, max_size=4))
    def test_normalized_vectors_accepted(self, raw):
        total = sum(raw)
        vec = tuple(w / total for w in raw)
        wa = WeightAssignment({("A", "B"): vec})
        assert abs(sum(wa[("A", "B")]) - 1.0) <= 1e-9


def test_weights_csv_round_trip(triangle, triangle_pathsets, triangle_demands):
    res = compute_min_mlu_weights(triangle, triangle_demands, triangle_pathsets)
    buf = io.StringIO()
    write_weights_csv(res.weights, buf)
    buf.seek(0)
    again = read_weights_csv(buf)
    for pair, vec in res.weights:
        assert again[pair] == pytest.approx(vec, abs=1e-11)


def test_weights_csv_format(triangle, triangle_pathsets, triangle_demands):
    res = compute_min_mlu_weights(triangle, triangle_demands, triangle_pathsets)
    buf = io.StringIO()
    write_weights_csv(res.weights, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "src,dst,path_index,weight"
    assert lines[1].startswith("1,3,0,")
