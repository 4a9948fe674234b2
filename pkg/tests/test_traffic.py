import numpy as np
import pytest

from flowte.minmlu import Demand, DemandMatrix
from flowte.topology import MBPS
from flowte.traffic import (
    Bimodal,
    Deterministic,
    Pareto,
    generate_arrivals,
    make_distribution,
    pair_rng,
    parse_traffic_matrix,
    serialize_traffic_matrix,
)


class TestDistributions:
    def test_deterministic(self):
        d = Deterministic(5e6)
        assert d.mean == 5e6
        assert d.sample(pair_rng(0, "A", "B")) == 5e6

    def test_pareto_from_mean(self):
        d = Pareto.from_mean(3e6, shape=1.5)
        assert d.mean == pytest.approx(3e6)
        assert d.scale == pytest.approx(1e6)

    def test_pareto_needs_finite_mean(self):
        with pytest.raises(ValueError, match="exceed 1"):
            Pareto(shape=1.0, scale=1e6)
        with pytest.raises(ValueError, match="exceed 1"):
            Pareto.from_mean(3e6, shape=0.9)

    def test_pareto_sample_mean(self):
        # heavy tail: 10% tolerance at 1e5 draws, fixed stream
        d = Pareto.from_mean(3e6)
        rng = pair_rng(42, "A", "B")
        samples = np.array([d.sample(rng) for _ in range(100_000)])
        assert samples.mean() == pytest.approx(3e6, rel=0.10)
        assert samples.min() >= d.scale

    def test_pareto_percentile(self):
        d = Pareto.from_mean(3e6, shape=1.5)
        assert d.percentile(0.0) == pytest.approx(d.scale)
        # P(X >= p80) = 0.2 by construction
        p80 = d.percentile(0.8)
        assert p80 == pytest.approx(d.scale * 5.0 ** (2.0 / 3.0))

    def test_bimodal_from_mean(self):
        d = Bimodal.from_mean(3e6, small=1e4, large=1e7)
        assert d.mean == pytest.approx(3e6)
        assert 0 < d.p_large < 1

    def test_bimodal_sample_mean(self):
        d = Bimodal(small=1e4, large=1e7, p_large=0.3)
        rng = pair_rng(42, "A", "B")
        samples = np.array([d.sample(rng) for _ in range(100_000)])
        assert samples.mean() == pytest.approx(d.mean, rel=0.02)

    def test_bimodal_percentile(self):
        d = Bimodal(small=1e4, large=1e7, p_large=0.2)
        assert d.percentile(0.5) == 1e4
        assert d.percentile(0.8) == 1e7
        assert d.percentile(0.9) == 1e7

    def test_bimodal_mean_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            Bimodal.from_mean(1e8, small=1e4, large=1e7)

    def test_make_distribution(self):
        assert isinstance(make_distribution("pareto", 3e6), Pareto)
        assert isinstance(make_distribution("bimodal", 3e6), Bimodal)
        assert isinstance(make_distribution("deterministic", 3e6), Deterministic)
        with pytest.raises(ValueError, match="unknown"):
            make_distribution("lognormal", 3e6)


class TestGenerateArrivals:
    def test_poisson_count_concentration(self):
        # offered 2 MB/s of deterministic 1 MB contents over 1000 s: ~2000
        demands = DemandMatrix({("A", "B"): Demand(rate=2.0, mean_size=1e6)})
        for seed in (1, 2, 3, 4, 5):
            arrivals = generate_arrivals(demands, Deterministic(1e6), 1000.0, seed)
            assert len(arrivals) == pytest.approx(2000, rel=0.05)

    def test_zero_demand_matrix(self):
        demands = DemandMatrix({("A", "B"): Demand(rate=0.0, mean_size=1e6)})
        assert generate_arrivals(demands, Deterministic(1e6), 100.0, 1) == []

    def test_deterministic_given_seed(self):
        demands = DemandMatrix(
            {("A", "B"): Demand(2.0, 1e6), ("B", "C"): Demand(1.0, 1e6)}
        )
        dist = Pareto.from_mean(1e6)
        a = generate_arrivals(demands, dist, 200.0, 11)
        b = generate_arrivals(demands, dist, 200.0, 11)
        assert a == b
        c = generate_arrivals(demands, dist, 200.0, 12)
        assert a != c

    def test_adding_pairs_never_perturbs_existing_streams(self):
        base = DemandMatrix({("A", "B"): Demand(2.0, 1e6)})
        more = DemandMatrix(
            {("A", "B"): Demand(2.0, 1e6), ("C", "D"): Demand(2.0, 1e6)}
        )
        dist = Deterministic(1e6)
        only = generate_arrivals(base, dist, 100.0, 5)
        both = [
            a for a in generate_arrivals(more, dist, 100.0, 5) if (a.src, a.dst) == ("A", "B")
        ]
        assert [(a.arrival_time, a.size) for a in only] == [
            (a.arrival_time, a.size) for a in both
        ]

    def test_stream_is_time_sorted_with_increasing_ids(self):
        demands = DemandMatrix(
            {("A", "B"): Demand(5.0, 1e6), ("B", "A"): Demand(5.0, 1e6)}
        )
        arrivals = generate_arrivals(demands, Deterministic(1e6), 50.0, 3)
        times = [a.arrival_time for a in arrivals]
        assert times == sorted(times)
        assert [a.flow_id for a in arrivals] == list(range(len(arrivals)))

    def test_merge_preserves_per_pair_order(self):
        demands = DemandMatrix(
            {("A", "B"): Demand(5.0, 1e6), ("B", "A"): Demand(5.0, 1e6)}
        )
        dist = Pareto.from_mean(1e6)
        merged = generate_arrivals(demands, dist, 100.0, 9)
        for pair in (("A", "B"), ("B", "A")):
            sub = [a for a in merged if (a.src, a.dst) == pair]
            alone = generate_arrivals(
                DemandMatrix({pair: Demand(5.0, 1e6)}), dist, 100.0, 9
            )
            assert [(a.arrival_time, a.size) for a in sub] == [
                (a.arrival_time, a.size) for a in alone
            ]

    def test_interarrival_mean(self):
        demands = DemandMatrix({("A", "B"): Demand(rate=20.0, mean_size=1e6)})
        arrivals = generate_arrivals(demands, Deterministic(1e6), 1000.0, 7)
        assert len(arrivals) >= 10_000
        gaps = np.diff([a.arrival_time for a in arrivals])
        assert gaps.mean() == pytest.approx(1 / 20.0, rel=0.05)

    def test_rate_uses_distribution_mean(self):
        # offered load fixed: halving the content size doubles the flow rate
        demands = DemandMatrix({("A", "B"): Demand(rate=2.0, mean_size=1e6)})
        small = generate_arrivals(demands, Deterministic(5e5), 1000.0, 1)
        assert len(small) == pytest.approx(4000, rel=0.05)

    def test_horizon_must_be_positive(self):
        demands = DemandMatrix({("A", "B"): Demand(2.0, 1e6)})
        with pytest.raises(ValueError):
            generate_arrivals(demands, Deterministic(1e6), 0.0, 1)


class TestTrafficMatrixFile:
    def test_unit_conversion(self):
        text = "src,dst,rate_mbps\nIPLS,ATLA,100\n"
        matrix = parse_traffic_matrix(text)
        assert matrix.offered_load("IPLS", "ATLA") == pytest.approx(100 * MBPS)
        assert matrix.offered_load("IPLS", "ATLA") == pytest.approx(12.5e6)

    def test_header_only(self):
        assert len(parse_traffic_matrix("src,dst,rate_mbps\n")) == 0

    def test_missing_header(self):
        with pytest.raises(ValueError, match="header"):
            parse_traffic_matrix("IPLS,ATLA,100\n")

    def test_negative_rate(self):
        with pytest.raises(ValueError, match="negative rate"):
            parse_traffic_matrix("src,dst,rate_mbps\nA,B,-1\n")

    def test_duplicate_pair(self):
        with pytest.raises(ValueError, match="duplicate"):
            parse_traffic_matrix("src,dst,rate_mbps\nA,B,1\nA,B,2\n")

    def test_unknown_node_when_nodes_given(self):
        with pytest.raises(ValueError, match="unknown node"):
            parse_traffic_matrix("src,dst,rate_mbps\nA,Z,1\n", nodes={"A", "B"})

    def test_self_pair(self):
        with pytest.raises(ValueError, match="self-pair"):
            parse_traffic_matrix("src,dst,rate_mbps\nA,A,1\n")

    def test_mean_size_sets_arrival_rate(self):
        matrix = parse_traffic_matrix("src,dst,rate_mbps\nA,B,100\n", mean_size=12.5e6)
        assert matrix.demand("A", "B").rate == pytest.approx(1.0)

    def test_serialize_round_trip(self):
        text = "src,dst,rate_mbps\nA,B,100\nB,A,37.25\n"
        matrix = parse_traffic_matrix(text)
        assert parse_traffic_matrix(serialize_traffic_matrix(matrix)) == matrix
