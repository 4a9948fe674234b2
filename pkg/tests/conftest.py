import pytest

from flowte.kpaths import yen_k_shortest
from flowte.minmlu import Demand, DemandMatrix
from flowte.topology import Link, Topology, build_abilene


@pytest.fixture(scope="session")
def abilene():
    return build_abilene()


@pytest.fixture()
def triangle():
    """The 3-node intuition topology: 1->2, 2->3 and a direct 1->3 link."""
    links = [Link(s, d, 1.0, 0.01, 1.0) for s, d in (("1", "2"), ("2", "3"), ("1", "3"))]
    return Topology(links)


@pytest.fixture()
def triangle_pathsets(triangle):
    return {
        ("1", "3"): yen_k_shortest(triangle, "1", "3", 2),
        ("2", "3"): yen_k_shortest(triangle, "2", "3", 1),
    }


@pytest.fixture()
def triangle_demands():
    return DemandMatrix(
        {("1", "3"): Demand(0.5, 1.0), ("2", "3"): Demand(0.5, 1.0)}
    )
