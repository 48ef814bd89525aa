import math
import pathlib

import pytest

from pathopt.topology import Link, Node, Topology
from pathopt.traffic import TrafficClass, TrafficMatrix

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def undirected(pairs, **caps):
    links = []
    for a, b in pairs:
        links.append(Link(a, b, dict(caps)))
        links.append(Link(b, a, dict(caps)))
    return links


def switch(nid, name=None, services=("switch",), **resources):
    return Node(nid, name or f"n{nid}", frozenset(services), dict(resources))


@pytest.fixture
def triangle():
    """0 - 1 - 2 fully connected, bandwidth 10 per direction."""
    nodes = [switch(i) for i in range(3)]
    return Topology(nodes, undirected([(0, 1), (0, 2), (1, 2)], bandwidth=10.0))


@pytest.fixture
def diamond():
    """0 -> {1, 2} -> 3 with bandwidth 10 per link."""
    nodes = [switch(i) for i in range(4)]
    return Topology(nodes, undirected([(0, 1), (0, 2), (1, 3), (2, 3)], bandwidth=10.0))


@pytest.fixture
def chain_mbox():
    """Line 0 - 1(fw) - 2(ids) - 3 with cpu/tcam capacities on the boxes."""
    nodes = [
        switch(0),
        switch(1, services=("switch", "fw"), cpu=100.0, tcam=50.0),
        switch(2, services=("switch", "ids"), cpu=100.0, tcam=50.0),
        switch(3),
    ]
    return Topology(nodes, undirected([(0, 1), (1, 2), (2, 3)], bandwidth=1e6))


@pytest.fixture
def parallel_mbox():
    """Two parallel fw->ids arms between 0 and 5, equal capacities.

    0 -> 1(fw) -> 2(ids) -> 5 and 0 -> 3(fw) -> 4(ids) -> 5.
    """
    nodes = [
        switch(0),
        switch(1, services=("switch", "fw"), cpu=100.0, tcam=50.0),
        switch(2, services=("switch", "ids"), cpu=100.0, tcam=50.0),
        switch(3, services=("switch", "fw"), cpu=100.0, tcam=50.0),
        switch(4, services=("switch", "ids"), cpu=100.0, tcam=50.0),
        switch(5),
    ]
    links = undirected([(0, 1), (1, 2), (2, 5), (0, 3), (3, 4), (4, 5)], bandwidth=1e6)
    return Topology(nodes, links)


@pytest.fixture
def abilene():
    from pathopt.topology import load_topology

    return load_topology(FIXTURES / "abilene.json")


def one_class(ingress, egress, vol_bytes=10.0, cpu_cost=1.0, chain=(), cid=0):
    return TrafficClass(id=cid, ingress=ingress, egress=egress,
                        vol_flows=vol_bytes / 1000.0, vol_bytes=vol_bytes,
                        cpu_cost=cpu_cost, chain=chain)


@pytest.fixture
def diamond_tm():
    return TrafficMatrix([one_class(0, 3, vol_bytes=10.0)])
