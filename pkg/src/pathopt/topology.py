"""Network model: nodes, directed links, file ingestion, synthetic generators.

Links are directed internally. The JSON file format is undirected and every
edge is expanded into two directed links on load; capacities missing from a
file default to unbounded (+inf), never zero. Node capacities may carry the
``"TBA"`` sentinel, meaning the optimizer allocates that resource itself.
"""
from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

#: Sentinel capacity: the optimization decides how much to allocate.
TBA = "TBA"


class TopologyError(ValueError):
    """Raised for malformed topology documents or invalid generator input."""


@dataclass(frozen=True)
class Node:
    id: int
    name: str
    service_types: frozenset = frozenset()
    resource_caps: dict = field(default_factory=dict)

    def __post_init__(self):
        for res, cap in self.resource_caps.items():
            if cap == TBA:
                continue
            if not isinstance(cap, (int, float)) or cap < 0:
                raise TopologyError(
                    f"node {self.id}: capacity for {res!r} must be >= 0 or {TBA!r}, got {cap!r}"
                )

    def has_service(self, service: str) -> bool:
        return service in self.service_types


@dataclass(frozen=True)
class Link:
    src: int
    dst: int
    resource_caps: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.src == self.dst:
            raise TopologyError(f"self-loop link on node {self.src}")
        for res, cap in self.resource_caps.items():
            if not isinstance(cap, (int, float)) or cap < 0:
                raise TopologyError(
                    f"link {self.src}->{self.dst}: capacity for {res!r} must be >= 0, got {cap!r}"
                )

    @property
    def key(self) -> tuple:
        return (self.src, self.dst)


class Topology:
    """Immutable directed graph with O(1) node/link lookup.

    Safe to share across threads once constructed.
    """

    def __init__(self, nodes, links):
        self._nodes = {}
        for node in nodes:
            if node.id in self._nodes:
                raise TopologyError(f"duplicate node id {node.id}")
            self._nodes[node.id] = node
        self._links = {}
        adj = {nid: [] for nid in self._nodes}
        for link in links:
            for end in (link.src, link.dst):
                if end not in self._nodes:
                    raise TopologyError(f"link {link.src}->{link.dst} references unknown node {end}")
            if link.key in self._links:
                raise TopologyError(f"duplicate link {link.src}->{link.dst}")
            self._links[link.key] = link
            adj[link.src].append(link.dst)
        self._adj = {nid: tuple(sorted(out)) for nid, out in adj.items()}

    @property
    def nodes(self) -> list:
        return [self._nodes[nid] for nid in self.node_ids()]

    @property
    def links(self) -> list:
        return [self._links[key] for key in sorted(self._links)]

    def node_ids(self) -> list:
        return sorted(self._nodes)

    def node(self, nid: int) -> Node:
        return self._nodes[nid]

    def has_node(self, nid: int) -> bool:
        return nid in self._nodes

    def link(self, src: int, dst: int) -> Link:
        return self._links[(src, dst)]

    def has_link(self, src: int, dst: int) -> bool:
        return (src, dst) in self._links

    def neighbors(self, nid: int) -> tuple:
        """Outgoing neighbor ids in ascending order."""
        return self._adj[nid]

    def num_nodes(self) -> int:
        return len(self._nodes)

    def num_links(self) -> int:
        return len(self._links)

    def nodes_with_service(self, service: str) -> list:
        return [n for n in self.nodes if n.has_service(service)]

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return self._nodes == other._nodes and self._links == other._links

    def __repr__(self):
        return f"Topology(nodes={self.num_nodes()}, links={self.num_links()})"


def _node_from_doc(entry: dict) -> Node:
    try:
        nid = int(entry["id"])
    except (KeyError, TypeError, ValueError):
        raise TopologyError(f"node entry missing integer 'id': {entry!r}")
    name = str(entry.get("name", nid))
    services = frozenset(entry.get("services", ()))
    resources = dict(entry.get("resources", {}))
    return Node(id=nid, name=name, service_types=services, resource_caps=resources)


def topology_from_doc(doc: dict) -> Topology:
    """Build a Topology from the JSON document form (undirected links)."""
    if not isinstance(doc, dict) or "nodes" not in doc:
        raise TopologyError("topology document must be an object with a 'nodes' array")
    nodes = [_node_from_doc(e) for e in doc["nodes"]]
    links = []
    seen = set()
    for entry in doc.get("links", []):
        try:
            src, dst = int(entry["src"]), int(entry["dst"])
        except (KeyError, TypeError, ValueError):
            raise TopologyError(f"link entry missing integer 'src'/'dst': {entry!r}")
        und = (min(src, dst), max(src, dst))
        if und in seen:
            raise TopologyError(f"duplicate undirected link {und}")
        seen.add(und)
        resources = dict(entry.get("resources", {}))
        links.append(Link(src=src, dst=dst, resource_caps=resources))
        links.append(Link(src=dst, dst=src, resource_caps=dict(resources)))
    return Topology(nodes, links)


def topology_to_doc(topo: Topology) -> dict:
    """Canonical undirected document form; inverse of :func:`topology_from_doc`.

    Requires every directed link to have a symmetric twin with equal
    capacities, which holds for any topology loaded from a file.
    """
    nodes = [
        {
            "id": n.id,
            "name": n.name,
            "services": sorted(n.service_types),
            "resources": {k: n.resource_caps[k] for k in sorted(n.resource_caps)},
        }
        for n in topo.nodes
    ]
    links = []
    for link in topo.links:
        if link.src > link.dst:
            continue
        if not topo.has_link(link.dst, link.src):
            raise TopologyError(f"link {link.src}->{link.dst} has no reverse; cannot serialize as undirected")
        twin = topo.link(link.dst, link.src)
        if twin.resource_caps != link.resource_caps:
            raise TopologyError(f"asymmetric capacities on {link.src}<->{link.dst}; cannot serialize as undirected")
        links.append(
            {
                "src": link.src,
                "dst": link.dst,
                "resources": {k: link.resource_caps[k] for k in sorted(link.resource_caps)},
            }
        )
    return {"nodes": nodes, "links": links}


def parse_topology(text: str) -> Topology:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TopologyError(f"topology parse failure: {exc}") from exc
    return topology_from_doc(doc)


def load_topology(path) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_topology(fh.read())


def save_topology(topo: Topology, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(topology_to_doc(topo), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_topology_graphml(path, capacity_resource: str = "bandwidth",
                          default_capacity: float = math.inf) -> Topology:
    """Minimal GraphML reader: node/edge elements plus a 'capacity' data key.

    Node ids are assigned 0..n-1 in document order; the GraphML id becomes the
    node name. Edges are treated as undirected and expanded. Edges without a
    capacity entry get ``default_capacity``.
    """
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise TopologyError(f"graphml parse failure: {exc}") from exc
    cap_keys = {
        key.get("id")
        for key in root.findall("g:key", ns)
        if key.get("attr.name") == "capacity"
    }
    graph = root.find("g:graph", ns)
    if graph is None:
        raise TopologyError("graphml document has no <graph> element")
    ids = {}
    nodes = []
    for elem in graph.findall("g:node", ns):
        gml_id = elem.get("id")
        ids[gml_id] = len(nodes)
        nodes.append(Node(id=len(nodes), name=gml_id, service_types=frozenset({"switch"})))
    links = []
    seen = set()
    for elem in graph.findall("g:edge", ns):
        try:
            src, dst = ids[elem.get("source")], ids[elem.get("target")]
        except KeyError as exc:
            raise TopologyError(f"graphml edge references unknown node {exc}") from exc
        cap = default_capacity
        for data in elem.findall("g:data", ns):
            if data.get("key") in cap_keys:
                cap = float(data.text)
        und = (min(src, dst), max(src, dst))
        if und in seen:
            continue
        seen.add(und)
        resources = {} if math.isinf(cap) else {capacity_resource: cap}
        links.append(Link(src=src, dst=dst, resource_caps=resources))
        links.append(Link(src=dst, dst=src, resource_caps=dict(resources)))
    return Topology(nodes, links)


def fat_tree(k: int, link_bandwidth: float = 10 ** 7) -> Topology:
    """Standard 3-tier fat-tree on switches only (no hosts).

    k pods of k/2 edge and k/2 aggregation switches plus (k/2)^2 core
    switches: 5k^2/4 switches total. Edge switches carry the extra service
    type "edge" so traffic generators can attach classes to them.
    """
    if k < 2 or k % 2 != 0:
        raise TopologyError(f"fat-tree arity must be a positive even integer, got {k}")
    half = k // 2
    nodes = []
    links = []

    def add_node(name, services):
        nid = len(nodes)
        nodes.append(Node(id=nid, name=name, service_types=frozenset(services)))
        return nid

    def add_edge(a, b):
        caps = {"bandwidth": float(link_bandwidth)}
        links.append(Link(src=a, dst=b, resource_caps=caps))
        links.append(Link(src=b, dst=a, resource_caps=dict(caps)))

    core = [[add_node(f"core_{i}_{j}", {"switch"}) for j in range(half)] for i in range(half)]
    for pod in range(k):
        aggs = [add_node(f"agg_{pod}_{i}", {"switch"}) for i in range(half)]
        edges = [add_node(f"edge_{pod}_{i}", {"switch", "edge"}) for i in range(half)]
        for e in edges:
            for a in aggs:
                add_edge(e, a)
        # aggregation switch i of every pod uplinks to core row i
        for i, a in enumerate(aggs):
            for j in range(half):
                add_edge(a, core[i][j])
    return Topology(nodes, links)


def edge_switches(topo: Topology) -> list:
    """Nodes tagged with the "edge" service type; all nodes when none are tagged."""
    tagged = [n.id for n in topo.nodes if n.has_service("edge")]
    return tagged if tagged else topo.node_ids()
