"""Candidate-path enumeration, middlebox placement expansion, and selection.

Enumeration is an exhaustive depth-first walk over loop-free paths, visiting
neighbors in ascending node-id order so the output order is the lexicographic
order of node sequences. That order is the determinism contract for everything
downstream (selection, variable indexing, serialization).
"""
from __future__ import annotations

import itertools
import json
import random
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .topology import Topology
from .traffic import TrafficClass, TrafficMatrix


class PathError(ValueError):
    """Raised for invalid paths or enumeration parameters."""


class InfeasibleClassError(PathError):
    """A traffic class ended up with no usable paths."""

    def __init__(self, class_id, detail=""):
        self.class_id = class_id
        suffix = f" ({detail})" if detail else ""
        super().__init__(f"traffic class {class_id} has no usable paths{suffix}")


@dataclass(frozen=True)
class AnnotatedPath:
    """Loop-free node sequence plus the ordered nodes doing chain processing."""

    nodes: tuple
    mbox_nodes: tuple = ()

    def __post_init__(self):
        nodes = tuple(self.nodes)
        mboxes = tuple(self.mbox_nodes)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "mbox_nodes", mboxes)
        if len(set(nodes)) != len(nodes):
            raise PathError(f"path revisits a node: {nodes}")
        if len(nodes) < 1:
            raise PathError("empty path")
        positions = []
        for m in mboxes:
            if m not in nodes:
                raise PathError(f"processing node {m} not on path {nodes}")
            positions.append(nodes.index(m))
        if positions != sorted(positions) or len(set(positions)) != len(positions):
            raise PathError(f"processing nodes {mboxes} not in path order on {nodes}")

    @property
    def links(self) -> tuple:
        return tuple(zip(self.nodes[:-1], self.nodes[1:]))

    def __len__(self):
        return len(self.nodes)

    def sort_key(self):
        return (len(self.nodes), self.nodes, self.mbox_nodes)


class PathSet:
    """Ordered candidate paths per traffic class id."""

    def __init__(self, per_class=None):
        self._per_class = {int(cid): list(paths) for cid, paths in (per_class or {}).items()}

    def class_ids(self) -> list:
        return sorted(self._per_class)

    def paths(self, cid: int) -> list:
        return list(self._per_class[cid])

    def set_paths(self, cid: int, paths) -> None:
        self._per_class[int(cid)] = list(paths)

    def items(self):
        for cid in self.class_ids():
            yield cid, self.paths(cid)

    def num_paths(self) -> int:
        return sum(len(p) for p in self._per_class.values())

    def __contains__(self, cid):
        return int(cid) in self._per_class

    def __eq__(self, other):
        if not isinstance(other, PathSet):
            return NotImplemented
        return self._per_class == other._per_class

    def covers(self, tm: TrafficMatrix) -> bool:
        return all(tc.id in self._per_class and self._per_class[tc.id] for tc in tm)


def pathset_to_doc(ps: PathSet) -> dict:
    return {
        str(cid): [{"nodes": list(p.nodes), "mbox": list(p.mbox_nodes)} for p in paths]
        for cid, paths in ps.items()
    }


def pathset_from_doc(doc: dict) -> PathSet:
    ps = PathSet()
    for cid, entries in doc.items():
        ps.set_paths(int(cid), [
            AnnotatedPath(nodes=tuple(e["nodes"]), mbox_nodes=tuple(e.get("mbox", ())))
            for e in entries
        ])
    return ps


def save_pathset(ps: PathSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pathset_to_doc(ps), fh, sort_keys=True)
        fh.write("\n")


def load_pathset(path) -> PathSet:
    with open(path, "r", encoding="utf-8") as fh:
        return pathset_from_doc(json.load(fh))


# ---------------------------------------------------------------------------
# Predicates


def null_predicate(path: AnnotatedPath) -> bool:
    return True


def has_mbox_predicate(path: AnnotatedPath) -> bool:
    """Valid iff the path has at least one designated processing node."""
    return len(path.mbox_nodes) > 0


def waypoint_predicate(topo: Topology, order):
    """Predicate: the path's processing nodes realize `order` as a subsequence.

    Each processing node may satisfy at most one position of the required
    order, so a single node typed {fw, ids} does not satisfy ('fw', 'ids')
    alone; two processing nodes are needed.
    """
    order = tuple(order)
    if not order:
        raise PathError("waypoint order must be non-empty")

    def predicate(path: AnnotatedPath) -> bool:
        want = 0
        for m in path.mbox_nodes:
            if want < len(order) and topo.node(m).has_service(order[want]):
                want += 1
        return want == len(order)

    return predicate


# ---------------------------------------------------------------------------
# Enumeration


def _hop_distances(topo: Topology, target: int) -> dict:
    """BFS hop count from every node to `target` along directed links."""
    # reverse adjacency walk
    rev = {nid: [] for nid in topo.node_ids()}
    for link in topo.links:
        rev[link.dst].append(link.src)
    dist = {target: 0}
    queue = deque([target])
    while queue:
        v = queue.popleft()
        for u in rev[v]:
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def _mbox_expansions(topo: Topology, raw: tuple, chain, chain_len: int):
    """All in-order placements of chain_len processing stops on a raw path.

    With a non-empty chain, position t must land on a node offering service
    chain[t] (chain length must equal chain_len). With an empty chain any node
    carrying a non-"switch" service type may host a stop. Positions are
    strictly increasing, so one node never plays two chain roles.
    """
    if chain and len(chain) != chain_len:
        raise PathError(
            f"chain length {len(chain)} does not match placement count {chain_len}"
        )
    eligible = []
    for pos, nid in enumerate(raw):
        node = topo.node(nid)
        if chain:
            ok = [node.has_service(svc) for svc in chain]
        else:
            ok = [bool(node.service_types - {"switch"})]
        eligible.append(ok)
    out = []
    for combo in itertools.combinations(range(len(raw)), chain_len):
        if chain:
            if all(eligible[pos][t] for t, pos in enumerate(combo)):
                out.append(AnnotatedPath(nodes=raw, mbox_nodes=tuple(raw[p] for p in combo)))
        else:
            if all(eligible[pos][0] for pos in combo):
                out.append(AnnotatedPath(nodes=raw, mbox_nodes=tuple(raw[p] for p in combo)))
    return out


def enumerate_paths(topo: Topology, tc: TrafficClass, predicate=None,
                    max_len: int = 10, max_count: int = 1000,
                    chain_len: int = 0) -> list:
    """Loop-free ingress->egress paths of at most max_len nodes.

    chain_len > 0 expands each raw path into one annotated path per valid
    in-order placement of chain_len processing stops covering tc.chain.
    The predicate filters the expanded paths; enumeration stops after
    max_count survivors.
    """
    if max_len < 1 or max_count < 1 or chain_len < 0:
        raise PathError("max_len, max_count must be >= 1 and chain_len >= 0")
    for end in (tc.ingress, tc.egress):
        if not topo.has_node(end):
            raise PathError(f"class {tc.id}: node {end} not in topology")
    predicate = predicate or null_predicate
    dist = _hop_distances(topo, tc.egress)
    out = []
    path = [tc.ingress]
    on_path = {tc.ingress}

    def emit(raw: tuple) -> bool:
        if chain_len > 0:
            candidates = _mbox_expansions(topo, raw, tc.chain, chain_len)
        else:
            candidates = [AnnotatedPath(nodes=raw)]
        for cand in candidates:
            if predicate(cand):
                out.append(cand)
                if len(out) >= max_count:
                    return True
        return False

    def dfs(v) -> bool:
        if v == tc.egress:
            return emit(tuple(path))
        if len(path) >= max_len:
            return False
        for w in topo.neighbors(v):
            if w in on_path:
                continue
            # prune branches that cannot reach the egress within budget
            if dist.get(w, max_len + 1) > max_len - len(path) - 1:
                continue
            path.append(w)
            on_path.add(w)
            done = dfs(w)
            path.pop()
            on_path.remove(w)
            if done:
                return True
        return False

    dfs(tc.ingress)
    return out


def _enumerate_one(args):
    topo, tc, predicate, max_len, max_count, chain_len = args
    return tc.id, enumerate_paths(topo, tc, predicate, max_len, max_count, chain_len)


def generate_paths(topo: Topology, tm: TrafficMatrix, predicate=None,
                   max_len: int = 10, max_count: int = 1000,
                   chain_len: int = 0, workers: int = 0) -> PathSet:
    """Enumerate candidate paths for every class; optionally in parallel.

    Results are merged in class-id order so parallel runs match sequential
    ones exactly. workers=0 runs in-process.
    """
    jobs = [(topo, tc, predicate, max_len, max_count, chain_len)
            for tc in sorted(tm, key=lambda t: t.id)]
    ps = PathSet()
    if workers and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for cid, paths in pool.map(_enumerate_one, jobs, chunksize=8):
                ps.set_paths(cid, paths)
    else:
        for job in jobs:
            cid, paths = _enumerate_one(job)
            ps.set_paths(cid, paths)
    return ps


# ---------------------------------------------------------------------------
# Selection


STRATEGIES = ("shortest", "random")


def _strategy_order(paths: list, strategy: str, seed, cid: int) -> list:
    if strategy == "shortest":
        return sorted(range(len(paths)), key=lambda i: paths[i].sort_key())
    if strategy == "random":
        # per-class stream so adding a class never perturbs another class's draw
        rng = random.Random(f"{seed}:{cid}")
        order = list(range(len(paths)))
        rng.shuffle(order)
        return order
    raise PathError(f"unknown selection strategy {strategy!r}")


def select_paths(all_paths: PathSet, strategy: str, select_number: int,
                 seed: int = 0, sticky: PathSet = None) -> PathSet:
    """Pick at most select_number paths per class.

    shortest: ascending hop count, ties broken by lexicographic node sequence.
    random: prefix of a seeded per-class shuffle, so selections are nested as
    select_number grows. With sticky, previously selected paths still present
    in all_paths are retained first and the remainder is filled by strategy.
    """
    if select_number < 1:
        raise PathError("select_number must be >= 1")
    out = PathSet()
    for cid, paths in all_paths.items():
        if not paths:
            raise InfeasibleClassError(cid, "no generated paths")
        order = _strategy_order(paths, strategy, seed, cid)
        if select_number >= len(paths) and sticky is None:
            out.set_paths(cid, paths)
            continue
        chosen = []
        chosen_keys = set()
        if sticky is not None and cid in sticky:
            available = {(p.nodes, p.mbox_nodes): i for i, p in enumerate(paths)}
            for prev in sticky.paths(cid):
                key = (prev.nodes, prev.mbox_nodes)
                if key in available and key not in chosen_keys and len(chosen) < select_number:
                    chosen.append(paths[available[key]])
                    chosen_keys.add(key)
        for idx in order:
            if len(chosen) >= select_number:
                break
            key = (paths[idx].nodes, paths[idx].mbox_nodes)
            if key not in chosen_keys:
                chosen.append(paths[idx])
                chosen_keys.add(key)
        out.set_paths(cid, chosen)
    return out


# ---------------------------------------------------------------------------
# Dependency index


class DependencyIndex:
    """Maps nodes and directed links to the (class, path-index) pairs using them."""

    def __init__(self):
        self._by_element = {}

    def add(self, element, cid: int, path_index: int) -> None:
        self._by_element.setdefault(element, set()).add((cid, path_index))

    def paths_through(self, element) -> set:
        return set(self._by_element.get(element, ()))

    def elements(self) -> list:
        return sorted(self._by_element, key=lambda e: (isinstance(e, tuple), e))

    def impacted_by_node(self, nid: int) -> set:
        """Paths hit by a node failure: traversal plus both link directions."""
        hit = self.paths_through(nid)
        for element in self._by_element:
            if isinstance(element, tuple) and nid in element:
                hit |= self.paths_through(element)
        return hit

    def impacted_by_link(self, src: int, dst: int) -> set:
        """Paths hit by an (undirected) link failure."""
        return self.paths_through((src, dst)) | self.paths_through((dst, src))


def build_dependency_index(selected: PathSet) -> DependencyIndex:
    index = DependencyIndex()
    for cid, paths in selected.items():
        for idx, path in enumerate(paths):
            for nid in path.nodes:
                index.add(nid, cid, idx)
            for link in path.links:
                index.add(link, cid, idx)
    return index
