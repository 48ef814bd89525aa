"""Traffic classes and synthetic traffic-matrix generators."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .topology import Topology, edge_switches

#: Default bytes-per-flow ratio used when deriving vol_flows from vol_bytes.
BYTES_PER_FLOW = 1000.0


class TrafficError(ValueError):
    """Raised for invalid traffic classes or generator input."""


@dataclass(frozen=True)
class TrafficClass:
    id: int
    ingress: int
    egress: int
    vol_flows: float
    vol_bytes: float
    cpu_cost: float = 1.0
    chain: tuple = ()
    priority: float = 1.0

    def __post_init__(self):
        if self.ingress == self.egress:
            raise TrafficError(f"class {self.id}: ingress equals egress ({self.ingress})")
        if self.vol_flows < 0 or self.vol_bytes < 0:
            raise TrafficError(f"class {self.id}: volumes must be non-negative")
        if self.cpu_cost < 0 or self.priority < 0:
            raise TrafficError(f"class {self.id}: cpu_cost/priority must be non-negative")
        object.__setattr__(self, "chain", tuple(self.chain))


class TrafficMatrix:
    """Immutable collection of traffic classes with unique ids."""

    def __init__(self, classes):
        self._classes = list(classes)
        ids = [tc.id for tc in self._classes]
        if len(set(ids)) != len(ids):
            raise TrafficError("duplicate traffic class ids")
        self._by_id = {tc.id: tc for tc in self._classes}

    @property
    def classes(self) -> list:
        return list(self._classes)

    def class_ids(self) -> list:
        return sorted(self._by_id)

    def by_id(self, cid: int) -> TrafficClass:
        return self._by_id[cid]

    def __len__(self):
        return len(self._classes)

    def __iter__(self):
        return iter(self._classes)

    def __eq__(self, other):
        if not isinstance(other, TrafficMatrix):
            return NotImplemented
        return self._classes == other._classes

    def total_bytes(self) -> float:
        return sum(tc.vol_bytes for tc in self._classes)


def traffic_to_doc(tm: TrafficMatrix) -> list:
    return [
        {
            "id": tc.id,
            "ingress": tc.ingress,
            "egress": tc.egress,
            "vol_flows": tc.vol_flows,
            "vol_bytes": tc.vol_bytes,
            "cpu_cost": tc.cpu_cost,
            "chain": list(tc.chain),
            "priority": tc.priority,
        }
        for tc in tm
    ]


def traffic_from_doc(doc: list) -> TrafficMatrix:
    if not isinstance(doc, list):
        raise TrafficError("traffic document must be a JSON array of class objects")
    classes = []
    for entry in doc:
        try:
            classes.append(
                TrafficClass(
                    id=int(entry["id"]),
                    ingress=int(entry["ingress"]),
                    egress=int(entry["egress"]),
                    vol_flows=float(entry["vol_flows"]),
                    vol_bytes=float(entry["vol_bytes"]),
                    cpu_cost=float(entry.get("cpu_cost", 1.0)),
                    chain=tuple(entry.get("chain", ())),
                    priority=float(entry.get("priority", 1.0)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, TrafficError):
                raise
            raise TrafficError(f"bad traffic class entry {entry!r}: {exc}") from exc
    return TrafficMatrix(classes)


def load_traffic(path) -> TrafficMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        return traffic_from_doc(json.load(fh))


def save_traffic(tm: TrafficMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(traffic_to_doc(tm), fh, indent=2, sort_keys=True)
        fh.write("\n")


def gravity_matrix(topo: Topology, total_volume: float, seed: int,
                   mu: float = 0.0, sigma: float = 1.0,
                   bytes_per_flow: float = BYTES_PER_FLOW) -> TrafficMatrix:
    """Gravity-model matrix over all ordered node pairs.

    Per-node populations are drawn from LogNormal(mu, sigma) with the given
    seed; pair (i, j) receives total_volume * pop_i*pop_j / sum over all
    ordered pairs a != b of pop_a*pop_b, so volumes sum to total_volume.
    """
    ids = topo.node_ids()
    if len(ids) < 2:
        raise TrafficError("gravity model needs at least 2 nodes")
    if total_volume <= 0:
        raise TrafficError("total_volume must be positive")
    rng = np.random.default_rng(seed)
    pops = rng.lognormal(mean=mu, sigma=sigma, size=len(ids))
    weight = {}
    for a, src in enumerate(ids):
        for b, dst in enumerate(ids):
            if src != dst:
                weight[(src, dst)] = pops[a] * pops[b]
    denom = sum(weight.values())
    classes = []
    for cid, (src, dst) in enumerate(sorted(weight)):
        vol = float(total_volume * weight[(src, dst)] / denom)
        classes.append(
            TrafficClass(id=cid, ingress=src, egress=dst,
                         vol_flows=vol / bytes_per_flow, vol_bytes=vol)
        )
    return TrafficMatrix(classes)


def uniform_matrix(topo: Topology, per_pair_volume: float,
                   bytes_per_flow: float = BYTES_PER_FLOW) -> TrafficMatrix:
    """One class of identical volume per ordered edge-switch pair."""
    if per_pair_volume < 0:
        raise TrafficError("per_pair_volume must be non-negative")
    switches = edge_switches(topo)
    classes = []
    cid = 0
    for src in switches:
        for dst in switches:
            if src == dst:
                continue
            classes.append(
                TrafficClass(id=cid, ingress=src, egress=dst,
                             vol_flows=per_pair_volume / bytes_per_flow,
                             vol_bytes=per_pair_volume)
            )
            cid += 1
    return TrafficMatrix(classes)
