"""Translate per-class path fractions into prefix-split forwarding rules.

The class source prefix is cut into 2^d equal sub-prefixes at the smallest
depth that reproduces the fractions exactly, falling back to max_depth with
largest-remainder rounding (per-path error stays below 2^-d either way).
Matching on static source sub-prefixes keeps flow affinity by construction.
"""
from __future__ import annotations

import ipaddress
import json
import logging
import math
from dataclasses import dataclass

from . import model as _model
from .paths import PathSet
from .topology import Topology

log = logging.getLogger(__name__)

DEFAULT_MAX_DEPTH = 8


class RuleError(ValueError):
    """Invalid fractions, prefixes, or solution data."""


@dataclass(frozen=True)
class FlowRule:
    node: int
    src_prefix: str
    dst_prefix: str
    next_hop: int
    class_id: int
    path_index: int

    def to_doc(self) -> dict:
        return {
            "node": self.node,
            "match": {"src": self.src_prefix, "dst": self.dst_prefix},
            "action": {"forward": self.next_hop},
            "class": self.class_id,
            "path_index": self.path_index,
        }


@dataclass(frozen=True)
class PrefixAssignment:
    """Disjoint sub-prefixes covering the base, one path index per block."""

    base: str
    depth: int
    entries: tuple  # ((sub_prefix: str, path_index: int, achieved_fraction: float), ...)

    def achieved(self) -> dict:
        out = {}
        for _, idx, frac in self.entries:
            out[idx] = frac
        return out


def _largest_remainder(fractions: dict, slots: int) -> dict:
    """Integer slot counts per key summing to `slots`, error < 1/slots each."""
    floors = {k: int(math.floor(f * slots)) for k, f in fractions.items()}
    rest = slots - sum(floors.values())
    remainders = sorted(fractions, key=lambda k: (-(fractions[k] * slots - floors[k]), k))
    for k in remainders[:rest]:
        floors[k] += 1
    return floors


def split_prefixes(fractions: dict, base: str,
                   max_depth: int = DEFAULT_MAX_DEPTH) -> PrefixAssignment:
    """Assign equal-width sub-prefixes of `base` to paths by target fraction.

    Fractions must be non-negative and sum to 1 (within 1e-6). Fractions
    below half the finest slot width are dropped and the rest renormalized.
    """
    net = ipaddress.ip_network(base)
    cleaned = {}
    total = 0.0
    for idx, frac in fractions.items():
        frac = float(frac)
        if frac < -1e-9:
            raise RuleError(f"negative fraction for path {idx}")
        total += frac
        if frac > 0:
            cleaned[int(idx)] = frac
    if abs(total - 1.0) > 1e-6:
        raise RuleError(f"fractions sum to {total}, expected 1")
    if not cleaned:
        raise RuleError("no positive fractions")
    max_depth = min(max_depth, net.max_prefixlen - net.prefixlen)

    sliver = 2.0 ** -max_depth / 2.0
    dropped = {k for k, f in cleaned.items() if f < sliver}
    if dropped and len(dropped) < len(cleaned):
        log.warning("dropping %d path fraction(s) below %g of prefix %s",
                    len(dropped), sliver, base)
        cleaned = {k: f for k, f in cleaned.items() if k not in dropped}
        norm = sum(cleaned.values())
        cleaned = {k: f / norm for k, f in cleaned.items()}

    min_depth = max(0, math.ceil(math.log2(len(cleaned))))
    if min_depth > max_depth:
        raise RuleError(
            f"{len(cleaned)} positive fractions need depth {min_depth} > max_depth {max_depth}")

    depth = max_depth
    counts = None
    for d in range(min_depth, max_depth + 1):
        slots = 2 ** d
        trial = _largest_remainder(cleaned, slots)
        if all(abs(trial[k] / slots - cleaned[k]) <= 1e-12 for k in cleaned):
            depth, counts = d, trial
            break
    if counts is None:
        depth = max_depth
        counts = _largest_remainder(cleaned, 2 ** depth)

    slots = 2 ** depth
    if depth == 0:
        only = next(iter(cleaned))
        return PrefixAssignment(base=str(net), depth=0,
                                entries=((str(net), only, 1.0),))
    subnets = list(net.subnets(prefixlen_diff=depth))
    order = sorted(cleaned, key=lambda k: (-cleaned[k], k))
    entries = []
    cursor = 0
    for idx in order:
        share = counts[idx] / slots
        for _ in range(counts[idx]):
            entries.append((str(subnets[cursor]), idx, share))
            cursor += 1
    entries.sort(key=lambda e: ipaddress.ip_network(e[0]).network_address)
    return PrefixAssignment(base=str(net), depth=depth, entries=tuple(entries))


def generate_rules(topo: Topology, tm, selected: PathSet, solution,
                   class_prefixes: dict, max_depth: int = DEFAULT_MAX_DEPTH) -> list:
    """One forwarding rule per (sub-prefix, non-terminal path node).

    class_prefixes maps class id -> (source CIDR, destination CIDR). Classes
    whose every path fraction is zero produce no rules.
    """
    rules = []
    for tc in sorted(tm, key=lambda t: t.id):
        if tc.id not in class_prefixes:
            raise RuleError(f"no prefix mapping for class {tc.id}")
        src_base, dst_base = class_prefixes[tc.id]
        paths = selected.paths(tc.id)
        fractions = {}
        for i in range(len(paths)):
            val = solution.values.get(_model.xp_name(tc.id, i), 0.0)
            if val > 1e-9:
                fractions[i] = val
        if not fractions:
            continue
        norm = sum(fractions.values())
        fractions = {i: v / norm for i, v in fractions.items()}
        assignment = split_prefixes(fractions, src_base, max_depth=max_depth)
        for sub, idx, _ in assignment.entries:
            nodes = paths[idx].nodes
            for hop, nid in enumerate(nodes[:-1]):
                rules.append(FlowRule(node=nid, src_prefix=sub, dst_prefix=dst_base,
                                      next_hop=nodes[hop + 1], class_id=tc.id,
                                      path_index=idx))
    for rule in rules:
        if not topo.has_link(rule.node, rule.next_hop):
            raise RuleError(f"rule at node {rule.node} forwards over missing link "
                            f"({rule.node},{rule.next_hop})")
    return rules


def rules_to_doc(rules) -> list:
    return [r.to_doc() for r in rules]


def rules_from_doc(doc) -> list:
    return [
        FlowRule(node=int(e["node"]), src_prefix=e["match"]["src"],
                 dst_prefix=e["match"]["dst"], next_hop=int(e["action"]["forward"]),
                 class_id=int(e["class"]), path_index=int(e["path_index"]))
        for e in doc
    ]


def save_rules(rules, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rules_to_doc(rules), fh, indent=2)
        fh.write("\n")


def follow_rules(rules, src_ip: str, dst_ip: str, start: int,
                 max_hops: int = 64) -> list:
    """Hop-by-hop walk of the rule tables from `start` for one address pair."""
    src = ipaddress.ip_address(src_ip)
    dst = ipaddress.ip_address(dst_ip)
    by_node = {}
    for r in rules:
        by_node.setdefault(r.node, []).append(r)
    node = start
    visited = [start]
    for _ in range(max_hops):
        best = None
        for r in by_node.get(node, ()):  # longest-prefix match on (src, dst)
            sp = ipaddress.ip_network(r.src_prefix)
            dp = ipaddress.ip_network(r.dst_prefix)
            if src in sp and dst in dp:
                key = (sp.prefixlen, dp.prefixlen)
                if best is None or key > best[0]:
                    best = (key, r)
        if best is None:
            return visited
        node = best[1].next_hop
        visited.append(node)
    raise RuleError(f"forwarding loop starting at node {start}")


class MockControllerClient:
    """Stand-in for a controller connection: writes the REST payload to disk.

    The payload mirrors a flow-programming request body: one entry per rule
    with a deterministic flow id, the match, and the output action.
    """

    def __init__(self, out_path):
        self.out_path = out_path

    @staticmethod
    def payload(rules) -> dict:
        flows = []
        for k, r in enumerate(rules):
            flows.append({
                "id": f"flow-{r.class_id}-{r.path_index}-{r.node}-{k}",
                "node": r.node,
                "priority": 100,
                "match": {"ipv4-source": r.src_prefix, "ipv4-destination": r.dst_prefix},
                "instructions": [{"apply-actions": [{"output": {"node": r.next_hop}}]}],
            })
        return {"flows": flows}

    def push_rules(self, rules) -> dict:
        body = self.payload(rules)
        with open(self.out_path, "w", encoding="utf-8") as fh:
            json.dump(body, fh, indent=2)
            fh.write("\n")
        return body


def default_class_prefixes(tm) -> dict:
    """Deterministic per-class (src, dst) /24 pairs in disjoint test ranges."""
    out = {}
    for tc in sorted(tm, key=lambda t: t.id):
        cid = tc.id
        if cid >= 256 * 256:
            raise RuleError("too many classes for the default prefix plan")
        hi, lo = divmod(cid, 256)
        out[cid] = (f"10.{hi}.{lo}.0/24", f"172.{16 + hi % 16}.{lo}.0/24")
    return out
