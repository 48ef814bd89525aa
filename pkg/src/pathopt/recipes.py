"""End-to-end optimization recipes built from the constraint templates.

A recipe bundles path-generation defaults (predicate, placement count,
length/count caps), a selection strategy, and a configure step that installs
templates and an objective on a fresh builder. Defaults follow the usual
workflow constants: length cap 10, generation cap 1000 per class, 5 selected
paths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import OptBuilder
from .paths import has_mbox_predicate, waypoint_predicate
from .topology import TBA, Topology


class RecipeError(ValueError):
    """Unknown recipe or invalid recipe parameters."""


@dataclass
class Recipe:
    name: str
    configure: callable                 # (OptBuilder) -> None
    strategy: str = "random"
    select_number: int = 5
    max_len: int = 10
    max_count: int = 1000
    chain_len: int = 0
    predicate_factory: callable = None  # (Topology, TrafficMatrix) -> predicate
    churn_base: tuple = None            # ("node"|"link", resource) for re-solves
    needs_gap: bool = False             # solved as a MILP

    def predicate(self, topo, tm):
        if self.predicate_factory is None:
            return None
        return self.predicate_factory(topo, tm)


def _finite_link_caps(topo: Topology, resource: str) -> dict:
    caps = {}
    for link in topo.links:
        cap = link.resource_caps.get(resource)
        if cap is not None and math.isfinite(cap):
            caps[link.key] = float(cap)
    return caps


def _node_resource_caps(topo: Topology, resource: str) -> dict:
    caps = {}
    for node in topo.nodes:
        cap = node.resource_caps.get(resource)
        if cap is not None and (cap == TBA or math.isfinite(cap)):
            caps[node.id] = cap
    return caps


def link_load_bytes(link, tc, path, resource):
    """Absolute byte load if all of the class rode this path."""
    return tc.vol_bytes


def link_utilization(topo: Topology, resource: str = "bandwidth"):
    """Byte load normalized by the link's own capacity (utilization in [0,1])."""
    def fn(link, tc, path, res):
        cap = link.resource_caps.get(resource)
        if cap is None or not math.isfinite(cap) or cap <= 0:
            return 0.0
        return tc.vol_bytes / cap
    return fn


def recipe_te() -> Recipe:
    """Route every demand and balance link utilization (min max link load)."""

    def configure(b: OptBuilder):
        b.add_allocate_flow()
        b.add_route_all()
        raw = _finite_link_caps(b.topo, "bandwidth")
        caps = {key: 1.0 for key in raw}
        b.add_link_capacity("bandwidth", caps, link_utilization(b.topo))
        b.set_predefined_objective("minMaxLinkLoad", resource="bandwidth")

    return Recipe(name="te", configure=configure, strategy="random",
                  churn_base=("link", "bandwidth"))


def recipe_simple() -> Recipe:
    """Service chaining: waypoint order, CPU load balancing, per-path rule space.

    Traffic must pass its middlebox chain in order; CPU load is normalized to
    each middlebox's capacity; every enabled path costs one rule per switch it
    crosses, so path binaries are linked to traffic with a disable constraint.
    """

    def cpu_fn_factory(topo):
        cpu_caps = _node_resource_caps(topo, "cpu")

        def fn(node, tc, path, resource):
            if resource == "cpu" and node.id in cpu_caps and node.id in path.mbox_nodes:
                return tc.vol_flows * tc.cpu_cost / float(cpu_caps[node.id])
            return 0.0

        return fn

    def tcam_fn(node, tc, path, resource):
        return 1.0

    def configure(b: OptBuilder):
        b.add_binary_variables({"path", "node"})
        b.add_allocate_flow()
        b.add_route_all()
        link_caps = _finite_link_caps(b.topo, "bandwidth")
        if link_caps:
            b.add_link_capacity("bandwidth", link_caps, link_load_bytes)
        cpu_caps = _node_resource_caps(b.topo, "cpu")
        if not cpu_caps:
            raise RecipeError("service-chaining recipe needs nodes with a 'cpu' capacity")
        b.add_node_capacity("cpu", {nid: 1.0 for nid in cpu_caps}, cpu_fn_factory(b.topo))
        tcam_caps = _node_resource_caps(b.topo, "tcam")
        if tcam_caps:
            b.add_node_capacity_per_path("tcam", tcam_caps, tcam_fn)
        b.add_path_disable()
        b.set_predefined_objective("minMaxNodeLoad", resource="cpu")

    def predicate_factory(topo, tm):
        order = next((tc.chain for tc in sorted(tm, key=lambda t: t.id) if tc.chain),
                     ("fw", "ids"))
        return waypoint_predicate(topo, order)

    return Recipe(name="simple", configure=configure, strategy="random",
                  chain_len=2, predicate_factory=predicate_factory,
                  churn_base=("node", "cpu"), needs_gap=True)


def recipe_elastictree(switch_power: dict = None, link_power: dict = None,
                       switch_weight: float = 0.75, link_weight: float = 0.25) -> Recipe:
    """Power down switches and links while still routing all demands."""

    def configure(b: OptBuilder):
        sp = {nid: 1.0 for nid in b.topo.node_ids()}
        if switch_power:
            sp.update({int(k): float(v) for k, v in switch_power.items()})
        lp = {link.key: 1.0 for link in b.topo.links}
        if link_power:
            lp.update({tuple(k) if not isinstance(k, tuple) else k: float(v)
                       for k, v in link_power.items()})
        b.add_binary_variables({"path", "node", "edge"})
        b.add_allocate_flow()
        # zero-volume classes are vacuous; forcing a path for them would
        # needlessly keep hardware powered
        nonzero = [tc.id for tc in b.tm if tc.vol_bytes > 0 or tc.vol_flows > 0]
        b.add_route_all(classes=nonzero)
        link_caps = _finite_link_caps(b.topo, "bandwidth")
        if link_caps:
            b.add_link_capacity("bandwidth", link_caps, link_load_bytes)
        b.add_require_all_nodes()
        b.add_require_all_edges()
        b.add_path_disable()
        b.define_var("SwitchPower",
                     {b.bn(nid): sp[nid] for nid in b.topo.node_ids()}, lb=0.0)
        b.define_var("LinkPower",
                     {b.be(*link.key): lp[link.key] for link in b.topo.links}, lb=0.0)
        b.set_objective({"SwitchPower": switch_weight, "LinkPower": link_weight}, "min")

    return Recipe(name="elastictree", configure=configure, strategy="random",
                  churn_base=None, needs_gap=True)


def recipe_elastic_scaling(budget_fraction: float = 0.5) -> Recipe:
    """Place middlebox capacity on demand under a node budget.

    Every node's CPU capacity is left to the optimizer (TBA); only designated
    processing stops consume CPU, disabled nodes get zero allocation, and at
    most a budget_fraction share of nodes may be enabled.
    """
    if not 0 <= budget_fraction <= 1:
        raise RecipeError("budget_fraction must lie in [0, 1]")

    def cpu_fn(node, tc, path, resource):
        if node.id in path.mbox_nodes:
            return tc.vol_flows * tc.cpu_cost
        return 0.0

    def configure(b: OptBuilder):
        b.add_binary_variables({"path", "node"})
        b.add_allocate_flow()
        b.add_route_all()
        b.add_node_capacity("cpu", {nid: TBA for nid in b.topo.node_ids()}, cpu_fn)
        b.add_require_some_nodes()
        b.add_path_disable()
        b.add_budget(lambda node: 1.0, b.topo.num_nodes() * budget_fraction)
        b.set_predefined_objective("minMaxNodeLoad", resource="cpu")

    return Recipe(name="elastic_scaling", configure=configure, strategy="random",
                  chain_len=1,
                  predicate_factory=lambda topo, tm: has_mbox_predicate,
                  churn_base=("node", "cpu"), needs_gap=True)


_RECIPES = {
    "te": recipe_te,
    "simple": recipe_simple,
    "elastictree": recipe_elastictree,
    "elastic_scaling": recipe_elastic_scaling,
}


def recipe_names() -> list:
    return sorted(_RECIPES)


def get_recipe(name: str, **params) -> Recipe:
    try:
        factory = _RECIPES[name]
    except KeyError:
        raise RecipeError(f"unknown recipe {name!r}; available: {recipe_names()}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise RecipeError(f"bad parameters for recipe {name!r}: {exc}") from exc
