import math

import pytest

from pathopt.model import (BINARY, ModelError, PrevSolution, TemplateError,
                           al_name, bn_name, bp_name, check_solution, el_name,
                           nc_name, new_optimization, nl_name, xp_name)
from pathopt.paths import AnnotatedPath, PathSet
from pathopt.solver import export_lp_text, solve_lp, solve_milp
from pathopt.topology import TBA, Topology
from pathopt.traffic import TrafficClass, TrafficMatrix

from conftest import one_class, switch, undirected


def _ps(paths_by_class):
    ps = PathSet()
    for cid, paths in paths_by_class.items():
        ps.set_paths(cid, [AnnotatedPath(nodes=tuple(n), mbox_nodes=tuple(m))
                           for n, m in paths])
    return ps


@pytest.fixture
def diamond_builder(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    return new_optimization(diamond, diamond_tm, pptc)


def test_new_optimization_registers_xp_al(diamond_builder):
    names = diamond_builder.vars.names()
    assert names == [xp_name(0, 0), xp_name(0, 1), al_name(0)]
    assert diamond_builder.xp(0, 1) == "xp_c0_p1"


def test_new_optimization_counts():
    topo = Topology([switch(0), switch(1)], undirected([(0, 1)]))
    tm = TrafficMatrix([TrafficClass(i, 0, 1, 1.0, 1.0) for i in range(3)])
    pptc = _ps({i: [((0, 1), ())] * 5 for i in range(3)})
    b = new_optimization(topo, tm, pptc)
    assert len(b.vars) == 3 * 5 + 3


def test_new_optimization_requires_coverage(diamond, diamond_tm):
    with pytest.raises(ModelError, match="candidate paths"):
        new_optimization(diamond, diamond_tm, PathSet({0: []}))


def test_zero_classes_model_solves_to_zero(diamond):
    b = new_optimization(diamond, TrafficMatrix([]), PathSet())
    s = solve_lp(b.build())
    assert s.status == "optimal" and s.objective == 0.0


def test_binary_variable_kinds(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    before = len(b.vars)
    b.add_binary_variables({"path"})
    assert len(b.vars) == before + 2
    b.add_binary_variables({"node"})
    assert len(b.vars) == before + 2 + 4
    b.add_binary_variables({"edge"})
    assert len(b.vars) == before + 2 + 4 + 8
    assert b.vars[b.vars.index(bp_name(0, 0))].integrality == BINARY
    with pytest.raises(TemplateError):
        b.add_binary_variables({"path"})
    b2 = new_optimization(diamond, diamond_tm, pptc)
    b2.add_binary_variables(set())
    assert len(b2.vars) == before


def test_allocate_flow_rows(diamond_builder):
    diamond_builder.add_allocate_flow()
    row = diamond_builder.rows[-1]
    assert row.name == "alloc_c0" and row.rel == "=" and row.rhs == 0.0
    assert row.coeffs == ((0, 1.0), (1, 1.0), (2, -1.0))
    with pytest.raises(TemplateError):
        diamond_builder.add_allocate_flow()


def test_route_all_requires_allocate(diamond_builder):
    with pytest.raises(TemplateError):
        diamond_builder.add_route_all()
    diamond_builder.add_allocate_flow()
    diamond_builder.add_route_all()
    assert diamond_builder.rows[-1].coeffs == ((2, 1.0),)
    assert diamond_builder.rows[-1].rhs == 1.0


def test_route_all_makes_all_allocations_one(diamond_builder):
    diamond_builder.add_allocate_flow()
    diamond_builder.add_route_all()
    diamond_builder.set_objective({xp_name(0, 0): 1.0}, "min")
    s = solve_lp(diamond_builder.build())
    assert s.is_optimal
    assert abs(s.value(al_name(0)) - 1.0) <= 1e-9
    total = s.value(xp_name(0, 0)) + s.value(xp_name(0, 1))
    assert abs(total - 1.0) <= 1e-9


def test_max_all_flow_without_route_all_allows_partial(diamond, diamond_tm):
    # starve capacity so routing everything is impossible
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_allocate_flow()
    caps = {(0, 1): 2.0, (0, 2): 2.0}
    b.add_link_capacity("bandwidth", caps, lambda l, tc, p, r: tc.vol_bytes)
    b.set_predefined_objective("maxAllFlow")
    s = solve_lp(b.build())
    assert s.is_optimal
    assert s.objective == pytest.approx(0.4)  # 4 of 10 bytes fit
    assert s.value(al_name(0)) == pytest.approx(0.4)


def test_route_all_infeasible_when_demand_exceeds_caps(diamond_builder):
    diamond_builder.add_allocate_flow()
    diamond_builder.add_route_all()
    diamond_builder.add_link_capacity("bandwidth", {(0, 1): 2.0, (0, 2): 2.0},
                                      lambda l, tc, p, r: tc.vol_bytes)
    diamond_builder.set_predefined_objective("minMaxLinkLoad", resource="bandwidth")
    assert solve_lp(diamond_builder.build()).status == "infeasible"


def test_enforce_single_path(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_binary_variables({"path"})
    b.add_allocate_flow()
    b.add_route_all()
    b.add_enforce_single_path()
    b.add_link_capacity("bandwidth", {(0, 1): 1.0, (0, 2): 1.0},
                        lambda l, tc, p, r: tc.vol_bytes / 10.0)
    b.set_predefined_objective("minMaxLinkLoad", resource="bandwidth")
    s = solve_milp(b.build())
    assert s.is_optimal
    xs = sorted([s.value(xp_name(0, 0)), s.value(xp_name(0, 1))])
    assert xs == pytest.approx([0.0, 1.0], abs=1e-9)
    assert check_solution(b, s) == []


def test_enforce_single_path_empty_subset(diamond_builder):
    diamond_builder.add_binary_variables({"path"})
    n = len(diamond_builder.rows)
    diamond_builder.add_enforce_single_path(classes=[])
    assert len(diamond_builder.rows) == n


def test_link_capacity_bounds_el(diamond_builder):
    diamond_builder.add_allocate_flow()
    diamond_builder.add_link_capacity("bandwidth", {(0, 1): 10 ** 7},
                                      lambda l, tc, p, r: tc.vol_bytes)
    var = diamond_builder.vars[diamond_builder.vars.index(el_name(0, 1, "bandwidth"))]
    assert var.ub == 10 ** 7
    names = [r.name for r in diamond_builder.rows]
    assert "eldef_0_1_bandwidth" in names
    assert not any("0_2" in n for n in names)  # unlisted links unconstrained
    with pytest.raises(ModelError):
        diamond_builder.add_link_capacity("x", {(9, 9): 1.0}, lambda *a: 1.0)


def test_link_capacity_fn_zero_pins_el(diamond_builder):
    diamond_builder.add_allocate_flow()
    diamond_builder.add_route_all()
    diamond_builder.add_link_capacity("bandwidth", {(0, 1): 5.0}, lambda *a: 0.0)
    diamond_builder.set_predefined_objective("minMaxLinkLoad", resource="bandwidth")
    s = solve_lp(diamond_builder.build())
    assert s.is_optimal and s.value(el_name(0, 1, "bandwidth")) == pytest.approx(0.0)


def test_shared_link_load_one_point_two():
    # two classes forced over one link; 6+6 bytes over capacity 10 gives
    # a min-max utilization of 1.2 when the hard bound is left loose
    topo = Topology([switch(0), switch(1)], undirected([(0, 1)], bandwidth=10.0))
    tm = TrafficMatrix([TrafficClass(0, 0, 1, 0.006, 6.0),
                        TrafficClass(1, 0, 1, 0.006, 6.0)])
    pptc = _ps({0: [((0, 1), ())], 1: [((0, 1), ())]})
    b = new_optimization(topo, tm, pptc)
    b.add_allocate_flow()
    b.add_route_all()
    b.add_link_capacity("bandwidth", {(0, 1): 2.0},
                        lambda l, tc, p, r: tc.vol_bytes / 10.0)
    b.set_predefined_objective("minMaxLinkLoad", resource="bandwidth")
    s = solve_lp(b.build())
    assert s.is_optimal
    assert s.objective == pytest.approx(1.2, abs=1e-9)


def test_node_capacity_normalized_loads(chain_mbox):
    tm = TrafficMatrix([one_class(0, 3, vol_bytes=50000.0, chain=("fw", "ids"))])
    pptc = _ps({0: [((0, 1, 2, 3), (1, 2))]})
    b = new_optimization(chain_mbox, tm, pptc)
    b.add_allocate_flow()
    b.add_route_all()

    def cpu(node, tc, path, res):
        if node.id in path.mbox_nodes:
            return tc.vol_flows * tc.cpu_cost / node.resource_caps["cpu"]
        return 0.0

    b.add_node_capacity("cpu", {1: 1.0, 2: 1.0}, cpu)
    b.set_predefined_objective("minMaxNodeLoad", resource="cpu")
    s = solve_lp(b.build())
    assert s.is_optimal
    assert 0.0 <= s.value(nl_name(1, "cpu")) <= 1.0
    assert s.objective == pytest.approx(50.0 / 100.0)
    assert check_solution(b, s) == []


def test_node_capacity_tba_allocates(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_allocate_flow()
    b.add_route_all()
    b.add_node_capacity("cpu", {1: TBA, 2: TBA},
                        lambda n, tc, p, r: tc.vol_flows if n.id in p.nodes[1:-1] else 0.0)
    b.add_capacity_budget("cpu", [1, 2], 10.0)
    b.set_predefined_objective("minMaxNodeLoad", resource="cpu")
    s = solve_lp(b.build())
    assert s.is_optimal
    assert s.value(nc_name(1, "cpu")) >= s.value(nl_name(1, "cpu")) - 1e-9
    assert s.value(nc_name(1, "cpu")) + s.value(nc_name(2, "cpu")) <= 10.0 + 1e-9


def test_node_capacity_zero_demand_contributes_zero(diamond):
    tm = TrafficMatrix([TrafficClass(0, 0, 3, 0.0, 0.0)])
    pptc = _ps({0: [((0, 1, 3), ())]})
    b = new_optimization(diamond, tm, pptc)
    b.add_allocate_flow()
    b.add_route_all()
    b.add_node_capacity("cpu", {1: 1.0}, lambda n, tc, p, r: tc.vol_flows)
    b.set_predefined_objective("minMaxNodeLoad", resource="cpu")
    s = solve_lp(b.build())
    assert s.is_optimal and s.value(nl_name(1, "cpu")) == pytest.approx(0.0)


def test_node_capacity_per_path_tcam():
    # one hub on three paths, room for only two rules: a third path stays dark
    hub = switch(9)
    spokes = [switch(i) for i in range(6)]
    links = undirected([(0, 9), (1, 9), (2, 9), (3, 9), (4, 9), (5, 9)])
    topo = Topology(spokes + [hub], links)
    tm = TrafficMatrix([TrafficClass(i, i, i + 3, 1.0, 1.0) for i in range(3)])
    pptc = _ps({i: [((i, 9, i + 3), ())] for i in range(3)})
    b = new_optimization(topo, tm, pptc)
    b.add_binary_variables({"path"})
    b.add_allocate_flow()
    b.add_node_capacity_per_path("tcam", {9: 2.0}, lambda n, tc, p, r: 1.0)
    b.add_path_disable()
    b.set_predefined_objective("maxAllFlow")
    s = solve_milp(b.build())
    assert s.is_optimal
    assert s.objective == pytest.approx(2.0)
    enabled = [s.value(bp_name(i, 0)) for i in range(3)]
    assert sum(enabled) == pytest.approx(2.0)
    assert check_solution(b, s) == []


def test_node_capacity_per_path_zero_cap_disables(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_binary_variables({"path"})
    b.add_allocate_flow()
    b.add_route_all()
    b.add_node_capacity_per_path("tcam", {1: 0.0}, lambda n, tc, p, r: 1.0)
    b.add_path_disable()
    b.set_objective({al_name(0): 1.0}, "max")
    s = solve_milp(b.build())
    assert s.is_optimal
    assert s.value(bp_name(0, 0)) == pytest.approx(0.0)  # the path through 1
    assert s.value(xp_name(0, 1)) == pytest.approx(1.0)


def test_capacity_budget_requires_nc(diamond_builder):
    with pytest.raises(ModelError):
        diamond_builder.add_capacity_budget("cpu", [1], 5.0)


def test_require_all_nodes_blocks_path(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_binary_variables({"path", "node"})
    b.add_allocate_flow()
    b.add_route_all()
    b.add_require_all_nodes()
    b.add_path_disable()
    b.add_budget(lambda node: 1.0, 3.0)  # node 1 or 2 must stay dark
    b.define_var("Power", {bn_name(n): 1.0 for n in (0, 1, 2, 3)}, lb=0.0)
    b.set_objective({"Power": 1.0}, "min")
    s = solve_milp(b.build())
    assert s.is_optimal
    assert s.objective == pytest.approx(3.0)
    dark = [n for n in (1, 2) if s.value(bn_name(n)) < 0.5]
    assert len(dark) == 1
    lit_path = 0 if dark[0] == 2 else 1
    assert s.value(xp_name(0, lit_path)) == pytest.approx(1.0)
    assert check_solution(b, s) == []


def test_require_some_nodes_allows_single_enabled(triangle):
    tm = TrafficMatrix([one_class(0, 2)])
    pptc = _ps({0: [((0, 1, 2), ())]})
    b = new_optimization(triangle, tm, pptc)
    b.add_binary_variables({"path", "node"})
    b.add_allocate_flow()
    b.add_route_all()
    b.add_require_some_nodes()
    b.add_path_disable()
    b.add_budget(lambda node: 1.0, 1.0)
    b.set_objective({bn_name(1): 1.0}, "min")
    s = solve_milp(b.build())
    assert s.is_optimal  # one enabled node on the path suffices
    assert sum(s.value(bn_name(n)) for n in (0, 1, 2)) == pytest.approx(1.0)


def test_require_all_edges_kills_crossing_paths(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_binary_variables({"path", "edge"})
    b.add_allocate_flow()
    b.add_route_all()
    b.add_require_all_edges()
    b.add_path_disable()
    # forbid the (0,1) arm entirely
    b.define_var("Arm", {"be_0_1": 1.0}, lb=0.0, ub=0.0)
    b.set_objective({al_name(0): 1.0}, "max")
    s = solve_milp(b.build())
    assert s.is_optimal
    assert s.value(xp_name(0, 0)) == pytest.approx(0.0)
    assert s.value(xp_name(0, 1)) == pytest.approx(1.0)
    assert check_solution(b, s) == []


def test_path_disable_forces_zero_flow(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_binary_variables({"path"})
    b.add_allocate_flow()
    b.add_route_all()
    b.add_path_disable()
    b.define_var("P0", {bp_name(0, 0): 1.0}, lb=0.0, ub=0.0)  # force bp=0
    b.set_objective({al_name(0): 1.0}, "max")
    s = solve_milp(b.build())
    assert s.is_optimal
    assert s.value(xp_name(0, 0)) == pytest.approx(0.0)


def test_path_disable_all_disabled_infeasible(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_binary_variables({"path"})
    b.add_allocate_flow()
    b.add_route_all()
    b.add_path_disable()
    b.define_var("Sum", {bp_name(0, 0): 1.0, bp_name(0, 1): 1.0}, lb=0.0, ub=0.0)
    b.set_objective({al_name(0): 1.0}, "max")
    assert solve_milp(b.build()).status == "infeasible"


def test_budget_heterogeneous_costs(diamond, diamond_tm):
    # budget 3 with node costs {1:1, 2:3}: enabling both (cost 4) is out
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_binary_variables({"path", "node"})
    b.add_allocate_flow()
    b.add_require_all_nodes()
    b.add_path_disable()
    costs = {0: 0.0, 1: 1.0, 2: 3.0, 3: 0.0}
    b.add_budget(lambda node: costs[node.id], 3.0)
    b.set_predefined_objective("maxAllFlow")
    s = solve_milp(b.build())
    assert s.is_optimal
    assert s.value(bn_name(1)) + s.value(bn_name(2)) <= 1.0 + 1e-9
    assert s.objective == pytest.approx(1.0)


def test_budget_zero_with_route_all_infeasible(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_binary_variables({"path", "node"})
    b.add_allocate_flow()
    b.add_route_all()
    b.add_require_all_nodes()
    b.add_path_disable()
    b.add_budget(lambda node: 1.0, 0.0)
    b.set_predefined_objective("maxAllFlow")
    assert solve_milp(b.build()).status == "infeasible"


def test_max_all_flow_uncapacitated_counts_classes(triangle):
    tm = TrafficMatrix([one_class(0, 1, cid=0), one_class(1, 2, cid=1),
                        one_class(2, 0, cid=2)])
    pptc = _ps({0: [((0, 1), ())], 1: [((1, 2), ())], 2: [((2, 0), ())]})
    b = new_optimization(triangle, tm, pptc)
    b.add_allocate_flow()
    b.set_predefined_objective("maxAllFlow")
    s = solve_lp(b.build())
    assert s.objective == pytest.approx(3.0)


def test_min_max_link_load_diamond_splits(diamond_builder):
    diamond_builder.add_allocate_flow()
    diamond_builder.add_route_all()
    caps = {(0, 1): 1.0, (0, 2): 1.0, (1, 3): 1.0, (2, 3): 1.0}
    diamond_builder.add_link_capacity("bandwidth", caps,
                                      lambda l, tc, p, r: tc.vol_bytes / 10.0)
    diamond_builder.set_predefined_objective("minMaxLinkLoad", resource="bandwidth")
    s = solve_lp(diamond_builder.build())
    assert s.objective == pytest.approx(0.5)
    assert s.value(xp_name(0, 0)) == pytest.approx(0.5)


def test_min_routing_cost_prefers_short_path(triangle):
    tm = TrafficMatrix([one_class(0, 1)])
    pptc = _ps({0: [((0, 1), ()), ((0, 2, 1), ())]})
    b = new_optimization(triangle, tm, pptc)
    b.add_allocate_flow()
    b.add_route_all()
    b.set_predefined_objective("minRoutingCost",
                               routing_cost_fn=lambda p: len(p.nodes) - 1)
    s = solve_lp(b.build())
    assert s.is_optimal
    assert s.value(xp_name(0, 0)) == pytest.approx(1.0)
    assert s.objective == pytest.approx(1.0)


def test_predefined_objective_validation(diamond_builder):
    with pytest.raises(ModelError):
        diamond_builder.set_predefined_objective("nope")
    with pytest.raises(ModelError):
        diamond_builder.set_predefined_objective("minRoutingCost")
    with pytest.raises(ModelError):
        diamond_builder.set_predefined_objective("minMaxNodeLoad", resource="cpu")


def test_define_var_and_set_objective(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_binary_variables({"node", "edge"})
    power = {0: 10.0, 1: 5.0, 2: 5.0, 3: 10.0}
    b.define_var("SwitchPower", {bn_name(n): power[n] for n in range(4)}, lb=0.0)
    b.define_var("LinkPower", {f"be_{l.src}_{l.dst}": 1.0 for l in diamond.links},
                 lb=0.0)
    b.set_objective({"SwitchPower": 0.75, "LinkPower": 0.25}, "min")
    s = solve_milp(b.build())
    assert s.is_optimal and s.objective == pytest.approx(0.0)
    with pytest.raises(ModelError):
        b.define_var("SwitchPower", {}, 0, 0)  # duplicate
    with pytest.raises(ModelError):
        b.define_var("Other", {"missing_var": 1.0})
    with pytest.raises(ModelError):
        b.set_objective({"missing_var": 1.0}, "min")
    b2 = new_optimization(diamond, diamond_tm, pptc)
    b2.define_var("Zero", {}, lb=0.0, ub=0.0)
    b2.set_objective({"Zero": 1.0}, "min")
    s2 = solve_lp(b2.build())
    assert s2.objective == pytest.approx(0.0)


def test_min_churn_weight_one_reproduces_previous(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})

    def build(prev=None, w=None):
        b = new_optimization(diamond, diamond_tm, pptc)
        b.add_allocate_flow()
        b.add_route_all()
        caps = {(0, 1): 1.0, (0, 2): 1.0}
        b.add_node_capacity("cpu", {1: 1.0, 2: 1.0},
                            lambda n, tc, p, r: tc.vol_flows if n.id in p.nodes else 0.0)
        b.set_predefined_objective("minMaxNodeLoad", resource="cpu")
        if prev is not None:
            b.add_min_churn(prev, w, resource="cpu", base="node")
        return b

    base = build()
    s0 = solve_lp(base.build())
    assert s0.is_optimal
    prev = PrevSolution({(0, 0): s0.value(xp_name(0, 0)),
                         (0, 1): s0.value(xp_name(0, 1))})
    b1 = build(prev, w=1.0)
    s1 = solve_lp(b1.build())
    assert s1.is_optimal
    assert s1.value("Diff") == pytest.approx(0.0, abs=1e-9)
    for i in range(2):
        assert s1.value(xp_name(0, i)) == pytest.approx(s0.value(xp_name(0, i)), abs=1e-9)


def test_min_churn_weight_zero_matches_plain_objective(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})

    def build(prev=None, w=None):
        b = new_optimization(diamond, diamond_tm, pptc)
        b.add_allocate_flow()
        b.add_route_all()
        b.add_node_capacity("cpu", {1: 1.0, 2: 1.0},
                            lambda n, tc, p, r: tc.vol_flows if n.id in p.nodes else 0.0)
        b.set_predefined_objective("minMaxNodeLoad", resource="cpu")
        if prev is not None:
            b.add_min_churn(prev, w, resource="cpu", base="node")
        return b

    plain = solve_lp(build().build())
    churn0 = solve_lp(build(PrevSolution({(0, 0): 1.0, (0, 1): 0.0}), 0.0).build())
    assert churn0.objective == pytest.approx(plain.objective, abs=1e-9)


def test_min_churn_diff_tracks_forced_shift(diamond, diamond_tm):
    # previous solution pinned everything on path 0; now that arm is cut
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_allocate_flow()
    b.add_route_all()
    b.add_link_capacity("bandwidth", {(0, 1): 0.0, (0, 2): 20.0},
                        lambda l, tc, p, r: tc.vol_bytes)
    b.add_node_capacity("cpu", {1: 1.0, 2: 1.0},
                        lambda n, tc, p, r: 0.0)
    b.set_predefined_objective("minMaxNodeLoad", resource="cpu")
    b.add_min_churn(PrevSolution({(0, 0): 1.0, (0, 1): 0.0}), 0.5,
                    resource="cpu", base="node")
    s = solve_lp(b.build())
    assert s.is_optimal
    assert s.value(xp_name(0, 1)) == pytest.approx(1.0)
    assert s.value("Diff") == pytest.approx(1.0)  # largest |x - prev|


def test_min_churn_validates_weight(diamond_builder):
    with pytest.raises(ModelError):
        diamond_builder.add_min_churn(PrevSolution({}), 1.5, resource="cpu")


def test_missing_prev_pairs_default_to_zero():
    prev = PrevSolution({(0, 0): 0.25})
    assert prev.get(0, 0) == 0.25
    assert prev.get(0, 7) == 0.0
    with pytest.raises(ModelError):
        PrevSolution({(0, 0): 1.5})


def test_tba_binary_linking_rows_exist_both_orders(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    for order in ("binaries_first", "capacity_first"):
        b = new_optimization(diamond, diamond_tm, pptc)
        if order == "binaries_first":
            b.add_binary_variables({"node"})
        b.add_allocate_flow()
        b.add_node_capacity("cpu", {1: TBA, 2: TBA},
                            lambda n, tc, p, r: tc.vol_flows)
        if order == "capacity_first":
            b.add_binary_variables({"node"})
        names = [r.name for r in b.rows]
        assert "nctba_1_cpu" in names and "nctba_2_cpu" in names


def test_tba_disabled_node_gets_zero_capacity(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_binary_variables({"path", "node"})
    b.add_allocate_flow()
    b.add_route_all()
    b.add_node_capacity("cpu", {1: TBA, 2: TBA},
                        lambda n, tc, p, r: tc.vol_flows if n.id in p.nodes[1:-1] else 0.0)
    b.add_require_some_nodes()
    b.add_path_disable()
    b.add_budget(lambda node: 1.0, 2.0)
    b.set_predefined_objective("minMaxNodeLoad", resource="cpu")
    s = solve_milp(b.build())
    assert s.is_optimal
    for nid in (1, 2):
        if s.value(bn_name(nid)) < 0.5:
            assert s.value(nc_name(nid, "cpu")) <= 1e-9
    assert check_solution(b, s) == []


def test_model_serialization_reproducible(diamond, diamond_tm):
    def make():
        pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
        b = new_optimization(diamond, diamond_tm, pptc)
        b.add_binary_variables({"path", "node", "edge"})
        b.add_allocate_flow()
        b.add_route_all()
        b.add_link_capacity("bandwidth",
                            {l.key: 1.0 for l in diamond.links},
                            lambda l, tc, p, r: tc.vol_bytes / 10.0)
        b.add_require_all_nodes()
        b.add_require_all_edges()
        b.add_path_disable()
        b.set_predefined_objective("minMaxLinkLoad", resource="bandwidth")
        return export_lp_text(b.build())

    assert make() == make()


def test_activation_soundness_rows_present(diamond, diamond_tm):
    pptc = _ps({0: [((0, 1, 3), ()), ((0, 2, 3), ())]})
    b = new_optimization(diamond, diamond_tm, pptc)
    b.add_binary_variables({"path", "node"})
    b.add_allocate_flow()
    b.add_require_all_nodes()
    b.add_path_disable()
    model = b.build()
    by_name = {r.name: r for r in model.rows}
    for i, path in enumerate(pptc.paths(0)):
        pdis = by_name[f"pdis_c0_p{i}"]
        assert pdis.rel == "<=" and pdis.rhs == 0.0
        assert dict(pdis.coeffs) == {model.var_table.index(xp_name(0, i)): 1.0,
                                     model.var_table.index(bp_name(0, i)): -1.0}
        for nid in path.nodes:
            row = by_name[f"reqalln_c0_p{i}_n{nid}"]
            assert dict(row.coeffs) == {model.var_table.index(bp_name(0, i)): 1.0,
                                        model.var_table.index(bn_name(nid)): -1.0}
