import json

import pytest

from pathopt.paths import (AnnotatedPath, InfeasibleClassError, PathError,
                           PathSet, build_dependency_index, enumerate_paths,
                           generate_paths, has_mbox_predicate, load_pathset,
                           null_predicate, pathset_from_doc, pathset_to_doc,
                           save_pathset, select_paths, waypoint_predicate)
from pathopt.topology import Link, Node, Topology
from pathopt.traffic import TrafficClass, TrafficMatrix

from conftest import one_class, switch, undirected


def test_annotated_path_invariants():
    p = AnnotatedPath(nodes=(0, 1, 2), mbox_nodes=(1,))
    assert p.links == ((0, 1), (1, 2))
    with pytest.raises(PathError):
        AnnotatedPath(nodes=(0, 1, 0))
    with pytest.raises(PathError):
        AnnotatedPath(nodes=(0, 1, 2), mbox_nodes=(5,))
    with pytest.raises(PathError):
        AnnotatedPath(nodes=(0, 1, 2), mbox_nodes=(2, 1))


def test_triangle_enumeration(triangle):
    tc = one_class(0, 1)
    paths = enumerate_paths(triangle, tc, max_len=3)
    assert [p.nodes for p in paths] == [(0, 1), (0, 2, 1)]


def test_enumeration_respects_max_len(triangle):
    tc = one_class(0, 1)
    paths = enumerate_paths(triangle, tc, max_len=2)
    assert [p.nodes for p in paths] == [(0, 1)]


def test_enumeration_unknown_endpoint(triangle):
    with pytest.raises(PathError):
        enumerate_paths(triangle, one_class(0, 9), max_len=3)


def test_reject_all_predicate(triangle):
    paths = enumerate_paths(triangle, one_class(0, 1), predicate=lambda p: False)
    assert paths == []


def test_max_count_counts_survivors(triangle):
    tc = one_class(0, 1)
    paths = enumerate_paths(triangle, tc, max_count=1)
    assert len(paths) == 1
    # reject the two-hop path: the cap still lets the longer one through
    paths = enumerate_paths(triangle, tc, max_count=1,
                            predicate=lambda p: len(p.nodes) > 2)
    assert [p.nodes for p in paths] == [(0, 2, 1)]


def _mbox_line():
    nodes = [
        switch(0),
        switch(1, services=("switch", "fw", "ids")),
        switch(2, services=("switch", "fw", "ids")),
        switch(3),
    ]
    return Topology(nodes, undirected([(0, 1), (1, 2), (2, 3)]))


def test_mbox_expansion_single_placement():
    # both middle nodes carry both services; in-order placement of (fw, ids)
    # over distinct nodes leaves exactly one annotated path
    topo = _mbox_line()
    tc = one_class(0, 3, chain=("fw", "ids"))
    paths = enumerate_paths(topo, tc, chain_len=2, max_len=4)
    assert len(paths) == 1
    assert paths[0].nodes == (0, 1, 2, 3)
    assert paths[0].mbox_nodes == (1, 2)


def test_mbox_expansion_multiple_placements():
    nodes = [
        switch(0),
        switch(1, services=("switch", "fw")),
        switch(2, services=("switch", "ids")),
        switch(3, services=("switch", "ids")),
        switch(4),
    ]
    topo = Topology(nodes, undirected([(0, 1), (1, 2), (2, 3), (3, 4)]))
    tc = one_class(0, 4, chain=("fw", "ids"))
    paths = enumerate_paths(topo, tc, chain_len=2, max_len=5)
    assert [(p.nodes, p.mbox_nodes) for p in paths] == [
        ((0, 1, 2, 3, 4), (1, 2)),
        ((0, 1, 2, 3, 4), (1, 3)),
    ]


def test_mbox_expansion_empty_chain_uses_mbox_typed_nodes():
    nodes = [switch(0), switch(1, services=("switch", "mbox")), switch(2)]
    topo = Topology(nodes, undirected([(0, 1), (1, 2)]))
    tc = one_class(0, 2)  # no chain
    paths = enumerate_paths(topo, tc, chain_len=1, max_len=3)
    assert [(p.nodes, p.mbox_nodes) for p in paths] == [((0, 1, 2), (1,))]


def test_waypoint_predicate_cases():
    nodes = [
        switch(0),
        switch(1, services=("switch", "fw")),
        switch(2, services=("switch", "proxy")),
        switch(3, services=("switch", "ids")),
        switch(4),
    ]
    topo = Topology(nodes, undirected([(0, 1), (1, 2), (2, 3), (3, 4)]))
    pred = waypoint_predicate(topo, ("fw", "ids"))
    path = lambda mboxes: AnnotatedPath(nodes=(0, 1, 2, 3, 4), mbox_nodes=mboxes)
    assert pred(path((1, 3)))          # exact (fw, ids)
    assert pred(path((1, 2, 3)))       # (fw, proxy, ids) contains it in order
    assert not pred(path((3,)))        # ids alone
    rev = waypoint_predicate(topo, ("ids", "fw"))
    assert not rev(path((1, 3)))       # order violated
    with pytest.raises(PathError):
        waypoint_predicate(topo, ())


def test_has_mbox_predicate():
    assert has_mbox_predicate(AnnotatedPath(nodes=(0, 1), mbox_nodes=(1,)))
    assert not has_mbox_predicate(AnnotatedPath(nodes=(0, 1)))
    assert null_predicate(AnnotatedPath(nodes=(0, 1)))


def _pathset(paths_by_class):
    ps = PathSet()
    for cid, paths in paths_by_class.items():
        ps.set_paths(cid, [AnnotatedPath(nodes=tuple(p)) for p in paths])
    return ps


def test_select_shortest_tie_break():
    ps = _pathset({0: [(0, 2, 3, 1), (0, 1), (0, 3, 1), (0, 2, 1)]})
    out = select_paths(ps, "shortest", 2)
    assert [p.nodes for p in out.paths(0)] == [(0, 1), (0, 2, 1)]


def test_select_all_when_enough():
    ps = _pathset({0: [(0, 1), (0, 2, 1)]})
    out = select_paths(ps, "shortest", 10)
    assert [p.nodes for p in out.paths(0)] == [(0, 1), (0, 2, 1)]


def test_select_random_deterministic_and_nested():
    ps = _pathset({0: [(0, 1), (0, 2, 1), (0, 3, 1), (0, 4, 1), (0, 5, 1)]})
    a = select_paths(ps, "random", 3, seed=42)
    b = select_paths(ps, "random", 3, seed=42)
    assert [p.nodes for p in a.paths(0)] == [p.nodes for p in b.paths(0)]
    bigger = select_paths(ps, "random", 4, seed=42)
    assert [p.nodes for p in bigger.paths(0)][:3] == [p.nodes for p in a.paths(0)]


def test_select_random_per_class_streams():
    ps = _pathset({0: [(0, 1), (0, 2, 1), (0, 3, 1)],
                   1: [(1, 0), (1, 2, 0), (1, 3, 0)]})
    sel = select_paths(ps, "random", 2, seed=9)
    ps2 = _pathset({1: [(1, 0), (1, 2, 0), (1, 3, 0)]})
    sel2 = select_paths(ps2, "random", 2, seed=9)
    assert [p.nodes for p in sel.paths(1)] == [p.nodes for p in sel2.paths(1)]


def test_select_zero_paths_is_infeasible_class():
    ps = PathSet({0: []})
    with pytest.raises(InfeasibleClassError, match="0"):
        select_paths(ps, "shortest", 1)


def test_select_sticky_retains_previous():
    ps = _pathset({0: [(0, 1), (0, 2, 1), (0, 3, 1)]})
    prev = _pathset({0: [(0, 3, 1)]})
    out = select_paths(ps, "shortest", 2, sticky=prev)
    assert [p.nodes for p in out.paths(0)] == [(0, 3, 1), (0, 1)]


def test_selection_is_subset_and_bounded(triangle):
    tm = TrafficMatrix([one_class(0, 1, cid=0), one_class(1, 2, cid=1)])
    generated = generate_paths(triangle, tm, max_len=3)
    for strategy in ("shortest", "random"):
        sel = select_paths(generated, strategy, 1, seed=4)
        for cid, paths in sel.items():
            assert len(paths) <= 1
            gen_keys = {(p.nodes, p.mbox_nodes) for p in generated.paths(cid)}
            assert all((p.nodes, p.mbox_nodes) in gen_keys for p in paths)


def test_predicate_holds_post_selection(parallel_mbox):
    tm = TrafficMatrix([one_class(0, 5, chain=("fw", "ids"))])
    pred = waypoint_predicate(parallel_mbox, ("fw", "ids"))
    generated = generate_paths(parallel_mbox, tm, predicate=pred, chain_len=2)
    sel = select_paths(generated, "random", 2, seed=0)
    assert all(pred(p) for p in sel.paths(0))


def test_parallel_generation_matches_sequential(abilene):
    from pathopt.traffic import gravity_matrix

    tm = TrafficMatrix(gravity_matrix(abilene, 100.0, seed=1).classes[:6])
    seq = generate_paths(abilene, tm, max_len=6, max_count=50, workers=0)
    par = generate_paths(abilene, tm, max_len=6, max_count=50, workers=2)
    assert pathset_to_doc(seq) == pathset_to_doc(par)


def test_pathset_cache_round_trip(tmp_path, triangle):
    tm = TrafficMatrix([one_class(0, 1)])
    ps = generate_paths(triangle, tm, max_len=3)
    path = tmp_path / "cache.json"
    save_pathset(ps, path)
    again = load_pathset(path)
    assert again == ps
    doc = json.loads(path.read_text())
    assert doc == {"0": [{"nodes": [0, 1], "mbox": []},
                         {"nodes": [0, 2, 1], "mbox": []}]}


def test_dependency_index_single_path():
    ps = _pathset({0: [(0, 1, 2)]})
    index = build_dependency_index(ps)
    for element in (0, 1, 2, (0, 1), (1, 2)):
        assert index.paths_through(element) == {(0, 0)}


def test_dependency_index_disjoint_paths():
    ps = _pathset({0: [(0, 1)], 1: [(2, 3)]})
    index = build_dependency_index(ps)
    assert index.paths_through(0) == {(0, 0)}
    assert index.paths_through(2) == {(1, 0)}


def test_dependency_index_diamond_sharing():
    ps = _pathset({0: [(0, 1, 3), (0, 2, 3)]})
    index = build_dependency_index(ps)
    assert index.paths_through(0) == {(0, 0), (0, 1)}
    assert index.paths_through(3) == {(0, 0), (0, 1)}
    assert index.paths_through(1) == {(0, 0)}
    assert index.paths_through(2) == {(0, 1)}
    assert index.impacted_by_link(1, 3) == {(0, 0)}
    assert index.impacted_by_node(2) == {(0, 1)}
