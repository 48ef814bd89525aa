"""Orchestration: generate -> select -> build -> solve -> emit artifacts.

Also the reconfiguration flows: the two-step fault reaction (re-solve on the
surviving selected paths, fall back to re-selection when the objective turns
much worse) and churn-weighted re-solves against a previous solution.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field

from . import solver
from .model import OptBuilder, PrevSolution, check_solution, new_optimization
from .paths import (InfeasibleClassError, PathSet, build_dependency_index,
                    generate_paths, select_paths)
from .recipes import Recipe, get_recipe
from .rules import default_class_prefixes, generate_rules, rules_to_doc
from .topology import Topology
from .traffic import TrafficMatrix

log = logging.getLogger(__name__)

#: Above these sizes the bundled dense solver is no longer a good fit and the
#: auto policy hands the model to the HiGHS-backed reference backend.
AUTO_MAX_ROWS = 3000
AUTO_MAX_BINARIES = 80

DEFAULT_THETA = 0.1


class PipelineError(RuntimeError):
    pass


def pick_backend(model, backend: str = "auto") -> str:
    if backend != "auto":
        return backend
    if model.num_rows > AUTO_MAX_ROWS:
        return "reference"
    if len(model.binary_indices()) > AUTO_MAX_BINARIES:
        return "reference"
    return "bundled"


def solve_model(model, gap: float = solver.DEFAULT_GAP,
                node_limit: int = solver.DEFAULT_NODE_LIMIT,
                backend: str = "auto", time_limit: float = None) -> solver.Solution:
    chosen = pick_backend(model, backend)
    if model.has_integers():
        return solver.solve_milp(model, gap=gap, node_limit=node_limit,
                                 backend=chosen, time_limit=time_limit)
    if chosen == "reference":
        return solver.solve_lp(model, backend="reference")
    return solver.solve_lp(model)


@dataclass
class RunResult:
    solution: solver.Solution
    builder: OptBuilder
    generated: PathSet
    selected: PathSet
    fractions: dict
    metrics: dict
    rules: list = field(default_factory=list)


def generate_for_recipe(topo: Topology, tm: TrafficMatrix, recipe: Recipe,
                        workers: int = 0) -> PathSet:
    return generate_paths(topo, tm, predicate=recipe.predicate(topo, tm),
                          max_len=recipe.max_len, max_count=recipe.max_count,
                          chain_len=recipe.chain_len, workers=workers)


def build_for_recipe(topo, tm, recipe: Recipe, selected: PathSet) -> OptBuilder:
    builder = new_optimization(topo, tm, selected)
    recipe.configure(builder)
    return builder


def run_pipeline(topo: Topology, tm: TrafficMatrix, recipe: Recipe,
                 select_number: int = None, strategy: str = None, seed: int = 0,
                 gap: float = solver.DEFAULT_GAP, backend: str = "auto",
                 workers: int = 0, generated: PathSet = None,
                 class_prefixes: dict = None, with_rules: bool = True) -> RunResult:
    select_number = select_number or recipe.select_number
    strategy = strategy or recipe.strategy

    t0 = time.perf_counter()
    if generated is None:
        generated = generate_for_recipe(topo, tm, recipe, workers=workers)
    gen_ms = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    selected = select_paths(generated, strategy, select_number, seed=seed)
    select_ms = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    builder = build_for_recipe(topo, tm, recipe, selected)
    model = builder.build()
    build_ms = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    solution = solve_model(model, gap=gap, backend=backend)
    solve_ms = (time.perf_counter() - t0) * 1000

    fractions = builder.get_path_fractions(solution) if solution.is_optimal else {}
    rules = []
    if with_rules and solution.is_optimal:
        prefixes = class_prefixes or default_class_prefixes(tm)
        rules = generate_rules(topo, tm, selected, solution, prefixes)

    metrics = {
        "status": solution.status,
        "objective": solution.objective,
        "gen_ms": round(gen_ms, 3),
        "select_ms": round(select_ms, 3),
        "build_ms": round(build_ms, 3),
        "solve_ms": round(solve_ms, 3),
        "n_classes": len(tm),
        "n_paths_generated": generated.num_paths(),
        "n_paths_selected": selected.num_paths(),
        "n_vars": model.num_vars,
        "n_rows": model.num_rows,
        "n_rules": len(rules),
        "solver_iterations": solution.iterations,
        "solver_nodes": solution.nodes,
        "backend": pick_backend(model, backend),
    }
    return RunResult(solution=solution, builder=builder, generated=generated,
                     selected=selected, fractions=fractions, metrics=metrics,
                     rules=rules)


# ---------------------------------------------------------------------------
# Reconfiguration


def _match_prev_fractions(prev_selected: PathSet, prev_solution_doc: dict,
                          new_selected: PathSet) -> PrevSolution:
    """Carry previous xp values onto the new path indexing by path identity."""
    from .model import xp_name

    prev_vals = prev_solution_doc.get("values", {})
    by_identity = {}
    for cid, paths in prev_selected.items():
        for i, p in enumerate(paths):
            by_identity[(cid, p.nodes, p.mbox_nodes)] = prev_vals.get(xp_name(cid, i), 0.0)
    fractions = {}
    for cid, paths in new_selected.items():
        for i, p in enumerate(paths):
            fractions[(cid, i)] = by_identity.get((cid, p.nodes, p.mbox_nodes), 0.0)
    return PrevSolution(fractions)


def _filter_pathset(ps: PathSet, event_kind: str, target) -> PathSet:
    """Drop paths traversing a failed node or (undirected) link."""
    out = PathSet()
    for cid, paths in ps.items():
        if event_kind == "fail-node":
            keep = [p for p in paths if target not in p.nodes]
        else:
            s, d = target
            keep = [p for p in paths
                    if (s, d) not in p.links and (d, s) not in p.links]
        out.set_paths(cid, keep)
    return out


def _is_much_worse(objective, prev_objective, direction: str, theta: float) -> bool:
    if objective is None:
        return True
    if prev_objective is None:
        return False
    if direction == "min":
        return objective > (1.0 + theta) * prev_objective + 1e-12
    return objective < (1.0 - theta) * prev_objective - 1e-12


def _solve_step(topo, tm, recipe, selected, gap, backend, churn_weight, prev):
    builder = build_for_recipe(topo, tm, recipe, selected)
    if churn_weight > 0:
        base = recipe.churn_base
        if base is not None:
            builder.add_min_churn(prev, churn_weight, resource=base[1], base=base[0])
        else:
            builder.add_min_churn(prev, churn_weight, base=None)
    model = builder.build()
    solution = solve_model(model, gap=gap, backend=backend)
    return builder, model, solution


def reoptimize(topo: Topology, tm: TrafficMatrix, recipe: Recipe,
               generated: PathSet, prev_selected: PathSet, prev_solution_doc: dict,
               event: tuple, select_number: int = None, strategy: str = None,
               seed: int = 0, theta: float = DEFAULT_THETA,
               churn_weight: float = 0.0, gap: float = solver.DEFAULT_GAP,
               backend: str = "auto") -> RunResult:
    """Two-step reaction: re-solve on surviving paths, re-select if much worse.

    event is ("fail-node", node_id), ("fail-link", (src, dst)) or
    ("new-traffic", TrafficMatrix).
    """
    select_number = select_number or recipe.select_number
    strategy = strategy or recipe.strategy
    kind, target = event

    if kind == "new-traffic":
        new_tm = target
        old = {(tc.id, tc.ingress, tc.egress, tc.chain) for tc in tm}
        new = {(tc.id, tc.ingress, tc.egress, tc.chain) for tc in new_tm}
        if old != new:
            raise PipelineError("new traffic matrix must keep class ids, endpoints and chains")
        tm = new_tm
        surviving = prev_selected
        usable_generated = generated
        impacted = set()
    elif kind in ("fail-node", "fail-link"):
        index = build_dependency_index(prev_selected)
        if kind == "fail-node":
            impacted = index.impacted_by_node(target)
        else:
            impacted = index.impacted_by_link(*target)
        surviving = PathSet()
        for cid, paths in prev_selected.items():
            keep = [p for i, p in enumerate(paths) if (cid, i) not in impacted]
            surviving.set_paths(cid, keep)
        usable_generated = _filter_pathset(generated, kind, target)
    else:
        raise PipelineError(f"unknown event kind {kind!r}")

    prev_objective = prev_solution_doc.get("objective")
    direction = "min"

    t0 = time.perf_counter()
    step = 1
    step1_emptied = [cid for cid, paths in surviving.items() if not paths]
    solution = None
    builder = None
    selected = surviving
    if not step1_emptied:
        builder, model, solution = _solve_step(
            topo, tm, recipe, surviving, gap, backend, churn_weight,
            _match_prev_fractions(prev_selected, prev_solution_doc, surviving))
        direction = model.objective.direction
        worse = (not solution.is_optimal
                 or _is_much_worse(solution.objective, prev_objective, direction, theta))
    else:
        log.info("classes %s lost every selected path; going straight to re-selection",
                 step1_emptied)
        worse = True

    if worse:
        step = 2
        empty = [cid for cid, paths in usable_generated.items() if not paths]
        if empty:
            raise InfeasibleClassError(empty[0], "no surviving generated paths after event")
        selected = select_paths(usable_generated, strategy, select_number,
                                seed=seed, sticky=surviving)
        builder, model, solution = _solve_step(
            topo, tm, recipe, selected, gap, backend, churn_weight,
            _match_prev_fractions(prev_selected, prev_solution_doc, selected))
    solve_ms = (time.perf_counter() - t0) * 1000

    fractions = builder.get_path_fractions(solution) if solution.is_optimal else {}
    metrics = {
        "status": solution.status,
        "objective": solution.objective,
        "prev_objective": prev_objective,
        "fault_step": step,
        "impacted_paths": len(impacted),
        "diff": solution.values.get("Diff") if solution.is_optimal else None,
        "solve_ms": round(solve_ms, 3),
        "theta": theta,
        "churn_weight": churn_weight,
    }
    return RunResult(solution=solution, builder=builder, generated=usable_generated,
                     selected=selected, fractions=fractions, metrics=metrics)


# ---------------------------------------------------------------------------
# Benchmarks


BENCH_FIELDS = ["strategy", "select_number", "trial", "status", "objective",
                "objective_ratio_vs_all_paths", "baseline_flag",
                "build_ms", "solve_ms"]


def bench(topo: Topology, tm: TrafficMatrix, recipe: Recipe, select_numbers,
          strategies, trials: int = 1, seed: int = 0,
          gap: float = solver.DEFAULT_GAP, backend: str = "auto",
          baseline_max_paths: int = 20000, workers: int = 0) -> list:
    """Objective-vs-selection sweep against the all-generated-paths baseline."""
    generated = generate_for_recipe(topo, tm, recipe, workers=workers)

    baseline_obj = None
    baseline_flag = ""
    if generated.num_paths() > baseline_max_paths:
        baseline_flag = "baseline_skipped_too_many_paths"
    else:
        b_builder = build_for_recipe(topo, tm, recipe, generated)
        b_model = b_builder.build()
        b_solution = solve_model(b_model, gap=gap, backend=backend)
        if b_solution.is_optimal:
            baseline_obj = b_solution.objective
        else:
            baseline_flag = f"baseline_{b_solution.status}"

    rows = []
    for strategy in strategies:
        for n in select_numbers:
            for trial in range(trials):
                result = run_pipeline(topo, tm, recipe, select_number=n,
                                      strategy=strategy, seed=seed + trial,
                                      gap=gap, backend=backend,
                                      generated=generated, with_rules=False)
                ratio = ""
                if baseline_obj is not None and result.solution.is_optimal:
                    if abs(baseline_obj) > 1e-12:
                        ratio = result.solution.objective / baseline_obj
                    elif abs(result.solution.objective) <= 1e-12:
                        ratio = 1.0
                rows.append({
                    "strategy": strategy,
                    "select_number": n,
                    "trial": trial,
                    "status": result.solution.status,
                    "objective": result.solution.objective,
                    "objective_ratio_vs_all_paths": ratio,
                    "baseline_flag": baseline_flag,
                    "build_ms": result.metrics["build_ms"],
                    "solve_ms": result.metrics["solve_ms"],
                })
    return rows


def bench_rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_FIELDS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def metrics_to_csv(metrics: dict) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(metrics))
    writer.writeheader()
    writer.writerow(metrics)
    return buf.getvalue()
