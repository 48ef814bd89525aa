"""Branch-and-bound over binary variables with LP relaxations per node.

Node selection is best-bound with ties broken toward the newest node, so
plateaus are explored depth-first and an incumbent appears quickly. Branching
picks the most fractional binary, ties broken by lowest variable index.
Children reuse the parent basis as a warm start when it is still feasible.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

from .simplex import (TOL_INT, SimplexSolver, build_standard_form)
from .solution import (INFEASIBLE, LIMIT, NUMERIC_FAILURE, OPTIMAL, UNBOUNDED,
                       Solution)

DEFAULT_GAP = 1e-4
DEFAULT_NODE_LIMIT = 100000


def evaluate_violation(model, values: dict) -> float:
    """Largest constraint/bound violation of a candidate assignment."""
    worst = 0.0
    for d in model.var_table:
        v = values.get(d.name, 0.0)
        worst = max(worst, d.lb - v, v - d.ub)
    for row in model.rows:
        act = sum(coef * values.get(model.var_table[idx].name, 0.0)
                  for idx, coef in row.coeffs)
        if row.rel == "<=":
            worst = max(worst, act - row.rhs)
        elif row.rel == ">=":
            worst = max(worst, row.rhs - act)
        else:
            worst = max(worst, abs(act - row.rhs))
    return worst


def _values_dict(model, x) -> dict:
    names = model.var_table.names()
    return {names[i]: float(x[i]) for i in range(len(names))}


def _snap_binaries(model, values: dict) -> dict:
    for idx in model.binary_indices():
        name = model.var_table[idx].name
        values[name] = float(round(values[name]))
    return values


def solve_milp_bundled(model, gap: float = DEFAULT_GAP,
                       node_limit: int = DEFAULT_NODE_LIMIT,
                       warm_values: dict = None) -> Solution:
    if gap < 0:
        raise ValueError("gap must be non-negative")
    binaries = model.binary_indices()
    sf = build_standard_form(model)
    solver = SimplexSolver(sf)
    sense = sf.sense

    root = solver.solve()
    total_iters = root.iterations
    if root.status in (INFEASIBLE, UNBOUNDED, NUMERIC_FAILURE):
        return Solution(status=root.status, iterations=total_iters, nodes=1)
    if not binaries:
        return _lp_solution(model, sf, root)

    inc_values = None
    inc_obj = math.inf  # min sense
    if warm_values:
        candidate = {n: float(warm_values[n]) for n in model.var_table.names()
                     if n in warm_values}
        if len(candidate) == model.num_vars:
            integral = all(abs(candidate[model.var_table[i].name]
                               - round(candidate[model.var_table[i].name])) <= TOL_INT
                           for i in binaries)
            if integral and evaluate_violation(model, candidate) <= 1e-6:
                obj = sum(coef * candidate[model.var_table[i].name]
                          for i, coef in model.objective.coeffs)
                inc_values = _snap_binaries(model, dict(candidate))
                inc_obj = sense * obj

    seq = 0
    heap = []  # (bound, -seq, overrides, parent_basis)
    heapq.heappush(heap, (root.objective, 0, {}, None))
    nodes = 0
    proven = False

    while heap:
        bound, negseq, overrides, start = heap[0]
        global_lb = bound
        if inc_values is not None:
            rel_gap = (inc_obj - global_lb) / max(1e-9, abs(inc_obj))
            if rel_gap <= gap:
                proven = True
                break
        heapq.heappop(heap)
        if bound >= inc_obj - 1e-9:
            continue
        if nodes >= node_limit:
            break
        nodes += 1

        lb = sf.lb.copy()
        ub = sf.ub.copy()
        for j, (lo, hi) in overrides.items():
            lb[j], ub[j] = lo, hi
        res = solver.solve(lb=lb, ub=ub, start=start)
        total_iters += res.iterations
        if res.status == NUMERIC_FAILURE:
            return Solution(status=NUMERIC_FAILURE, iterations=total_iters, nodes=nodes)
        if res.status != OPTIMAL:
            continue
        if res.objective >= inc_obj - 1e-9:
            continue
        frac = [(min(res.x[j] - math.floor(res.x[j]),
                     math.ceil(res.x[j]) - res.x[j]), j) for j in binaries]
        frac = [(f, j) for f, j in frac if f > TOL_INT]
        if not frac:
            inc_obj = res.objective
            inc_values = _snap_binaries(model, _values_dict(model, res.x))
            continue
        best_f = max(f for f, _ in frac)
        branch_j = min(j for f, j in frac if f >= best_f - 1e-12)
        basis = (res.vstat, res.basis)
        for lo, hi in ((0.0, 0.0), (1.0, 1.0)):
            child = dict(overrides)
            child[branch_j] = (lo, hi)
            seq += 1
            heapq.heappush(heap, (res.objective, -seq, child, basis))

    if inc_values is None:
        if nodes >= node_limit and heap:
            return Solution(status=LIMIT, iterations=total_iters, nodes=nodes)
        return Solution(status=INFEASIBLE, iterations=total_iters, nodes=nodes)

    global_lb = heap[0][0] if (heap and not proven) else inc_obj
    mip_gap = max(0.0, (inc_obj - global_lb) / max(1e-9, abs(inc_obj)))
    status = OPTIMAL if (proven or not heap or mip_gap <= gap) else LIMIT
    return Solution(status=status, objective=sense * inc_obj, values=inc_values,
                    iterations=total_iters, nodes=nodes, mip_gap=mip_gap)


def _lp_solution(model, sf, res) -> Solution:
    from .lp_interface import assemble_lp_solution

    return assemble_lp_solution(model, sf, res)
