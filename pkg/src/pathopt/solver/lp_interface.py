"""Glue between compiled models and the simplex core: LP solve + warm restart."""
from __future__ import annotations

import numpy as np

from .simplex import BASIC, NB_FREE, NB_LB, NB_UB, SimplexSolver, build_standard_form
from .solution import OPTIMAL, Solution

_STATUS_CODE = {NB_LB: "L", NB_UB: "U", BASIC: "B", NB_FREE: "F"}
_CODE_STATUS = {v: k for k, v in _STATUS_CODE.items()}


def _export_basis(sf, res) -> dict:
    codes = [_STATUS_CODE[int(s)] for s in res.vstat]
    n = sf.n_struct
    return {
        "vars": {sf.var_names[j]: codes[j] for j in range(n)},
        "slacks": {sf.row_names[i]: codes[n + i] for i in range(len(sf.row_names))},
        "basic_order": [int(j) for j in res.basis],
    }


def _import_basis(sf, basis_doc):
    if not basis_doc:
        return None
    n = sf.n_struct
    m = len(sf.row_names)
    vstat = np.full(n + m, NB_LB, dtype=np.int8)
    for j in range(n + m):
        if not np.isfinite(sf.lb[j]):
            vstat[j] = NB_UB if np.isfinite(sf.ub[j]) else NB_FREE
    var_codes = basis_doc.get("vars", {})
    for j, name in enumerate(sf.var_names):
        if name in var_codes:
            vstat[j] = _CODE_STATUS.get(var_codes[name], NB_LB)
    slack_codes = basis_doc.get("slacks", {})
    for i, name in enumerate(sf.row_names):
        if name in slack_codes:
            vstat[n + i] = _CODE_STATUS.get(slack_codes[name], NB_LB)
    basic = [j for j in range(n + m) if vstat[j] == BASIC]
    if len(basic) != m:
        return None
    order = basis_doc.get("basic_order")
    if order and sorted(order) == sorted(basic):
        basic = order
    return vstat, np.array(basic, dtype=int)


def assemble_lp_solution(model, sf, res) -> Solution:
    if res.status != OPTIMAL:
        return Solution(status=res.status, iterations=res.iterations,
                        trace=list(res.trace or []))
    names = model.var_table.names()
    values = {names[j]: float(res.x[j]) for j in range(len(names))}
    duals = {sf.row_names[i]: float(sf.sense * res.y[i]) for i in range(len(sf.row_names))}
    # dual objective: y'b plus reduced-cost contributions of nonbasic bounds
    dual_obj = float(res.y @ sf.b) if len(sf.row_names) else 0.0
    for j in range(len(res.vstat)):
        if res.vstat[j] == NB_LB and np.isfinite(sf.lb[j]):
            dual_obj += float(res.reduced[j]) * float(sf.lb[j])
        elif res.vstat[j] == NB_UB and np.isfinite(sf.ub[j]):
            dual_obj += float(res.reduced[j]) * float(sf.ub[j])
    return Solution(status=OPTIMAL, objective=float(sf.sense * res.objective),
                    values=values, iterations=res.iterations,
                    duals=duals, dual_objective=float(sf.sense * dual_obj),
                    basis=_export_basis(sf, res), trace=list(res.trace or []))


def solve_lp_bundled(model, basis_doc: dict = None) -> Solution:
    sf = build_standard_form(model)
    solver = SimplexSolver(sf)
    start = _import_basis(sf, basis_doc) if basis_doc else None
    res = solver.solve(start=start)
    if start is not None and res.status != OPTIMAL:
        res = solver.solve()  # warm basis misled us; retry cold
    return assemble_lp_solution(model, sf, res)
