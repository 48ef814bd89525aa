"""HiGHS-backed fallback for instances beyond the bundled solver's desk scale.

Used for the huge all-paths baseline formulations in benchmarks and
acceptance runs; the bundled simplex/branch-and-bound remains the default
engine everywhere else.
"""
from __future__ import annotations

import numpy as np
import scipy.optimize as sopt
import scipy.sparse as sp

from .solution import (INFEASIBLE, LIMIT, NUMERIC_FAILURE, OPTIMAL, UNBOUNDED,
                       Solution)

_MILP_STATUS = {0: OPTIMAL, 1: LIMIT, 2: INFEASIBLE, 3: UNBOUNDED, 4: NUMERIC_FAILURE}
_LP_STATUS = {0: OPTIMAL, 1: LIMIT, 2: INFEASIBLE, 3: UNBOUNDED, 4: NUMERIC_FAILURE}


def _constraint_arrays(model):
    n = model.num_vars
    m = model.num_rows
    rows_i, cols_j, vals = [], [], []
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    for i, row in enumerate(model.rows):
        for idx, coef in row.coeffs:
            rows_i.append(i)
            cols_j.append(idx)
            vals.append(coef)
        if row.rel == "<=":
            hi[i] = row.rhs
        elif row.rel == ">=":
            lo[i] = row.rhs
        else:
            lo[i] = hi[i] = row.rhs
    A = sp.csr_matrix((vals, (rows_i, cols_j)), shape=(m, n))
    return A, lo, hi


def _objective_vector(model):
    sense = 1.0 if model.objective.direction == "min" else -1.0
    c = np.zeros(model.num_vars)
    for idx, coef in model.objective.coeffs:
        c[idx] = sense * coef
    return c, sense


def _values(model, x) -> dict:
    names = model.var_table.names()
    return {names[i]: float(x[i]) for i in range(len(names))}


def solve_lp_reference(model) -> Solution:
    c, sense = _objective_vector(model)
    A, lo, hi = _constraint_arrays(model)
    bounds = [(d.lb, d.ub) for d in model.var_table]
    ub_mask = np.isfinite(hi)
    lo_mask = np.isfinite(lo) & ~np.isclose(lo, hi)
    eq_mask = np.isfinite(lo) & np.isclose(lo, hi)
    A_ub = sp.vstack([A[ub_mask & ~eq_mask], -A[lo_mask]]) if (ub_mask & ~eq_mask).any() or lo_mask.any() else None
    b_ub = np.concatenate([hi[ub_mask & ~eq_mask], -lo[lo_mask]]) if A_ub is not None else None
    A_eq = A[eq_mask] if eq_mask.any() else None
    b_eq = hi[eq_mask] if eq_mask.any() else None
    res = sopt.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                       bounds=bounds, method="highs")
    status = _LP_STATUS.get(res.status, NUMERIC_FAILURE)
    if status != OPTIMAL:
        return Solution(status=status)
    return Solution(status=OPTIMAL, objective=float(sense * res.fun),
                    values=_values(model, res.x),
                    iterations=int(getattr(res, "nit", 0)))


def solve_milp_reference(model, gap: float = 1e-4, time_limit: float = None) -> Solution:
    c, sense = _objective_vector(model)
    A, lo, hi = _constraint_arrays(model)
    integrality = np.zeros(model.num_vars)
    for idx in model.binary_indices():
        integrality[idx] = 1
    lb = np.array([d.lb for d in model.var_table])
    ub = np.array([d.ub for d in model.var_table])
    options = {"mip_rel_gap": gap}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    constraints = sopt.LinearConstraint(A, lo, hi) if model.num_rows else []
    res = sopt.milp(c=c, constraints=constraints,
                    integrality=integrality, bounds=sopt.Bounds(lb, ub),
                    options=options)
    status = _MILP_STATUS.get(res.status, NUMERIC_FAILURE)
    if res.x is None:
        return Solution(status=status if status != OPTIMAL else NUMERIC_FAILURE)
    values = _values(model, res.x)
    for idx in model.binary_indices():
        name = model.var_table[idx].name
        values[name] = float(round(values[name]))
    return Solution(status=status, objective=float(sense * res.fun), values=values,
                    mip_gap=float(res.mip_gap) if res.mip_gap is not None else None,
                    nodes=int(res.mip_node_count or 0))
