"""Exact LP/MILP solving for compiled program models.

solve_lp / solve_milp run the bundled simplex and branch-and-bound by
default; backend="reference" switches to SciPy's HiGHS wrappers for
instances beyond desk scale (used by the all-paths baselines).
"""
from __future__ import annotations

from .branch_bound import (DEFAULT_GAP, DEFAULT_NODE_LIMIT, evaluate_violation,
                           solve_milp_bundled)
from .lp_interface import solve_lp_bundled
from .lp_text import export_lp_text
from .reference import solve_lp_reference, solve_milp_reference
from .solution import (INFEASIBLE, LIMIT, NUMERIC_FAILURE, OPTIMAL, UNBOUNDED,
                       Solution, solution_from_doc)

__all__ = [
    "Solution", "solution_from_doc", "solve_lp", "solve_milp", "resolve_warm",
    "export_lp_text", "evaluate_violation",
    "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "LIMIT", "NUMERIC_FAILURE",
    "DEFAULT_GAP", "DEFAULT_NODE_LIMIT",
]


def solve_lp(model, backend: str = "bundled") -> Solution:
    """Solve the continuous relaxation-free model (no binaries allowed)."""
    if model.has_integers():
        raise ValueError("model has binary variables; use solve_milp")
    if backend == "reference":
        return solve_lp_reference(model)
    if backend != "bundled":
        raise ValueError(f"unknown backend {backend!r}")
    return solve_lp_bundled(model)


def solve_milp(model, gap: float = DEFAULT_GAP, node_limit: int = DEFAULT_NODE_LIMIT,
               backend: str = "bundled", time_limit: float = None) -> Solution:
    """Branch-and-bound on binaries; plain LP when the model has none."""
    if backend == "reference":
        if model.has_integers():
            return solve_milp_reference(model, gap=gap, time_limit=time_limit)
        return solve_lp_reference(model)
    if backend != "bundled":
        raise ValueError(f"unknown backend {backend!r}")
    return solve_milp_bundled(model, gap=gap, node_limit=node_limit)


def resolve_warm(model, prev: Solution, gap: float = DEFAULT_GAP,
                 node_limit: int = DEFAULT_NODE_LIMIT) -> Solution:
    """Re-solve starting from a previous solution's basis or incumbent.

    Unknown variables in the previous solution are ignored; the result
    matches a cold solve up to tolerance, usually in fewer iterations.
    """
    if model.has_integers():
        return solve_milp_bundled(model, gap=gap, node_limit=node_limit,
                                  warm_values=prev.values if prev else None)
    return solve_lp_bundled(model, basis_doc=prev.basis if prev else None)
