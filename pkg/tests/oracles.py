"""Independent oracles used by the test suite.

exact_solve_model: two-phase tableau simplex in exact rational arithmetic
(Bland's rule, guaranteed to terminate), structurally unrelated to the
production solver: dense tableau, explicit substitution of bounds, and no
floating point anywhere. Feed it models with small rational coefficients.

brute_force_milp: exhaustive enumeration over binary assignments with the
exact LP oracle on the continuous remainder.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

INF = float("inf")


def _frac(x) -> Fraction:
    # Fraction(float) is the exact binary value; test models use dyadic data
    return Fraction(x)


class _Std:
    """min c'u, A u = b, u >= 0 built via variable substitution."""

    def __init__(self):
        self.cols = 0
        self.rows = []        # (dict col->Fraction, Fraction rhs)  equality form
        self.obj = {}
        self.obj_const = Fraction(0)

    def new_col(self):
        self.cols += 1
        return self.cols - 1


def _substitute(model, fixed=None):
    """Express every model variable as an affine combo of fresh u >= 0 columns."""
    std = _Std()
    exprs = {}  # var index -> (const, {col: coef})
    extra_rows = []
    fixed = fixed or {}
    for d in model.var_table:
        if d.index in fixed:
            exprs[d.index] = (_frac(fixed[d.index]), {})
            continue
        lb, ub = d.lb, d.ub
        if lb == ub:
            exprs[d.index] = (_frac(lb), {})
        elif lb != -INF:
            u = std.new_col()
            exprs[d.index] = (_frac(lb), {u: Fraction(1)})
            if ub != INF:
                extra_rows.append(({u: Fraction(1)}, "<=", _frac(ub) - _frac(lb)))
        elif ub != INF:
            u = std.new_col()
            exprs[d.index] = (_frac(ub), {u: Fraction(-1)})
        else:
            u, v = std.new_col(), std.new_col()
            exprs[d.index] = (Fraction(0), {u: Fraction(1), v: Fraction(-1)})
    all_rows = [(dict(r.coeffs), r.rel, _frac(r.rhs)) for r in model.rows]
    conv = []
    for coeffs, rel, rhs in all_rows:
        cols = {}
        const = Fraction(0)
        for idx, coef in coeffs.items():
            c = _frac(coef)
            base, combo = exprs[idx]
            const += c * base
            for u, uc in combo.items():
                cols[u] = cols.get(u, Fraction(0)) + c * uc
        conv.append((cols, rel, rhs - const))
    for cols, rel, rhs in extra_rows:
        conv.append((dict(cols), rel, rhs))
    sense = 1 if model.objective.direction == "min" else -1
    for idx, coef in model.objective.coeffs:
        c = sense * _frac(coef)
        base, combo = exprs[idx]
        std.obj_const += c * base
        for u, uc in combo.items():
            std.obj[u] = std.obj.get(u, Fraction(0)) + c * uc
    std.rows = conv
    return std, sense


def _tableau_simplex(std: _Std):
    """Two-phase Bland tableau on min c'u, rows (cols, rel, rhs), u >= 0."""
    n = std.cols
    m = len(std.rows)
    slacks = [i for i, (_, rel, _) in enumerate(std.rows) if rel != "="]
    width = n + len(slacks)
    T = []
    for i, (cols, rel, rhs) in enumerate(std.rows):
        row = [cols.get(j, Fraction(0)) for j in range(n)] + [Fraction(0)] * len(slacks)
        if rel != "=":
            row[n + slacks.index(i)] = Fraction(1) if rel == "<=" else Fraction(-1)
        row.append(rhs)
        T.append(row)
    for row in T:
        if row[-1] < 0:
            for k in range(len(row)):
                row[k] = -row[k]
    # artificial basis
    basis = []
    for i in range(m):
        T[i] = T[i][:-1] + [Fraction(0)] * m + [T[i][-1]]
        T[i][width + i] = Fraction(1)
        basis.append(width + i)
    total = width + m

    def reduced_costs(cost):
        cb = [cost[basis[i]] for i in range(m)]
        d = list(cost[:total])
        for j in range(total):
            s = Fraction(0)
            for i in range(m):
                if cb[i]:
                    s += cb[i] * T[i][j]
            d[j] = cost[j] - s
        return d

    def pivot(r, c):
        piv = T[r][c]
        T[r] = [v / piv for v in T[r]]
        for i in range(m):
            if i != r and T[i][c]:
                f = T[i][c]
                T[i] = [a - f * b for a, b in zip(T[i], T[r])]
        basis[r] = c

    def run(cost, allowed):
        while True:
            d = reduced_costs(cost)
            enter = None
            for j in range(total):
                if allowed[j] and d[j] < 0:
                    enter = j
                    break
            if enter is None:
                obj = sum(cost[basis[i]] * T[i][-1] for i in range(m))
                return "optimal", obj
            leave = None
            best = None
            for i in range(m):
                if T[i][enter] > 0:
                    ratio = T[i][-1] / T[i][enter]
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                return "unbounded", None
            pivot(leave, enter)

    cost1 = [Fraction(0)] * width + [Fraction(1)] * m
    allowed1 = [True] * total
    status, obj1 = run(cost1, allowed1)
    assert status == "optimal"
    if obj1 > 0:
        return "infeasible", None
    # drive artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= width:
            for j in range(width):
                if T[i][j] != 0:
                    pivot(i, j)
                    break
    cost2 = [std.obj.get(j, Fraction(0)) for j in range(n)] + [Fraction(0)] * (total - n)
    allowed2 = [True] * width + [False] * m
    status, obj2 = run(cost2, allowed2)
    if status == "unbounded":
        return "unbounded", None
    return "optimal", obj2 + std.obj_const


def exact_solve_model(model, fixed=None):
    """(status, Fraction objective in the model's own direction)."""
    std, sense = _substitute(model, fixed=fixed)
    status, obj = _tableau_simplex(std)
    if status != "optimal":
        return status, None
    return status, sense * obj


def brute_force_milp(model):
    """Enumerate all binary assignments; exact LP on the continuous rest."""
    binaries = model.binary_indices()
    best = None
    sense = 1 if model.objective.direction == "min" else -1
    any_unbounded = False
    for bits in itertools.product((0, 1), repeat=len(binaries)):
        fixed = dict(zip(binaries, bits))
        status, obj = exact_solve_model(model, fixed=fixed)
        if status == "unbounded":
            any_unbounded = True
            continue
        if status != "optimal":
            continue
        key = sense * obj
        if best is None or key < best[0]:
            best = (key, obj, dict(fixed))
    if best is None:
        return ("unbounded", None, None) if any_unbounded else ("infeasible", None, None)
    return "optimal", best[1], best[2]
