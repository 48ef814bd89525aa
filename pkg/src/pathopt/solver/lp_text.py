"""Canonical LP-format text export.

Deterministic byte output: variables appear in table order, coefficients are
printed with 17 significant digits, sections are Minimize/Maximize, Subject
To, Bounds, Binary, End. Binary variables are implied to lie in [0, 1] and are
listed only in the Binary section. Infinite bounds print as -infinity and
+infinity; a fully unbounded variable prints as "<name> free".
"""
from __future__ import annotations

import math


def _num(x: float) -> str:
    return "%.17g" % x


def _terms(model, coeffs) -> str:
    names = model.var_table.names()
    if not coeffs:
        if not names:
            raise ValueError("cannot export a term-less row in a model with no variables")
        return f"0 {names[0]}"
    parts = []
    for k, (idx, coef) in enumerate(coeffs):
        mag = _num(abs(coef))
        if k == 0:
            parts.append(f"{'-' if coef < 0 else ''}{mag} {names[idx]}")
        else:
            parts.append(f"{'-' if coef < 0 else '+'} {mag} {names[idx]}")
    return " ".join(parts)


def export_lp_text(model) -> str:
    lines = []
    lines.append("Minimize" if model.objective.direction == "min" else "Maximize")
    lines.append(f" obj: {_terms(model, model.objective.coeffs)}")
    lines.append("Subject To")
    for row in model.rows:
        lines.append(f" {row.name}: {_terms(model, row.coeffs)} {row.rel} {_num(row.rhs)}")
    lines.append("Bounds")
    binaries = []
    for d in model.var_table:
        if d.integrality == "binary":
            binaries.append(d.name)
            continue
        lo_inf, hi_inf = math.isinf(d.lb), math.isinf(d.ub)
        if lo_inf and hi_inf:
            lines.append(f" {d.name} free")
        elif d.lb == d.ub:
            lines.append(f" {d.name} = {_num(d.lb)}")
        else:
            lo = "-infinity" if lo_inf else _num(d.lb)
            hi = "+infinity" if hi_inf else _num(d.ub)
            lines.append(f" {lo} <= {d.name} <= {hi}")
    if binaries:
        lines.append("Binary")
        for name in binaries:
            lines.append(f" {name}")
    lines.append("End")
    return "\n".join(lines) + "\n"
