"""Bounded-variable revised simplex with a dense basis inverse.

Constraints become equalities with one slack per row (slack bounds encode the
relation); a composite phase 1 over artificial columns establishes
feasibility. Pricing uses the largest-reduced-cost rule and drops to Bland's
rule after a stall, which guarantees termination. The basis inverse is
refreshed from scratch every ``refactor_every`` pivots to wash out drift;
a singular refactorization is reported as a numeric failure rather than
papered over.

Default pricing tolerance is tighter than the feasibility tolerance so
optimal objectives track a rational-arithmetic reference within 1e-6.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .solution import INFEASIBLE, NUMERIC_FAILURE, OPTIMAL, UNBOUNDED

NB_LB, NB_UB, BASIC, NB_FREE = 0, 1, 2, 3

TOL_FEAS = 1e-6
TOL_OPT = 1e-9
TOL_PIV = 1e-9
TOL_INT = 1e-6
REFACTOR_EVERY = 64
STALL_LIMIT = 100


class NumericError(RuntimeError):
    """Basis factorization failed beyond repair."""


@dataclass
class StandardForm:
    """min c'x subject to A x = b, lb <= x <= ub (structural columns first)."""

    A: sp.csc_matrix
    AT: sp.csr_matrix
    b: np.ndarray
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    n_struct: int
    sense: float  # +1 when the original objective was min, -1 for max
    var_names: list
    row_names: list


def build_standard_form(model) -> StandardForm:
    n = model.num_vars
    m = model.num_rows
    lb = np.full(n + m, -np.inf)
    ub = np.full(n + m, np.inf)
    for d in model.var_table:
        lb[d.index] = d.lb
        ub[d.index] = d.ub
    rows_i, cols_j, vals = [], [], []
    b = np.zeros(m)
    for i, row in enumerate(model.rows):
        for idx, coef in row.coeffs:
            rows_i.append(i)
            cols_j.append(idx)
            vals.append(coef)
        rows_i.append(i)
        cols_j.append(n + i)
        vals.append(1.0)
        b[i] = row.rhs
        if row.rel == "<=":
            lb[n + i], ub[n + i] = 0.0, np.inf
        elif row.rel == ">=":
            lb[n + i], ub[n + i] = -np.inf, 0.0
        else:
            lb[n + i], ub[n + i] = 0.0, 0.0
    A = sp.csc_matrix((vals, (rows_i, cols_j)), shape=(m, n + m))
    sense = 1.0 if model.objective.direction == "min" else -1.0
    c = np.zeros(n + m)
    for idx, coef in model.objective.coeffs:
        c[idx] = sense * coef
    return StandardForm(A=A, AT=A.T.tocsr(), b=b, c=c, lb=lb, ub=ub,
                        n_struct=n, sense=sense,
                        var_names=model.var_table.names(),
                        row_names=[r.name for r in model.rows])


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray = None           # full column vector (structural + slacks)
    objective: float = None       # in min sense
    iterations: int = 0
    y: np.ndarray = None           # row duals (min sense)
    reduced: np.ndarray = None
    vstat: np.ndarray = None
    basis: np.ndarray = None
    trace: list = field(default_factory=list)


class SimplexSolver:
    """Reusable simplex over one standard form; bounds may vary per solve."""

    def __init__(self, sf: StandardForm, tol_feas: float = TOL_FEAS,
                 tol_opt: float = TOL_OPT, max_iter: int = None):
        self.sf = sf
        self.tol_feas = tol_feas
        self.tol_opt = tol_opt
        self.m = sf.A.shape[0]
        self.n_total = sf.A.shape[1]
        self.max_iter = max_iter or (200 * (self.m + 1) + 20 * self.n_total + 2000)

    # -- helpers -----------------------------------------------------------

    def _column(self, A, j):
        start, end = A.indptr[j], A.indptr[j + 1]
        return A.indices[start:end], A.data[start:end]

    def _nb_value(self, j, vstat, lb, ub):
        if vstat[j] == NB_LB:
            return lb[j]
        if vstat[j] == NB_UB:
            return ub[j]
        return 0.0

    def solve(self, lb=None, ub=None, start=None) -> SimplexResult:
        sf = self.sf
        m, n_total = self.m, self.n_total
        lb = sf.lb if lb is None else lb
        ub = sf.ub if ub is None else ub
        if m == 0:
            return self._solve_unconstrained(lb, ub)

        x = np.zeros(n_total)
        vstat = np.empty(n_total, dtype=np.int8)
        for j in range(n_total):
            if np.isfinite(lb[j]):
                vstat[j], x[j] = NB_LB, lb[j]
            elif np.isfinite(ub[j]):
                vstat[j], x[j] = NB_UB, ub[j]
            else:
                vstat[j], x[j] = NB_FREE, 0.0

        warm = None
        if start is not None:
            warm = self._try_warm_start(start, lb, ub)
        if warm is not None:
            A_ext, basis, vstat, x, art_mask = warm
            phase1_needed = False
        else:
            A_ext, basis, vstat, x, art_mask, phase1_needed = self._crash_basis(vstat, x, lb, ub)

        lb_ext = np.concatenate([lb, np.zeros(A_ext.shape[1] - n_total)])
        ub_ext = np.concatenate([ub, np.full(A_ext.shape[1] - n_total, np.inf)])
        c_ext = np.concatenate([sf.c, np.zeros(A_ext.shape[1] - n_total)])
        AT_ext = A_ext.T.tocsr()

        try:
            Binv = self._factorize(A_ext, basis)
        except NumericError:
            return SimplexResult(status=NUMERIC_FAILURE)

        trace = []
        iters = 0
        scale = 1.0 + float(np.max(np.abs(sf.b))) if m else 1.0

        if phase1_needed:
            c1 = np.zeros(A_ext.shape[1])
            c1[art_mask] = 1.0
            status, iters = self._iterate(A_ext, AT_ext, c1, lb_ext, ub_ext, x, vstat,
                                          basis, Binv, art_mask, iters, trace, phase=1)
            if status == NUMERIC_FAILURE:
                return SimplexResult(status=NUMERIC_FAILURE, iterations=iters)
            infeas = float(c1 @ x)
            if infeas > self.tol_feas * scale:
                return SimplexResult(status=INFEASIBLE, iterations=iters, trace=trace)
            # pin artificials at zero for phase 2
            lb_ext[art_mask] = 0.0
            ub_ext[art_mask] = 0.0
            x[np.where(art_mask)[0]] = np.where(
                vstat[np.where(art_mask)[0]] == BASIC, x[np.where(art_mask)[0]], 0.0)

        status, iters = self._iterate(A_ext, AT_ext, c_ext, lb_ext, ub_ext, x, vstat,
                                      basis, Binv, art_mask, iters, trace, phase=2)
        if status == NUMERIC_FAILURE:
            return SimplexResult(status=NUMERIC_FAILURE, iterations=iters)
        if status == UNBOUNDED:
            return SimplexResult(status=UNBOUNDED, iterations=iters, trace=trace)

        y = Binv.T @ c_ext[basis]
        reduced = c_ext - AT_ext @ y
        return SimplexResult(status=OPTIMAL, x=x[:n_total].copy(),
                             objective=float(sf.c @ x[:n_total]),
                             iterations=iters, y=y, reduced=reduced[:n_total],
                             vstat=vstat[:n_total].copy(), basis=basis.copy(),
                             trace=trace)

    # -- pieces ------------------------------------------------------------

    def _solve_unconstrained(self, lb, ub):
        # no rows: every variable sits at its cheapest bound
        c = self.sf.c
        x = np.zeros(self.n_total)
        for j in range(self.n_total):
            if c[j] > 0:
                if not np.isfinite(lb[j]):
                    return SimplexResult(status=UNBOUNDED)
                x[j] = lb[j]
            elif c[j] < 0:
                if not np.isfinite(ub[j]):
                    return SimplexResult(status=UNBOUNDED)
                x[j] = ub[j]
            else:
                x[j] = lb[j] if np.isfinite(lb[j]) else (ub[j] if np.isfinite(ub[j]) else 0.0)
        return SimplexResult(status=OPTIMAL, x=x, objective=float(c @ x),
                             y=np.zeros(0), reduced=c.copy(),
                             vstat=np.full(self.n_total, NB_LB, dtype=np.int8),
                             basis=np.zeros(0, dtype=int))

    def _crash_basis(self, vstat, x, lb, ub):
        """Slack basis where slacks can absorb the residual; artificials elsewhere."""
        sf = self.sf
        m, n_total = self.m, self.n_total
        n = sf.n_struct
        residual = sf.b - sf.A @ x
        basis = np.empty(m, dtype=int)
        art_cols = []
        art_vals = []
        for i in range(m):
            s = n + i
            needed = x[s] + residual[i]
            if lb[s] - 1e-12 <= needed <= ub[s] + 1e-12:
                basis[i] = s
                vstat[s] = BASIC
                x[s] = needed
            else:
                art_cols.append(i)
                art_vals.append(residual[i])
        n_art = len(art_cols)
        if n_art:
            data = np.sign(art_vals)
            rows = np.array(art_cols)
            cols = np.arange(n_art)
            A_art = sp.csc_matrix((data, (rows, cols)), shape=(m, n_art))
            A_ext = sp.hstack([sf.A, A_art], format="csc")
            x = np.concatenate([x, np.abs(art_vals)])
            vstat = np.concatenate([vstat, np.full(n_art, BASIC, dtype=np.int8)])
            for k, i in enumerate(art_cols):
                basis[i] = n_total + k
        else:
            A_ext = sf.A
        art_mask = np.zeros(A_ext.shape[1], dtype=bool)
        art_mask[n_total:] = True
        return A_ext, basis, vstat, x, art_mask, bool(n_art)

    def _try_warm_start(self, start, lb, ub):
        """Reuse a previous (vstat, basis) if it is still primal feasible."""
        sf = self.sf
        m, n_total = self.m, self.n_total
        vstat0, basis0 = start
        if len(vstat0) != n_total or len(basis0) != m:
            return None
        vstat = np.array(vstat0, dtype=np.int8)
        basis = np.array(basis0, dtype=int)
        if basis.size and (basis.min() < 0 or basis.max() >= n_total):
            return None  # previous basis kept an artificial column
        if len(np.unique(basis)) != m or (vstat[basis] != BASIC).any():
            return None
        x = np.zeros(n_total)
        nb = vstat != BASIC
        # nonbasic statuses must sit on finite bounds under the new box
        for j in np.where(nb)[0]:
            if vstat[j] == NB_LB:
                if not np.isfinite(lb[j]):
                    return None
                x[j] = lb[j]
            elif vstat[j] == NB_UB:
                if not np.isfinite(ub[j]):
                    return None
                x[j] = ub[j]
            else:
                x[j] = 0.0
        try:
            Binv = self._factorize(sf.A, basis)
        except NumericError:
            return None
        x_nb = x.copy()
        x_nb[basis] = 0.0
        xb = Binv @ (sf.b - sf.A @ x_nb)
        scale = 1.0 + float(np.max(np.abs(sf.b))) if m else 1.0
        if (xb < lb[basis] - self.tol_feas * scale).any() or \
           (xb > ub[basis] + self.tol_feas * scale).any():
            return None
        x[basis] = xb
        art_mask = np.zeros(n_total, dtype=bool)
        return sf.A, basis, vstat, x, art_mask

    def _factorize(self, A_ext, basis):
        B = A_ext[:, basis].toarray()
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericError(str(exc)) from exc
        if not np.isfinite(Binv).all():
            raise NumericError("non-finite basis inverse")
        return Binv

    def _recompute_basics(self, A_ext, x, basis, Binv):
        x_nb = x.copy()
        x_nb[basis] = 0.0
        x[basis] = Binv @ (self.sf.b - A_ext @ x_nb)

    def _iterate(self, A_ext, AT_ext, c, lb, ub, x, vstat, basis, Binv,
                 art_mask, iters, trace, phase):
        fixed = lb == ub
        bland = False
        stall = 0
        best_obj = math.inf
        pivots_since_refactor = 0
        refactor_failures = 0

        while True:
            if iters >= self.max_iter:
                return NUMERIC_FAILURE, iters
            y = Binv.T @ c[basis]
            d = c - AT_ext @ y
            eligible = (
                ((vstat == NB_LB) & (d < -self.tol_opt))
                | ((vstat == NB_UB) & (d > self.tol_opt))
                | ((vstat == NB_FREE) & (np.abs(d) > self.tol_opt))
            )
            eligible &= ~fixed
            eligible &= ~art_mask
            idx = np.where(eligible)[0]
            if idx.size == 0:
                return OPTIMAL, iters
            if bland:
                j = int(idx[0])
            else:
                j = int(idx[np.argmax(np.abs(d[idx]))])
            sigma = 1.0 if (vstat[j] == NB_LB or (vstat[j] == NB_FREE and d[j] < 0)) else -1.0

            cols, valsj = self._column(A_ext, j)
            w = Binv[:, cols] @ valsj
            delta = sigma * w

            xb = x[basis]
            lbb, ubb = lb[basis], ub[basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.full(self.m, np.inf)
                pos = delta > TOL_PIV
                neg = delta < -TOL_PIV
                t[pos] = (xb[pos] - lbb[pos]) / delta[pos]
                t[neg] = (xb[neg] - ubb[neg]) / delta[neg]
            t = np.where(np.isnan(t), np.inf, np.maximum(t, 0.0))
            t_min = float(t.min()) if self.m else math.inf
            t_flip = ub[j] - lb[j] if vstat[j] != NB_FREE else math.inf
            if not math.isfinite(t_min) and not math.isfinite(t_flip):
                return UNBOUNDED, iters

            iters += 1
            if t_flip <= t_min:
                # bound flip, basis unchanged
                x[basis] = xb - t_flip * delta
                x[j] = ub[j] if vstat[j] == NB_LB else lb[j]
                vstat[j] = NB_UB if vstat[j] == NB_LB else NB_LB
                trace.append((phase, j, -1))
            else:
                cands = np.where(t <= t_min + 1e-12)[0]
                if bland:
                    r = int(cands[np.argmin(basis[cands])])
                else:
                    r = int(cands[np.argmax(np.abs(delta[cands]))])
                piv = w[r]
                if abs(piv) < TOL_PIV:
                    refactor_failures += 1
                    if refactor_failures > 3:
                        return NUMERIC_FAILURE, iters
                    try:
                        Binv[:] = self._factorize(A_ext, basis)
                    except NumericError:
                        return NUMERIC_FAILURE, iters
                    self._recompute_basics(A_ext, x, basis, Binv)
                    iters -= 1
                    continue
                step = t[r]
                leaving = int(basis[r])
                x[basis] = xb - step * delta
                x[j] = self._nb_value(j, vstat, lb, ub) + sigma * step
                x[leaving] = lb[leaving] if delta[r] > 0 else ub[leaving]
                vstat[leaving] = NB_LB if delta[r] > 0 else NB_UB
                basis[r] = j
                vstat[j] = BASIC
                pivrow = Binv[r] / piv
                Binv -= np.outer(w, pivrow)
                Binv[r] = pivrow
                trace.append((phase, j, leaving))
                pivots_since_refactor += 1
                if pivots_since_refactor >= REFACTOR_EVERY:
                    try:
                        Binv[:] = self._factorize(A_ext, basis)
                    except NumericError:
                        return NUMERIC_FAILURE, iters
                    self._recompute_basics(A_ext, x, basis, Binv)
                    pivots_since_refactor = 0

            obj = float(c @ x)
            if obj < best_obj - 1e-12 * max(1.0, abs(best_obj) if math.isfinite(best_obj) else 1.0):
                best_obj = obj
                stall = 0
            else:
                stall += 1
                if stall >= STALL_LIMIT:
                    bland = True
