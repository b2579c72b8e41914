"""Dense two-phase primal simplex over nonnegative variables.

Minimizes c.x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0. Dantzig
pricing by default with a switch to Bland's rule after a long degenerate
streak, so cycling cannot occur. Dense numpy tableau; intended for the
desk-scale LPs produced by the cutting-plane solver, not for large
programs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

PIVOT_TOL = 1e-9
_DEGENERATE_STREAK_LIMIT = 200


@dataclass
class LpResult:
    status: str
    x: Optional[np.ndarray]  # structural variables only
    objective: Optional[float]
    iterations: int


class _Tableau:
    def __init__(self, tab, b, basis, n_columns):
        self.tab = tab
        self.b = b
        self.basis = basis
        self.n_columns = n_columns
        self.iterations = 0

    def pivot(self, r: int, j: int) -> None:
        tab, b = self.tab, self.b
        piv = tab[r, j]
        tab[r] /= piv
        b[r] /= piv
        col = tab[:, j].copy()
        col[r] = 0.0
        self.tab -= np.outer(col, tab[r])
        self.b -= col * b[r]
        self.basis[r] = j
        self.iterations += 1

    def reduced_costs(self, costs: np.ndarray) -> np.ndarray:
        cbar = costs.copy()
        for r, v in enumerate(self.basis):
            cv = costs[v]
            if cv != 0.0:
                cbar -= cv * self.tab[r]
        return cbar

    def solution(self, size: int) -> np.ndarray:
        x = np.zeros(self.n_columns)
        x[self.basis] = np.maximum(self.b, 0.0)
        return x[:size]

    def minimize(self, costs, allowed, pivot_tol, max_iterations) -> str:
        """Run the pivot loop; allowed masks columns that may enter."""
        cbar = self.reduced_costs(costs)
        degenerate = 0
        bland = False
        while self.iterations < max_iterations:
            if bland:
                candidates = np.nonzero(allowed & (cbar < -pivot_tol))[0]
                if candidates.size == 0:
                    return OPTIMAL
                j = int(candidates[0])
            else:
                priced = np.where(allowed, cbar, np.inf)
                j = int(np.argmin(priced))
                if priced[j] >= -pivot_tol:
                    return OPTIMAL
            col = self.tab[:, j]
            positive = col > pivot_tol
            if not positive.any():
                return UNBOUNDED
            ratios = np.full(col.shape, np.inf)
            ratios[positive] = self.b[positive] / col[positive]
            if bland:
                best = ratios.min()
                ties = np.nonzero(ratios <= best + 1e-12)[0]
                r = int(min(ties, key=lambda rr: self.basis[rr]))
            else:
                r = int(np.argmin(ratios))
            if ratios[r] <= pivot_tol:
                degenerate += 1
                if degenerate > _DEGENERATE_STREAK_LIMIT:
                    bland = True
            else:
                degenerate = 0
            cj = cbar[j]
            self.pivot(r, j)
            cbar -= cj * self.tab[r]
            cbar[j] = 0.0
        return ITERATION_LIMIT


def solve_dense_lp(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    pivot_tol: float = PIVOT_TOL,
    max_iterations: int = 200_000,
) -> LpResult:
    c = np.asarray(c, dtype=float)
    n_struct = c.size
    A_ub = np.zeros((0, n_struct)) if A_ub is None else np.asarray(A_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n_struct)) if A_eq is None else np.asarray(A_eq, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    n_ub, n_eq = A_ub.shape[0], A_eq.shape[0]
    m = n_ub + n_eq

    # columns: structural | one slack per ub row | artificials as needed
    art_rows = [i for i in range(n_ub) if b_ub[i] < 0] + list(range(n_ub, m))
    n_art = len(art_rows)
    total = n_struct + n_ub + n_art
    tab = np.zeros((m, total))
    b = np.empty(m)
    tab[:n_ub, :n_struct] = A_ub
    b[:n_ub] = b_ub
    tab[n_ub:, :n_struct] = A_eq
    b[n_ub:] = b_eq
    for i in range(n_ub):
        tab[i, n_struct + i] = 1.0
    for i in range(m):
        if b[i] < 0:
            tab[i] *= -1.0
            b[i] *= -1.0
    basis = np.empty(m, dtype=int)
    art_col = {}
    next_art = n_struct + n_ub
    for i in range(m):
        if i < n_ub and tab[i, n_struct + i] > 0:
            basis[i] = n_struct + i
        else:
            art_col[i] = next_art
            tab[i, next_art] = 1.0
            basis[i] = next_art
            next_art += 1

    t = _Tableau(tab, b, basis, total)
    artificial = np.zeros(total, dtype=bool)
    artificial[n_struct + n_ub :] = True

    if n_art:
        phase1_costs = artificial.astype(float)
        all_columns = np.ones(total, dtype=bool)
        status = t.minimize(phase1_costs, all_columns, pivot_tol, max_iterations)
        if status == ITERATION_LIMIT:
            return LpResult(ITERATION_LIMIT, None, None, t.iterations)
        full = np.zeros(total)
        full[t.basis] = np.maximum(t.b, 0.0)
        if float(phase1_costs @ full) > 1e-7:
            return LpResult(INFEASIBLE, None, None, t.iterations)
        # drive basic artificials out; drop rows that turn out redundant
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if artificial[t.basis[r]]:
                row = t.tab[r, : n_struct + n_ub]
                j = int(np.argmax(np.abs(row)))
                if abs(row[j]) > pivot_tol:
                    t.pivot(r, j)
                else:
                    keep[r] = False
        if not keep.all():
            t.tab = t.tab[keep]
            t.b = t.b[keep]
            t.basis = t.basis[keep]

    allowed = ~artificial
    status = t.minimize(np.concatenate([c, np.zeros(total - n_struct)]), allowed, pivot_tol, max_iterations)
    if status != OPTIMAL:
        return LpResult(status, None, None, t.iterations)
    x = t.solution(n_struct)
    return LpResult(OPTIMAL, x, float(c @ x), t.iterations)
