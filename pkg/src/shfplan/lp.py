"""Dense two-phase simplex for the tiny LPs of the hover-time allocation.

Problems here have at most a few dozen variables and K+1 rows, so a full
tableau with Bland's anti-cycling rule is simpler and more dependable than an
external solver dependency. Maximisation form with non-negative variables:

    max c.x  s.t.  a_ub @ x <= b_ub,  a_eq @ x = b_eq,  x >= 0
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LPResult", "LPInfeasibleError", "LPUnboundedError", "solve_lp"]

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9


class LPInfeasibleError(RuntimeError):
    pass


class LPUnboundedError(RuntimeError):
    pass


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    value: float


def _pivot(tab: np.ndarray, basis: np.ndarray, row: int, col: int):
    tab[row] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and tab[r, col] != 0.0:
            tab[r] -= tab[r, col] * tab[row]
    basis[row] = col


def _simplex(tab: np.ndarray, basis: np.ndarray, ncols: int, max_pivots: int = 100000):
    """Run Bland-rule simplex on a tableau whose last row holds z_j - c_j."""
    m = tab.shape[0] - 1
    for _ in range(max_pivots):
        col = -1
        for j in range(ncols):
            if tab[m, j] < -PIVOT_TOL:
                col = j
                break
        if col < 0:
            return
        row = -1
        best_ratio = np.inf
        for i in range(m):
            a = tab[i, col]
            if a > PIVOT_TOL:
                ratio = tab[i, -1] / a
                if ratio < best_ratio or (
                    ratio == best_ratio and (row < 0 or basis[i] < basis[row])
                ):
                    best_ratio = ratio
                    row = i
        if row < 0:
            raise LPUnboundedError("objective unbounded above")
        _pivot(tab, basis, row, col)
    raise RuntimeError("simplex pivot limit exceeded")


def solve_lp(c, a_ub=None, b_ub=None, a_eq=None, b_eq=None) -> LPResult:
    """Maximise c.x subject to a_ub x <= b_ub, a_eq x = b_eq, x >= 0."""
    c = np.atleast_1d(np.asarray(c, dtype=np.float64))
    n = c.size
    rows = []
    rhs = []
    senses = []
    if a_ub is not None:
        a_ub = np.atleast_2d(np.asarray(a_ub, dtype=np.float64))
        b_ub = np.atleast_1d(np.asarray(b_ub, dtype=np.float64))
        for i in range(a_ub.shape[0]):
            rows.append(a_ub[i])
            rhs.append(b_ub[i])
            senses.append("<")
    if a_eq is not None:
        a_eq = np.atleast_2d(np.asarray(a_eq, dtype=np.float64))
        b_eq = np.atleast_1d(np.asarray(b_eq, dtype=np.float64))
        for i in range(a_eq.shape[0]):
            rows.append(a_eq[i])
            rhs.append(b_eq[i])
            senses.append("=")
    m = len(rows)
    if m == 0:
        raise ValueError("LP needs at least one constraint")
    a = np.vstack(rows)
    b = np.asarray(rhs, dtype=np.float64)
    # normalise to b >= 0
    for i in range(m):
        if b[i] < 0.0:
            a[i] = -a[i]
            b[i] = -b[i]
            if senses[i] == "<":
                senses[i] = ">"

    n_slack = sum(1 for s in senses if s in ("<", ">"))
    n_art = sum(1 for s in senses if s in (">", "="))
    total = n + n_slack + n_art
    tab = np.zeros((m + 1, total + 1))
    tab[:m, :n] = a
    tab[:m, -1] = b
    basis = np.full(m, -1, dtype=np.int64)
    scol = n
    acol = n + n_slack
    art_cols = []
    for i, s in enumerate(senses):
        if s == "<":
            tab[i, scol] = 1.0
            basis[i] = scol
            scol += 1
        elif s == ">":
            tab[i, scol] = -1.0
            scol += 1
            tab[i, acol] = 1.0
            basis[i] = acol
            art_cols.append(acol)
            acol += 1
        else:
            tab[i, acol] = 1.0
            basis[i] = acol
            art_cols.append(acol)
            acol += 1

    if art_cols:
        # phase 1: maximise -sum(artificials); z-row entries are z_j - c_j
        for j in range(total + 1):
            tab[m, j] = 0.0
        for i in range(m):
            if basis[i] in art_cols:
                tab[m, :total] -= tab[i, :total]
                tab[m, -1] -= tab[i, -1]
        for jc in art_cols:
            tab[m, jc] += 1.0
        _simplex(tab, basis, total)
        if tab[m, -1] < -FEAS_TOL:
            raise LPInfeasibleError(f"phase-1 residual {-tab[m, -1]:.3e}")
        # pivot any artificial still basic out of the basis
        for i in range(m):
            if basis[i] in art_cols:
                piv = -1
                for j in range(n + n_slack):
                    if abs(tab[i, j]) > PIVOT_TOL:
                        piv = j
                        break
                if piv >= 0:
                    _pivot(tab, basis, i, piv)
                # else: redundant row, harmless with a zero artificial

    # phase 2 objective row: z_j - c_j over structural + slack columns
    c_ext = np.zeros(total)
    c_ext[:n] = c
    tab[m, :] = 0.0
    for i in range(m):
        cb = c_ext[basis[i]]
        if cb != 0.0:
            tab[m, :total] += cb * tab[i, :total]
            tab[m, -1] += cb * tab[i, -1]
    tab[m, :total] -= c_ext
    # phase 2 scans only structural and slack columns, so artificials stay out
    _simplex(tab, basis, n + n_slack)

    x = np.zeros(total)
    for i in range(m):
        if basis[i] < total:
            x[basis[i]] = tab[i, -1]
    return LPResult(x=x[:n].copy(), value=float(c @ x[:n]))
