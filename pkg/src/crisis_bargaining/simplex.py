"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``
and ``x >= 0``.  Meant for desk-scale problems (a few thousand columns);
it returns exact vertex solutions and the basis that produced them.

Rows are equilibrated before solving and the tableau is periodically
rebuilt from the original data and the current basis, which keeps
rounding from piling up over long degenerate runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-7
HARRIS_DELTA = 1e-11
REINVERT_EVERY = 50


class LPError(RuntimeError):
    pass


class InfeasibleError(LPError):
    pass


class UnboundedError(LPError):
    pass


class IterationLimitError(LPError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    iterations: int
    basis: np.ndarray
    duals_ub: np.ndarray
    duals_eq: np.ndarray


def _pivot(T: np.ndarray, r: int, j: int) -> None:
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    nz = np.nonzero(col)[0]
    if len(nz):
        T[nz] -= np.outer(col[nz], T[r])


class _Tableau:
    """Tableau over equality data ``A z = b`` (b >= 0) with a starting basis."""

    def __init__(self, A, b, cost, basis, tol, max_iter, count=0):
        self.A, self.b, self.cost = A, b, cost
        self.basis = basis
        self.tol, self.max_iter = tol, max_iter
        self.count = count
        self.T = np.zeros((A.shape[0] + 1, A.shape[1] + 1))
        self.rebuild()

    def rebuild(self):
        """Recompute the body and reduced costs from the data and the basis."""
        A, T, basis = self.A, self.T, self.basis
        m, n_cols = A.shape
        try:
            body = np.linalg.solve(A[:, basis], np.column_stack([A, self.b]))
        except np.linalg.LinAlgError as exc:
            raise LPError("basis became numerically singular") from exc
        T[:m] = body
        T[:m, basis] = np.eye(m)
        T[-1, :n_cols] = self.cost - self.cost[basis] @ body[:, :n_cols]
        T[-1, -1] = -self.cost[basis] @ body[:, -1]

    @property
    def value(self) -> float:
        return float(-self.T[-1, -1])

    def run(self, n_cols, floor=None, bland_after=20):
        """Pivot to optimality over the first ``n_cols`` columns.

        Pricing is by most negative reduced cost with a Harris ratio test
        until ``bland_after`` consecutive degenerate pivots, then Bland's rule
        (lowest entering index, lowest leaving basic index) until the
        objective moves again.  Bland's rule cannot cycle, so neither can
        the combination.  With ``floor`` set the run stops once the objective
        is within ``floor`` of zero.
        """
        T, basis, tol = self.T, self.basis, self.tol
        m = T.shape[0] - 1
        stalled = since = 0
        while True:
            if since >= REINVERT_EVERY:
                self.rebuild()
                since = 0
            if floor is not None and self.value <= floor:
                return
            red = T[-1, :n_cols]
            cand = np.nonzero(red < -tol)[0]
            if not len(cand):
                return
            bland = stalled >= bland_after
            j = int(cand[0]) if bland else int(cand[np.argmin(red[cand])])
            col = T[:m, j]
            pos = np.nonzero(col > PIVOT_TOL)[0]
            if not len(pos):
                raise UnboundedError("objective is unbounded below")
            rhs = np.maximum(T[pos, -1], 0.0)
            ratios = rhs / col[pos]
            if bland:
                best = float(ratios.min())
                ties = pos[ratios <= best + tol * max(1.0, best)]
                r = int(ties[np.argmin(basis[ties])])
            else:
                # Harris: widest step under a tiny feasibility relaxation,
                # then the largest pivot among rows that step admits
                bound = ((rhs + HARRIS_DELTA) / col[pos]).min()
                k = int(np.argmax(np.where(ratios <= bound, col[pos], -np.inf)))
                r, best = int(pos[k]), float(ratios[k])
            stalled = stalled + 1 if best <= tol else 0
            _pivot(T, r, j)
            basis[r] = j
            self.count += 1
            since += 1
            if self.count > self.max_iter:
                raise IterationLimitError(f"no optimum after {self.max_iter} pivots")


def simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, tol: float = 1e-9,
            max_iter: int | None = None) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = len(c)
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    # rows that x >= 0 satisfies on its own carry no information
    idle = np.all(A_ub <= 0.0, axis=1) & (b_ub >= 0.0)
    active = np.nonzero(~idle)[0]
    m_full = len(b_ub)
    A_ub, b_ub = A_ub[active], b_ub[active]
    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq

    # equality form [A | S] z = b with slacks on the <= rows; rows scaled to
    # unit max norm and signed so that b >= 0
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    scale = np.abs(A[:, :n]).max(axis=1, initial=0.0)
    scale = np.where(scale > 0, scale, 1.0)
    sign = np.where(b < 0, -1.0, 1.0)
    rowmul = sign / scale
    A *= rowmul[:, None]
    b = b * rowmul
    c_scale = float(np.abs(c).max(initial=0.0)) or 1.0

    # slack columns that can start in the basis; others get an artificial
    basis = np.full(m, -1)
    for r in range(m_ub):
        if sign[r] > 0:
            basis[r] = n + r
    need = np.nonzero(basis < 0)[0]
    n_real = n + m_ub
    n_art = len(need)
    if max_iter is None:
        max_iter = 50 * (m + n_real + n_art) + 1000
    cost = np.zeros(n_real)
    cost[:n] = c / c_scale

    rows = np.arange(m)
    count = 0
    if n_art:
        A_art = np.zeros((m, n_real + n_art))
        A_art[:, :n_real] = A
        A_art[need, n_real + np.arange(n_art)] = 1.0
        basis[need] = n_real + np.arange(n_art)
        phase1 = np.zeros(n_real + n_art)
        phase1[n_real:] = 1.0
        tab = _Tableau(A_art, b, phase1, basis, tol, max_iter)
        floor = tol * max(1.0, float(np.abs(b).max()))
        tab.run(n_real + n_art, floor)
        tab.rebuild()
        if tab.value > floor:
            raise InfeasibleError(f"infeasible (phase-one residual {tab.value:.3g})")
        # move zero-level artificials out of the basis, dropping redundant rows
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] >= n_real:
                vals = np.abs(tab.T[r, :n_real])
                k = int(np.argmax(vals))
                if vals[k] > PIVOT_TOL:
                    _pivot(tab.T, r, k)
                    basis[r] = k
                else:
                    keep[r] = False
        rows = np.nonzero(keep)[0]
        basis = basis[keep]
        count = tab.count

    tab = _Tableau(A[rows], b[rows], cost, basis, tol, max_iter, count)
    tab.run(n_real)
    tab.rebuild()
    basis = tab.basis

    z = np.zeros(n_real)
    z[basis] = tab.T[:-1, -1]
    x = np.clip(z[:n], 0.0, None)

    y = np.zeros(m)
    try:
        y[rows] = np.linalg.solve(A[rows][:, basis].T, cost[basis]) * c_scale
    except np.linalg.LinAlgError:
        pass
    y *= rowmul
    duals_ub = np.zeros(m_full)
    duals_ub[active] = y[:m_ub]
    return LPResult(x, float(c @ x), tab.count, basis, duals_ub, y[m_ub:])
