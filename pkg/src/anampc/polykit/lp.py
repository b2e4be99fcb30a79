"""Dense two-phase simplex for small linear programs.

Solves ``min c'x  s.t.  A x <= b,  A_eq x = b_eq`` with free variables.
Free variables are split as ``x = x+ - x-`` and Bland's rule is used for
both the entering and the leaving variable, so the method cannot cycle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..tolerances import TOL

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class NumericalFailure(RuntimeError):
    """Raised when the simplex exceeds its iteration budget or loses rank."""


def _as_matrix(A, ncols: int) -> np.ndarray:
    if A is None:
        return np.zeros((0, ncols))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return np.zeros((0, ncols))
    return A


@dataclass(frozen=True)
class LpProblem:
    """``min c'x`` subject to ``A x <= b`` and ``A_eq x = b_eq``."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    A_eq: np.ndarray = field(default=None)
    b_eq: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        A = _as_matrix(self.A, n)
        b = np.asarray(self.b if self.b is not None else [], dtype=float).ravel()
        A_eq = _as_matrix(self.A_eq, n)
        b_eq = np.asarray(self.b_eq if self.b_eq is not None else [], dtype=float).ravel()
        if A.shape != (b.size, n) or A_eq.shape != (b_eq.size, n):
            raise ValueError("inconsistent LP dimensions")
        for name, arr in (("c", c), ("A", A), ("b", b), ("A_eq", A_eq), ("b_eq", b_eq)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class LpResult:
    status: str
    x: np.ndarray | None = None
    value: float = float("nan")
    # multipliers of A x <= b (nonnegative) and of A_eq x = b_eq (free),
    # sign convention: c + A' lam + A_eq' mu = 0
    lam: np.ndarray | None = None
    mu: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Dense tableau over the constraint data ``M z = r``, ``z >= 0``.

    The rows are rebuilt from ``M`` and the current basis every
    ``REFACTOR_EVERY`` pivots and before any verdict, so rounding errors do
    not accumulate over long degenerate runs.
    """

    REFACTOR_EVERY = 40

    def __init__(self, M: np.ndarray, r: np.ndarray, basis: list[int], n_free: int):
        self.n_free = n_free  # columns j and j + n_free are the two halves of a free variable
        self.M = M
        self.r = r
        self.basis = basis
        self.cost = np.zeros(M.shape[1])
        self.T = np.zeros((M.shape[0] + 1, M.shape[1] + 1))
        self.iterations = 0
        self.refactor()

    def set_cost(self, cost: np.ndarray) -> None:
        self.cost = np.asarray(cost, dtype=float)
        self._price()

    def _price(self) -> None:
        T = self.T
        T[-1, :-1] = self.cost
        T[-1, -1] = 0.0
        for i, j in enumerate(self.basis):
            T[-1] -= self.cost[j] * T[i]

    def refactor(self) -> None:
        B = self.M[:, self.basis]
        try:
            rows = np.linalg.solve(B, np.column_stack([self.M, self.r]))
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("simplex basis became singular") from exc
        m = self.M.shape[0]
        self.T[:m] = rows
        # basic columns are exact unit vectors by construction
        self.T[:m, self.basis] = np.eye(m)
        self.T[:m, -1] = np.maximum(self.T[:m, -1], 0.0)
        self._price()

    def pivot(self, r: int, c: int) -> None:
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = c
        self.iterations += 1
        if self.iterations % self.REFACTOR_EVERY == 0:
            self.refactor()

    def _step(self, allowed: np.ndarray, tol) -> str | None:
        T = self.T
        red = T[-1, :-1]
        ok = allowed.copy()
        nf = self.n_free
        inb = np.zeros(ok.size, dtype=bool)
        inb[self.basis] = True
        # a split variable never has both halves basic (singular basis)
        ok[:nf] &= ~inb[nf:2 * nf]
        ok[nf:2 * nf] &= ~inb[:nf]
        cand = np.flatnonzero((red < -tol.optimality) & ok)
        if cand.size == 0:
            return OPTIMAL
        c = int(cand[0])
        colv = T[:-1, c]
        thresh = max(tol.pivot, 1e-9 * float(np.abs(colv).max()))
        rows = np.flatnonzero(colv > thresh)
        if rows.size == 0:
            return UNBOUNDED
        ratios = T[rows, -1] / colv[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol.feasibility * max(1.0, abs(best))]
        r = min(ties, key=lambda i: self.basis[i])
        self.pivot(int(r), c)
        return None

    def run(self, allowed: np.ndarray, tol) -> str:
        """Iterate with Bland's rule; returns OPTIMAL or UNBOUNDED."""
        while True:
            if self.iterations > tol.max_lp_iterations:
                raise NumericalFailure("simplex iteration limit exceeded")
            verdict = self._step(allowed, tol)
            if verdict is None:
                continue
            # confirm on freshly rebuilt rows
            self.refactor()
            if self._step(allowed, tol) == verdict:
                return verdict


def solve_lp(lp: LpProblem, tol=TOL) -> LpResult:
    """Solve ``lp`` by the two-phase simplex method."""
    c, A, b, A_eq, b_eq = lp.c, lp.A, lp.b, lp.A_eq, lp.b_eq
    n = c.size
    m_ub, m_eq = b.size, b_eq.size
    m = m_ub + m_eq
    if m == 0:
        if np.all(np.abs(c) <= tol.optimality):
            return LpResult(OPTIMAL, np.zeros(n), 0.0, np.zeros(0), np.zeros(0))
        return LpResult(UNBOUNDED)

    sigma = np.ones(m)
    sigma[:m_ub][b < 0] = -1.0
    sigma[m_ub:][b_eq < 0] = -1.0
    A_all = np.vstack([A, A_eq])
    rhs = np.concatenate([b, b_eq]) * sigma

    # columns: x+ (n), x- (n), slacks (m_ub), artificials (n_art)
    needs_art = np.ones(m, dtype=bool)
    needs_art[:m_ub] = sigma[:m_ub] < 0
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size
    n_struct = 2 * n + m_ub
    ncols = n_struct + n_art

    Atil = np.zeros((m, ncols))
    Atil[:, :n] = A_all * sigma[:, None]
    Atil[:, n:2 * n] = -Atil[:, :n]
    Atil[np.arange(m_ub), 2 * n + np.arange(m_ub)] = sigma[:m_ub]
    basis = [0] * m
    for i in range(m_ub):
        if not needs_art[i]:
            basis[i] = 2 * n + i
    for k, i in enumerate(art_rows):
        Atil[i, n_struct + k] = 1.0
        basis[i] = n_struct + k

    tab = _Tableau(Atil, rhs, basis, n)
    row_ids = list(range(m))
    phase1_iterations = 0
    if n_art:
        cost1 = np.zeros(ncols)
        cost1[n_struct:] = 1.0
        tab.set_cost(cost1)
        tab.run(np.ones(ncols, dtype=bool), tol)
        infeas = -tab.T[-1, -1]
        scale = max(1.0, float(np.abs(rhs).max()))
        if infeas > tol.feasibility * scale:
            return LpResult(INFEASIBLE, iterations=tab.iterations)
        # drive remaining artificials out of the basis
        for r in range(m):
            if tab.basis[r] >= n_struct:
                row = tab.T[r, :n_struct]
                nz = np.flatnonzero(np.abs(row) > 1e-9 * max(1.0, np.abs(row).max()))
                if nz.size:
                    tab.pivot(r, int(nz[np.argmax(np.abs(row[nz]))]))
                else:
                    row_ids.remove(r)  # redundant equality row
        keep = row_ids
        phase1_iterations = tab.iterations
        tab = _Tableau(Atil[np.ix_(keep, range(n_struct))], rhs[keep],
                       [tab.basis[r] for r in keep], n)

    ctil = np.concatenate([c, -c, np.zeros(m_ub)])
    tab.set_cost(ctil)
    status = tab.run(np.ones(n_struct, dtype=bool), tol)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, iterations=phase1_iterations + tab.iterations)

    z = np.zeros(n_struct)
    z[tab.basis] = tab.T[:-1, -1]
    x = z[:n] - z[n:2 * n]
    value = float(c @ x)

    # duals from the optimal basis: B' y = c_B
    B = tab.M[:, tab.basis]
    try:
        y_kept = np.linalg.solve(B.T, ctil[tab.basis])
    except np.linalg.LinAlgError:
        y_kept = np.linalg.lstsq(B.T, ctil[tab.basis], rcond=None)[0]
    y = np.zeros(m)
    y[row_ids] = y_kept
    mult = -sigma * y
    lam = np.maximum(mult[:m_ub], 0.0)
    mu = mult[m_ub:]
    return LpResult(OPTIMAL, x, value, lam, mu, phase1_iterations + tab.iterations)


def linprog(c, A=None, b=None, A_eq=None, b_eq=None, tol=TOL) -> LpResult:
    """Convenience wrapper building an :class:`LpProblem`."""
    c = np.asarray(c, dtype=float).ravel()
    return solve_lp(LpProblem(c, A, b, A_eq, b_eq), tol)
