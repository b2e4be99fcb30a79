"""Primal active-set method for small, strictly convex QPs.

Problem form: ``min 1/2 x'Hx + f'x  s.t.  A x <= b``.  A feasible starting
point comes from the unconstrained minimizer, the origin, or an LP phase 1,
in that order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..tolerances import TOL
from .lp import INFEASIBLE, OPTIMAL, NumericalFailure, linprog


@dataclass(frozen=True)
class QpProblem:
    H: np.ndarray
    f: np.ndarray
    A: np.ndarray = field(default=None)
    b: np.ndarray = field(default=None)

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        f = np.asarray(self.f, dtype=float).ravel()
        n = f.size
        if H.shape != (n, n):
            raise ValueError("H must be square and match f")
        if self.A is None or np.size(self.A) == 0:
            A = np.zeros((0, n))
            b = np.zeros(0)
        else:
            A = np.atleast_2d(np.asarray(self.A, dtype=float))
            b = np.asarray(self.b, dtype=float).ravel()
        if A.shape != (b.size, n):
            raise ValueError("inconsistent constraint dimensions")
        if not np.allclose(H, H.T, rtol=0, atol=1e-10 * max(1.0, np.abs(H).max())):
            raise ValueError("H must be symmetric")
        for name, arr in (("H", H), ("f", f), ("A", A), ("b", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class QpResult:
    status: str
    x: np.ndarray | None = None
    active: tuple[int, ...] = ()
    lam: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _independent_subset(A: np.ndarray, idx, n: int, tol: float = 1e-10) -> list[int]:
    chosen: list[int] = []
    for i in idx:
        trial = A[chosen + [i]]
        if np.linalg.matrix_rank(trial, tol=tol * max(1.0, np.abs(trial).max())) == len(chosen) + 1:
            chosen.append(i)
        if len(chosen) == n:
            break
    return chosen


def hessian_factor(H: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise ValueError("QP Hessian is not positive definite") from exc


def solve_qp(qp: QpProblem, x0=None, tol=TOL) -> QpResult:
    return solve_qp_factored(qp.H, hessian_factor(qp.H), qp.f, qp.A, qp.b, x0, tol)


def solve_qp_factored(H, L, f, A, b, x0=None, tol=TOL) -> QpResult:
    """``solve_qp`` on validated arrays with ``L = cholesky(H)`` already known.

    For loops over many right-hand sides with one Hessian.
    """
    n, m = f.size, b.size

    def feasible(x):
        return m == 0 or np.all(A @ x - b <= tol.feasibility * np.maximum(1.0, np.abs(b)))

    xu = -np.linalg.solve(L.T, np.linalg.solve(L, f))
    if feasible(xu):
        return QpResult(OPTIMAL, xu, (), np.zeros(m), 0)

    x = None
    for cand in (x0, np.zeros(n)):
        if cand is not None and feasible(np.asarray(cand, dtype=float)):
            x = np.array(cand, dtype=float)
            break
    if x is None:
        res = linprog(np.zeros(n), A, b, tol=tol)
        if res.status == INFEASIBLE:
            return QpResult(INFEASIBLE)
        x = res.x

    slack_tol = 1e-9 * np.maximum(1.0, np.abs(b))
    tight = np.flatnonzero(np.abs(A @ x - b) <= slack_tol)
    W = _independent_subset(A, list(tight), n)
    gscale = max(1.0, float(np.abs(f).max()), float(np.abs(H).max()))

    for it in range(1, tol.max_qp_iterations + 1):
        g = H @ x + f
        k = len(W)
        # null-space step: p keeps the working rows tight
        if k:
            Qf, Rf = np.linalg.qr(A[W].T, mode="complete")
            Z = Qf[:, k:]
        else:
            Z = np.eye(n)
        if Z.shape[1]:
            Zg = Z.T @ g
            p = -Z @ np.linalg.solve(Z.T @ H @ Z, Zg)
        else:
            p = np.zeros(n)
        if k:
            lamW = np.linalg.solve(Rf[:k, :k], Qf[:, :k].T @ -(g + H @ p))
        else:
            lamW = np.zeros(0)

        if np.abs(p).max() <= 1e-12 * max(1.0, np.abs(x).max()):
            if k == 0 or lamW.min() >= -tol.optimality * gscale:
                lam = np.zeros(m)
                lam[W] = np.maximum(lamW, 0.0)
                order = np.argsort(W)
                return QpResult(OPTIMAL, x, tuple(int(W[j]) for j in order), lam, it)
            worst = lamW.min()
            cands = [W[j] for j in range(k) if lamW[j] <= worst + 1e-14 * gscale]
            W.remove(min(cands))
            continue

        alpha, block = 1.0, None
        if m:
            Ap = A @ p
            inactive = np.ones(m, dtype=bool)
            inactive[W] = False
            mask = inactive & (Ap > 1e-12 * np.maximum(1.0, np.abs(A).max(axis=1)) * np.abs(p).max())
            if mask.any():
                idx = np.flatnonzero(mask)
                steps = (b[idx] - A[idx] @ x) / Ap[idx]
                steps = np.maximum(steps, 0.0)
                smin = steps.min()
                if smin < 1.0:
                    alpha = float(smin)
                    block = int(idx[steps <= smin + 1e-15][0])
        x = x + alpha * p
        if block is not None:
            W.append(block)
    raise NumericalFailure("active-set QP iteration limit exceeded")


def kkt_residuals(qp: QpProblem, res: QpResult) -> dict:
    """Stationarity, primal, dual and complementarity residuals of ``res``."""
    x, lam = res.x, res.lam
    stat = qp.H @ x + qp.f + qp.A.T @ lam
    slack = qp.A @ x - qp.b
    return {
        "stationarity": float(np.abs(stat).max(initial=0.0)),
        "primal": float(np.maximum(slack, 0.0).max(initial=0.0)),
        "dual": float(np.maximum(-lam, 0.0).max(initial=0.0)),
        "complementarity": float(np.abs(lam * slack).max(initial=0.0)),
    }
