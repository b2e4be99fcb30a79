"""Explicit solution of the parametric QP by combinatorial active-set enumeration."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .mpc import QpMpc
from .polykit import (EmptyPolytope, Polytope, QpProblem, chebyshev, normalize, remove_redundant,
                      sample_uniform, solve_qp)
from .polykit.qp import hessian_factor, solve_qp_factored
from .tolerances import TOL

log = logging.getLogger(__name__)


class OutOfDomain(ValueError):
    """Parameter lies outside the controller's domain."""


class Uncovered(RuntimeError):
    """Parameter is in the domain but in no stored region."""


@dataclass(frozen=True)
class Region:
    poly: Polytope
    K: np.ndarray
    l: np.ndarray
    active: tuple[int, ...] = ()

    def __post_init__(self):
        K = np.atleast_2d(np.array(self.K, dtype=float))
        l = np.array(self.l, dtype=float).ravel()
        K.setflags(write=False)
        l.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "l", l)

    def law(self, p) -> np.ndarray:
        return self.K @ np.asarray(p, dtype=float) + self.l

    def same_law(self, other: "Region", tol: float = TOL.law_equal) -> bool:
        return (np.abs(self.K - other.K).max(initial=0.0) <= tol
                and np.abs(self.l - other.l).max(initial=0.0) <= tol)


@dataclass(frozen=True)
class PwaController:
    regions: tuple[Region, ...]
    domain: Polytope
    n_u: int
    n_p: int
    skipped: tuple[tuple[int, ...], ...] = field(default=(), compare=False)

    def locate(self, p, tol: float = 1e-9) -> int:
        """Index of the first region containing ``p``."""
        p = np.asarray(p, dtype=float)
        if not self.domain.contains(p, tol):
            raise OutOfDomain(f"parameter {p} is outside the controller domain")
        for i, r in enumerate(self.regions):
            if r.poly.contains(p, tol):
                return i
        viol = [float(np.max(r.poly.A @ p - r.poly.b)) for r in self.regions]
        if viol and min(viol) <= 1e-6:
            return int(np.argmin(viol))
        raise Uncovered(f"parameter {p} is not covered by any region")

    def eval(self, p) -> np.ndarray:
        return self.regions[self.locate(p)].law(p)

    def locate_many(self, P, tol: float = 1e-9) -> np.ndarray:
        """First containing region per row of ``P``; -1 where none."""
        P = np.atleast_2d(P)
        idx = np.full(P.shape[0], -1)
        for i, r in enumerate(self.regions):
            free = idx < 0
            if not free.any():
                break
            inside = np.all(P[free] @ r.poly.A.T <= r.poly.b + tol, axis=1)
            sel = np.flatnonzero(free)[inside]
            idx[sel] = i
        return idx

    def eval_many(self, P) -> np.ndarray:
        P = np.atleast_2d(P)
        if not np.all(self.domain.contains_many(P, 1e-9)):
            raise OutOfDomain("some parameters are outside the controller domain")
        idx = self.locate_many(P)
        if np.any(idx < 0):
            raise Uncovered(f"{int(np.sum(idx < 0))} parameters are not covered")
        out = np.empty((P.shape[0], self.n_u))
        for i, r in enumerate(self.regions):
            m = idx == i
            if m.any():
                out[m] = P[m] @ r.K.T + r.l
        return out


def region_count_bound(q: int, k: int) -> int:
    return sum(comb(q, i) for i in range(k + 1))


def _critical_region(qp: QpMpc, act: tuple[int, ...], Hinv: np.ndarray, domain: Polytope,
                     keep_rows: np.ndarray):
    """Affine optimizer and region of one active set, or None if rank-deficient."""
    G, w, K, F, c = qp.G, qp.w, qp.K, qp.F, qp.c
    if act:
        GA = G[list(act)]
        S = GA @ Hinv @ GA.T
        if np.linalg.matrix_rank(GA, tol=1e-10 * max(1.0, np.abs(GA).max())) < len(act):
            return None
        Sinv = np.linalg.inv(S)
        # lambda(p) = Lp p + lc
        Lp = -Sinv @ (K[list(act)] + GA @ Hinv @ F)
        lc = -Sinv @ (w[list(act)] + GA @ Hinv @ c)
        Up = -Hinv @ (F + GA.T @ Lp)
        uc = -Hinv @ (c + GA.T @ lc)
    else:
        Lp, lc = np.zeros((0, F.shape[1])), np.zeros(0)
        Up, uc = -Hinv @ F, -Hinv @ c
    inactive = [j for j in keep_rows if j not in act]
    rows_A = [-Lp, G[inactive] @ Up - K[inactive]]
    rows_b = [lc, w[inactive] - G[inactive] @ uc]
    A = np.vstack(rows_A + [domain.A]).reshape(-1, F.shape[1])
    b = np.concatenate(rows_b + [domain.b])
    return A, b, Up[:qp.nu], uc[:qp.nu]


def solve_mpqp(qp: QpMpc, domain: Polytope, tol=TOL) -> PwaController:
    """Enumerate active sets up to size ``Nc * nu``; keep full-dimensional critical regions."""
    n_p = qp.n_p
    if domain.dim != n_p:
        raise ValueError("domain dimension does not match the parameter")
    np.linalg.cholesky(qp.H)  # raises if not PD
    Hinv = np.linalg.inv(qp.H)
    Hinv = 0.5 * (Hinv + Hinv.T)
    # rows that do not involve u only restrict the parameter
    gz = np.all(np.abs(qp.G) <= 1e-14, axis=1)
    if gz.any():
        domain = domain.with_rows(-qp.K[gz], qp.w[gz])
    if chebyshev(normalize(domain)).radius <= tol.full_dim:
        return PwaController((), domain, qp.nu, n_p)
    rows = np.flatnonzero(~gz)
    kmax = min(qp.Nc * qp.nu, rows.size)
    regions: list[Region] = []
    skipped: list[tuple[int, ...]] = []
    for k in range(kmax + 1):
        for act in combinations(rows.tolist(), k):
            cr = _critical_region(qp, act, Hinv, domain, rows)
            if cr is None:
                skipped.append(act)
                log.debug("skipping rank-deficient active set %s", act)
                continue
            A, b, Kg, lg = cr
            try:
                P = normalize(Polytope(A, b))
            except EmptyPolytope:
                continue
            if chebyshev(P).radius <= tol.full_dim:
                continue
            regions.append(Region(remove_redundant(P), Kg, lg, act))
    return PwaController(tuple(regions), domain, qp.nu, n_p, tuple(skipped))


@dataclass
class VerifyReport:
    samples: int
    max_error: float
    uncovered: int
    worst_point: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.uncovered == 0 and self.max_error <= 1e-6


def qp_first_move(qp: QpMpc, p) -> np.ndarray:
    f, A, b = qp.parametric(p)
    res = solve_qp(QpProblem(qp.H, f, A, b))
    if not res.optimal:
        raise RuntimeError(f"QP infeasible at p={p}")
    return res.x[:qp.nu]


def qp_first_moves(qp: QpMpc, P) -> np.ndarray:
    """``qp_first_move`` for each row of ``P``, factoring the Hessian once."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    base = QpProblem(qp.H, qp.c, qp.G, qp.w)  # validates H and the shapes once
    L = hessian_factor(base.H)
    out = np.empty((P.shape[0], qp.nu))
    for j, p in enumerate(P):
        f, A, b = qp.parametric(p)
        res = solve_qp_factored(base.H, L, f, base.A, b)
        if not res.optimal:
            raise RuntimeError(f"QP infeasible at p={p}")
        out[j] = res.x[:qp.nu]
    return out


def verify_against_qp(ctrl: PwaController, qp: QpMpc, samples: int,
                      rng: np.random.Generator | None = None, policy=None) -> VerifyReport:
    """Compare ``ctrl`` (or ``policy``, any object with ``eval_many``) to the QP at random points."""
    rng = rng if rng is not None else np.random.default_rng(0)
    P = sample_uniform(ctrl.domain, samples, rng)
    target = policy if policy is not None else ctrl
    idx = ctrl.locate_many(P)
    uncovered = int(np.sum(idx < 0))
    covered = P[idx >= 0]
    U = target.eval_many(covered) if covered.size else np.zeros((0, ctrl.n_u))
    if not covered.size:
        return VerifyReport(samples, 0.0, uncovered, None)
    err = np.abs(U - qp_first_moves(qp, covered)).max(axis=1)
    k = int(np.argmax(err))
    return VerifyReport(samples, float(err[k]), uncovered, covered[k] if err[k] > 0 else None)
