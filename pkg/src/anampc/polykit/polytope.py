"""H-representation polytopes ``{x : A x <= b}`` and the LP-based operations on them."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ..tolerances import TOL
from .lp import OPTIMAL, UNBOUNDED, linprog


class EmptyPolytope(ValueError):
    """The polytope has no points."""


class UnboundedPolytope(ValueError):
    pass


@dataclass(frozen=True)
class Polytope:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.A, dtype=float))
        b = np.array(self.b, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise ValueError("row count of A and b differ")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("polytope data must be finite")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def nrows(self) -> int:
        return self.A.shape[0]

    @classmethod
    def box(cls, lower, upper) -> "Polytope":
        lower = np.asarray(lower, dtype=float).ravel()
        upper = np.asarray(upper, dtype=float).ravel()
        n = lower.size
        eye = np.eye(n)
        return cls(np.vstack([eye, -eye]), np.concatenate([upper, -lower]))

    def contains(self, x, tol: float = TOL.feasibility) -> bool:
        return bool(np.all(self.A @ np.asarray(x, dtype=float) <= self.b + tol))

    def contains_many(self, X, tol: float = TOL.feasibility) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.all(X @ self.A.T <= self.b + tol, axis=1)

    def intersect(self, other: "Polytope") -> "Polytope":
        return Polytope(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]))

    def with_rows(self, A, b) -> "Polytope":
        return Polytope(np.vstack([self.A, np.atleast_2d(A)]), np.concatenate([self.b, np.ravel(b)]))

    def __repr__(self) -> str:
        return f"Polytope(dim={self.dim}, rows={self.nrows})"


def normalize(P: Polytope) -> Polytope:
    """Scale rows to unit Euclidean norm; all-zero rows are dropped if satisfied."""
    norms = np.linalg.norm(P.A, axis=1)
    zero = norms <= 1e-14
    if np.any(P.b[zero] < -TOL.feasibility):
        raise EmptyPolytope("a zero row has a negative offset")
    keep = ~zero
    return Polytope(P.A[keep] / norms[keep, None], P.b[keep] / norms[keep])


def row_max(P: Polytope, a, extra_A=None, extra_b=None) -> float:
    """``max a'x`` over ``P`` (intersected with the extra rows); +inf if unbounded."""
    A, b = P.A, P.b
    if extra_A is not None:
        A = np.vstack([A, extra_A])
        b = np.concatenate([b, extra_b])
    res = linprog(-np.asarray(a, dtype=float), A, b)
    if res.status == OPTIMAL:
        return -res.value
    if res.status == UNBOUNDED:
        return float("inf")
    raise EmptyPolytope("row maximization over an empty set")


def is_empty(P: Polytope) -> bool:
    return linprog(np.zeros(P.dim), P.A, P.b).status != OPTIMAL


def remove_redundant(P: Polytope, tol: float = TOL.redundancy) -> Polytope:
    """Return a minimal H-representation of ``P``.

    Row ``i`` is dropped when ``max a_i'x`` over the remaining rows does not
    exceed ``b_i + tol``; rows are visited in index order.
    """
    P = normalize(P)
    if is_empty(P):
        raise EmptyPolytope("cannot minimize an empty polytope")
    keep = list(range(P.nrows))
    for i in range(P.nrows):
        others = [j for j in keep if j != i]
        # relax row i by one unit so the LP stays bounded
        A = np.vstack([P.A[others], P.A[i]])
        b = np.concatenate([P.b[others], [P.b[i] + 1.0]])
        res = linprog(-P.A[i], A, b)
        if res.status == OPTIMAL and -res.value <= P.b[i] + tol:
            keep.remove(i)
    return Polytope(P.A[keep], P.b[keep])


@dataclass(frozen=True)
class ChebyshevBall:
    center: np.ndarray | None
    radius: float

    @property
    def empty(self) -> bool:
        return self.radius == float("-inf")


def chebyshev(P: Polytope, A_eq=None, b_eq=None, cap: float = 1e9) -> ChebyshevBall:
    """Largest inscribed ball. With equality rows the ball lives in their affine hull.

    An empty polytope reports ``radius = -inf``.
    """
    A, b = P.A, P.b
    n = P.dim
    if A_eq is not None and np.size(A_eq):
        A_eq = np.atleast_2d(A_eq)
        Q, _ = np.linalg.qr(A_eq.T)
        proj = A - (A @ Q) @ Q.T
        norms = np.linalg.norm(proj, axis=1)
        Aeq_full = np.hstack([A_eq, np.zeros((A_eq.shape[0], 1))])
    else:
        norms = np.linalg.norm(A, axis=1)
        Aeq_full, b_eq = None, None
    A_lp = np.hstack([A, norms[:, None]])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_lp, b, Aeq_full, b_eq)
    if res.status == UNBOUNDED:
        # the cap only enters for unbounded sets: a large basic slack costs accuracy
        res = linprog(c, np.vstack([A_lp, np.append(np.zeros(n), 1.0)]), np.append(b, cap),
                      Aeq_full, b_eq)
    if res.status != OPTIMAL:
        return ChebyshevBall(None, float("-inf"))
    r = float(res.x[-1])
    if r < -TOL.feasibility:
        return ChebyshevBall(None, float("-inf"))
    return ChebyshevBall(res.x[:n], max(r, 0.0))


def is_full_dimensional(P: Polytope, tol: float = TOL.full_dim) -> bool:
    return chebyshev(normalize(P)).radius > tol


def bounding_box(P: Polytope) -> tuple[np.ndarray, np.ndarray]:
    n = P.dim
    lo, hi = np.empty(n), np.empty(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        hi[j] = row_max(P, e)
        lo[j] = -row_max(P, -e)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise UnboundedPolytope("polytope is unbounded")
    return lo, hi


def vertices(P: Polytope, tol: float = 1e-9) -> np.ndarray:
    """Vertices by exhaustive intersection of ``n``-row subsets (``n <= 6``)."""
    n = P.dim
    if n > 6:
        raise ValueError("vertex enumeration is limited to dimension 6")
    bounding_box(P)  # raises on unbounded input
    Pn = normalize(P)
    A, b = Pn.A, Pn.b
    if n == 0 or A.shape[0] < n:
        return np.zeros((0, n))
    combos = np.array(list(combinations(range(A.shape[0]), n)), dtype=int)
    M = A[combos]
    rhs = b[combos]
    sv = np.linalg.svd(M, compute_uv=False)
    ok = sv[:, -1] > 1e-10 * np.maximum(sv[:, 0], 1.0)
    if not ok.any():
        return np.zeros((0, n))
    pts = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    scale = np.maximum(1.0, np.abs(b).max())
    feas = np.all(pts @ A.T <= b + tol * scale, axis=1)
    pts = pts[feas]
    out: list[np.ndarray] = []
    for v in pts[np.lexsort(pts.T[::-1])]:
        if not any(np.abs(v - w).max() <= 1e-8 * max(1.0, np.abs(v).max()) for w in out):
            out.append(v)
    return np.array(out).reshape(-1, n)


def is_subset(P: Polytope, Q: Polytope, tol: float = TOL.redundancy) -> bool:
    """``P ⊆ Q`` by maximizing each row of ``Q`` over ``P``."""
    if is_empty(P):
        return True
    Qn = normalize(Q)
    for a, beta in zip(Qn.A, Qn.b):
        if row_max(P, a) > beta + tol:
            return False
    return True


ADJACENT = "adjacent"
DISJOINT = "disjoint"
OVERLAPPING = "overlapping"


@dataclass(frozen=True)
class Adjacency:
    kind: str
    facet: tuple[np.ndarray, float] | None = None
    radius: float = 0.0

    @property
    def adjacent(self) -> bool:
        return self.kind == ADJACENT


def are_adjacent(P1: Polytope, P2: Polytope, tol: float = TOL.full_dim) -> Adjacency:
    """Classify two full-dimensional polytopes as adjacent, disjoint or overlapping.

    Adjacent means the intersection is ``(n-1)``-dimensional, detected as a
    positive Chebyshev radius of ``P1 ∩ P2`` restricted to a facet hyperplane
    of ``P1``.
    """
    Q = normalize(P1.intersect(P2))
    if chebyshev(Q).radius > tol:
        return Adjacency(OVERLAPPING)
    N1 = normalize(P1)
    for a, beta in zip(N1.A, N1.b):
        ball = chebyshev(Q, a[None, :], np.array([beta]))
        if ball.radius > tol:
            return Adjacency(ADJACENT, (a.copy(), float(beta)), ball.radius)
    return Adjacency(DISJOINT)


def envelope(P1: Polytope, P2: Polytope, tol: float = TOL.redundancy) -> tuple[Polytope, list[int]]:
    """Envelope of two polytopes and the indices of ``P1`` rows left out of it."""
    N1, N2 = normalize(P1), normalize(P2)
    rows_A, rows_b, dropped1 = [], [], []
    for i, (a, beta) in enumerate(zip(N1.A, N1.b)):
        if row_max(N2, a) <= beta + tol:
            rows_A.append(a)
            rows_b.append(beta)
        else:
            dropped1.append(i)
    for a, beta in zip(N2.A, N2.b):
        if row_max(N1, a) <= beta + tol:
            rows_A.append(a)
            rows_b.append(beta)
    n = P1.dim
    return Polytope(np.array(rows_A).reshape(-1, n), np.array(rows_b)), dropped1


def union_is_convex(P1: Polytope, P2: Polytope, tol: float = TOL.redundancy) -> bool:
    """True iff ``P1 ∪ P2`` equals its envelope.

    Every piece of the envelope cut off by a dropped row of ``P1`` must lie in ``P2``.
    """
    env, dropped = envelope(P1, P2, tol)
    try:
        bounding_box(env)
    except UnboundedPolytope:
        return False
    N1, N2 = normalize(P1), normalize(P2)
    for i in dropped:
        piece = env.with_rows(-N1.A[i], -N1.b[i])
        if not is_subset(piece, N2, tol):
            return False
    return True


def sample_uniform(P: Polytope, count: int, rng: np.random.Generator, batch: int = 4096) -> np.ndarray:
    """Uniform samples by rejection from the bounding box."""
    lo, hi = bounding_box(P)
    out = []
    total = 0
    while total < count:
        X = lo + (hi - lo) * rng.random((batch, P.dim))
        X = X[P.contains_many(X, tol=0.0)]
        out.append(X)
        total += X.shape[0]
    return np.vstack(out)[:count]
