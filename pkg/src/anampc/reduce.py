"""Complexity reduction of an explicit controller and the final three-case policy.

Passes, in order: merging of same-law regions, saturation split with an
affine separator, and deletion of region rows implied by the domain.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .empc import OutOfDomain, PwaController, Region, Uncovered
from .polykit import (Polytope, QpProblem, are_adjacent, envelope, remove_redundant, row_max,
                      solve_qp, union_is_convex, vertices)
from .tolerances import TOL

log = logging.getLogger(__name__)

EXHAUSTIVE_MERGE_LIMIT = 12


class NotSeparable(ValueError):
    """No affine function separates the lower- and upper-saturated sets."""


def _mergeable(P1: Polytope, P2: Polytope) -> bool:
    return are_adjacent(P1, P2).adjacent and union_is_convex(P1, P2)


def _merged(P1: Polytope, P2: Polytope) -> Polytope:
    env, _ = envelope(P1, P2)
    return remove_redundant(env)


def _greedy_merge(regions: list[Region]) -> list[Region]:
    regions = list(regions)
    changed = True
    while changed:
        changed = False
        for i in range(len(regions)):
            for j in range(i + 1, len(regions)):
                ri, rj = regions[i], regions[j]
                if ri.same_law(rj) and _mergeable(ri.poly, rj.poly):
                    regions[i] = Region(_merged(ri.poly, rj.poly), ri.K, ri.l, ri.active)
                    del regions[j]
                    changed = True
                    break
            if changed:
                break
    return regions


def _exhaustive_merge(regions: list[Region]) -> list[Region]:
    """Smallest region count over all merge orders (small inputs only)."""
    polys = {frozenset([i]): r.poly for i, r in enumerate(regions)}

    def poly(group: frozenset) -> Polytope:
        if group not in polys:
            members = sorted(group)
            P = polys[frozenset(members[:1])]
            # any merge order of a convex union yields the same envelope
            for k in members[1:]:
                P = _merged(P, polys[frozenset([k])])
            polys[group] = P
        return polys[group]

    @lru_cache(maxsize=None)
    def can_merge(g1: frozenset, g2: frozenset) -> bool:
        return _mergeable(poly(g1), poly(g2))

    @lru_cache(maxsize=None)
    def best(state: frozenset) -> frozenset:
        groups = sorted(state, key=lambda g: min(g))
        result = state
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                g1, g2 = groups[a], groups[b]
                i, j = min(g1), min(g2)
                if not regions[i].same_law(regions[j]) or not can_merge(g1, g2):
                    continue
                cand = best(state - {g1, g2} | {g1 | g2})
                if len(cand) < len(result):
                    result = cand
        return result

    final = sorted(best(frozenset(frozenset([i]) for i in range(len(regions)))), key=min)
    out = []
    for g in final:
        r = regions[min(g)]
        out.append(Region(poly(g), r.K, r.l, r.active))
    return out


def merge_same_law(ctrl: PwaController, exhaustive: bool | None = None) -> PwaController:
    """Merge adjacent same-law regions whose union is convex, to a fixpoint."""
    regions = list(ctrl.regions)
    if exhaustive is None:
        exhaustive = len(regions) <= EXHAUSTIVE_MERGE_LIMIT
    merged = _exhaustive_merge(regions) if exhaustive else _greedy_merge(regions)
    return PwaController(tuple(merged), ctrl.domain, ctrl.n_u, ctrl.n_p, ctrl.skipped)


@dataclass(frozen=True)
class SaturationSplit:
    I_lb: tuple[int, ...]
    I_ub: tuple[int, ...]
    I_unsat: tuple[int, ...]
    u_lower: float
    u_upper: float
    regions: tuple[Region, ...]

    @property
    def S_lower(self) -> list[Polytope]:
        return [self.regions[i].poly for i in self.I_lb]

    @property
    def S_upper(self) -> list[Polytope]:
        return [self.regions[i].poly for i in self.I_ub]


def classify_saturation(ctrl: PwaController, u_lower: float, u_upper: float,
                        tol: float = TOL.law_equal) -> SaturationSplit:
    if ctrl.n_u != 1:
        raise ValueError("saturation split needs a scalar input")
    lb, ub, un = [], [], []
    for i, r in enumerate(ctrl.regions):
        zero_gain = np.abs(r.K).max(initial=0.0) <= tol
        if zero_gain and abs(r.l[0] - u_lower) <= tol:
            lb.append(i)
        elif zero_gain and abs(r.l[0] - u_upper) <= tol:
            ub.append(i)
        else:
            un.append(i)
    return SaturationSplit(tuple(lb), tuple(ub), tuple(un), float(u_lower), float(u_upper),
                           ctrl.regions)


@dataclass(frozen=True)
class Separator:
    a: np.ndarray
    b_off: float
    eps: float
    kind: str = "qp"  # "qp" or "constant"

    def value(self, p) -> np.ndarray:
        return np.asarray(p, dtype=float) @ self.a + self.b_off


def _vertex_sets(split: SaturationSplit) -> tuple[np.ndarray, np.ndarray]:
    n_p = split.regions[0].poly.dim
    V1 = [vertices(P) for P in split.S_lower]
    V2 = [vertices(P) for P in split.S_upper]
    V1 = np.vstack(V1) if V1 else np.zeros((0, n_p))
    V2 = np.vstack(V2) if V2 else np.zeros((0, n_p))
    return V1, V2


def separate(split: SaturationSplit, eps: float = 1.0) -> Separator:
    """Minimum-norm affine ``a'p + b`` that is ``<= -eps`` on lower and ``>= eps`` on upper vertices."""
    n_p = split.regions[0].poly.dim if split.regions else 0
    if not split.I_lb and not split.I_ub:
        return Separator(np.zeros(n_p), -1.0, eps, "constant")
    if not split.I_ub:
        return Separator(np.zeros(n_p), -1.0, eps, "constant")
    if not split.I_lb:
        return Separator(np.zeros(n_p), 1.0, eps, "constant")
    V1, V2 = _vertex_sets(split)
    A = np.vstack([np.hstack([V1, np.ones((len(V1), 1))]),
                   -np.hstack([V2, np.ones((len(V2), 1))])])
    b = np.full(A.shape[0], -eps)
    res = solve_qp(QpProblem(np.eye(n_p + 1), np.zeros(n_p + 1), A, b))
    if not res.optimal:
        raise NotSeparable("saturated sets admit no affine separator")
    alpha = res.x
    sep = Separator(alpha[:n_p].copy(), float(alpha[-1]), eps)
    check_separator(sep, V1, V2)
    return sep


def check_separator(sep: Separator, V1: np.ndarray, V2: np.ndarray, slack: float = 1e-7) -> None:
    m = sep.eps * (1.0 - slack)
    if V1.size and np.max(sep.value(V1)) > -m:
        raise NotSeparable("separator violates a lower-saturated vertex")
    if V2.size and np.min(sep.value(V2)) < m:
        raise NotSeparable("separator violates an upper-saturated vertex")


def remove_trivial(regions, domain: Polytope, tol: float = TOL.redundancy) -> tuple[Region, ...]:
    """Drop every region row that holds on the whole domain."""
    out = []
    for r in regions:
        keep = [j for j in range(r.poly.nrows)
                if row_max(domain, r.poly.A[j]) > r.poly.b[j] + tol]
        out.append(Region(Polytope(r.poly.A[keep].reshape(-1, r.poly.dim), r.poly.b[keep]),
                          r.K, r.l, r.active))
    return tuple(out)


@dataclass(frozen=True)
class FinalPolicy:
    """Unsaturated laws where some ``r_i`` holds, otherwise a bound picked by the separator sign.

    Without a separator (vector inputs) every region is kept and evaluated by
    first containment.
    """

    regions: tuple[Region, ...]
    separator: Separator | None
    u_lower: float | None
    u_upper: float | None
    domain: Polytope
    n_u: int = 1

    @property
    def n_p(self) -> int:
        return self.domain.dim

    def signals(self, P, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(r, s, s_a)``: region flags (samples x regions), separator sign, all-regions-off."""
        P = np.atleast_2d(P)
        r = np.empty((P.shape[0], len(self.regions)), dtype=bool)
        for i, reg in enumerate(self.regions):
            r[:, i] = np.all(P @ reg.poly.A.T <= reg.poly.b + tol, axis=1)
        if self.separator is not None:
            s = self.separator.value(P) > 0
        else:
            s = np.zeros(P.shape[0], dtype=bool)
        s_a = ~r.any(axis=1)
        return r, s, s_a

    def eval_many(self, P) -> np.ndarray:
        P = np.atleast_2d(P)
        if not np.all(self.domain.contains_many(P, 1e-9)):
            raise OutOfDomain("some parameters are outside the policy domain")
        return self.eval_unchecked(P)

    def eval_unchecked(self, P) -> np.ndarray:
        """Evaluate without the domain check; the policy is defined on all of R^n_p."""
        P = np.atleast_2d(P)
        r, s, s_a = self.signals(P)
        out = np.empty((P.shape[0], self.n_u))
        first = np.where(r.any(axis=1), r.argmax(axis=1), -1) if self.regions else np.full(P.shape[0], -1)
        for i, reg in enumerate(self.regions):
            m = first == i
            if m.any():
                out[m] = P[m] @ reg.K.T + reg.l
        if self.separator is None:
            if s_a.any():
                raise Uncovered(f"{int(s_a.sum())} parameters are not covered")
            return out
        out[s_a & s] = self.u_upper
        out[s_a & ~s] = self.u_lower
        return out

    def eval(self, p) -> np.ndarray:
        return self.eval_many(np.asarray(p, dtype=float)[None, :])[0]


def assemble(ctrl: PwaController, split: SaturationSplit | None, sep: Separator | None) -> FinalPolicy:
    if split is None:
        return FinalPolicy(remove_trivial(ctrl.regions, ctrl.domain), None, None, None,
                           ctrl.domain, ctrl.n_u)
    unsat = [split.regions[i] for i in split.I_unsat]
    return FinalPolicy(remove_trivial(unsat, ctrl.domain), sep, split.u_lower, split.u_upper,
                       ctrl.domain, 1)


@dataclass(frozen=True)
class Reduction:
    merged: PwaController
    split: SaturationSplit | None
    separator: Separator | None
    policy: FinalPolicy


def reduce_controller(ctrl: PwaController, u_lower=None, u_upper=None, eps: float = 1.0) -> Reduction:
    """Run all passes. Bounds are needed only for the saturation split (scalar input)."""
    merged = merge_same_law(ctrl)
    if ctrl.n_u != 1 or u_lower is None or u_upper is None:
        return Reduction(merged, None, None, assemble(merged, None, None))
    split = classify_saturation(merged, u_lower, u_upper)
    sep = separate(split, eps)
    return Reduction(merged, split, sep, assemble(merged, split, sep))
