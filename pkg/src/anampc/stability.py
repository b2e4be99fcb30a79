"""Contraction certificate for the closed converter loop in a weighted norm.

The bound is

    L_f = ||A||_P + ||(A^2 - I)/2 A_c^-1 V_in||_P * L_u,
    L_u = max over unsaturated regions of ||B_c2 [K_1, K_2]||_P,

with ``P`` solving ``A' P A - P = -Q``.  ``L_f < 1`` makes the period map a
contraction.  ``empirical_lipschitz`` samples the actual closed-loop period
map so the analytic bound can be checked against something independent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .buck.model import BuckParams, ct_matrices, discretize_exact, equilibrium, linearize
from .polykit import bounding_box


class NotSchur(ValueError):
    """The matrix has an eigenvalue on or outside the unit circle."""


def spectral_radius(A) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.atleast_2d(A)))))


def solve_dlyap(A, Q) -> np.ndarray:
    """``P`` with ``A' P A - P = -Q``, by the Kronecker form of the equation."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = A.shape[0]
    rho = spectral_radius(A)
    if rho >= 1.0:
        raise NotSchur(f"spectral radius {rho:.6g} >= 1")
    # vec(A' P A) = (A' kron A') vec(P) for column-major vec
    M = np.eye(n * n) - np.kron(A.T, A.T)
    P = np.linalg.solve(M, Q.reshape(-1, order="F")).reshape(n, n, order="F")
    return 0.5 * (P + P.T)


def sqrtm_pd(P) -> tuple[np.ndarray, np.ndarray]:
    """``P^(1/2)`` and ``P^(-1/2)`` of a symmetric positive definite matrix."""
    w, V = np.linalg.eigh(np.asarray(P, dtype=float))
    if w.min() <= 0:
        raise ValueError("P must be positive definite")
    s = np.sqrt(w)
    return (V * s) @ V.T, (V / s) @ V.T


def p_norm(G, P) -> float:
    """Induced norm ``||P^(1/2) G P^(-1/2)||_2``."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    Ph, Pmh = sqrtm_pd(P)
    return float(np.linalg.norm(Ph @ G @ Pmh, 2))


def vec_p_norm(x, P) -> np.ndarray:
    """``sqrt(x' P x)`` row-wise."""
    x = np.atleast_2d(x)
    return np.sqrt(np.einsum("ij,jk,ik->i", x, P, x))


@dataclass(frozen=True)
class StabilityCertificate:
    P: np.ndarray
    Q_lyap: np.ndarray
    A_norm_P: float
    second_term: float
    L_u: float
    L_f: float
    spectral_radius: float
    V_in: float

    @property
    def verdict(self) -> bool:
        return self.L_f < 1.0

    def lyapunov_residual(self, A) -> float:
        A = np.asarray(A, dtype=float)
        return float(np.abs(A.T @ self.P @ A - self.P + self.Q_lyap).max())

    def report(self) -> str:
        lines = [
            "stability certificate (contraction in the P-norm)",
            f"spectral radius of A = {self.spectral_radius!r}",
            f"||A||_P = {self.A_norm_P!r}",
            f"L_u = {self.L_u!r}",
            f"second term = {self.second_term!r}",
            f"L_f = {self.L_f!r}",
            f"V_in = {self.V_in!r}",
            f"verdict = {'contraction' if self.verdict else 'not certified'}",
            "P = " + " ".join(repr(float(v)) for v in self.P.ravel()),
            "Q = " + " ".join(repr(float(v)) for v in self.Q_lyap.ravel()),
        ]
        return "\n".join(lines) + "\n"


def state_gains(policy) -> list[np.ndarray]:
    """Gains on ``(i_L, v_C)`` of the unsaturated regions."""
    return [np.asarray(r.K, dtype=float)[0, :2] for r in policy.regions]


def certify(policy, A, A_c, B_c2, V_in: float, Q_lyap=None) -> StabilityCertificate:
    A = np.asarray(A, dtype=float)
    A_c = np.asarray(A_c, dtype=float)
    B_c2 = np.asarray(B_c2, dtype=float).reshape(-1, 1)
    n = A.shape[0]
    Q = np.eye(n) if Q_lyap is None else np.atleast_2d(np.asarray(Q_lyap, dtype=float))
    P = solve_dlyap(A, Q)
    L_u = max((p_norm(B_c2 @ k[None, :], P) for k in state_gains(policy)), default=0.0)
    M = 0.5 * (A @ A - np.eye(n)) @ np.linalg.inv(A_c) * V_in
    second = p_norm(M, P) * L_u
    a_norm = p_norm(A, P)
    return StabilityCertificate(P, Q, a_norm, second, L_u, a_norm + second, spectral_radius(A),
                                float(V_in))


def certify_buck(policy, params: BuckParams, Q_lyap=None, V_in: float | None = None) -> StabilityCertificate:
    eq = equilibrium(params)
    model = linearize(params, eq)
    ct = ct_matrices(params)
    return certify(policy, model.A, ct.A_c, ct.B_c2, params.V_in if V_in is None else V_in, Q_lyap)


@dataclass(frozen=True)
class LemmaReport:
    samples: int
    k_max: int
    violations: int
    max_ratio: float

    @property
    def ok(self) -> bool:
        return self.violations == 0


def lemma1_check(k_max: int = 10, samples: int = 10_000, seed: int = 0) -> LemmaReport:
    """Check ``|(1-a)^k - (1-b)^k| <= 2^(k-1) |a-b|`` on random ``a, b`` in ``[0, 1]``."""
    rng = np.random.default_rng(seed)
    a, b = rng.random(samples), rng.random(samples)
    viol, worst = 0, 0.0
    for k in range(1, k_max + 1):
        lhs = np.abs((1 - a) ** k - (1 - b) ** k)
        rhs = 2.0 ** (k - 1) * np.abs(a - b)
        viol += int(np.sum(lhs > rhs * (1 + 1e-12) + 1e-15))
        nz = rhs > 0
        if nz.any():
            worst = max(worst, float(np.max(lhs[nz] / rhs[nz])))
    return LemmaReport(samples, k_max, viol, worst)


@dataclass(frozen=True)
class LipschitzEstimate:
    value: float
    pairs: int


def empirical_lipschitz(policy, params: BuckParams, P, pairs: int = 2000, seed: int = 0,
                        i_o: float = 0.0, V_in: float | None = None, spread: float = 1e-3) -> LipschitzEstimate:
    """Largest sampled ``||F(x1) - F(x2)||_P / ||x1 - x2||_P`` of the closed-loop period map.

    ``x1`` is drawn from the state part of the policy domain; half of the
    partners are independent draws, half are nearby (relative ``spread``),
    which is where local gains show up.
    """
    V_in = params.V_in if V_in is None else V_in
    ct = ct_matrices(params)
    rng = np.random.default_rng(seed)
    lo, hi = _state_box(policy)
    X1 = lo + (hi - lo) * rng.random((pairs, 2))
    far = lo + (hi - lo) * rng.random((pairs, 2))
    near = X1 + spread * (hi - lo) * rng.standard_normal((pairs, 2))
    X2 = np.where((np.arange(pairs) % 2 == 0)[:, None], far, near)

    def F(X):
        Pm = np.column_stack([X, np.full(len(X), i_o), np.full(len(X), V_in - params.V_in)])
        u = np.clip(policy.eval_unchecked(Pm)[:, 0], 0.0, 1.0)
        out = np.empty_like(X)
        for j, (x, d) in enumerate(zip(X, u)):
            out[j] = discretize_exact(ct, params.T, float(d))(x, i_o, V_in)
        return out

    num = vec_p_norm(F(X1) - F(X2), P)
    den = vec_p_norm(X1 - X2, P)
    ok = den > 0
    return LipschitzEstimate(float(np.max(num[ok] / den[ok])), int(ok.sum()))


def _state_box(policy) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = bounding_box(policy.domain)
    return lo[:2], hi[:2]
