"""Affine plant models, MPC problem data and condensation to a parametric QP.

The condensed problem in the input sequence ``u`` is::

    min  1/2 u'Hu + (F p + c)'u   s.t.  G u <= w + K p

with parameter ``p = [x; nu]``.  ``H``, ``F`` and ``c`` are scaled so that
the objective equals the tracking cost ``J`` up to a term independent of ``u``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OBJECTIVE_SCALING = "exact-J"  # 1/2 u'Hu + (Fp+c)'u = J(u) - const(p)


def _mat(a, rows: int | None = None) -> np.ndarray:
    """2-D read-only float copy; 1-D input is reshaped to ``rows`` rows (default: a column)."""
    a = np.array(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(rows, -1) if rows is not None else a.reshape(-1, 1)
    a.setflags(write=False)
    return a


def _vec(a) -> np.ndarray:
    a = np.array(a, dtype=float).ravel()
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AffineModel:
    """``x+ = A x + B u + Bnu nu + b``,  ``y = C x + D u + Dnu nu + d``."""

    A: np.ndarray
    B: np.ndarray
    Bnu: np.ndarray
    b: np.ndarray
    C: np.ndarray
    D: np.ndarray
    Dnu: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        A = _mat(self.A)
        n = A.shape[0]
        B = _mat(self.B, rows=n)
        Bnu = _mat(self.Bnu, rows=n)
        C = _mat(self.C, rows=1)
        ny = C.shape[0]
        D = _mat(self.D, rows=ny)
        Dnu = _mat(self.Dnu, rows=ny)
        b, d = _vec(self.b), _vec(self.d)
        if A.shape != (n, n) or B.shape[0] != n or Bnu.shape[0] != n or b.size != n:
            raise ValueError("state equation dimensions are inconsistent")
        if C.shape[1] != n or D.shape != (ny, B.shape[1]) or Dnu.shape != (ny, Bnu.shape[1]) \
                or d.size != ny:
            raise ValueError("output equation dimensions are inconsistent")
        for k, v in dict(A=A, B=B, Bnu=Bnu, b=b, C=C, D=D, Dnu=Dnu, d=d).items():
            object.__setattr__(self, k, v)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def nu(self) -> int:
        return self.B.shape[1]

    @property
    def nnu(self) -> int:
        return self.Bnu.shape[1]

    @property
    def ny(self) -> int:
        return self.C.shape[0]

    @property
    def n_p(self) -> int:
        return self.n + self.nnu

    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.A)).max())


@dataclass(frozen=True)
class MpcSpec:
    Np: int
    Nc: int
    Q: np.ndarray
    R: np.ndarray
    R_delta: np.ndarray
    y_r: np.ndarray
    u_r: np.ndarray
    x_r: np.ndarray
    Hx: np.ndarray | None = None
    hx: np.ndarray | None = None
    Hu: np.ndarray | None = None
    hu: np.ndarray | None = None

    def __post_init__(self):
        if not (1 <= self.Nc <= self.Np):
            raise ValueError("need 1 <= Nc <= Np")
        for k in ("Q", "R", "R_delta"):
            M = _mat(getattr(self, k))
            if M.shape[0] != M.shape[1] or not np.allclose(M, M.T, atol=1e-12):
                raise ValueError(f"{k} must be square and symmetric")
            object.__setattr__(self, k, M)
        for k in ("Q", "R_delta"):
            if np.linalg.eigvalsh(getattr(self, k)).min() < -1e-12:
                raise ValueError(f"{k} must be positive semidefinite")
        if np.linalg.eigvalsh(self.R).min() <= 0:
            raise ValueError("R must be positive definite")
        for k in ("y_r", "u_r", "x_r"):
            object.__setattr__(self, k, _vec(getattr(self, k)))
        nu, n = self.u_r.size, self.x_r.size
        for Hk, hk, width in (("Hx", "hx", n), ("Hu", "hu", nu)):
            H, h = getattr(self, Hk), getattr(self, hk)
            if H is None or np.size(H) == 0:
                H, h = np.zeros((0, width)), np.zeros(0)
            H = np.array(H, dtype=float).reshape(-1, width)
            h = _vec(h)
            if H.shape[0] != h.size:
                raise ValueError(f"{Hk} and {hk} row counts differ")
            H.setflags(write=False)
            object.__setattr__(self, Hk, H)
            object.__setattr__(self, hk, h)


def input_box(lower, upper) -> tuple[np.ndarray, np.ndarray]:
    """``H_u, h_u`` for ``lower <= u <= upper``."""
    lower, upper = np.ravel(lower).astype(float), np.ravel(upper).astype(float)
    eye = np.eye(lower.size)
    return np.vstack([eye, -eye]), np.concatenate([upper, -lower])


@dataclass(frozen=True)
class Condensation:
    """Stacked prediction and cost matrices (``x`` stacks ``x_0 .. x_Np``)."""

    Phi: np.ndarray
    Gamma: np.ndarray
    Gamma_nu: np.ndarray
    gamma: np.ndarray
    Cbar: np.ndarray
    Dbar: np.ndarray
    Dbar_nu: np.ndarray
    dbar: np.ndarray
    Qbar: np.ndarray
    Rbar: np.ndarray
    Rbar_delta: np.ndarray
    M: np.ndarray
    ybar_r: np.ndarray
    ubar_r: np.ndarray
    Hx_bar: np.ndarray
    hx_bar: np.ndarray
    Hu_bar: np.ndarray
    hu_bar: np.ndarray


@dataclass(frozen=True)
class QpMpc:
    H: np.ndarray
    F: np.ndarray
    c: np.ndarray
    G: np.ndarray
    w: np.ndarray
    K: np.ndarray
    T: np.ndarray
    Np: int
    Nc: int
    nu: int
    scaling: str = OBJECTIVE_SCALING
    parts: Condensation | None = field(default=None, repr=False, compare=False)

    @property
    def n_p(self) -> int:
        return self.F.shape[1]

    @property
    def q(self) -> int:
        return self.G.shape[0]

    def parametric(self, p) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """QP data ``(f, A, b)`` at a fixed parameter."""
        p = np.asarray(p, dtype=float)
        return self.F @ p + self.c, self.G, self.w + self.K @ p


def _shift(N: int, k: int) -> np.ndarray:
    """``N x N`` matrix with ones on the ``k``-th subdiagonal."""
    return np.eye(N, k=-k)


def delta_weight_pattern(Np: int) -> np.ndarray:
    """Tridiagonal pattern ``M`` with ``sum_i |u_i - u_{i-1}|^2 = u'(M x I)u``."""
    if Np == 1:
        return np.zeros((1, 1))
    diag = np.full(Np, 2.0)
    diag[0] = diag[-1] = 1.0
    return np.diag(diag) - _shift(Np, 1) - _shift(Np, 1).T


def condense(model: AffineModel, spec: MpcSpec) -> QpMpc:
    """Eliminate predicted states/outputs; returns the QP with ``Nc = Np``."""
    n, nu, nnu, ny, Np = model.n, model.nu, model.nnu, model.ny, spec.Np
    A, B, Bnu, b = model.A, model.B, model.Bnu, model.b
    C, D, Dnu, d = model.C, model.D, model.Dnu, model.d
    if spec.Q.shape != (ny, ny) or spec.R.shape != (nu, nu) or spec.R_delta.shape != (nu, nu):
        raise ValueError("weight dimensions do not match the model")
    if spec.y_r.size != ny or spec.u_r.size != nu or spec.x_r.size != n:
        raise ValueError("reference dimensions do not match the model")

    powers = [np.eye(n)]
    for _ in range(Np):
        powers.append(A @ powers[-1])
    Phi = np.vstack(powers)
    Gamma = np.zeros((n * (Np + 1), nu * Np))
    Ssum = np.zeros((n * (Np + 1), n))  # block i holds sum_{j<i} A^j
    acc = np.zeros((n, n))
    for i in range(1, Np + 1):
        acc = acc + powers[i - 1]
        Ssum[i * n:(i + 1) * n] = acc
        for j in range(i):
            Gamma[i * n:(i + 1) * n, j * nu:(j + 1) * nu] = powers[i - 1 - j] @ B
    Gamma_nu = Ssum @ Bnu
    gamma = Ssum @ b

    I = np.eye(Np)
    Cbar = np.hstack([np.kron(I, C), np.zeros((ny * Np, n))])
    Dbar = np.kron(I, D)
    Dbar_nu = np.kron(np.ones((Np, 1)), Dnu)  # nu is constant over the horizon
    dbar = np.kron(np.ones(Np), d)
    Qbar = np.kron(I, spec.Q)
    Rbar = np.kron(I, spec.R)
    M = delta_weight_pattern(Np)
    Rbar_delta = np.kron(M, spec.R_delta)
    ybar_r = np.kron(np.ones(Np), spec.y_r)
    ubar_r = np.kron(np.ones(Np), spec.u_r)

    Su = Cbar @ Gamma + Dbar
    H = 2.0 * (Su.T @ Qbar @ Su + Rbar + Rbar_delta)
    H = 0.5 * (H + H.T)
    Fp = np.hstack([Cbar @ Phi, Cbar @ Gamma_nu + Dbar_nu])
    F = 2.0 * Su.T @ Qbar @ Fp
    c = 2.0 * Su.T @ Qbar @ (Cbar @ gamma + dbar - ybar_r) - 2.0 * Rbar @ ubar_r
    ev = np.linalg.eigvalsh(H).min()
    if ev <= 0:
        raise ValueError(f"condensed Hessian is not positive definite (min eigenvalue {ev:.3e})")

    Hx_bar = np.hstack([np.kron(I, spec.Hx), np.zeros((spec.Hx.shape[0] * Np, n))])
    hx_bar = np.kron(np.ones(Np), spec.hx)
    Hu_bar = np.kron(I, spec.Hu)
    hu_bar = np.kron(np.ones(Np), spec.hu)
    G = np.vstack([Hx_bar @ Gamma, Hu_bar])
    w = np.concatenate([hx_bar - Hx_bar @ gamma, hu_bar])
    K = np.vstack([
        np.hstack([-Hx_bar @ Phi, -Hx_bar @ Gamma_nu]),
        np.zeros((Hu_bar.shape[0], n + nnu)),
    ])
    parts = Condensation(Phi, Gamma, Gamma_nu, gamma, Cbar, Dbar, Dbar_nu, dbar, Qbar, Rbar,
                         Rbar_delta, M, ybar_r, ubar_r, Hx_bar, hx_bar, Hu_bar, hu_bar)
    return QpMpc(H, F, c, G, w, K, np.eye(Np * nu), Np, Np, nu, OBJECTIVE_SCALING, parts)


def blocking_matrix(Np: int, Nc: int, nu: int) -> np.ndarray:
    """First ``Nc - 1`` moves free, the last one held until the horizon ends."""
    if not (1 <= Nc <= Np):
        raise ValueError("need 1 <= Nc <= Np")
    S = np.zeros((Np, Nc))
    for i in range(Np):
        S[i, min(i, Nc - 1)] = 1.0
    return np.kron(S, np.eye(nu))


def dedup_rows(G, w, K) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Drop rows with identical ``(G, K)``, keeping the smallest ``w``; first-occurrence order."""
    best: dict[bytes, int] = {}
    order: list[bytes] = []
    Gr = np.round(G, 12) + 0.0
    Kr = np.round(K, 12) + 0.0
    for i in range(G.shape[0]):
        key = Gr[i].tobytes() + Kr[i].tobytes()
        if key not in best:
            best[key] = i
            order.append(key)
        elif w[i] < w[best[key]]:
            best[key] = i
    idx = [best[k] for k in order]
    return G[idx], w[idx], K[idx]


def move_block(qp: QpMpc, Nc: int) -> QpMpc:
    Np, nu = qp.Np, qp.nu
    if qp.Nc != Np:
        raise ValueError("move blocking applies to a full-horizon QP")
    T = blocking_matrix(Np, Nc, nu)
    H = T.T @ qp.H @ T
    H = 0.5 * (H + H.T)
    G, w, K = dedup_rows(qp.G @ T, qp.w, qp.K)
    return QpMpc(H, T.T @ qp.F, T.T @ qp.c, G, w, K, T, Np, Nc, nu, qp.scaling, qp.parts)


def equilibrium_check(model: AffineModel, spec: MpcSpec, tol: float = 1e-9) -> bool:
    """Whether ``(x_r, u_r, y_r)`` is an undisturbed equilibrium of ``model``."""
    x, u, y = spec.x_r, spec.u_r, spec.y_r
    rx = model.A @ x + model.B @ u + model.b - x
    ry = model.C @ x + model.D @ u + model.d - y
    sx = max(1.0, np.abs(x).max(initial=0.0))
    sy = max(1.0, np.abs(y).max(initial=0.0))
    return bool(np.abs(rx).max(initial=0.0) <= tol * sx and np.abs(ry).max(initial=0.0) <= tol * sy)
