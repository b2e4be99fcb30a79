"""Averaged-free Buck converter model: CT matrices, exact per-period map, equilibrium, linearization."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..linalg import expm
from ..mpc import AffineModel


def parallel(r1: float, r2: float) -> float:
    return r1 * r2 / (r1 + r2)


@dataclass(frozen=True)
class BuckParams:
    """Component values (SI units). ``ranges`` maps a field name to its ``(lo, hi)`` interval."""

    V_in: float
    R_L: float
    C_o: float
    L: float
    R_Co: float
    f_sw: float
    I_o_max: float
    V_o: float
    ranges: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for k in ("V_in", "R_L", "C_o", "L", "R_Co", "f_sw", "I_o_max", "V_o"):
            if not getattr(self, k) > 0:
                raise ValueError(f"{k} must be positive")
        for k, (lo, hi) in self.ranges.items():
            v = getattr(self, k)
            if not (0 < lo <= v <= hi):
                raise ValueError(f"interval for {k} does not contain the nominal value")

    @property
    def T(self) -> float:
        return 1.0 / self.f_sw

    def with_values(self, **kw) -> "BuckParams":
        """Copy with new component values; intervals are kept only where still valid."""
        ranges = {k: v for k, v in self.ranges.items() if k not in kw}
        return replace(self, ranges=ranges, **kw)


CERAMIC = "ceramic"
ELECTROLYTIC = "electrolytic"


def case_study(capacitor: str = CERAMIC) -> BuckParams:
    """Reference converter: 50 V -> 5 V at 500 kHz with its uncertainty intervals."""
    if capacitor == CERAMIC:
        r_co, r_co_range = 5e-3, (2.5e-3, 7.5e-3)
    elif capacitor == ELECTROLYTIC:
        r_co, r_co_range = 50e-3, (25e-3, 75e-3)
    else:
        raise ValueError(f"unknown capacitor class {capacitor!r}")
    return BuckParams(
        V_in=50.0, R_L=3.6, C_o=238.77e-6, L=7.7e-6, R_Co=r_co, f_sw=500e3, I_o_max=15.0,
        V_o=5.0,
        ranges={"R_L": (0.3333, 7.0286), "C_o": (224.4e-6, 274.3e-6), "L": (6.56e-6, 9.84e-6),
                "R_Co": r_co_range},
    )


@dataclass(frozen=True)
class CtModel:
    """``x' = A_c x + B_c1 i_o + B_c2 v_sq``, ``v_o = C_c x + D_1 i_o`` with ``x = [i_L, v_C]``."""

    A_c: np.ndarray
    B_c1: np.ndarray
    B_c2: np.ndarray
    C_c: np.ndarray
    D_1: float

    def output(self, x, i_o) -> np.ndarray:
        return np.asarray(x) @ self.C_c + self.D_1 * np.asarray(i_o)


def ct_matrices(p: BuckParams) -> CtModel:
    RL, RC, L, C = p.R_L, p.R_Co, p.L, p.C_o
    Rp = parallel(RL, RC)
    s = RC + RL
    A_c = np.array([[-Rp / L, -RL / (L * s)],
                    [RL / (C * s), -1.0 / (C * s)]])
    B_c1 = np.array([Rp / L, -RL / (C * s)])
    B_c2 = np.array([1.0 / L, 0.0])
    C_c = np.array([Rp, RL / s])
    return CtModel(A_c, B_c1, B_c2, C_c, -Rp)


@dataclass(frozen=True)
class PeriodMap:
    """Exact one-period map ``x+ = A x + B_io i_o + B_vin(d) V_in``."""

    A: np.ndarray
    B_io: np.ndarray
    B_vin: np.ndarray

    def __call__(self, x, i_o, V_in) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float) + self.B_io * i_o + self.B_vin * V_in


def discretize_exact(ct: CtModel, T: float, d: float) -> PeriodMap:
    """Trailing-edge PWM: ``v_sq = V_in`` on ``[0, dT)`` and 0 after, inputs held over the period."""
    if not 0.0 <= d <= 1.0:
        raise ValueError("duty must lie in [0, 1]")
    if abs(np.linalg.det(ct.A_c)) == 0.0:
        raise ValueError("A_c is singular")
    Ainv = np.linalg.inv(ct.A_c)
    A = expm(ct.A_c * T)
    A_off = expm(ct.A_c * (1.0 - d) * T)
    I = np.eye(2)
    B_io = (A - I) @ Ainv @ ct.B_c1
    # e^{A T}(I - e^{-A d T}) = e^{A T} - e^{A (1-d) T}
    B_vin = (A - A_off) @ Ainv @ ct.B_c2
    return PeriodMap(A, B_io, B_vin)


def period_step(ct: CtModel, T: float, x, d: float, i_o: float, V_in: float) -> np.ndarray:
    return discretize_exact(ct, T, d)(x, i_o, V_in)


@dataclass(frozen=True)
class Equilibrium:
    D: float
    x: np.ndarray
    V_o: float
    iterations: int = 0


def _vo_of_duty(ct: CtModel, T: float, V_in: float, D: float):
    """Steady output voltage and its derivative w.r.t. duty at zero load current."""
    A = expm(ct.A_c * T)
    A_off = expm(ct.A_c * (1.0 - D) * T)
    Ainv = np.linalg.inv(ct.A_c)
    IA = np.linalg.inv(np.eye(2) - A)
    x = IA @ (A - A_off) @ Ainv @ ct.B_c2 * V_in
    dx = IA @ A_off @ ct.B_c2 * (T * V_in)
    return float(ct.C_c @ x), float(ct.C_c @ dx), x


def equilibrium(p: BuckParams, V_o: float | None = None, V_in: float | None = None,
                max_iter: int = 50, tol: float = 1e-13) -> Equilibrium:
    """Duty ``D`` with steady output ``V_o`` at zero load current, by Newton from ``V_o / V_in``."""
    V_o = p.V_o if V_o is None else V_o
    V_in = p.V_in if V_in is None else V_in
    if not 0.0 < V_o < V_in:
        raise ValueError("need 0 < V_o < V_in")
    ct = ct_matrices(p)
    D = V_o / V_in
    for it in range(1, max_iter + 1):
        v, dv, x = _vo_of_duty(ct, p.T, V_in, D)
        step = (v - V_o) / dv
        D = min(max(D - step, 0.0), 1.0)
        if abs(step) <= tol * max(1.0, D):
            v, _, x = _vo_of_duty(ct, p.T, V_in, D)
            return Equilibrium(D, x, v, it)
    raise RuntimeError("Newton iteration for the equilibrium duty did not converge")


def nonlinear_g(ct: CtModel, T: float, D: float, V_in: float, delta: float, v_in: float) -> np.ndarray:
    """Duty/supply dependent part of the period map at ``(D + delta, V_in + v_in)``."""
    A = expm(ct.A_c * T)
    A_off = expm(ct.A_c * (1.0 - D - delta) * T)
    return (A - A_off) @ np.linalg.inv(ct.A_c) @ ct.B_c2 * (V_in + v_in)


def linearize(p: BuckParams, eq: Equilibrium) -> AffineModel:
    """Affine model in ``x``, absolute duty ``u`` and ``nu = [i_o, V_in - V_in_nominal]``.

    The constant term is chosen so that ``(eq.x, eq.D)`` with ``nu = 0`` is a
    fixed point, i.e. ``b = g(0, 0) - B D``.
    """
    ct = ct_matrices(p)
    T, D, V = p.T, eq.D, p.V_in
    A = expm(ct.A_c * T)
    A_off = expm(ct.A_c * (1.0 - D) * T)
    Ainv = np.linalg.inv(ct.A_c)
    B = A_off @ ct.B_c2 * (T * V)
    B_nu1 = (A - np.eye(2)) @ Ainv @ ct.B_c1
    B_nu2 = (A - A_off) @ Ainv @ ct.B_c2
    g0 = B_nu2 * V
    b = g0 - B * D
    return AffineModel(A, B.reshape(2, 1), np.column_stack([B_nu1, B_nu2]), b,
                       ct.C_c.reshape(1, 2), [[0.0]], [[ct.D_1, 0.0]], [0.0])
