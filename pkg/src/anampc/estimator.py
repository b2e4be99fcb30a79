"""Load-current estimator from output-node current balance, and the capacitor-voltage estimate.

The estimator is ``i_o_hat = i_L - E1(s) v_o`` with the first-order filter

    E1(s) = 1/R_L + C s / (1 + C R_Co s) = K_E (s + z_E) / (s + p_E)

designed at nominal ``C_o``, ``R_Co`` and a chosen ``R_L_hat``.  Its output is
scaled by ``g_io`` on the circuit; everything here works with the unscaled
current unless a name says otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .buck.model import BuckParams, ct_matrices, parallel
from .linalg import expm

ALIASING_LIMIT = 0.1  # largest allowed p_E * sub_dt


class InfeasibleRealization(ValueError):
    """The estimator circuit would need a non-positive component."""


def optimal_RL(lo: float, hi: float) -> float:
    """Load resistance estimate minimizing the mean absolute conductance error for ``R_L ~ U[lo, hi]``."""
    if not (0 < lo <= hi):
        raise ValueError("need 0 < lo <= hi")
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class IoEstimator:
    K_E: float
    z_E: float
    p_E: float
    g_iL: float
    g_io: float
    R_L_hat: float
    R_Co: float
    C_o: float
    sub_dt: float

    @property
    def coefficients(self) -> tuple[float, float]:
        """Bilinear update ``w+ = a w + b (v_o + v_o+)`` at ``sub_dt``."""
        ph = 0.5 * self.p_E * self.sub_dt
        a = (1.0 - ph) / (1.0 + ph)
        b = 0.5 * self.sub_dt * self.K_E * (self.z_E - self.p_E) / (1.0 + ph)
        return a, b

    @property
    def dc_gain(self) -> float:
        """DC gain of the discretized ``E1``."""
        a, b = self.coefficients
        return self.K_E + 2.0 * b / (1.0 - a)

    def E1(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        return self.K_E * (s + self.z_E) / (s + self.p_E)

    def E1_discrete(self, omega) -> np.ndarray:
        """Frequency response of the discretized filter at ``omega`` (rad/s)."""
        zinv = np.exp(-1j * np.asarray(omega, dtype=float) * self.sub_dt)
        a, b = self.coefficients
        return self.K_E + b * (1 + zinv) / (1 - a * zinv)

    def initial_state(self, v_o: float) -> float:
        """Filter state at rest with constant ``v_o``."""
        return self.K_E * (self.z_E - self.p_E) * v_o / self.p_E

    def as_array(self, V_in_nominal: float) -> np.ndarray:
        """Measurement block for the stepping kernel."""
        return np.array([1.0, self.K_E, self.z_E, self.p_E, self.R_Co, self.R_L_hat, V_in_nominal])


def design_io_estimator(p: BuckParams, R_L_hat: float, g_iL: float = 0.2, g_io: float = 0.1,
                        sub_dt: float | None = None) -> IoEstimator:
    if not (R_L_hat > 0 and g_iL > 0 and 0 < g_io):
        raise ValueError("estimator gains and R_L_hat must be positive")
    sub_dt = p.T / 64 if sub_dt is None else sub_dt
    K_E = 1.0 / parallel(p.R_Co, R_L_hat)
    z_E = 1.0 / (p.C_o * (p.R_Co + R_L_hat))
    p_E = 1.0 / (p.C_o * p.R_Co)
    if p_E * sub_dt > ALIASING_LIMIT:
        raise ValueError(f"sub-step too long for the estimator pole: p_E*dt = {p_E * sub_dt:.3g}")
    return IoEstimator(K_E, z_E, p_E, g_iL, g_io, R_L_hat, p.R_Co, p.C_o, sub_dt)


def estimate_vc(v_o, i_L, io_hat, R_Co: float, R_L: float):
    """Capacitor voltage from output-node current balance."""
    return R_Co * (np.asarray(io_hat) - np.asarray(i_L)) + (R_Co / R_L + 1.0) * np.asarray(v_o)


def sensitivities(p: BuckParams, s):
    """Partial derivatives of ``E1`` w.r.t. ``C``, ``R_Co`` and ``R_L`` at ``s``."""
    s = np.asarray(s, dtype=complex)
    tau = p.C_o * p.R_Co
    dC = (1.0 / tau**2) * s / (s + 1.0 / tau) ** 2
    dR = -(1.0 / p.R_Co**2) * s**2 / (s + 1.0 / tau) ** 2
    dRL = -np.ones_like(s) / p.R_L**2
    return dC, dR, dRL


def filter_trace(est: IoEstimator, v_o, i_L, dt=None) -> np.ndarray:
    """Run the discretized estimator over sampled ``v_o``, ``i_L``; returns unscaled ``i_o_hat``."""
    v_o = np.asarray(v_o, dtype=float)
    i_L = np.asarray(i_L, dtype=float)
    if dt is None:
        a, b = est.coefficients
    else:
        ph = 0.5 * est.p_E * dt
        a, b = (1 - ph) / (1 + ph), 0.5 * dt * est.K_E * (est.z_E - est.p_E) / (1 + ph)
    w = np.empty_like(v_o)
    w[0] = est.initial_state(v_o[0])
    for k in range(1, v_o.size):
        w[k] = a * w[k - 1] + b * (v_o[k - 1] + v_o[k])
    return i_L - est.K_E * v_o - w


def simulate_linear(p: BuckParams, est: IoEstimator, dt: float, i_o, v_sq, x0) -> tuple[np.ndarray, np.ndarray]:
    """Plant and continuous-time estimator as one LTI system, exactly discretized at ``dt``.

    ``i_o`` and ``v_sq`` are held over each step (one value per step).  The
    filter starts at rest for the initial output voltage.  Returns the
    sampled ``i_o`` and the unscaled estimate, both with ``len(i_o) + 1`` points.
    """
    ct = ct_matrices(p)
    i_o = np.asarray(i_o, dtype=float)
    v_sq = np.broadcast_to(np.asarray(v_sq, dtype=float), i_o.shape)
    # states [i_L, v_C, w], inputs [i_o, v_sq]; w' = -p_E w + K_E (z_E - p_E) v_o
    k = est.K_E * (est.z_E - est.p_E)
    M = np.zeros((5, 5))
    M[:2, :2] = ct.A_c
    M[:2, 3] = ct.B_c1
    M[:2, 4] = ct.B_c2
    M[2, :2] = k * ct.C_c
    M[2, 2] = -est.p_E
    M[2, 3] = k * ct.D_1
    E = expm(M * dt)
    Ad, Bd = E[:3, :3], E[:3, 3:]
    x0 = np.asarray(x0, dtype=float)
    z = np.array([x0[0], x0[1], est.initial_state(ct.C_c @ x0 + ct.D_1 * i_o[0])])
    io_s = np.append(i_o, i_o[-1])
    hat = np.empty(io_s.size)
    for j in range(io_s.size):
        v_o = ct.C_c @ z[:2] + ct.D_1 * io_s[j]
        hat[j] = z[0] - est.K_E * v_o - z[2]
        if j < i_o.size:
            z = Ad @ z + Bd @ np.array([i_o[j], v_sq[j]])
    return io_s, hat


@dataclass(frozen=True)
class EstimatorCircuit:
    """Single op-amp realization.

    ``v_o`` drives the inverting node through ``R4 || C1``; ``R3`` ties that node
    to ground; the feedback is ``R5 || C2``; the sensed inductor current
    reaches the non-inverting input through the divider ``R1``/``R2``.
    """

    R1: float
    R2: float
    R3: float
    R4: float
    R5: float
    C1: float
    C2: float

    def tf_vo(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        return -(self.R5 / self.R4) * (1 + s * self.R4 * self.C1) / (1 + s * self.R5 * self.C2)

    def tf_il(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        r34 = parallel(self.R3, self.R4)
        return ((1 + (self.R5 / r34) * (1 + s * r34 * self.C1) / (1 + s * self.R5 * self.C2))
                * self.R2 / (self.R1 + self.R2))

    def recovered(self, g_io: float) -> tuple[float, float, float]:
        """``(K_E, z_E, p_E)`` implied by the component values."""
        return self.C1 / (g_io * self.C2), 1.0 / (self.R4 * self.C1), 1.0 / (self.R5 * self.C2)


def synth_estimator_circuit(est: IoEstimator, R1: float) -> EstimatorCircuit:
    """Component values realizing ``-g_io E1`` from ``v_o`` and ``g_io / g_iL`` from the sensed current."""
    if R1 <= 0:
        raise ValueError("R1 must be positive")
    R5 = est.g_io * R1 / est.g_iL
    C2 = 1.0 / (est.p_E * R5)
    # the DC gain of the inverting path must be g_io times the DC gain of E1
    R4 = R5 * est.p_E / (est.g_io * est.K_E * est.z_E)
    C1 = 1.0 / (est.z_E * R4)
    # (R3 || R4) C1 = R5 C2 makes the current path frequency independent
    r34 = R5 * C2 / C1
    if not r34 < R4:
        raise InfeasibleRealization("needs z_E < p_E")
    R3 = 1.0 / (1.0 / r34 - 1.0 / R4)
    rho = est.g_io / (est.g_iL * (1.0 + R5 / r34))
    if not 0 < rho < 1:
        raise InfeasibleRealization("current-path divider ratio outside (0, 1)")
    R2 = R1 * rho / (1.0 - rho)
    values = (R1, R2, R3, R4, R5, C1, C2)
    if min(values) <= 0:
        raise InfeasibleRealization("non-positive component value")
    return EstimatorCircuit(*values)
