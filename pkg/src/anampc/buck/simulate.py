"""Cycle-accurate closed-loop simulation of the switched converter.

The stepping itself lives in a compiled kernel when it is built, otherwise
in the pure-Python module with the same interface.  Set
``ANAMPC_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernel_py
from .model import BuckParams, ct_matrices

try:
    from . import _kernel as _kernel_c
except ImportError:  # extension not built
    _kernel_c = None

KERNELS = {"python": _kernel_py}
if _kernel_c is not None:
    KERNELS["compiled"] = _kernel_c


def default_kernel() -> str:
    if "compiled" in KERNELS and not os.environ.get("ANAMPC_PURE_PYTHON"):
        return "compiled"
    return "python"


class SimulationDiverged(RuntimeError):
    """The state became non-finite."""


@dataclass(frozen=True)
class Scenario:
    """Piecewise-constant ``i_o`` and ``V_in``: value ``k`` holds from ``times[k]`` on."""

    n_periods: int
    times: tuple[float, ...] = (0.0,)
    i_o: tuple[float, ...] = (0.0,)
    V_in: tuple[float, ...] = (50.0,)
    x0: tuple[float, float] | None = None

    def __post_init__(self):
        if not (len(self.times) == len(self.i_o) == len(self.V_in)) or not self.times:
            raise ValueError("schedule columns must have equal, nonzero length")
        if self.times[0] != 0.0 or any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("schedule times must start at 0 and increase")
        if self.n_periods < 1:
            raise ValueError("need at least one period")

    @classmethod
    def constant(cls, n_periods: int, i_o: float, V_in: float, x0=None) -> "Scenario":
        return cls(n_periods, (0.0,), (float(i_o),), (float(V_in),), x0)

    @classmethod
    def load_step(cls, n_periods: int, t_step: float, i0: float, i1: float, V_in: float,
                  x0=None) -> "Scenario":
        return cls(n_periods, (0.0, t_step), (i0, i1), (V_in, V_in), x0)

    @classmethod
    def line_step(cls, n_periods: int, t_step: float, V0: float, V1: float, i_o: float = 0.0,
                  x0=None) -> "Scenario":
        return cls(n_periods, (0.0, t_step), (i_o, i_o), (V0, V1), x0)


@dataclass
class SimTrace:
    t: np.ndarray
    i_L: np.ndarray
    v_C: np.ndarray
    v_o: np.ndarray
    d: np.ndarray
    i_o: np.ndarray
    V_in: np.ndarray
    io_hat: np.ndarray
    duty: np.ndarray  # per period, after clamping
    u: np.ndarray  # per period, controller output before clamping
    p: np.ndarray  # per period, controller input
    T: float
    sub_steps: int
    meta: dict = field(default_factory=dict)

    COLUMNS = ("t", "i_L", "v_C", "v_o", "d", "i_o", "V_in")

    @property
    def n_periods(self) -> int:
        return self.duty.size

    def period_slice(self, k: int) -> slice:
        return slice(k * self.sub_steps, (k + 1) * self.sub_steps)

    def period_mean(self, signal: str = "v_o") -> np.ndarray:
        """Per-period mean of a recorded signal (trapezoid over the sub-step grid)."""
        x = getattr(self, signal)
        n = self.sub_steps
        body = x[:-1].reshape(-1, n)
        nxt = np.append(body[1:, 0], x[-1])
        return (body.sum(axis=1) - 0.5 * body[:, 0] + 0.5 * nxt) / n

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for row in zip(*(getattr(self, c) for c in self.COLUMNS)):
                w.writerow([repr(float(v)) for v in row])


def pack_policy(policy) -> dict:
    """Flatten a policy (``FinalPolicy`` or ``PwaController``) for the kernels."""
    regions = policy.regions
    n_p = policy.n_p
    if getattr(policy, "n_u", 1) != 1:
        raise ValueError("the converter takes a scalar duty")
    ptr = np.zeros(len(regions) + 1, dtype=np.int64)
    for i, r in enumerate(regions):
        ptr[i + 1] = ptr[i] + r.poly.nrows
    A = np.concatenate([r.poly.A.ravel() for r in regions]) if regions else np.zeros(0)
    b = np.concatenate([r.poly.b for r in regions]) if regions else np.zeros(0)
    K = np.concatenate([r.K.ravel() for r in regions]) if regions else np.zeros(0)
    l = np.array([r.l[0] for r in regions], dtype=float)
    sep = getattr(policy, "separator", None)
    if sep is not None:
        sep_arr, has_sep = np.append(sep.a, sep.b_off), 1
        u_lo, u_hi = float(policy.u_lower), float(policy.u_upper)
    else:
        sep_arr, has_sep, u_lo, u_hi = np.zeros(n_p + 1), 0, 0.0, 1.0
    if not regions and not has_sep:
        raise ValueError("policy has neither regions nor a separator")
    return dict(reg_ptr=ptr, reg_A=np.ascontiguousarray(A, dtype=float),
                reg_b=np.ascontiguousarray(b, dtype=float), reg_K=np.ascontiguousarray(K, dtype=float),
                reg_l=l, sep=np.ascontiguousarray(sep_arr, dtype=float), has_sep=has_sep,
                u_lo=u_lo, u_hi=u_hi, n_p=n_p)


def plant_array(p: BuckParams) -> np.ndarray:
    ct = ct_matrices(p)
    return np.concatenate([ct.A_c.ravel(), ct.B_c1, ct.B_c2, ct.C_c, [ct.D_1]]).astype(float)


def simulate(params: BuckParams, scenario: Scenario, policy=None, duty=None, estimator=None,
             sub_steps: int = 64, latency: float = 0.0, dcm: bool = False,
             V_in_nominal: float | None = None, kernel: str | None = None) -> SimTrace:
    """Run ``scenario`` under ``policy`` (closed loop) or a per-period ``duty`` sequence.

    The controller sees ``p = [i_L, v_C, i_o, V_in - V_in_nominal]`` sampled
    ``latency`` seconds before each period starts; with an ``estimator`` the
    second and third entries are the estimates.  ``V_in_nominal`` defaults to
    ``params.V_in``.
    """
    if (policy is None) == (duty is None):
        raise ValueError("give exactly one of policy and duty")
    T = params.T
    if not 0.0 <= latency < T:
        raise ValueError("latency must lie in [0, T)")
    if sub_steps < 1:
        raise ValueError("sub_steps must be positive")
    n = scenario.n_periods
    V_nom = params.V_in if V_in_nominal is None else V_in_nominal
    if policy is not None:
        packed = pack_policy(policy)
        if packed["n_p"] != 4:
            raise ValueError("converter policies take four parameters")
        mode, duty_seq = 1, np.zeros(n)
    else:
        packed = _idle_policy()
        duty_seq = np.broadcast_to(np.asarray(duty, dtype=float), (n,)).copy()
        mode = 0
    meas = (estimator.as_array(V_nom) if estimator is not None
            else np.array([0.0, 0.0, 0.0, 1.0, 0.0, 1.0, V_nom]))
    x0 = np.zeros(2) if scenario.x0 is None else np.asarray(scenario.x0, dtype=float)
    rows = n * sub_steps + 1
    out = np.zeros((rows, 7))
    io_hat = np.zeros(rows)
    duty_out, u_out = np.zeros(n), np.zeros(n)
    p_out = np.zeros(n * packed["n_p"])
    name = kernel or default_kernel()
    mod = KERNELS[name]
    done = mod.run_loop(plant_array(params), float(T), int(sub_steps), int(n), x0,
                        np.asarray(scenario.times, dtype=float), np.asarray(scenario.i_o, dtype=float),
                        np.asarray(scenario.V_in, dtype=float), int(mode), duty_seq,
                        packed["reg_ptr"], packed["reg_A"], packed["reg_b"], packed["reg_K"],
                        packed["reg_l"], packed["sep"], int(packed["has_sep"]), float(packed["u_lo"]),
                        float(packed["u_hi"]), int(packed["n_p"]), meas, float(latency), int(bool(dcm)),
                        out, io_hat, duty_out, u_out, p_out)
    if done < n:
        raise SimulationDiverged(f"state became non-finite in period {done} (t = {done * T:.6g} s)")
    cols = [out[:, j].copy() for j in range(7)]
    return SimTrace(*cols, io_hat=io_hat, duty=duty_out, u=u_out,
                    p=p_out.reshape(n, packed["n_p"]), T=T, sub_steps=sub_steps,
                    meta={"kernel": name, "latency": latency, "dcm": bool(dcm)})


def _idle_policy() -> dict:
    return dict(reg_ptr=np.zeros(1, dtype=np.int64), reg_A=np.zeros(0), reg_b=np.zeros(0),
                reg_K=np.zeros(0), reg_l=np.zeros(0), sep=np.zeros(5), has_sep=0, u_lo=0.0,
                u_hi=1.0, n_p=4)
