"""Single op-amp generalized adder realizing ``v = K p + l``.

Positive-gain inputs reach the non-inverting node through ``R^(+)``,
negative-gain inputs the inverting node through ``R^(-)``, and ``R_f`` closes
the loop.  With the conductance balance

    G_f + sum G^(-) = sum G^(+)        (dummy included on its side)

every gain is ``G / G_f``.  A grounded dummy resistor on whichever side is
short makes the balance hold.  The offset ``l`` is one more input, ``V_batt``
with gain ``l / V_batt``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

POSITIVE = "+"
NEGATIVE = "-"


@dataclass(frozen=True)
class AdderInput:
    index: int  # parameter index, or n_p for the V_batt input
    side: str
    gain: float  # magnitude, |K| or |l / V_batt|
    R: float


@dataclass(frozen=True)
class AdderDesign:
    region: int
    inputs: tuple[AdderInput, ...]
    R_f: float
    dummy_side: str | None
    R_dummy: float | None  # None when the balance needs no dummy
    V_batt: float
    n_p: int

    @property
    def G_f(self) -> float:
        return 1.0 / self.R_f

    def side_conductance(self, side: str) -> float:
        g = sum(1.0 / i.R for i in self.inputs if i.side == side)
        if self.dummy_side == side and self.R_dummy is not None:
            g += 1.0 / self.R_dummy
        return g

    def realized_gains(self, values: dict | None = None) -> np.ndarray:
        """Signed gains ``[K_1 .. K_np, l]`` of the circuit.

        ``values`` may replace resistances (keys: input index, ``"f"``,
        ``"dummy"``), e.g. after rounding; the balance then no longer holds
        exactly, so the general ideal op-amp expression is used.
        """
        values = values or {}
        R_f = values.get("f", self.R_f)
        G_f = 1.0 / R_f
        G = {i.index: 1.0 / values.get(i.index, i.R) for i in self.inputs}
        S = {POSITIVE: 0.0, NEGATIVE: 0.0}
        for i in self.inputs:
            S[i.side] += G[i.index]
        if self.R_dummy is not None:
            S[self.dummy_side] += 1.0 / values.get("dummy", self.R_dummy)
        out = np.zeros(self.n_p + 1)
        for i in self.inputs:
            if i.side == POSITIVE:
                g = (G_f + S[NEGATIVE]) / G_f * G[i.index] / S[POSITIVE]
            else:
                g = -G[i.index] / G_f
            out[i.index] += g * (self.V_batt if i.index == self.n_p else 1.0)
        return out


def synth_adder(K_row, l: float, R_f: float = 10e3, V_batt: float = 1.0, region: int = 0) -> AdderDesign:
    K_row = np.asarray(K_row, dtype=float).ravel()
    if R_f <= 0:
        raise ValueError("R_f must be positive")
    if V_batt == 0:
        raise ValueError("V_batt must be nonzero")
    n_p = K_row.size
    coeffs = np.append(K_row, l / V_batt)
    G_f = 1.0 / R_f
    inputs = []
    # below this an input resistor would be an open circuit anyway
    negligible = 1e-12 * max(1.0, float(np.abs(coeffs).max()))
    for idx, c in enumerate(coeffs):
        if abs(c) <= negligible:
            continue
        side = POSITIVE if c > 0 else NEGATIVE
        inputs.append(AdderInput(idx, side, abs(float(c)), 1.0 / (abs(float(c)) * G_f)))
    K_pos = sum(i.gain for i in inputs if i.side == POSITIVE)
    K_neg = sum(i.gain for i in inputs if i.side == NEGATIVE)
    if K_pos >= K_neg + 1.0:
        side, g_dummy = NEGATIVE, G_f * (K_pos - K_neg - 1.0)
    else:
        side, g_dummy = POSITIVE, G_f * (1.0 + K_neg - K_pos)
    assert g_dummy >= 0.0
    # an exact balance leaves the dummy open
    R_dummy = 1.0 / g_dummy if g_dummy > 1e-12 * G_f * max(1.0, K_pos, K_neg) else None
    return AdderDesign(region, tuple(inputs), R_f, side if R_dummy else None, R_dummy, V_batt, n_p)
