"""Comparators evaluating ``alpha . [p, V_0] >= 0`` through two resistor dividers.

Inputs with positive ``alpha`` go to the ``+`` terminal, the rest to the
``-`` terminal.  Gains are scaled to ``gamma = h |alpha| / max |alpha|``
(``h`` = 0.7 by default) so a passive divider can realize them.  Each side
has a grounded ``R_g``; its conductances solve

    gamma_i (G_g + sum_j G_j) = G_i,    i on that side.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

HEADROOM = 0.7


@dataclass(frozen=True)
class ComparatorDesign:
    name: str
    alpha: np.ndarray  # over z = [p_1 .. p_n, V_0]
    gamma: np.ndarray  # magnitudes, 0 where the input is unused
    plus: tuple[tuple[int, float], ...]  # (z index, R)
    minus: tuple[tuple[int, float], ...]
    R_g: float
    V_0: float
    scale: float  # gamma = scale * |alpha|
    link: tuple[int, bool] | None = None  # (index of the comparator reused, through a NOT)

    @property
    def shared(self) -> bool:
        return self.link is not None

    def decision(self, Z) -> np.ndarray:
        """``sum_plus gamma z - sum_minus gamma z`` for rows of ``Z``."""
        return np.atleast_2d(Z) @ (np.sign(self.alpha) * self.gamma)


def side_conductances(gamma, G_g: float) -> np.ndarray:
    """Solve the divider system for one terminal."""
    gamma = np.asarray(gamma, dtype=float)
    k = gamma.size
    if k == 0:
        return np.zeros(0)
    M = np.tile(gamma[:, None], (1, k)) - np.eye(k)
    return np.linalg.solve(M, -G_g * gamma)


def divider_gains(R, R_g: float) -> np.ndarray:
    """Gains from each input to the terminal of a grounded resistive divider."""
    G = 1.0 / np.asarray(R, dtype=float)
    return G / (1.0 / R_g + G.sum())


def synth_comparator(alpha, V_0: float = 1.0, R_g: float = 10e3, headroom: float = HEADROOM,
                     name: str = "cmp") -> ComparatorDesign:
    alpha = np.asarray(alpha, dtype=float).ravel()
    amax = np.abs(alpha).max(initial=0.0)
    if amax == 0.0:
        raise ValueError("all comparator gains are zero")
    if not 0 < headroom < 1:
        raise ValueError("headroom must lie in (0, 1)")
    scale = headroom / amax
    gamma = scale * np.abs(alpha)
    pos = alpha > 0
    neg = (alpha < 0) & (gamma > 0)
    worst = max(gamma[pos].sum(), gamma[neg].sum())
    if worst > headroom:
        # a divider side cannot pass a total gain of 1 or more; shrink both sides alike
        scale *= headroom / worst
        gamma = scale * np.abs(alpha)
    G_g = 1.0 / R_g
    sides = []
    for mask in (pos, neg):
        idx = np.flatnonzero(mask)
        G = side_conductances(gamma[idx], G_g)
        if np.any(G <= 0):
            raise ArithmeticError("divider system gave a non-positive conductance")
        got = divider_gains(1.0 / G, R_g) if idx.size else np.zeros(0)
        if not np.allclose(got, gamma[idx], rtol=1e-9, atol=0.0):
            raise ArithmeticError("divider gains do not reproduce the target")
        sides.append(tuple((int(i), float(1.0 / g)) for i, g in zip(idx, G)))
    return ComparatorDesign(name, alpha, gamma, sides[0], sides[1], R_g, V_0, scale)


def row_alpha(a, b: float, V_0: float = 1.0) -> np.ndarray:
    """``alpha`` for ``a . p <= b``, i.e. ``-a . p + b >= 0``."""
    return np.append(-np.asarray(a, dtype=float), b / V_0)


def separator_alpha(a, b_off: float, V_0: float = 1.0) -> np.ndarray:
    """``alpha`` for ``a . p + b_off > 0``."""
    return np.append(np.asarray(a, dtype=float), b_off / V_0)


def _key(alpha: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(alpha[:-1])
    return alpha / (n if n > 0 else abs(alpha[-1]))


def share_comparators(designs, tol: float = 1e-9) -> list[ComparatorDesign]:
    """Link each comparator to the first earlier one with the same (or opposite) normalized row."""
    out: list[ComparatorDesign] = []
    keys: list[np.ndarray] = []
    for d in designs:
        k = _key(d.alpha)
        link = None
        for j, (prev, kj) in enumerate(zip(out, keys)):
            if prev.shared:
                continue
            if np.abs(k - kj).max() <= tol * max(1.0, np.abs(kj).max()):
                link = (j, False)
                break
            if np.abs(k + kj).max() <= tol * max(1.0, np.abs(kj).max()):
                link = (j, True)
                break
        out.append(replace(d, link=link))
        keys.append(k)
    return out
