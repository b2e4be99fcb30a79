"""Small dense linear-algebra helpers: matrix exponential and 2x2 closed forms."""
from __future__ import annotations

import math

import numpy as np

# Pade(6,6) numerator coefficients
_PADE6 = (1.0, 1.0 / 2, 5.0 / 44, 1.0 / 66, 1.0 / 792, 1.0 / 15840, 1.0 / 665280)


def expm(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a diagonal Pade(6,6) approximant."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("expm needs a square matrix")
    norm = np.abs(M).sum(axis=0).max(initial=0.0)
    s = max(0, int(math.ceil(math.log2(norm / 0.5))) + 1) if norm > 0.5 else 0
    X = M / (2.0 ** s)
    I = np.eye(n)
    N = np.zeros((n, n)) + _PADE6[0] * I
    D = N.copy()
    P = I
    for k in range(1, 7):
        P = P @ X
        N = N + _PADE6[k] * P
        D = D + ((-1) ** k) * _PADE6[k] * P
    E = np.linalg.solve(D, N)
    for _ in range(s):
        E = E @ E
    return E


def expm_series(M, terms: int = 60) -> np.ndarray:
    """Taylor series with scaling and squaring; reference for tests."""
    M = np.asarray(M, dtype=float)
    norm = np.abs(M).max(initial=0.0)
    s = max(0, int(math.ceil(math.log2(norm))) + 2) if norm > 0 else 0
    X = M / 2.0 ** s
    E = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, terms):
        term = term @ X / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def expm2(A, h: float) -> tuple[np.ndarray, np.ndarray]:
    """``(exp(A h), exp(A h) - I)`` for a 2x2 ``A`` in closed form.

    Writes ``A = mu I + N`` with ``N`` traceless, so ``N^2 = delta I``.  The
    second output is formed without cancellation for small ``h``.
    """
    a, b = A[0][0], A[0][1]
    c, d = A[1][0], A[1][1]
    mu = 0.5 * (a + d)
    n00, n11 = a - mu, d - mu
    delta = n00 * n00 + b * c
    if delta > 0:
        r = math.sqrt(delta) * h
        ch = math.cosh(r)
        chm1 = 2.0 * math.sinh(0.5 * r) ** 2
        sh = math.sinh(r) / math.sqrt(delta)
    elif delta < 0:
        r = math.sqrt(-delta) * h
        ch = math.cos(r)
        chm1 = -2.0 * math.sin(0.5 * r) ** 2
        sh = math.sin(r) / math.sqrt(-delta)
    else:
        ch, chm1, sh = 1.0, 0.0, h
    em = math.exp(mu * h)
    emm1 = math.expm1(mu * h)
    diag_m1 = emm1 * ch + chm1  # e^{mu h} cosh - 1
    E = np.array([[em * (ch + sh * n00), em * sh * b],
                  [em * sh * c, em * (ch + sh * n11)]])
    Em1 = np.array([[diag_m1 + em * sh * n00, em * sh * b],
                    [em * sh * c, diag_m1 + em * sh * n11]])
    return E, Em1
