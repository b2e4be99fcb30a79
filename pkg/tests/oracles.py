"""Independent reference computations built on scipy."""
import numpy as np
from scipy.linalg import expm


def switched_step_fine(ct, T, x, d, i_o, V_in, steps=10_000):
    """Integrate one PWM period on a uniform grid of ``steps`` sub-steps.

    Each sub-step is an exact affine flow; the one containing the switching
    instant is split at it.
    """
    h = T / steps
    t_on = d * T

    def flow_matrix(dt, v_sq):
        M = np.zeros((3, 3))
        M[:2, :2] = ct.A_c
        M[:2, 2] = ct.B_c1 * i_o + ct.B_c2 * v_sq
        return expm(M * dt)

    # full sub-steps reuse one propagator per switch state
    full = {V_in: flow_matrix(h, V_in), 0.0: flow_matrix(h, 0.0)}
    z = np.append(np.asarray(x, dtype=float), 1.0)
    for k in range(steps):
        t0, t1 = k * h, (k + 1) * h
        if t1 <= t_on:
            z = full[V_in] @ z
        elif t0 >= t_on:
            z = full[0.0] @ z
        else:
            z = flow_matrix(t1 - t_on, 0.0) @ (flow_matrix(t_on - t0, V_in) @ z)
    return z[:2]
