"""Closed-loop stepping kernel in plain Python.

Reference implementation of the compiled kernel in ``_kernel.pyx``; both
take the same flat arguments and must produce the same numbers.  Time
inside a period is handled in local coordinates ``[0, T]``.

Layouts:
    plant   = [A00, A01, A10, A11, B1_0, B1_1, B2_0, B2_1, C0, C1, D1]
    meas    = [use_estimator, K_E, z_E, p_E, R_Co_hat, R_L_hat, V_in_nominal]
    out     = (n_periods * nsub + 1, 7) rows of t, i_L, v_C, v_o, d, i_o, V_in
"""
import math

EDGE_EPS = 1e-12  # breakpoints closer than this (relative to T) coincide


def expm2(a00, a01, a10, a11, h):
    """``exp(A h)`` and ``exp(A h) - I`` of a 2x2 matrix, as two 4-tuples."""
    mu = 0.5 * (a00 + a11)
    n00 = a00 - mu
    n11 = a11 - mu
    delta = n00 * n00 + a01 * a10
    if delta > 0.0:
        sq = math.sqrt(delta)
        r = sq * h
        ch = math.cosh(r)
        chm1 = 2.0 * math.sinh(0.5 * r) ** 2
        sh = math.sinh(r) / sq
    elif delta < 0.0:
        sq = math.sqrt(-delta)
        r = sq * h
        ch = math.cos(r)
        chm1 = -2.0 * math.sin(0.5 * r) ** 2
        sh = math.sin(r) / sq
    else:
        ch, chm1, sh = 1.0, 0.0, h
    em = math.exp(mu * h)
    dm1 = math.expm1(mu * h) * ch + chm1
    e01 = em * sh * a01
    e10 = em * sh * a10
    E = (em * (ch + sh * n00), e01, e10, em * (ch + sh * n11))
    Em1 = (dm1 + em * sh * n00, e01, e10, dm1 + em * sh * n11)
    return E, Em1


class _Step:
    """Exact propagator over a fixed length ``h``: ``x+ = E x + Psi (B1 i_o + B2 v_sq)``."""

    __slots__ = ("E", "Psi")

    def __init__(self, plant, inv, h):
        E, M = expm2(plant[0], plant[1], plant[2], plant[3], h)
        self.E = E
        # Psi = A^-1 (E - I)
        self.Psi = (inv[0] * M[0] + inv[1] * M[2], inv[0] * M[1] + inv[1] * M[3],
                    inv[2] * M[0] + inv[3] * M[2], inv[2] * M[1] + inv[3] * M[3])

    def apply(self, plant, iL, vC, io, vsq):
        E, P = self.E, self.Psi
        f0 = plant[4] * io + plant[6] * vsq
        f1 = plant[5] * io + plant[7] * vsq
        return (E[0] * iL + E[1] * vC + P[0] * f0 + P[1] * f1,
                E[2] * iL + E[3] * vC + P[2] * f0 + P[3] * f1)


def _policy(pv, n_p, reg_ptr, reg_A, reg_b, reg_K, reg_l, sep, has_sep, u_lo, u_hi):
    n_reg = len(reg_ptr) - 1
    for i in range(n_reg):
        inside = True
        for r in range(reg_ptr[i], reg_ptr[i + 1]):
            s = 0.0
            for c in range(n_p):
                s += reg_A[r * n_p + c] * pv[c]
            if s > reg_b[r] + 1e-9:
                inside = False
                break
        if inside:
            u = reg_l[i]
            for c in range(n_p):
                u += reg_K[i * n_p + c] * pv[c]
            return u
    if has_sep:
        s = sep[n_p]
        for c in range(n_p):
            s += sep[c] * pv[c]
        return u_hi if s > 0.0 else u_lo
    # outside every region without a separator: extend the least-violated region
    best, best_v = 0, math.inf
    for i in range(n_reg):
        worst = -math.inf
        for r in range(reg_ptr[i], reg_ptr[i + 1]):
            s = -reg_b[r]
            for c in range(n_p):
                s += reg_A[r * n_p + c] * pv[c]
            worst = max(worst, s)
        if worst < best_v:
            best, best_v = i, worst
    u = reg_l[best]
    for c in range(n_p):
        u += reg_K[best * n_p + c] * pv[c]
    return u


def run_loop(plant, T, nsub, n_periods, x0, ev_t, ev_io, ev_vin, mode, duty_seq,
             reg_ptr, reg_A, reg_b, reg_K, reg_l, sep, has_sep, u_lo, u_hi, n_p,
             meas, latency, dcm, out, io_hat_out, duty_out, u_out, p_out):
    """Simulate ``n_periods`` switching periods; returns the number completed.

    A return value below ``n_periods`` means the state became non-finite in
    that period.
    """
    plant = [float(v) for v in plant]
    a00, a01, a10, a11 = plant[0], plant[1], plant[2], plant[3]
    det = a00 * a11 - a01 * a10
    inv = (a11 / det, -a01 / det, -a10 / det, a00 / det)
    C0, C1, D1 = plant[8], plant[9], plant[10]
    ev_t = [float(v) for v in ev_t]
    ev_io = [float(v) for v in ev_io]
    ev_vin = [float(v) for v in ev_vin]
    n_ev = len(ev_t)
    reg_ptr = [int(v) for v in reg_ptr]
    reg_A = [float(v) for v in reg_A]
    reg_b = [float(v) for v in reg_b]
    reg_K = [float(v) for v in reg_K]
    reg_l = [float(v) for v in reg_l]
    sep = [float(v) for v in sep]
    use_est = meas[0] != 0.0
    K_E, z_E, p_E, rco_h, rl_h, vin_nom = (float(v) for v in meas[1:7])

    h = T / nsub
    eps = EDGE_EPS * T
    grid = _Step(plant, inv, h)
    iL, vC = float(x0[0]), float(x0[1])
    ei = 0  # schedule index in effect

    def sched(t):
        nonlocal ei
        while ei + 1 < n_ev and ev_t[ei + 1] <= t + eps:
            ei += 1
        return ev_io[ei], ev_vin[ei]

    io, vin = sched(0.0)
    vo = C0 * iL + C1 * vC + D1 * io
    w = K_E * (z_E - p_E) * vo / p_E if use_est else 0.0

    def measure(iL, vC, io, vin, w):
        if use_est:
            vo = C0 * iL + C1 * vC + D1 * io
            io_h = iL - K_E * vo - w
            vc_h = rco_h * (io_h - iL) + (rco_h / rl_h + 1.0) * vo
            return [iL, vc_h, io_h, vin - vin_nom]
        return [iL, vC, io, vin - vin_nom]

    def io_hat(iL, vC, io, w):
        vo = C0 * iL + C1 * vC + D1 * io
        return iL - K_E * vo - w if use_est else io

    pv = measure(iL, vC, io, vin, w)
    row = 0
    d = 0.0
    for k in range(n_periods):
        t0 = k * T
        if mode == 0:
            u = float(duty_seq[k])
        else:
            u = _policy(pv, n_p, reg_ptr, reg_A, reg_b, reg_K, reg_l, sep, has_sep, u_lo, u_hi)
        d = min(max(u, 0.0), 1.0)
        duty_out[k] = d
        u_out[k] = u
        for c in range(n_p):
            p_out[k * n_p + c] = pv[c]
        t_sw = d * T
        t_s = T - latency
        measured = False
        for j in range(nsub):
            ta = j * h
            tb = T if j == nsub - 1 else (j + 1) * h
            io, vin = sched(t0 + ta)
            vo = C0 * iL + C1 * vC + D1 * io
            out[row][0] = t0 + ta
            out[row][1] = iL
            out[row][2] = vC
            out[row][3] = vo
            out[row][4] = d
            out[row][5] = io
            out[row][6] = vin
            io_hat_out[row] = io_hat(iL, vC, io, w)
            row += 1
            # breakpoints strictly inside the sub-step
            pts = []
            if ta + eps < t_sw < tb - eps:
                pts.append(t_sw)
            if ta + eps < t_s < tb - eps:
                pts.append(t_s)
            for e in range(ei + 1, n_ev):
                te = ev_t[e] - t0
                if te >= tb - eps:
                    break
                if te > ta + eps:
                    pts.append(te)
            pts.sort()
            pts.append(tb)
            cur = ta
            for bp in pts:
                io, vin = sched(t0 + cur)
                on = cur < t_sw - eps
                vsq = vin if on else 0.0
                step = grid if len(pts) == 1 else None
                vo_a = C0 * iL + C1 * vC + D1 * io
                iL, vC = _advance(plant, inv, step, bp - cur, iL, vC, io, vsq, dcm and not on)
                if use_est:
                    vo_b = C0 * iL + C1 * vC + D1 * io
                    hh = bp - cur
                    w = ((1.0 - 0.5 * p_E * hh) * w
                         + 0.5 * hh * K_E * (z_E - p_E) * (vo_a + vo_b)) / (1.0 + 0.5 * p_E * hh)
                cur = bp
                if not measured and abs(cur - t_s) <= eps:
                    io_m, vin_m = sched(t0 + cur)
                    pv = measure(iL, vC, io_m, vin_m, w)
                    measured = True
            if not (math.isfinite(iL) and math.isfinite(vC)):
                return k
    t_end = n_periods * T
    io, vin = sched(t_end)
    out[row][0] = t_end
    out[row][1] = iL
    out[row][2] = vC
    out[row][3] = C0 * iL + C1 * vC + D1 * io
    out[row][4] = d
    out[row][5] = io
    out[row][6] = vin
    io_hat_out[row] = io_hat(iL, vC, io, w)
    return n_periods


def _advance(plant, inv, step, hh, iL, vC, io, vsq, clamp):
    """Exact propagation over ``hh``; with ``clamp`` the inductor current cannot reverse."""
    if clamp and iL <= 0.0 and plant[1] * vC + plant[4] * io <= 0.0:
        return 0.0, _blocked(plant, hh, vC, io)
    st = step if step is not None else _Step(plant, inv, hh)
    nL, nC = st.apply(plant, iL, vC, io, vsq)
    if not clamp or nL >= 0.0:
        return nL, nC
    # locate the zero crossing of i_L by bisection on the exact solution
    lo, hi = 0.0, hh
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        mL, _ = _Step(plant, inv, mid).apply(plant, iL, vC, io, vsq)
        if mL > 0.0:
            lo = mid
        else:
            hi = mid
    _, cC = _Step(plant, inv, hi).apply(plant, iL, vC, io, vsq)
    return 0.0, _blocked(plant, hh - hi, cC, io)


def _blocked(plant, hh, vC, io):
    """Capacitor-only dynamics while the inductor current is held at zero."""
    a = plant[3]
    ea = math.exp(a * hh)
    return ea * vC + math.expm1(a * hh) / a * plant[5] * io
