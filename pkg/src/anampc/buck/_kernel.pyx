# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled closed-loop stepping kernel; mirrors ``_kernel_py`` line for line."""
from libc.math cimport cos, cosh, exp, expm1, fabs, isfinite, sin, sinh, sqrt, INFINITY

cdef double EDGE_EPS = 1e-12


cdef struct Step:
    double e0, e1, e2, e3
    double p0, p1, p2, p3


cdef Step make_step(double[:] plant, double i0, double i1, double i2, double i3, double h) nogil:
    cdef double a00 = plant[0], a01 = plant[1], a10 = plant[2], a11 = plant[3]
    cdef double mu = 0.5 * (a00 + a11)
    cdef double n00 = a00 - mu, n11 = a11 - mu
    cdef double delta = n00 * n00 + a01 * a10
    cdef double sq, r, ch, chm1, sh, em, dm1, m0, m1, m2, m3
    cdef Step st
    if delta > 0.0:
        sq = sqrt(delta)
        r = sq * h
        ch = cosh(r)
        chm1 = 2.0 * sinh(0.5 * r) ** 2
        sh = sinh(r) / sq
    elif delta < 0.0:
        sq = sqrt(-delta)
        r = sq * h
        ch = cos(r)
        chm1 = -2.0 * sin(0.5 * r) ** 2
        sh = sin(r) / sq
    else:
        ch = 1.0
        chm1 = 0.0
        sh = h
    em = exp(mu * h)
    dm1 = expm1(mu * h) * ch + chm1
    st.e1 = em * sh * a01
    st.e2 = em * sh * a10
    st.e0 = em * (ch + sh * n00)
    st.e3 = em * (ch + sh * n11)
    m0 = dm1 + em * sh * n00
    m1 = st.e1
    m2 = st.e2
    m3 = dm1 + em * sh * n11
    st.p0 = i0 * m0 + i1 * m2
    st.p1 = i0 * m1 + i1 * m3
    st.p2 = i2 * m0 + i3 * m2
    st.p3 = i2 * m1 + i3 * m3
    return st


cdef inline void apply_step(Step* st, double[:] plant, double iL, double vC, double io, double vsq,
                            double* nL, double* nC) nogil:
    cdef double f0 = plant[4] * io + plant[6] * vsq
    cdef double f1 = plant[5] * io + plant[7] * vsq
    nL[0] = st.e0 * iL + st.e1 * vC + st.p0 * f0 + st.p1 * f1
    nC[0] = st.e2 * iL + st.e3 * vC + st.p2 * f0 + st.p3 * f1


cdef double blocked(double[:] plant, double hh, double vC, double io) nogil:
    cdef double a = plant[3]
    return exp(a * hh) * vC + expm1(a * hh) / a * plant[5] * io


cdef void advance(double[:] plant, double i0, double i1, double i2, double i3, Step* grid,
                  bint use_grid, double hh, double* iL, double* vC, double io, double vsq,
                  bint clamp) nogil:
    cdef Step st, tmp
    cdef double nL, nC, lo, hi, mid, mL, mC
    cdef int it
    if clamp and iL[0] <= 0.0 and plant[1] * vC[0] + plant[4] * io <= 0.0:
        vC[0] = blocked(plant, hh, vC[0], io)
        iL[0] = 0.0
        return
    if use_grid:
        st = grid[0]
    else:
        st = make_step(plant, i0, i1, i2, i3, hh)
    apply_step(&st, plant, iL[0], vC[0], io, vsq, &nL, &nC)
    if not clamp or nL >= 0.0:
        iL[0] = nL
        vC[0] = nC
        return
    lo = 0.0
    hi = hh
    for it in range(60):
        mid = 0.5 * (lo + hi)
        tmp = make_step(plant, i0, i1, i2, i3, mid)
        apply_step(&tmp, plant, iL[0], vC[0], io, vsq, &mL, &mC)
        if mL > 0.0:
            lo = mid
        else:
            hi = mid
    tmp = make_step(plant, i0, i1, i2, i3, hi)
    apply_step(&tmp, plant, iL[0], vC[0], io, vsq, &mL, &mC)
    vC[0] = blocked(plant, hh - hi, mC, io)
    iL[0] = 0.0


cdef double policy(double[:] pv, int n_p, long[:] reg_ptr, double[:] reg_A, double[:] reg_b,
                   double[:] reg_K, double[:] reg_l, double[:] sep, int has_sep, double u_lo,
                   double u_hi) nogil:
    cdef int n_reg = reg_ptr.shape[0] - 1
    cdef int i, r, c, best = 0
    cdef bint inside
    cdef double s, u, worst, best_v = INFINITY
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
    for i in range(n_reg):
        worst = -INFINITY
        for r in range(reg_ptr[i], reg_ptr[i + 1]):
            s = -reg_b[r]
            for c in range(n_p):
                s += reg_A[r * n_p + c] * pv[c]
            if s > worst:
                worst = s
        if worst < best_v:
            best = i
            best_v = worst
    u = reg_l[best]
    for c in range(n_p):
        u += reg_K[best * n_p + c] * pv[c]
    return u


cdef inline int sched(double[:] ev_t, int n_ev, int ei, double t, double eps) nogil:
    while ei + 1 < n_ev and ev_t[ei + 1] <= t + eps:
        ei += 1
    return ei


cdef void measure(double[:] pv, bint use_est, double iL, double vC, double io, double vin,
                  double w, double C0, double C1, double D1, double K_E, double rco_h,
                  double rl_h, double vin_nom) nogil:
    cdef double vo, io_h
    pv[0] = iL
    pv[3] = vin - vin_nom
    if use_est:
        vo = C0 * iL + C1 * vC + D1 * io
        io_h = iL - K_E * vo - w
        pv[1] = rco_h * (io_h - iL) + (rco_h / rl_h + 1.0) * vo
        pv[2] = io_h
    else:
        pv[1] = vC
        pv[2] = io


def run_loop(double[:] plant, double T, int nsub, int n_periods, double[:] x0, double[:] ev_t,
             double[:] ev_io, double[:] ev_vin, int mode, double[:] duty_seq, long[:] reg_ptr,
             double[:] reg_A, double[:] reg_b, double[:] reg_K, double[:] reg_l, double[:] sep,
             int has_sep, double u_lo, double u_hi, int n_p, double[:] meas, double latency,
             int dcm, double[:, :] out, double[:] io_hat_out, double[:] duty_out,
             double[:] u_out, double[:] p_out):
    """Simulate ``n_periods`` switching periods; returns the number completed."""
    cdef double a00 = plant[0], a01 = plant[1], a10 = plant[2], a11 = plant[3]
    cdef double det = a00 * a11 - a01 * a10
    cdef double i0 = a11 / det, i1 = -a01 / det, i2 = -a10 / det, i3 = a00 / det
    cdef double C0 = plant[8], C1 = plant[9], D1 = plant[10]
    cdef int n_ev = ev_t.shape[0]
    cdef bint use_est = meas[0] != 0.0
    cdef double K_E = meas[1], z_E = meas[2], p_E = meas[3], rco_h = meas[4], rl_h = meas[5]
    cdef double vin_nom = meas[6]
    cdef double h = T / nsub
    cdef double eps = EDGE_EPS * T
    cdef Step grid = make_step(plant, i0, i1, i2, i3, h)
    cdef double iL = x0[0], vC = x0[1]
    cdef int ei = 0, k, j, c, e, row = 0, npts, q, qq
    cdef double t0, ta, tb, t_sw, t_s, te, cur, bp, io, vin, vo, vo_a, vo_b, hh, w, u
    cdef double d = 0.0, tmp
    cdef bint measured, on
    cdef double pts[64]
    cdef double[:] pv = _zeros(n_p)

    ei = sched(ev_t, n_ev, ei, 0.0, eps)
    io = ev_io[ei]
    vin = ev_vin[ei]
    vo = C0 * iL + C1 * vC + D1 * io
    w = K_E * (z_E - p_E) * vo / p_E if use_est else 0.0
    measure(pv, use_est, iL, vC, io, vin, w, C0, C1, D1, K_E, rco_h, rl_h, vin_nom)

    with nogil:
        for k in range(n_periods):
            t0 = k * T
            if mode == 0:
                u = duty_seq[k]
            else:
                u = policy(pv, n_p, reg_ptr, reg_A, reg_b, reg_K, reg_l, sep, has_sep, u_lo, u_hi)
            d = u
            if d < 0.0:
                d = 0.0
            if d > 1.0:
                d = 1.0
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
                ei = sched(ev_t, n_ev, ei, t0 + ta, eps)
                io = ev_io[ei]
                vin = ev_vin[ei]
                vo = C0 * iL + C1 * vC + D1 * io
                out[row, 0] = t0 + ta
                out[row, 1] = iL
                out[row, 2] = vC
                out[row, 3] = vo
                out[row, 4] = d
                out[row, 5] = io
                out[row, 6] = vin
                io_hat_out[row] = iL - K_E * vo - w if use_est else io
                row += 1
                npts = 0
                if ta + eps < t_sw < tb - eps:
                    pts[npts] = t_sw
                    npts += 1
                if ta + eps < t_s < tb - eps:
                    pts[npts] = t_s
                    npts += 1
                for e in range(ei + 1, n_ev):
                    te = ev_t[e] - t0
                    if te >= tb - eps or npts >= 62:
                        break
                    if te > ta + eps:
                        pts[npts] = te
                        npts += 1
                # insertion sort, then the sub-step end
                for q in range(1, npts):
                    tmp = pts[q]
                    qq = q - 1
                    while qq >= 0 and pts[qq] > tmp:
                        pts[qq + 1] = pts[qq]
                        qq -= 1
                    pts[qq + 1] = tmp
                pts[npts] = tb
                npts += 1
                cur = ta
                for q in range(npts):
                    bp = pts[q]
                    ei = sched(ev_t, n_ev, ei, t0 + cur, eps)
                    io = ev_io[ei]
                    vin = ev_vin[ei]
                    on = cur < t_sw - eps
                    vo_a = C0 * iL + C1 * vC + D1 * io
                    advance(plant, i0, i1, i2, i3, &grid, npts == 1, bp - cur, &iL, &vC, io,
                            vin if on else 0.0, dcm != 0 and not on)
                    if use_est:
                        vo_b = C0 * iL + C1 * vC + D1 * io
                        hh = bp - cur
                        w = ((1.0 - 0.5 * p_E * hh) * w
                             + 0.5 * hh * K_E * (z_E - p_E) * (vo_a + vo_b)) / (1.0 + 0.5 * p_E * hh)
                    cur = bp
                    if not measured and fabs(cur - t_s) <= eps:
                        ei = sched(ev_t, n_ev, ei, t0 + cur, eps)
                        measure(pv, use_est, iL, vC, ev_io[ei], ev_vin[ei], w, C0, C1, D1, K_E,
                                rco_h, rl_h, vin_nom)
                        measured = True
                if not (isfinite(iL) and isfinite(vC)):
                    with gil:
                        return k
        t0 = n_periods * T
        ei = sched(ev_t, n_ev, ei, t0, eps)
        io = ev_io[ei]
        vin = ev_vin[ei]
        vo = C0 * iL + C1 * vC + D1 * io
        out[row, 0] = t0
        out[row, 1] = iL
        out[row, 2] = vC
        out[row, 3] = vo
        out[row, 4] = d
        out[row, 5] = io
        out[row, 6] = vin
        io_hat_out[row] = iL - K_E * vo - w if use_est else io
    return n_periods


def _zeros(int n):
    import numpy as np
    return np.zeros(n)
