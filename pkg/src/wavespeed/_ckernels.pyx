# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: adaptive Dormand-Prince shooting and the SSP-RK3 PDE step.

Mirrors ``_pykernels`` exactly (same tableau, step control and event
bisection) so both backends return identical verdicts.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow, isfinite, INFINITY

cnp.import_array()

cdef int PLANAR = 0
cdef int VISCOUS = 1
cdef int INVISCID_FULL = 2
cdef int VISCOUS_FULL = 3

cdef double C2 = 1.0 / 5
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920
cdef double E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40


cdef struct Sys:
    int code
    int n
    double c
    double rho
    double nu
    double guard
    long nev


cdef int rhs(Sys* s, double* y, double* out) noexcept nogil:
    cdef double T = y[0], U = y[1], d, r
    s.nev += 1
    if s.code == 0:
        d = U - s.c
        if fabs(d) < s.guard:
            return 1
        out[0] = -s.c * T + U * T + U * (2.0 * s.c - U) * (0.5 / s.rho)
        out[1] = s.rho / d * T * (1.0 - T)
    elif s.code == 1:
        out[0] = -s.c * T + U * T + y[2]
        out[1] = (-s.c * U + 0.5 * U * U + s.rho * y[2]) * (1.0 / s.nu)
        out[2] = T * (T - 1.0)
    elif s.code == 2:
        d = U - s.c
        if fabs(d) < s.guard:
            return 1
        out[0] = -s.c * T + U * T + y[2]
        out[1] = s.rho / d * T * (1.0 - T)
        out[2] = T * (T - 1.0)
    else:
        r = T * (T - 1.0)
        out[0] = -s.c * T + U * T + y[2]
        out[1] = (-s.c * U + 0.5 * U * U + y[3]) * (1.0 / s.nu)
        out[2] = r
        out[3] = s.rho * r
    return 0


cdef int rhs_entry(Sys* s, double* y, double* out) noexcept nogil:
    return rhs(s, y, out)


cdef double event_value(int kind, double thr, double* y, int n, double c) noexcept nogil:
    cdef double s = 0.0
    cdef int i
    if kind == 0:
        return y[1] - thr
    if kind == 1:
        return y[2] - thr
    if kind == 2:
        for i in range(n):
            s += y[i] * y[i]
        return sqrt(s) - thr
    if kind == 3:
        return y[0] - thr
    if kind == 4:
        return thr - y[0]
    return fabs(y[1] - c) - thr


cdef int dopri_step(Sys* s, double* y, double* k1, double h,
                    double* yn, double* k7, double* err) noexcept nogil:
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double k5[4]
    cdef double k6[4]
    cdef double tmp[4]
    cdef int i, n = s.n
    for i in range(n):
        tmp[i] = y[i] + h * A21 * k1[i]
    if rhs(s, tmp, k2):
        return 1
    for i in range(n):
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
    if rhs(s, tmp, k3):
        return 1
    for i in range(n):
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
    if rhs(s, tmp, k4):
        return 1
    for i in range(n):
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
    if rhs(s, tmp, k5):
        return 1
    for i in range(n):
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
    if rhs(s, tmp, k6):
        return 1
    for i in range(n):
        yn[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
    if rhs(s, yn, k7):
        return 1
    for i in range(n):
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
    return 0


cdef double err_norm(double* err, double* y, double* yn, int n, double rtol, double atol) noexcept nogil:
    cdef double acc = 0.0, sc, e
    cdef int i
    for i in range(n):
        sc = atol + rtol * (fabs(y[i]) if fabs(y[i]) > fabs(yn[i]) else fabs(yn[i]))
        e = err[i] / sc
        acc += e * e
    return sqrt(acc / n)


cdef double initial_step(Sys* s, double* y, double* f0, double rtol, double atol) noexcept nogil:
    cdef double sc[4]
    cdef double y1[4]
    cdef double f1[4]
    cdef double d0 = 0.0, d1 = 0.0, d2 = 0.0, h0, h1, m, t
    cdef int i, n = s.n
    for i in range(n):
        sc[i] = atol + rtol * fabs(y[i])
        d0 += (y[i] / sc[i]) * (y[i] / sc[i])
        d1 += (f0[i] / sc[i]) * (f0[i] / sc[i])
    d0 = sqrt(d0 / n)
    d1 = sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    for i in range(n):
        y1[i] = y[i] + h0 * f0[i]
    if rhs(s, y1, f1):
        return -1.0
    for i in range(n):
        t = (f1[i] - f0[i]) / sc[i]
        d2 += t * t
    d2 = sqrt(d2 / n) / h0
    m = d1 if d1 > d2 else d2
    if m <= 1e-15:
        h1 = h0 * 1e-3 if h0 * 1e-3 > 1e-6 else 1e-6
    else:
        h1 = pow(0.01 / m, 0.2)
    return h1 if h1 < 100.0 * h0 else 100.0 * h0


cdef class _Store:
    cdef public object xs
    cdef public object ys
    cdef double[::1] xv
    cdef double[:, ::1] yv
    cdef public Py_ssize_t size
    cdef int n

    def __init__(self, int n, Py_ssize_t cap):
        self.n = n
        self.xs = np.empty(cap)
        self.ys = np.empty((cap, n))
        self.xv = self.xs
        self.yv = self.ys
        self.size = 0

    cdef void push(self, double x, double* y):
        cdef Py_ssize_t cap = self.xv.shape[0]
        cdef int i
        if self.size == cap:
            self.xs = np.concatenate([self.xs, np.empty(cap)])
            self.ys = np.concatenate([self.ys, np.empty((cap, self.n))])
            self.xv = self.xs
            self.yv = self.ys
        self.xv[self.size] = x
        for i in range(self.n):
            self.yv[self.size, i] = y[i]
        self.size += 1


def shoot(int code, params, y0, double xi_budget, double rtol, double atol,
          double event_tol, ev_kinds, ev_thr, double max_norm, rhs=None,
          long max_steps=2000000):
    """Compiled counterpart of ``_pykernels.shoot`` for the built-in systems."""
    if rhs is not None:
        raise TypeError("the compiled kernel only handles built-in systems")
    cdef Sys s
    s.code = code
    s.n = 2 if code == 0 else (4 if code == 3 else 3)
    s.c = params[0]
    s.rho = params[1]
    s.nu = params[2]
    s.guard = params[3]
    s.nev = 0
    cdef int n = s.n
    if len(y0) != n:
        raise ValueError("state dimension does not match the system")
    cdef int ne = len(ev_kinds)
    if ne > 16:
        raise ValueError("too many events")
    cdef int kinds[16]
    cdef double thrs[16]
    cdef double g_prev[16]
    cdef double g_new[16]
    cdef double y[4]
    cdef double yn[4]
    cdef double yhi[4]
    cdef double ym[4]
    cdef double k1[4]
    cdef double k7[4]
    cdef double kd[4]
    cdef double err[4]
    cdef int i, idx, status = -1, rc, any_hit, have_hi
    cdef double xi = 0.0, h, en, fac, lo, hi, mid, gm, peak, c = s.c
    cdef double h_min = 1e-3 * event_tol
    cdef long n_acc = 0, n_rej = 0
    cdef bint last_rejected = False
    for i in range(ne):
        kinds[i] = ev_kinds[i]
        thrs[i] = ev_thr[i]
    for i in range(n):
        y[i] = y0[i]
    store = _Store(n, 1024)
    cdef _Store st = store
    st.push(0.0, y)
    for i in range(ne):
        g_prev[i] = event_value(kinds[i], thrs[i], y, n, c)

    idx = -1
    if rhs_entry(&s, y, k1):
        status = 3
    else:
        h = initial_step(&s, y, k1, rtol, atol)
        if h < 0:
            status = 3

    while status < 0:
        if xi >= xi_budget or n_acc >= max_steps:
            status = 1
            break
        if xi + h > xi_budget:
            h = xi_budget - xi
        rc = dopri_step(&s, y, k1, h, yn, k7, err)
        if rc:
            en = INFINITY
        else:
            en = err_norm(err, y, yn, n, rtol, atol)
            if not isfinite(en):
                en = INFINITY
        if en > 1.0:
            n_rej += 1
            if not isfinite(en):
                fac = 0.2
            else:
                fac = 0.9 * pow(en, -0.2)
                if fac < 0.2:
                    fac = 0.2
            h *= fac
            last_rejected = True
            if h < h_min:
                status = 2
                if not isfinite(en):
                    if rhs_entry(&s, y, kd) or dopri_step(&s, y, k1, h, ym, kd, err):
                        status = 3
            continue

        n_acc += 1
        any_hit = 0
        for i in range(ne):
            g_new[i] = event_value(kinds[i], thrs[i], yn, n, c)
            if g_prev[i] > 0 and g_new[i] <= 0:
                any_hit = 1
        if any_hit:
            lo = 0.0
            hi = h
            have_hi = 1
            for i in range(n):
                yhi[i] = yn[i]
            while hi - lo > event_tol:
                mid = 0.5 * (lo + hi)
                if dopri_step(&s, y, k1, mid, ym, kd, err):
                    hi = mid
                    have_hi = 0
                    continue
                any_hit = 0
                for i in range(ne):
                    gm = event_value(kinds[i], thrs[i], ym, n, c)
                    if g_prev[i] > 0 and gm <= 0:
                        any_hit = 1
                if any_hit:
                    hi = mid
                    have_hi = 1
                    for i in range(n):
                        yhi[i] = ym[i]
                else:
                    lo = mid
            if not have_hi:
                dopri_step(&s, y, k1, hi, yhi, kd, err)
            for i in range(ne):
                gm = event_value(kinds[i], thrs[i], yhi, n, c)
                if g_prev[i] > 0 and gm <= 0:
                    idx = i
                    break
            st.push(xi + hi, yhi)
            status = 0
            break

        xi += h
        peak = 0.0
        for i in range(n):
            y[i] = yn[i]
            k1[i] = k7[i]
            if fabs(y[i]) > peak:
                peak = fabs(y[i])
        for i in range(ne):
            g_prev[i] = g_new[i]
        st.push(xi, y)
        if peak > max_norm:
            status = 4
            break
        if en == 0:
            fac = 5.0
        else:
            fac = 0.9 * pow(en, -0.2)
            if fac > 5.0:
                fac = 5.0
            if fac < 0.2:
                fac = 0.2
        if last_rejected and fac > 1.0:
            fac = 1.0
        last_rejected = False
        h *= fac

    xs = st.xs[: st.size].copy()
    ys = st.ys[: st.size].copy()
    return status, idx, xs, ys, (n_acc, n_rej, s.nev)


def rk_fixed(int code, params, y0, double h, long n_steps, rhs=None):
    """Fixed-step propagation with the 5th-order solution."""
    if rhs is not None:
        raise TypeError("the compiled kernel only handles built-in systems")
    cdef Sys s
    s.code = code
    s.n = 2 if code == 0 else (4 if code == 3 else 3)
    s.c = params[0]
    s.rho = params[1]
    s.nu = params[2]
    s.guard = params[3]
    s.nev = 0
    cdef double y[4]
    cdef double yn[4]
    cdef double k1[4]
    cdef double k7[4]
    cdef double err[4]
    cdef int i
    cdef long j
    for i in range(s.n):
        y[i] = y0[i]
    if rhs_entry(&s, y, k1):
        raise ZeroDivisionError("singular field")
    for j in range(n_steps):
        if dopri_step(&s, y, k1, h, yn, k7, err):
            raise ZeroDivisionError("singular field")
        for i in range(s.n):
            y[i] = yn[i]
            k1[i] = k7[i]
    return np.array([y[i] for i in range(s.n)])


# ---------------------------------------------------------------------------
# method of lines


cdef double pde_rhs(double[::1] T, double[::1] u, double[::1] dT, double[::1] du,
                    double dx, double nu, double rho, bint reaction) noexcept nogil:
    cdef Py_ssize_t n = T.shape[0], j
    cdef double fT_prev = 0.0, fu_prev, fT, fu, a, uL, uR, TL, TR, r, first = 0.0
    cdef double inv_dx = 1.0 / dx
    # left ghost face for u
    fu_prev = 0.5 * u[0] * u[0]
    for j in range(n - 1):
        TL = T[j]
        TR = T[j + 1]
        uL = u[j]
        uR = u[j + 1]
        a = fabs(uL) if fabs(uL) > fabs(uR) else fabs(uR)
        fT = 0.5 * (uL * TL + uR * TR) - 0.5 * a * (TR - TL) - (TR - TL) * inv_dx
        fu = 0.25 * (uL * uL + uR * uR) - 0.5 * a * (uR - uL) - nu * (uR - uL) * inv_dx
        if j == 0:
            dT[0] = 0.0
            du[0] = -(fu - fu_prev) * inv_dx
            first = fT
        else:
            dT[j] = -(fT - fT_prev) * inv_dx
            du[j] = -(fu - fu_prev) * inv_dx
        fT_prev = fT
        fu_prev = fu
    dT[n - 1] = 0.0
    du[n - 1] = 0.0
    if reaction:
        r = T[0] * (1.0 - T[0])
        du[0] += rho * r
        for j in range(1, n - 1):
            r = T[j] * (1.0 - T[j])
            dT[j] += r
            du[j] += rho * r
    return first - fT_prev


def pde_advance(cnp.ndarray T_arr, cnp.ndarray u_arr, long n_steps, double dt, double dx,
                double nu, double rho, bint reaction, double blowup):
    """Compiled counterpart of ``_pykernels.pde_advance``."""
    cdef double[::1] T = T_arr
    cdef double[::1] u = u_arr
    cdef Py_ssize_t n = T.shape[0], j
    cdef double[::1] T1 = np.empty(n)
    cdef double[::1] u1 = np.empty(n)
    cdef double[::1] dT = np.empty(n)
    cdef double[::1] du = np.empty(n)
    cdef double b0, b1, b2, bsum = 0.0, peak = 0.0, third = 1.0 / 3.0, twothird = 2.0 / 3.0
    cdef long step, done = n_steps
    with nogil:
        for step in range(n_steps):
            b0 = pde_rhs(T, u, dT, du, dx, nu, rho, reaction)
            for j in range(n):
                T1[j] = T[j] + dt * dT[j]
                u1[j] = u[j] + dt * du[j]
            b1 = pde_rhs(T1, u1, dT, du, dx, nu, rho, reaction)
            for j in range(n):
                T1[j] = 0.75 * T[j] + 0.25 * (T1[j] + dt * dT[j])
                u1[j] = 0.75 * u[j] + 0.25 * (u1[j] + dt * du[j])
            b2 = pde_rhs(T1, u1, dT, du, dx, nu, rho, reaction)
            peak = 0.0
            for j in range(n):
                T[j] = third * T[j] + twothird * (T1[j] + dt * dT[j])
                u[j] = third * u[j] + twothird * (u1[j] + dt * du[j])
                if fabs(T[j]) > peak:
                    peak = fabs(T[j])
                if fabs(u[j]) > peak:
                    peak = fabs(u[j])
            bsum += dt * (b0 / 6.0 + b1 / 6.0 + 2.0 * b2 / 3.0)
            if not isfinite(peak) or peak > blowup:
                done = step + 1
                break
    return done, bsum, peak
