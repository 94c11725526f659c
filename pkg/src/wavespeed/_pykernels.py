"""Pure-Python reference kernels.

Same algorithms and argument conventions as the compiled ``_ckernels``
module; used when the extension is unavailable or ``WAVESPEED_PURE_PYTHON``
is set.  State vectors are plain lists of floats, which is faster than
numpy for two to four components.
"""

import math

import numpy as np

# system codes
PLANAR, VISCOUS, INVISCID_FULL, VISCOUS_FULL = 0, 1, 2, 3
DIMS = {PLANAR: 2, VISCOUS: 3, INVISCID_FULL: 3, VISCOUS_FULL: 4}

# event codes
U_BELOW, V_BELOW, NEAR_ORIGIN, T_NEGATIVE, T_ABOVE_ONE, U_REACHES_C = range(6)

# status codes
ST_EVENT, ST_BUDGET, ST_UNDERFLOW, ST_SINGULAR, ST_BLOWUP = range(5)

# Dormand-Prince 5(4)
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


class _Singular(Exception):
    pass


def make_rhs(code, params):
    """Closure evaluating one of the built-in systems on a list state."""
    c, rho, nu, guard = params[0], params[1], params[2], params[3]
    if code == PLANAR:
        half_rho = 0.5 / rho

        def rhs(y):
            T, U = y
            d = U - c
            if abs(d) < guard:
                raise _Singular
            return [-c * T + U * T + U * half_rho * (2.0 * c - U), rho / d * T * (1.0 - T)]

    elif code == VISCOUS:
        inv_nu = 1.0 / nu

        def rhs(y):
            T, U, V = y
            return [-c * T + U * T + V, (-c * U + 0.5 * U * U + rho * V) * inv_nu, T * (T - 1.0)]

    elif code == INVISCID_FULL:

        def rhs(y):
            T, U, V = y
            d = U - c
            if abs(d) < guard:
                raise _Singular
            return [-c * T + U * T + V, rho / d * T * (1.0 - T), T * (T - 1.0)]

    elif code == VISCOUS_FULL:
        inv_nu = 1.0 / nu

        def rhs(y):
            T, U, V, W = y
            r = T * (T - 1.0)
            return [-c * T + U * T + V, (-c * U + 0.5 * U * U + W) * inv_nu, r, rho * r]

    else:
        raise ValueError(f"unknown system code {code}")
    return rhs


def event_value(kind, thr, y, c):
    """Event function; the event fires when this becomes <= 0."""
    if kind == U_BELOW:
        return y[1] - thr
    if kind == V_BELOW:
        return y[2] - thr
    if kind == NEAR_ORIGIN:
        return math.sqrt(sum(v * v for v in y)) - thr
    if kind == T_NEGATIVE:
        return y[0] - thr
    if kind == T_ABOVE_ONE:
        return thr - y[0]
    if kind == U_REACHES_C:
        return abs(y[1] - c) - thr
    raise ValueError(f"unknown event code {kind}")


def dopri_step(rhs, y, k1, h):
    """One Dormand-Prince step; returns (y_new, k7, error_vector)."""
    n = len(y)
    r = range(n)
    k2 = rhs([y[i] + h * A21 * k1[i] for i in r])
    k3 = rhs([y[i] + h * (A31 * k1[i] + A32 * k2[i]) for i in r])
    k4 = rhs([y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]) for i in r])
    k5 = rhs([y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]) for i in r])
    k6 = rhs(
        [y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]) for i in r]
    )
    yn = [y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]) for i in r]
    k7 = rhs(yn)
    err = [
        h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]) for i in r
    ]
    return yn, k7, err


def _err_norm(err, y, yn, rtol, atol):
    n = len(y)
    s = 0.0
    for i in range(n):
        sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
        e = err[i] / sc
        s += e * e
    return math.sqrt(s / n)


def _initial_step(rhs, y, f0, rtol, atol):
    n = len(y)
    sc = [atol + rtol * abs(v) for v in y]
    d0 = math.sqrt(sum((y[i] / sc[i]) ** 2 for i in range(n)) / n)
    d1 = math.sqrt(sum((f0[i] / sc[i]) ** 2 for i in range(n)) / n)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = [y[i] + h0 * f0[i] for i in range(n)]
    f1 = rhs(y1)
    d2 = math.sqrt(sum(((f1[i] - f0[i]) / sc[i]) ** 2 for i in range(n)) / n) / h0
    m = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if m <= 1e-15 else (0.01 / m) ** 0.2
    return min(100.0 * h0, h1)


def shoot(
    code,
    params,
    y0,
    xi_budget,
    rtol,
    atol,
    event_tol,
    ev_kinds,
    ev_thr,
    max_norm,
    rhs=None,
    max_steps=2000000,
):
    """Integrate forward until an event, the xi budget or ``max_steps``, or a failure.

    Returns ``(status, event_index, xi, Y, stats)`` where ``xi`` and ``Y``
    hold one sample per accepted step (plus the terminal point) and
    ``stats = (accepted, rejected, evaluations)``.
    """
    if rhs is None:
        rhs = make_rhs(code, params)
    nev = [0]

    def f(y):
        nev[0] += 1
        return rhs(y)

    c = params[0]
    y = [float(v) for v in y0]
    n = len(y)
    xi = 0.0
    xs = [0.0]
    ys = [list(y)]
    n_acc = n_rej = 0
    h_min = 1e-3 * event_tol
    kinds = list(ev_kinds)
    thrs = list(ev_thr)
    g_prev = [event_value(k, t, y, c) for k, t in zip(kinds, thrs)]

    def result(status, idx):
        return status, idx, np.array(xs), np.array(ys, dtype=float).reshape(-1, n), (n_acc, n_rej, nev[0])

    try:
        k1 = f(y)
        h = _initial_step(f, y, k1, rtol, atol)
    except _Singular:
        return result(ST_SINGULAR, -1)

    last_rejected = False
    while True:
        if xi >= xi_budget or n_acc >= max_steps:
            return result(ST_BUDGET, -1)
        if xi + h > xi_budget:
            h = xi_budget - xi
        try:
            yn, k7, err = dopri_step(f, y, k1, h)
            en = _err_norm(err, y, yn, rtol, atol)
            if not math.isfinite(en):
                raise OverflowError
        except _Singular:
            en = math.inf
        except (OverflowError, ZeroDivisionError):
            en = math.inf
        if en > 1.0:
            n_rej += 1
            fac = 0.2 if not math.isfinite(en) else max(0.2, 0.9 * en ** -0.2)
            h *= fac
            last_rejected = True
            if h < h_min:
                if not math.isfinite(en):
                    # distinguish a pole from an ordinary stall
                    try:
                        f(y)
                        dopri_step(f, y, k1, h)
                    except _Singular:
                        return result(ST_SINGULAR, -1)
                return result(ST_UNDERFLOW, -1)
            continue

        n_acc += 1
        g_new = [event_value(k, t, yn, c) for k, t in zip(kinds, thrs)]
        hit = [i for i in range(len(kinds)) if g_prev[i] > 0 and g_new[i] <= 0]
        if hit:
            lo, hi = 0.0, h
            y_hi = yn
            while hi - lo > event_tol:
                mid = 0.5 * (lo + hi)
                try:
                    ym, _, _ = dopri_step(f, y, k1, mid)
                except _Singular:
                    hi, y_hi = mid, None
                    continue
                gm = [event_value(k, t, ym, c) for k, t in zip(kinds, thrs)]
                if any(g_prev[i] > 0 and gm[i] <= 0 for i in range(len(kinds))):
                    hi, y_hi = mid, ym
                else:
                    lo = mid
            if y_hi is None:
                y_hi, _, _ = dopri_step(f, y, k1, hi)
            g_hi = [event_value(k, t, y_hi, c) for k, t in zip(kinds, thrs)]
            idx = next(i for i in range(len(kinds)) if g_prev[i] > 0 and g_hi[i] <= 0)
            xs.append(xi + hi)
            ys.append(list(y_hi))
            return result(ST_EVENT, idx)

        xi += h
        y = yn
        k1 = k7
        g_prev = g_new
        xs.append(xi)
        ys.append(list(y))
        if max(abs(v) for v in y) > max_norm:
            return result(ST_BLOWUP, -1)
        fac = 5.0 if en == 0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
        if last_rejected:
            fac = min(fac, 1.0)
        last_rejected = False
        h *= fac


def rk_fixed(code, params, y0, h, n_steps, rhs=None):
    """Fixed-step Dormand-Prince propagation (5th-order solution), for order tests."""
    if rhs is None:
        rhs = make_rhs(code, params)
    y = [float(v) for v in y0]
    k1 = rhs(y)
    for _ in range(n_steps):
        y, k1, _ = dopri_step(rhs, y, k1, h)
    return np.array(y)


# ---------------------------------------------------------------------------
# method-of-lines kernel


def pde_rhs(T, u, dx, nu, rho, reaction):
    """Semi-discrete right-hand side on the full node arrays.

    ``T[0] = 1`` and ``T[-1] = u[-1] = 0`` are Dirichlet nodes; ``u[0]``
    is an unknown with a zero-gradient ghost.  Returns
    ``(dT, du, boundary_flux)`` where ``boundary_flux`` is the net
    transport of T into the interior through its two end faces.
    """
    n = T.shape[0]
    # faces j + 1/2 for j = 0..n-2
    TL, TR = T[:-1], T[1:]
    uL, uR = u[:-1], u[1:]
    a = np.maximum(np.abs(uL), np.abs(uR))
    flux_T = 0.5 * (uL * TL + uR * TR) - 0.5 * a * (TR - TL) - (TR - TL) / dx
    flux_u = 0.5 * (0.5 * uL * uL + 0.5 * uR * uR) - 0.5 * a * (uR - uL) - nu * (uR - uL) / dx

    dT = np.zeros(n)
    du = np.zeros(n)
    dT[1:-1] = -(flux_T[1:] - flux_T[:-1]) / dx
    du[1:-1] = -(flux_u[1:] - flux_u[:-1]) / dx
    # left u node: ghost u[-1] = u[0] gives a face flux of u0^2/2 with no dissipation
    u0 = u[0]
    du[0] = -(flux_u[0] - 0.5 * u0 * u0) / dx
    if reaction:
        r = T[1:-1] * (1.0 - T[1:-1])
        dT[1:-1] += r
        du[1:-1] += rho * r
        r0 = T[0] * (1.0 - T[0])
        du[0] += rho * r0
    bflux = flux_T[0] - flux_T[-1]
    return dT, du, bflux


def pde_advance(T, u, n_steps, dt, dx, nu, rho, reaction, blowup):
    """Advance ``n_steps`` of SSP-RK3 in place.

    Returns ``(steps_done, boundary_flux_integral, max_abs)``; stops early
    when any value exceeds ``blowup`` in magnitude.
    """
    bsum = 0.0
    peak = 0.0
    for step in range(n_steps):
        dT, du, b0 = pde_rhs(T, u, dx, nu, rho, reaction)
        T1 = T + dt * dT
        u1 = u + dt * du
        dT, du, b1 = pde_rhs(T1, u1, dx, nu, rho, reaction)
        T2 = 0.75 * T + 0.25 * (T1 + dt * dT)
        u2 = 0.75 * u + 0.25 * (u1 + dt * du)
        dT, du, b2 = pde_rhs(T2, u2, dx, nu, rho, reaction)
        T[:] = T / 3.0 + (2.0 / 3.0) * (T2 + dt * dT)
        u[:] = u / 3.0 + (2.0 / 3.0) * (u2 + dt * du)
        bsum += dt * (b0 / 6.0 + b1 / 6.0 + 2.0 * b2 / 3.0)
        peak = max(float(np.max(np.abs(T))), float(np.max(np.abs(u))))
        if not math.isfinite(peak) or peak > blowup:
            return step + 1, bsum, peak
    return n_steps, bsum, peak
