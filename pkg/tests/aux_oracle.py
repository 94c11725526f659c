"""Brute-force evaluation of the auxiliary-function templates.

Written independently of ``wavespeed.bounds``: polynomials are evaluated
with ``numpy.polynomial`` from dense coefficient arrays and every
condition is coded straight from its displayed form.
"""

import math

import numpy as np
from numpy.polynomial import polynomial as P

EQ_TOL = 1e-10


def coeff_array(coeffs, nvar):
    deg = max((max(k) for k in coeffs), default=0)
    C = np.zeros((deg + 2,) * nvar)
    for k, a in coeffs.items():
        C[k] += a
    return C


def left_state(c, rho):
    u0 = c + rho - math.sqrt(c * c + rho * rho)
    return u0, c - u0


def _val(C, *xs):
    return P.polyval2d(*xs, C) if C.ndim == 2 else P.polyval3d(*xs, C)


def _grad(C, *xs):
    return [_val(P.polyder(C, axis=j), *xs) for j in range(C.ndim)]


def verdict(template, coeffs, lam, nu, rho, c, n, eps=1e-4, delta=0.05):
    """``(holds, margin)`` on an ``n``-point-per-axis grid of the region."""
    nvar = 2 if template.startswith("inv") else 3
    C = coeff_array(coeffs, nvar)
    u0, g = left_state(c, rho)
    t = np.linspace(0.0, 1.0, n)
    u = np.linspace(0.0, u0, n)
    slack = []
    if nvar == 2:
        T, U = np.meshgrid(t, u, indexing="ij")
        H = _val(C, T, U)
        HT, HU = _grad(C, T, U)
        dT = -c * T + U * T + U / (2 * rho) * (2 * c - U)
        lhs = -lam * ((c - U) * dT * HT + rho * T * (T - 1) * HU)
        if template == "inv_upper":
            slack.append(np.min(lhs - (c - U) * H))
            slack.append(np.min(_val(C, t, 0 * t) - eps * t * (1 - t)))
            slack.append(-eps - _val(C, 1.0, u0))
            slack.append(EQ_TOL - abs(_val(C, 0.0, 0.0)))
        else:
            slack.append(np.min(lhs + (c - U) * H))
            slack.append(np.min(-_val(C, 1 + 0 * u, u) - eps * u * (1 - u)))
            slack.append(EQ_TOL - abs(_val(C, 1.0, u0)))
            slack.append(_val(C, 0.0, 0.0) - eps)
    else:
        v = np.linspace(0.0, g, n)
        T, U, V = np.meshgrid(t, u, v, indexing="ij")
        H = _val(C, T, U, V)
        HT, HU, HV = _grad(C, T, U, V)
        lhs = -lam * ((-c * T + U * T + V) * HT + (-c * U + U * U / 2 + rho * V) / nu * HU + T * (T - 1) * HV)
        slack.append(np.min(lhs - H))
        slack.append(-eps - _val(C, 1.0, u0, g))
        slack.append(EQ_TOL - abs(_val(C, 0.0, 0.0, 0.0)))
        if template == "vis_upper":
            T2, U2 = np.meshgrid(t, u, indexing="ij")
            slack.append(np.min(_val(C, T2, U2, 0 * T2) - eps * T2 * (1 - T2) - eps * U2 * (u0 - U2)))
        else:
            d = np.linspace(0.0, delta, n)
            slack.append(np.min(_val(C, *np.meshgrid(d, d, d, indexing="ij"))))
    m = float(min(slack))
    return m >= 0, m
