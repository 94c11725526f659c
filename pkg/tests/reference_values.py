"""Published reference values used as test oracles."""

RHO_COLUMNS = (10**1.5, 1e2, 10**2.5, 1e3, 10**3.5, 1e4, 10**4.5, 1e5, 10**5.5, 1e6)

# (upper, lower) prefactor bounds c*/rho^(1/3), one row per column above
_UP = {
    0.0: (1.194, 1.169, 1.158, 1.154, 1.151, 1.150, 1.149, 1.148, 1.148, 1.148),
    0.1: (1.212, 1.190, 1.180, 1.176, 1.173, 1.172, 1.171, 1.171, 1.171, 1.170),
    1.0: (1.371, 1.357, 1.351, 1.349, 1.347, 1.346, 1.346, 1.346, 1.346, 1.346),
    10.0: (1.861, 1.862, 1.864, 1.865, 1.866, 1.866, 1.866, 1.866, 1.867, 1.867),
}
_LO = {
    0.0: (1.168, 1.152, 1.145, 1.142, 1.142, 1.141, 1.142, 1.142, 1.142, 1.142),
    0.1: (1.159, 1.140, 1.133, 1.129, 1.126, 1.124, 1.124, 1.123, 1.123, 1.123),
    1.0: (1.343, 1.331, 1.327, 1.324, 1.322, 1.319, 1.317, 1.318, 1.318, 1.319),
    10.0: (1.861, 1.862, 1.864, 1.865, 1.865, 1.865, 1.864, 1.864, 1.862, 1.862),
}


def prefactor_bracket(nu, rho):
    """(lower, upper) prefactor bounds for the tabulated (nu, rho)."""
    k = min(range(len(RHO_COLUMNS)), key=lambda i: abs(RHO_COLUMNS[i] / rho - 1))
    if abs(RHO_COLUMNS[k] / rho - 1) > 1e-9:
        raise KeyError(rho)
    return _LO[nu][k], _UP[nu][k]


# left u-plateau of the spreading run with nu = rho = 1
PLATEAU_U0 = 0.76393
# the threshold interval from the small-rho theorem and the reported value
THRESHOLD_INTERVAL = (1.0, 16.0 / 3.0)
THRESHOLD_REPORTED = 2.5
