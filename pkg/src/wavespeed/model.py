"""Spatial ODE systems for traveling waves of the FKPP-Burgers system.

A traveling wave ``T(x - c t), u = U(x - c t)`` of

    T_t - T_xx + (u T)_x = T (1 - T)
    u_t - nu u_xx + u u_x = rho T (1 - T)

solves an ODE in the moving coordinate ``xi = x - c t``.  With the flux
variable ``V = c T + T' - U T`` (and ``W = c U + nu U' - U^2/2`` when
``nu > 0``) the inviscid problem reduces to the planar system

    T' = -c T + U T + U (2c - U) / (2 rho)
    U' = rho T (1 - T) / (U - c)

and the viscous one to the three-dimensional system

    T' = -c T + U T + V
    U' = (-c U + U^2/2 + rho V) / nu
    V' = T (T - 1).

Waves connect the left state ``(1, u0)`` (resp. ``(1, u0, c - u0)``) to
the origin, with ``u0 = c + rho - sqrt(c^2 + rho^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError, NumericalFailure, SingularityError


def singular_guard(c: float) -> float:
    """Distance to the pole ``U = c`` below which the planar field refuses to evaluate."""
    return 1e-10 * max(1.0, c)


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters: viscosity ``nu >= 0`` and coupling ``rho > 0``."""

    nu: float
    rho: float

    def __post_init__(self):
        if not (math.isfinite(self.nu) and math.isfinite(self.rho)):
            raise DomainError("nu and rho must be finite")
        if self.rho <= 0:
            raise DomainError("rho must be positive")
        if self.nu < 0:
            raise DomainError("nu must be non-negative")

    @property
    def inviscid(self) -> bool:
        return self.nu == 0


@dataclass(frozen=True)
class WaveParams:
    """System parameters together with a candidate wave speed ``c``.

    ``u0`` and ``gap = c - u0`` are derived on construction using
    cancellation-free forms, so both stay accurate when ``rho >> c`` or
    ``c >> rho``.
    """

    params: SystemParams
    c: float
    u0: float = field(init=False)
    gap: float = field(init=False)

    def __post_init__(self):
        if not math.isfinite(self.c) or self.c <= 0:
            raise DomainError("wave speed c must be positive and finite")
        object.__setattr__(self, "u0", equilibrium_u0(self.c, self.params.rho))
        object.__setattr__(self, "gap", left_gap(self.c, self.params.rho))

    @classmethod
    def make(cls, nu: float, rho: float, c: float) -> "WaveParams":
        return cls(SystemParams(nu, rho), c)

    @property
    def nu(self) -> float:
        return self.params.nu

    @property
    def rho(self) -> float:
        return self.params.rho

    def left_state(self):
        """Left equilibrium: ``(1, u0)`` if inviscid else ``(1, u0, c - u0)``."""
        if self.params.inviscid:
            return PlanarState(1.0, self.u0)
        return ViscousState(1.0, self.u0, self.gap)


class PlanarState(NamedTuple):
    T: float
    U: float


class ViscousState(NamedTuple):
    T: float
    U: float
    V: float


class FullViscousState(NamedTuple):
    T: float
    U: float
    V: float
    W: float


@dataclass(frozen=True)
class EigenData:
    eigenvalues: tuple
    unstable_direction: Optional[tuple]
    unstable_count: int
    # eigenvector matching each eigenvalue, columns as returned by numpy
    eigenvectors: Optional[np.ndarray] = field(default=None, compare=False, repr=False)


def equilibrium_u0(c: float, rho: float) -> float:
    """Left state ``u0 = c + rho - sqrt(c^2 + rho^2)``.

    Evaluated as ``2 c rho / (c + rho + sqrt(c^2 + rho^2))``, which is the
    same number without the subtraction.
    """
    if c <= 0 or rho <= 0:
        raise DomainError("equilibrium_u0 requires c > 0 and rho > 0")
    return 2.0 * c * rho / (c + rho + math.hypot(c, rho))


def left_gap(c: float, rho: float) -> float:
    """``c - u0 = sqrt(c^2 + rho^2) - rho``, computed without cancellation."""
    if c <= 0 or rho <= 0:
        raise DomainError("left_gap requires c > 0 and rho > 0")
    return c * c / (rho + math.hypot(c, rho))


def high_equilibrium(c: float, rho: float) -> float:
    """The other root ``c + rho + sqrt(c^2 + rho^2)`` of the equilibrium condition."""
    if c <= 0 or rho <= 0:
        raise DomainError("high_equilibrium requires c > 0 and rho > 0")
    return c + rho + math.hypot(c, rho)


def reduce_V(U: float, c: float, rho: float) -> float:
    """Flux variable on the level set ``U^2/2 - c U + rho V = 0``."""
    return U / (2.0 * rho) * (2.0 * c - U)


def conserved_planar(U: float, V: float, c: float, rho: float) -> float:
    """First integral ``U^2/2 - c U + rho V`` of the inviscid (T, U, V) system."""
    return 0.5 * U * U - c * U + rho * V


def planar_field(s, w: WaveParams, eps_sing: Optional[float] = None) -> PlanarState:
    T, U = s
    c, rho = w.c, w.rho
    denom = U - c
    guard = singular_guard(c) if eps_sing is None else eps_sing
    if abs(denom) < guard:
        raise SingularityError(f"planar field singular: |U - c| = {abs(denom):.3e}", state=(T, U))
    dT = -c * T + U * T + U / (2.0 * rho) * (2.0 * c - U)
    dU = rho / denom * T * (1.0 - T)
    return PlanarState(dT, dU)


def viscous_field(s, w: WaveParams) -> ViscousState:
    nu = w.nu
    if nu <= 0:
        raise DomainError("viscous_field needs nu > 0; use planar_field when nu = 0")
    T, U, V = s
    c, rho = w.c, w.rho
    return ViscousState(
        -c * T + U * T + V,
        (-c * U + 0.5 * U * U + rho * V) / nu,
        T * (T - 1.0),
    )


def inviscid_full_field(s, w: WaveParams) -> ViscousState:
    """Unreduced inviscid system in (T, U, V); conserves ``U^2/2 - cU + rho V``."""
    T, U, V = s
    c, rho = w.c, w.rho
    denom = U - c
    if abs(denom) < singular_guard(c):
        raise SingularityError("inviscid field singular at U = c", state=tuple(s))
    return ViscousState(-c * T + U * T + V, rho / denom * T * (1.0 - T), T * (T - 1.0))


def viscous_full_field(s, w: WaveParams) -> FullViscousState:
    """Unreduced viscous system in (T, U, V, W); conserves ``rho V - W``."""
    nu = w.nu
    if nu <= 0:
        raise DomainError("viscous_full_field needs nu > 0")
    T, U, V, W = s
    c, rho = w.c, w.rho
    r = T * (T - 1.0)
    return FullViscousState(-c * T + U * T + V, (-c * U + 0.5 * U * U + W) / nu, r, rho * r)


# ---------------------------------------------------------------------------
# linearizations


def planar_jacobian(T: float, U: float, w: WaveParams) -> np.ndarray:
    c, rho = w.c, w.rho
    d = U - c
    return np.array(
        [
            [-c + U, T + (c - U) / rho],
            [rho * (1.0 - 2.0 * T) / d, -rho * T * (1.0 - T) / (d * d)],
        ]
    )


def viscous_jacobian(T: float, U: float, V: float, w: WaveParams) -> np.ndarray:
    c, rho, nu = w.c, w.rho, w.nu
    return np.array(
        [
            [-c + U, T, 1.0],
            [0.0, (-c + U) / nu, rho / nu],
            [2.0 * T - 1.0, 0.0, 0.0],
        ]
    )


def left_characteristic_coeffs(w: WaveParams) -> tuple:
    """Monic cubic whose roots are the eigenvalues at ``(1, u0, c - u0)``."""
    g, nu, rho = w.gap, w.nu, w.rho
    return (1.0, g * (1.0 + nu) / nu, (g * g - nu) / nu, (-g - rho) / nu)


def _sorted_eigs(vals, vecs):
    order = np.lexsort((np.imag(vals), np.real(vals)))
    return vals[order], vecs[:, order]


def _count_unstable(vals) -> int:
    return int(np.sum(np.real(vals) > 0))


def eigen_planar_origin(c: float, rho: float = 1.0) -> EigenData:
    """Eigenvalues at the origin of the planar system: roots of ``l^2 + c l + 1``.

    ``rho`` only enters the eigenvectors.
    """
    if c <= 0:
        raise DomainError("c must be positive")
    disc = c * c - 4.0
    if disc >= 0:
        s = math.sqrt(disc)
        # stable quadratic roots
        q = -0.5 * (c + s)
        vals = (complex(q), complex(1.0 / q))
        vals = tuple(sorted(vals, key=lambda z: z.real))
    else:
        s = math.sqrt(-disc)
        vals = (complex(-0.5 * c, -0.5 * s), complex(-0.5 * c, 0.5 * s))
    J = np.array([[-c, c / rho], [-rho / c, 0.0]])
    _, vecs = np.linalg.eig(J)
    return EigenData(vals, None, 0, vecs)


def eigen_viscous_origin(w: WaveParams) -> EigenData:
    """Eigenvalues of the 3-D system at the origin.

    The (T, V) block gives the roots of ``l^2 + c l + 1``; the U direction
    decouples with eigenvalue ``-c / nu``.
    """
    c, nu = w.c, w.nu
    if nu <= 0:
        raise DomainError("eigen_viscous_origin needs nu > 0")
    tv = eigen_planar_origin(c).eigenvalues
    vals = tuple(sorted(tv + (complex(-c / nu),), key=lambda z: (z.real, z.imag)))
    J = viscous_jacobian(0.0, 0.0, 0.0, w)
    _, vecs = np.linalg.eig(J)
    return EigenData(vals, None, _count_unstable(np.array(vals)), vecs)


def _polish_cubic_root(coeffs, lam, iters=3):
    p = np.poly1d(coeffs)
    dp = p.deriv()
    for _ in range(iters):
        d = dp(lam)
        if d == 0:
            break
        lam = lam - p(lam) / d
    return lam


def _orient(vec) -> tuple:
    v = np.real_if_close(vec, tol=1e6)
    if np.iscomplexobj(v):
        raise NumericalFailure("unstable eigenvector is not real")
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    if v[0] > 0:
        v = -v
    return tuple(float(x) for x in v)


def eigen_left_equilibrium(w: WaveParams) -> EigenData:
    """Eigen-structure at the left state.

    For ``nu = 0`` this is the saddle of the planar system; for ``nu > 0``
    the cubic ``g(l) = l^3 + (g(1+nu)/nu) l^2 + ((g^2-nu)/nu) l - (g+rho)/nu``
    with ``g = c - u0``.  The unstable direction is normalized and oriented
    with a negative T-component, i.e. into the box/cube.
    """
    if w.nu == 0:
        J = planar_jacobian(1.0, w.u0, w)
        vals, vecs = np.linalg.eig(J)
        vals, vecs = _sorted_eigs(vals, vecs)
        n_unstable = _count_unstable(vals)
        if n_unstable != 1:
            raise NumericalFailure(f"expected a saddle at (1, u0), found {n_unstable} unstable modes")
        if np.linalg.det(J) >= 0:
            raise NumericalFailure("left equilibrium is not a saddle")
        direction = _orient(vecs[:, -1])
        return EigenData(tuple(complex(v) for v in vals), direction, 1, vecs)

    g, nu, rho = w.gap, w.nu, w.rho
    # cubic times nu; roots via the reversed polynomial, whose leading term never vanishes
    q = (nu, g * (1.0 + nu), g * g - nu, -(g + rho))
    with np.errstate(divide="ignore", over="ignore"):
        mu = np.roots(q[::-1])
        roots = np.where(mu == 0, -np.inf, 1.0 / np.where(mu == 0, 1.0, mu))
    roots = np.array([_polish_cubic_root(q, r) if np.isfinite(r) else r for r in roots])
    fin = roots[np.isfinite(roots)]
    # backward error: residual relative to the sum of term magnitudes
    terms = sum(abs(a) * np.abs(fin) ** k for a, k in zip(q, (3, 2, 1, 0)))
    resid = float(np.max(np.abs(np.polyval(q, fin)) / terms)) if fin.size else 0.0
    if not np.isfinite(resid) or resid > 1e-12:
        raise NumericalFailure(f"cubic eigen-solve residual {resid:.3e} too large")
    order = np.lexsort((np.imag(roots), np.real(roots)))
    roots = roots[order]
    n_unstable = _count_unstable(roots)
    if n_unstable != 1:
        raise NumericalFailure(f"expected one unstable eigenvalue, found {n_unstable}")
    lam = float(np.real(roots[-1]))
    # null vector of J - lam I, solved row by row with V = 1
    direction = _orient(np.array([lam, rho / (g + nu * lam), 1.0]))
    return EigenData(tuple(complex(r) for r in roots), direction, 1, None)


def left_equilibrium_residuals(w: WaveParams) -> float:
    """Norm of the vector field at the left equilibrium (zero in exact arithmetic)."""
    if w.nu == 0:
        return float(np.hypot(*planar_field(w.left_state(), w)))
    return float(np.linalg.norm(viscous_field(w.left_state(), w)))


def origin_tail_margin(x0: Sequence[float], J: np.ndarray, component: int) -> float:
    """Sign test for the linear flow ``x' = J x`` leaving the origin ball.

    For a 2x2 block with trace ``2 mu`` and determinant ``d`` the solution
    is ``exp(mu t) [cosh(dl t) x0 + sinh(dl t)/dl (J - mu) x0]`` with
    ``dl = sqrt(mu^2 - d)``.  The selected component stays non-negative for
    all ``t >= 0`` iff it starts non-negative and ``dl x0_k + w_k >= 0``,
    ``w = (J - mu) x0``.  A complex ``dl`` (a focus) always changes sign, so
    ``-inf`` is returned.  The returned value is scaled by ``|x0|``.
    """
    x0 = np.asarray(x0, dtype=float)
    mu = 0.5 * (J[0, 0] + J[1, 1])
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    disc = mu * mu - det
    if disc < 0:
        return -math.inf
    dl = math.sqrt(disc)
    wvec = (J - mu * np.eye(2)) @ x0
    start = x0[component]
    scale = float(np.linalg.norm(x0)) or 1.0
    if start < 0:
        return start / scale
    return (dl * start + wvec[component]) / scale
