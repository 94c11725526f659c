"""Closed-form speed bounds, trapping-region checks, integral identities and
auxiliary-function falsifiers.

Every check returns a ``BoundReport`` whose inequalities are normalized so
that a non-negative margin means satisfied.  Sampling is on uniform grids;
these are falsifiers, not proofs.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, PreconditionError
from .model import SystemParams, WaveParams, eigen_left_equilibrium, equilibrium_u0, left_gap

EQUALITY_TOL = 1e-10


# ---------------------------------------------------------------------------
# closed-form lower bounds


def inviscid_lower_bound(rho: float) -> float:
    """``max(2, (3 rho / 2)^(1/3))``."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    return max(2.0, (1.5 * rho) ** (1.0 / 3.0))


def viscous_lower_bound(rho: float) -> float:
    """``max(2, rho^(1/3))``."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    return max(2.0, rho ** (1.0 / 3.0))


# ---------------------------------------------------------------------------
# report and sampling types


class Region(enum.Enum):
    BOX_B = "box"
    CUBE_C = "cube"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SampleSpec:
    """Sampling density and slacks.

    ``bounds`` is only read for ``Region.CUSTOM``: one ``(lo, hi)`` pair per axis.
    """

    region: Region = Region.BOX_B
    points_per_axis: int = 256
    epsilon: float = 1e-4
    delta: float = 0.05
    bounds: Optional[tuple] = None

    def __post_init__(self):
        if isinstance(self.region, str):
            object.__setattr__(self, "region", Region(self.region))
        if int(self.points_per_axis) != self.points_per_axis or self.points_per_axis < 2:
            raise DomainError("points_per_axis must be an integer >= 2")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)")
        if self.region is Region.CUSTOM and not self.bounds:
            raise DomainError("a CUSTOM region needs explicit bounds")

    def to_dict(self) -> dict:
        return {
            "region": self.region.value,
            "points_per_axis": self.points_per_axis,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "bounds": None if self.bounds is None else [list(b) for b in self.bounds],
        }


CURVE_SPEC = SampleSpec(points_per_axis=2048)
FACE_SPEC = SampleSpec(points_per_axis=256)


@dataclass(frozen=True)
class BoundReport:
    name: str
    holds: bool
    margin: float
    worst_point: tuple
    components: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.holds != (self.margin >= 0):
            raise ValueError("holds must agree with the sign of margin")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "holds": self.holds,
            "margin": _num(self.margin),
            "worst_point": [_num(v) for v in self.worst_point],
            "components": {k: _num(v) for k, v in self.components.items()},
            "params": self.params,
            "spec": self.spec,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else str(v)


def _report(name: str, parts: dict, points: dict, params: dict, spec: SampleSpec) -> BoundReport:
    """Combine named components (margin per component) into one report."""
    key = min(parts, key=lambda k: parts[k])
    margin = float(parts[key])
    return BoundReport(
        name,
        bool(margin >= 0),
        margin,
        tuple(float(v) for v in points.get(key, ())),
        {k: float(v) for k, v in parts.items()},
        params,
        spec.to_dict(),
    )


def _argmin(values: np.ndarray, *coords: np.ndarray) -> tuple:
    i = int(np.argmin(values))
    return float(values.flat[i]), tuple(float(c.flat[i]) for c in coords)


# ---------------------------------------------------------------------------
# inviscid trapping curves


def check_inviscid_trap(c: float, rho: float, spec: SampleSpec = CURVE_SPEC) -> BoundReport:
    """Trapping curve ``U = c - sqrt(c^2 - c rho T)`` for fast waves.

    Components: ``trap`` is ``-(c^2/4 - (c/2) sqrt(c^2 - c rho T) + 1 - T)``
    minimized over the grid, ``in_box`` is ``3c/4 - rho``.
    """
    if not (c > 0 and rho > 0):
        raise DomainError("c and rho must be positive")
    if c < rho:
        raise DomainError("need c^2 >= c rho so the square root is real on [0, 1]")
    T = np.linspace(0.0, 1.0, spec.points_per_axis)
    q = -(c * c / 4 - 0.5 * c * np.sqrt(np.maximum(c * c - c * rho * T, 0.0)) + 1 - T)
    trap, at = _argmin(q, T)
    parts = {"trap": trap, "in_box": 0.75 * c - rho}
    pts = {"trap": at, "in_box": (1.0,)}
    return _report("inviscid_trap", parts, pts, {"c": c, "rho": rho}, spec)


def check_small_rho_trap(rho: float, spec: SampleSpec = CURVE_SPEC) -> BoundReport:
    """Trapping curve ``U = 2 - sqrt(4 - 2 rho T)`` at ``c = 2``.

    ``crossing`` is ``(T - U)/T`` along the curve (the crossing derivative
    ``T (T - U)`` divided by ``T``) at samples where ``U <= rho T``;
    ``start_above`` is ``u0(2, rho) - (2 - sqrt(4 - 2 rho))``.  The bound
    ``1 - rho`` used by the proof is reported as ``proof_slack`` but does
    not enter the verdict.
    """
    if not rho > 0:
        raise DomainError("rho must be positive")
    T = np.linspace(0.0, 1.0, spec.points_per_axis)[1:]
    arg = 4.0 - 2.0 * rho * T
    real = arg >= 0
    U = 2.0 - np.sqrt(np.where(real, arg, 0.0))
    keep = real & (U <= rho * T)
    if np.any(keep):
        crossing, at = _argmin((T[keep] - U[keep]) / T[keep], T[keep], U[keep])
    else:
        crossing, at = -math.inf, (math.nan, math.nan)
    if rho <= 2.0:
        start = equilibrium_u0(2.0, rho) - (2.0 - math.sqrt(4.0 - 2.0 * rho))
    else:
        start = -math.inf
    parts = {"crossing": crossing, "start_above": start}
    pts = {"crossing": at, "start_above": (1.0, equilibrium_u0(2.0, rho))}
    rep = _report("small_rho_trap", parts, pts, {"rho": rho, "c": 2.0}, spec)
    comps = dict(rep.components, proof_slack=1.0 - rho)
    return BoundReport(rep.name, rep.holds, rep.margin, rep.worst_point, comps, rep.params, rep.spec)


def check_large_rho_trap(sigma: float, rho: float, spec: SampleSpec = CURVE_SPEC) -> BoundReport:
    """Trapping curve ``U = rho^(1/3) (sigma - sqrt(sigma^2 - 2T))`` at ``c = sigma rho^(1/3)``.

    Components: ``trap`` is ``-(rho^(-2/3) - sqrt(sigma^2 - 2T) + 1 - T)``
    on the grid; ``in_box`` is ``u0`` minus the curve's value at ``T = 1``,
    both exact; ``sufficient`` is the T-uniform bound
    ``sqrt(sigma^2 - 2) - 1 - rho^(-2/3)`` that makes the trap inequality
    hold without sampling.
    """
    if not rho > 0:
        raise DomainError("rho must be positive")
    if not sigma * sigma > 2:
        raise DomainError("need sigma^2 > 2")
    r13 = rho ** (1.0 / 3.0)
    r23 = rho ** (-2.0 / 3.0)
    s2 = sigma * sigma
    T = np.linspace(0.0, 1.0, spec.points_per_axis)
    q = -(r23 - np.sqrt(s2 - 2.0 * T) + 1.0 - T)
    trap, at = _argmin(q, T)
    c = sigma * r13
    u0 = equilibrium_u0(c, rho)
    # sigma - sqrt(sigma^2 - 2) without cancellation
    curve_end = r13 * 2.0 / (sigma + math.sqrt(s2 - 2.0))
    parts = {
        "trap": trap,
        "in_box": u0 - curve_end,
        "sufficient": math.sqrt(s2 - 2.0) - 1.0 - r23,
    }
    pts = {"trap": at, "in_box": (1.0, curve_end), "sufficient": (1.0,)}
    return _report("large_rho_trap", parts, pts, {"sigma": sigma, "rho": rho, "c": c}, spec)


# ---------------------------------------------------------------------------
# viscous trapping regions


class ViscousRegion(enum.Enum):
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"


def _viscous_rates(T, U, V, w: WaveParams):
    """``(T', nu U', V')`` of the viscous system, vectorized."""
    c, rho = w.c, w.rho
    return (-c * T + U * T + V, -c * U + 0.5 * U * U + rho * V, T * (T - 1.0))


def _slope_face(k: float, w: WaveParams, n: int, u_cap=None):
    """Crossing rate of ``V - k T`` on the face ``V = k T``, divided by ``T``.

    Samples ``T`` in ``(0, 1]`` and ``U`` in ``[0, u0]`` (or ``[0, u_cap(T)]``).
    """
    T1 = np.linspace(0.0, 1.0, n)[1:]
    s = np.linspace(0.0, 1.0, n)
    Tg, S = np.meshgrid(T1, s, indexing="ij")
    top = w.u0 if u_cap is None else np.minimum(w.u0, u_cap(Tg))
    Ug = S * top
    Vg = k * Tg
    dT, _, dV = _viscous_rates(Tg, Ug, Vg, w)
    return _argmin((dV - k * dT) / Tg, Tg, Ug, Vg)


def check_viscous_traps(kind, w: WaveParams, spec: SampleSpec = FACE_SPEC) -> BoundReport:
    """Sample each face of the region and check that the flow crosses it inward.

    ``R1``: ``(c/2) T <= V <= c - u0``.  ``R2``: additionally
    ``0 <= nu U <= sqrt(rho) T``.  ``R3``: ``(sigma^2/4) T <= V <= c - u0``
    with ``sigma = c / sqrt(rho)``.  The upper face ``V = c - u0`` is
    crossed inward wherever ``0 < T < 1`` because ``V' = T (T - 1)``, so
    it is not sampled.  Each region also needs the left state inside it,
    reported as ``left_inside`` (and ``left_under_cap`` for R2).
    """
    kind = ViscousRegion(kind.value if isinstance(kind, enum.Enum) else kind)
    if w.nu <= 0:
        raise DomainError("viscous traps need nu > 0")
    n = spec.points_per_axis
    c, rho, nu, u0, gap = w.c, w.rho, w.nu, w.u0, w.gap
    parts, pts = {}, {}
    if kind is ViscousRegion.R3:
        k = c * c / (4.0 * rho)
    else:
        k = 0.5 * c
    if kind is ViscousRegion.R2:
        sr = math.sqrt(rho)
        parts["slope_face"], pts["slope_face"] = _slope_face(k, w, n, lambda T: sr * T / nu)
        # face nu U = sqrt(rho) T, inside the cube and above V = k T
        t_top = min(1.0, nu * u0 / sr)
        T1 = np.linspace(0.0, t_top, n)[1:]
        s = np.linspace(0.0, 1.0, n)
        Tg, S = np.meshgrid(T1, s, indexing="ij")
        Ug = sr * Tg / nu
        Vg = k * Tg + S * np.maximum(gap - k * Tg, 0.0)
        dT, nudU, _ = _viscous_rates(Tg, Ug, Vg, w)
        parts["cap_face"], pts["cap_face"] = _argmin((sr * dT - nudU) / Tg, Tg, Ug, Vg)
        parts["left_under_cap"] = sr - nu * u0
        pts["left_under_cap"] = (1.0, u0, gap)
    else:
        parts["slope_face"], pts["slope_face"] = _slope_face(k, w, n)
    parts["left_inside"] = gap - k
    pts["left_inside"] = (1.0, u0, gap)
    params = {"region": kind.value, "nu": nu, "rho": rho, "c": c}
    return _report(f"viscous_trap_{kind.value}", parts, pts, params, spec)


# ---------------------------------------------------------------------------
# integral identities along a computed wave


def _profile_rates(states: np.ndarray, w: WaveParams) -> tuple:
    """``(T', U')`` along stored samples."""
    T, U = states[:, 0], states[:, 1]
    c, rho = w.c, w.rho
    if states.shape[1] == 2:
        dT = -c * T + U * T + U * (2 * c - U) / (2 * rho)
        dU = rho * T * (1 - T) / (U - c)
    else:
        V = states[:, 2]
        dT = -c * T + U * T + V
        dU = (-c * U + 0.5 * U * U + rho * V) / w.nu
    return dT, dU


def _quad(xi: np.ndarray, f: np.ndarray, df: np.ndarray, lam_left: float) -> float:
    """Corrected trapezoid sum plus exponential tails beyond the first and last sample."""
    h = np.diff(xi)
    body = float(np.sum(0.5 * h * (f[1:] + f[:-1]) - h * h / 12.0 * (df[1:] - df[:-1])))
    left = f[0] / lam_left if lam_left > 0 else 0.0
    right = -f[-1] ** 2 / df[-1] if df[-1] < 0 else 0.0
    return body + float(left) + float(right)


def wave_integral_diagnostics(traj, w: WaveParams) -> list:
    """Check the flux identities along an existing wave.

    Returns three reports (two for ``nu > 0``): ``flux_identity``
    (``int T(1-T) = c - u0`` to 1e-4 relative), ``half_inequality``
    (``int (c-U) T(1-T) >= 1/2``) and, inviscid only, ``cubic_identity``
    (``int (c-U) T(1-T) = (c^3 - (c-u0)^3) / (3 rho)`` to 1e-4 relative).
    """
    if traj.terminal_event.name != "NEAR_ORIGIN":
        raise PreconditionError("integral diagnostics need a trajectory that reached the origin")
    states = np.asarray(traj.states, float)
    xi = np.asarray(traj.xi, float)
    if len(xi) < 3:
        raise PreconditionError("trajectory has too few samples")
    c, rho, gap = w.c, w.rho, w.gap
    T, U = states[:, 0], states[:, 1]
    dT, dU = _profile_rates(states, w)
    lam = float(max(np.real(eigen_left_equilibrium(w).eigenvalues)))

    f1 = T * (1 - T)
    df1 = dT * (1 - 2 * T)
    f2 = (c - U) * f1
    df2 = -dU * f1 + (c - U) * df1
    i1 = _quad(xi, f1, df1, lam)
    i2 = _quad(xi, f2, df2, lam)

    params = {"nu": w.nu, "rho": rho, "c": c, "flux_integral": i1, "weighted_integral": i2}
    spec = SampleSpec(points_per_axis=max(2, len(xi)))
    reports = [
        _report("flux_identity", {"flux_identity": 1e-4 - abs(i1 - gap) / gap}, {}, dict(params, expected=gap), spec),
        _report("half_inequality", {"half_inequality": i2 - (0.5 - 1e-6)}, {}, params, spec),
    ]
    if w.params.inviscid:
        exact = (c**3 - gap**3) / (3 * rho)
        reports.append(
            _report("cubic_identity", {"cubic_identity": 1e-4 - abs(i2 - exact) / exact}, {}, dict(params, expected=exact), spec)
        )
    return reports


# ---------------------------------------------------------------------------
# auxiliary functions


@dataclass(frozen=True)
class AuxFunction:
    """Polynomial ``H`` given as ``{exponent tuple: coefficient}`` plus the rate ``lam``."""

    variables: int
    coefficients: Dict[Tuple[int, ...], float]
    lam: float = 1.0
    degree: int = -1

    def __post_init__(self):
        if self.variables not in (2, 3):
            raise DomainError("an auxiliary function has 2 or 3 variables")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise DomainError("lambda must be positive")
        coeffs = {}
        for k, v in self.coefficients.items():
            k = tuple(int(e) for e in k)
            if len(k) != self.variables or any(e < 0 for e in k):
                raise DomainError(f"bad exponent tuple {k}")
            coeffs[k] = coeffs.get(k, 0.0) + float(v)
        object.__setattr__(self, "coefficients", coeffs)
        top = max((sum(k) for k in coeffs), default=0)
        if self.degree < 0:
            object.__setattr__(self, "degree", top)
        elif self.degree < top:
            raise DomainError(f"degree {self.degree} is below the largest total exponent {top}")

    @classmethod
    def constant(cls, value: float, variables: int = 2, lam: float = 1.0) -> "AuxFunction":
        return cls(variables, {(0,) * variables: value}, lam)

    def __call__(self, *xs):
        xs = [np.asarray(x, float) for x in xs]
        out = np.zeros(np.broadcast(*xs).shape)
        for k, a in self.coefficients.items():
            term = a
            for x, e in zip(xs, k):
                if e:
                    term = term * x**e
            out = out + term
        return out

    def gradient(self, *xs) -> list:
        xs = [np.asarray(x, float) for x in xs]
        shape = np.broadcast(*xs).shape
        grads = [np.zeros(shape) for _ in xs]
        for k, a in self.coefficients.items():
            for j in range(len(xs)):
                if k[j] == 0:
                    continue
                term = a * k[j]
                for i, (x, e) in enumerate(zip(xs, k)):
                    p = e - 1 if i == j else e
                    if p:
                        term = term * x**p
                grads[j] = grads[j] + term
        return grads

    def to_text(self) -> str:
        lines = [f"# variables {self.variables}", f"# lambda {self.lam!r}"]
        for k in sorted(self.coefficients):
            lines.append(f"({','.join(map(str, k))}) {self.coefficients[k]!r}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def parse(cls, text: str, lam: Optional[float] = None, variables: Optional[int] = None) -> "AuxFunction":
        """Read ``exponent-tuple coefficient`` lines.

        Tuples may be written ``(1,0)``, ``1,0`` or ``1 0`` before the
        coefficient.  ``# lambda <x>`` and ``# variables <n>`` comments set
        those fields unless given as arguments.
        """
        coeffs = {}
        meta = {}
        for raw in text.splitlines():
            line = raw.strip()
            if line.startswith("#"):
                m = re.match(r"#\s*(lambda|variables)\s*[=:]?\s*(\S+)", line)
                if m:
                    meta[m.group(1)] = m.group(2)
                continue
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = re.split(r"[\s,()]+", line)
            toks = [t for t in toks if t]
            if len(toks) < 2:
                raise DomainError(f"cannot parse auxiliary-function line {raw!r}")
            try:
                exps = tuple(int(t) for t in toks[:-1])
                coef = float(toks[-1])
            except ValueError:
                raise DomainError(f"cannot parse auxiliary-function line {raw!r}") from None
            coeffs[exps] = coeffs.get(exps, 0.0) + coef
        if not coeffs:
            raise DomainError("auxiliary function has no terms")
        nvar = variables or int(meta.get("variables", len(next(iter(coeffs)))))
        lam_v = lam if lam is not None else float(meta.get("lambda", 1.0))
        return cls(nvar, coeffs, lam_v)

    @classmethod
    def read(cls, path, lam: Optional[float] = None) -> "AuxFunction":
        with open(path) as fh:
            return cls.parse(fh.read(), lam)


class AuxTemplate(enum.Enum):
    INV_UPPER = "inv_upper"
    INV_LOWER = "inv_lower"
    VIS_UPPER = "vis_upper"
    VIS_LOWER = "vis_lower"


def _axis(lo, hi, n):
    return np.linspace(lo, hi, n)


def _region_axes(w: WaveParams, dim: int, spec: SampleSpec) -> list:
    n = spec.points_per_axis
    if spec.region is Region.CUSTOM:
        if len(spec.bounds) != dim:
            raise DomainError("custom bounds do not match the dimension")
        return [_axis(lo, hi, n) for lo, hi in spec.bounds]
    axes = [_axis(0.0, 1.0, n), _axis(0.0, w.u0, n)]
    if dim == 3:
        axes.append(_axis(0.0, w.gap, n))
    return axes


def _flow_margin(template: AuxTemplate, H: AuxFunction, w: WaveParams, axes: list) -> tuple:
    """Worst slack of the template's flow inequality over the grid, chunked along T."""
    c, rho, lam = w.c, w.rho, H.lam
    worst, at = math.inf, ()
    others = np.meshgrid(*axes[1:], indexing="ij")
    for t in axes[0]:
        T = np.full_like(others[0], t)
        if H.variables == 2:
            U = others[0]
            HT, HU = H.gradient(T, U)
            h = H(T, U)
            lhs = -lam * ((c - U) * (-c * T + U * T + U / (2 * rho) * (2 * c - U)) * HT + rho * T * (T - 1) * HU)
            rhs = (c - U) * h if template is AuxTemplate.INV_UPPER else -(c - U) * h
            coords = (T, U)
        else:
            U, V = others
            HT, HU, HV = H.gradient(T, U, V)
            h = H(T, U, V)
            lhs = -lam * ((-c * T + U * T + V) * HT + (-c * U + 0.5 * U * U + rho * V) / w.nu * HU + T * (T - 1) * HV)
            rhs = h
            coords = (T, U, V)
        m, p = _argmin(lhs - rhs, *coords)
        if m < worst:
            worst, at = m, p
    return worst, at


def check_aux_conditions(template, H: AuxFunction, w: WaveParams, spec: SampleSpec = FACE_SPEC) -> BoundReport:
    """Evaluate every condition of an auxiliary-function template on a grid.

    Inviscid templates sample the box ``0 <= T <= 1, 0 <= U <= u0``,
    viscous ones the cube with ``0 <= V <= c - u0`` as well (or the custom
    bounds of ``spec``).  Equalities pass within 1e-10.  Components:

    ``INV_UPPER``: flow, zero_edge (``H(T,0) >= eps T(1-T)``), source
    (``-eps >= H(1,u0)``), origin (``H(0,0) = 0``).
    ``INV_LOWER``: flow, unit_edge (``-H(1,U) >= eps U(1-U)``),
    source (``H(1,u0) = 0``), origin (``H(0,0) >= eps``).
    ``VIS_UPPER``: flow, zero_face (``H(T,U,0) >= eps T(1-T) + eps U(u0-U)``),
    source, origin.
    ``VIS_LOWER``: flow, source, origin, exclusion (``H >= 0`` on ``[0,delta]^3``).
    """
    template = AuxTemplate(template.value if isinstance(template, enum.Enum) else template)
    dim = 2 if template in (AuxTemplate.INV_UPPER, AuxTemplate.INV_LOWER) else 3
    if H.variables != dim:
        raise DomainError(f"template {template.name} needs a {dim}-variable auxiliary function")
    if dim == 3 and w.nu <= 0:
        raise DomainError("viscous templates need nu > 0")
    eps, n = spec.epsilon, spec.points_per_axis
    u0, gap = w.u0, w.gap
    axes = _region_axes(w, dim, spec)
    parts, pts = {}, {}
    parts["flow"], pts["flow"] = _flow_margin(template, H, w, axes)

    if template is AuxTemplate.INV_UPPER:
        T = axes[0]
        parts["zero_edge"], pts["zero_edge"] = _argmin(H(T, 0.0 * T) - eps * T * (1 - T), T, 0.0 * T)
        parts["source"], pts["source"] = -eps - float(H(1.0, u0)), (1.0, u0)
        parts["origin"], pts["origin"] = EQUALITY_TOL - abs(float(H(0.0, 0.0))), (0.0, 0.0)
    elif template is AuxTemplate.INV_LOWER:
        U = axes[1]
        parts["unit_edge"], pts["unit_edge"] = _argmin(-H(1.0 + 0.0 * U, U) - eps * U * (1 - U), 1.0 + 0.0 * U, U)
        parts["source"], pts["source"] = EQUALITY_TOL - abs(float(H(1.0, u0))), (1.0, u0)
        parts["origin"], pts["origin"] = float(H(0.0, 0.0)) - eps, (0.0, 0.0)
    else:
        if template is AuxTemplate.VIS_UPPER:
            Tg, Ug = np.meshgrid(axes[0], axes[1], indexing="ij")
            q = H(Tg, Ug, 0.0 * Tg) - eps * Tg * (1 - Tg) - eps * Ug * (u0 - Ug)
            parts["zero_face"], pts["zero_face"] = _argmin(q, Tg, Ug, 0.0 * Tg)
        parts["source"], pts["source"] = -eps - float(H(1.0, u0, gap)), (1.0, u0, gap)
        parts["origin"], pts["origin"] = EQUALITY_TOL - abs(float(H(0.0, 0.0, 0.0))), (0.0, 0.0, 0.0)
        if template is AuxTemplate.VIS_LOWER:
            d = _axis(0.0, spec.delta, n)
            Tg, Ug, Vg = np.meshgrid(d, d, d, indexing="ij")
            parts["exclusion"], pts["exclusion"] = _argmin(H(Tg, Ug, Vg), Tg, Ug, Vg)
    params = {"template": template.name, "nu": w.nu, "rho": w.rho, "c": w.c, "lambda": H.lam, "degree": H.degree}
    return _report(f"aux_{template.value}", parts, pts, params, spec)


# ---------------------------------------------------------------------------
# figure 1 surface


FIGURE1_FIELDS = ("nu", "rho", "c_star", "bracket_lo", "bracket_hi", "lower_bound", "error")


def figure1_sweep(nu_values: Sequence[float], rho_values: Sequence[float], tol_c: float = 1e-4, tols=None, jobs: int = 1) -> list:
    """Minimal speed on the ``nu x rho`` grid, rows in input order.

    Each row carries the applicable closed-form lower bound.  Cells that
    fail keep ``c_star = nan`` and an ``error`` message.
    """
    from .shooting import run_rows
    from .integrate import Tolerances

    if not len(nu_values) or not len(rho_values):
        raise DomainError("figure1_sweep needs non-empty grids")
    tols = tols or Tolerances()
    work = [(float(nu), float(rho), tol_c, tols) for nu in nu_values for rho in rho_values]
    out = []
    for row in run_rows(work, jobs):
        nu, rho = row["nu"], row["rho"]
        lb = inviscid_lower_bound(rho) if nu == 0 else viscous_lower_bound(rho)
        out.append({k: row.get(k, "") for k in FIGURE1_FIELDS if k != "lower_bound"} | {"lower_bound": lb})
    return [{k: r[k] for k in FIGURE1_FIELDS} for r in out]


def nu_monotone(rows: Sequence[dict], tol: float = 1e-3) -> bool:
    """Whether ``c_star`` is non-decreasing in ``nu`` at every ``rho`` (within ``tol`` relative)."""
    by_rho = {}
    for r in rows:
        if math.isfinite(r["c_star"]):
            by_rho.setdefault(r["rho"], []).append((r["nu"], r["c_star"]))
    for vals in by_rho.values():
        vals.sort()
        for (_, a), (_, b) in zip(vals, vals[1:]):
            if b < a * (1 - tol):
                return False
    return True
