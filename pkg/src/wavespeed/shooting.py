"""Heteroclinic shooting: existence verdicts and minimal wave speeds.

The unstable manifold of the left state is one-dimensional, so a single
orbit decides existence.  In the plane the orbit can only leave the box
``0 <= T <= 1, 0 <= U <= u0`` through ``U = 0``; in the viscous cube only
through ``V = 0``.  An orbit that reaches a small ball around the origin is
accepted only if the linear flow from its entry point keeps the exit
component non-negative, which rules out slow spirals for ``c < 2``.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BlowUpError,
    BracketError,
    DomainError,
    NumericalFailure,
    PreconditionError,
    SingularityError,
    StepSizeUnderflow,
    WaveSpeedError,
)
from .integrate import (
    Event,
    EventKind,
    Tolerances,
    Trajectory,
    VectorField,
    integrate_until_event,
    seed_unstable,
)
from .model import (
    SystemParams,
    WaveParams,
    high_equilibrium,
    origin_tail_margin,
    planar_field,
    planar_jacobian,
    viscous_field,
)

NEAR_ORIGIN_RADIUS = 1e-6
UPPER_LIMIT = 1e6
MAX_STEPS = 2_000_000
MAX_STEPS_CEILING = 50_000_000


class Verdict(enum.Enum):
    EXISTS = "exists"
    NOT_EXISTS = "not_exists"
    INCONCLUSIVE = "inconclusive"


class Method(enum.Enum):
    SHOOTING_BISECTION = "shooting_bisection"
    PDE_FRONT = "pde_front"


class HighBranch(enum.Enum):
    T_NEGATIVE = "t_negative"
    U_APPROACHES_C = "u_approaches_c"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class WaveClassification:
    verdict: Verdict
    terminal_event: EventKind
    trajectory: Optional[Trajectory] = None
    # linear-tail margin at the origin ball; None if the ball was not reached
    tail_margin: Optional[float] = None
    # V_BELOW exits in 3-D: whether the continued orbit drives T negative
    t_negative_certified: Optional[bool] = None
    diagnostic: str = ""


@dataclass(frozen=True)
class SpeedEstimate:
    value: float
    bracket_lo: float
    bracket_hi: float
    method: Method
    evaluations: int
    # bisection points that stayed inconclusive after the retry
    inconclusive: tuple = ()
    analytic_lo: Optional[float] = None
    analytic_hi: Optional[float] = None

    @property
    def resolved(self) -> bool:
        return not self.inconclusive


def _events(w: WaveParams, tols: Tolerances) -> list:
    if w.params.inviscid:
        return [
            Event(EventKind.U_BELOW, 0.0),
            Event(EventKind.NEAR_ORIGIN, NEAR_ORIGIN_RADIUS),
            Event(EventKind.T_NEGATIVE, 0.0),
        ]
    return [
        Event(EventKind.V_BELOW, 0.0),
        Event(EventKind.NEAR_ORIGIN, NEAR_ORIGIN_RADIUS),
        Event(EventKind.T_NEGATIVE, 0.0),
    ]


def _tail_margin(w: WaveParams, end) -> float:
    c = w.c
    if w.params.inviscid:
        J = np.array([[-c, c / w.rho], [-w.rho / c, 0.0]])
        return origin_tail_margin((end[0], end[1]), J, 1)
    # T and V close among themselves at linear order
    J = np.array([[-c, 1.0], [-1.0, 0.0]])
    return origin_tail_margin((end[0], end[2]), J, 1)


def _certify_t_negative(w: WaveParams, start, tols: Tolerances) -> Optional[bool]:
    try:
        tr = integrate_until_event(
            VectorField.viscous(w),
            start,
            [Event(EventKind.T_NEGATIVE, 0.0), Event(EventKind.NEAR_ORIGIN, NEAR_ORIGIN_RADIUS * 1e-3)],
            Tolerances(tols.rel_tol, tols.abs_tol, tols.event_tol, min(tols.xi_budget, 1e3)),
        )
    except WaveSpeedError:
        return None
    return tr.terminal_event is EventKind.T_NEGATIVE


def step_cap(w: WaveParams, tols: Tolerances) -> int:
    """Accepted-step cap for one shot.

    For small ``nu`` the fast rate ``c / nu`` bounds explicit steps to about
    ``3 nu / c``; the cap then grows so that the xi budget, not the step
    count, ends the run.
    """
    if w.params.inviscid:
        return MAX_STEPS
    need = tols.xi_budget * (w.c / w.nu) / 3.0
    return int(min(MAX_STEPS_CEILING, max(MAX_STEPS, need)))


def classify_wave(
    w: WaveParams,
    tols: Tolerances = Tolerances(),
    keep_trajectory: bool = False,
    certify: bool = False,
) -> WaveClassification:
    """Shoot the unstable manifold of the left state and decide existence.

    ``certify`` (viscous only) continues a ``V = 0`` exit to check that T
    eventually turns negative; the verdict does not depend on it.
    """
    try:
        fld = VectorField.for_wave(w)
        start = seed_unstable(w)
        tr = integrate_until_event(fld, start, _events(w, tols), tols, max_steps=step_cap(w, tols))
    except (StepSizeUnderflow, SingularityError, BlowUpError, NumericalFailure) as exc:
        return WaveClassification(Verdict.INCONCLUSIVE, EventKind.BUDGET_EXHAUSTED, diagnostic=str(exc))

    keep = tr if keep_trajectory else None
    ev = tr.terminal_event
    end = tr.terminal_state
    if ev in (EventKind.U_BELOW, EventKind.V_BELOW):
        cert = None
        if certify and ev is EventKind.V_BELOW:
            cert = _certify_t_negative(w, end, tols)
        return WaveClassification(Verdict.NOT_EXISTS, ev, keep, t_negative_certified=cert)
    if ev is EventKind.NEAR_ORIGIN:
        margin = _tail_margin(w, end)
        verdict = Verdict.EXISTS if margin >= 0 else Verdict.NOT_EXISTS
        return WaveClassification(verdict, ev, keep, tail_margin=margin)
    if ev is EventKind.T_NEGATIVE:
        return WaveClassification(
            Verdict.INCONCLUSIVE, ev, keep, diagnostic="T turned negative before the exit component"
        )
    return WaveClassification(
        Verdict.INCONCLUSIVE,
        ev,
        keep,
        diagnostic=f"xi budget {tols.xi_budget:g} exhausted at state {tuple(end)}",
    )


def _classify_with_retry(w: WaveParams, tols: Tolerances) -> tuple:
    """Verdict and number of shots; inconclusive shots are retried once, tighter."""
    cl = classify_wave(w, tols)
    if cl.verdict is not Verdict.INCONCLUSIVE:
        return cl.verdict, 1
    cl = classify_wave(w, tols.tightened(10.0))
    return cl.verdict, 2


def speed_lower_bound(p: SystemParams) -> float:
    from .bounds import inviscid_lower_bound, viscous_lower_bound

    return inviscid_lower_bound(p.rho) if p.inviscid else viscous_lower_bound(p.rho)


def upper_seed(p: SystemParams) -> float:
    """First upper-bracket guess, from the cheapest fast-wave construction that applies."""
    rho = p.rho
    if p.inviscid:
        # the 4 rho / 3 construction is far above c* for large rho and makes
        # the shot stiff, so take the smaller of the two constructions
        return max(4.0, min(1.1 * 4.0 * rho / 3.0, 2.0 * math.sqrt(3.0) * rho ** (1.0 / 3.0)))
    return max(4.0, 2.2 * math.sqrt(rho))


def min_speed(p: SystemParams, tol_c: float = 1e-4, tols: Tolerances = Tolerances()) -> SpeedEstimate:
    """Minimal wave speed by bisection on the shooting verdict.

    The returned ``value`` is the bracket end classified EXISTS.  Midpoints
    that stay inconclusive after one tightened retry are treated as
    non-existence for the bisection but do not move ``bracket_lo``, which
    is always a verified NOT_EXISTS speed.
    """
    if not (tol_c > 0 and math.isfinite(tol_c)):
        raise DomainError("tol_c must be positive")
    bound = speed_lower_bound(p)
    evaluations = 0
    inconclusive = []

    def verdict(c):
        nonlocal evaluations
        v, n = _classify_with_retry(WaveParams(p, c), tols)
        evaluations += n
        if v is Verdict.INCONCLUSIVE:
            inconclusive.append(c)
        return v

    lo = 0.99 * max(2.0, bound)
    while verdict(lo) is Verdict.EXISTS:
        # cannot happen for a correct lower bound; keep the bracket honest anyway
        lo *= 0.5
    verified_lo = lo if lo not in inconclusive else None

    hi = upper_seed(p)
    while True:
        v = verdict(hi)
        if v is Verdict.EXISTS:
            break
        if v is Verdict.NOT_EXISTS:
            verified_lo = hi
        lo = hi
        hi *= 2.0
        if hi > UPPER_LIMIT:
            raise BracketError(f"no admissible speed below {UPPER_LIMIT:g} for nu={p.nu}, rho={p.rho}")

    while hi - lo > tol_c * hi:
        mid = 0.5 * (lo + hi)
        v = verdict(mid)
        if v is Verdict.EXISTS:
            hi = mid
        else:
            lo = mid
            if v is Verdict.NOT_EXISTS:
                verified_lo = mid
    if verified_lo is None:
        verified_lo = 0.0
    a_hi = None if p.inviscid else 2.0 * math.sqrt(p.rho)
    return SpeedEstimate(
        hi,
        verified_lo,
        hi,
        Method.SHOOTING_BISECTION,
        evaluations,
        tuple(inconclusive),
        analytic_lo=bound,
        analytic_hi=a_hi,
    )


# ---------------------------------------------------------------------------
# tables

ROW_FIELDS = ("nu", "rho", "c_star", "bracket_lo", "bracket_hi", "prefactor", "evaluations")


def speed_row(nu: float, rho: float, tol_c: float = 1e-4, tols: Tolerances = Tolerances()) -> dict:
    """One table row; errors are recorded in the ``error`` field instead of raised."""
    row = {"nu": nu, "rho": rho}
    try:
        est = min_speed(SystemParams(nu, rho), tol_c, tols)
    except WaveSpeedError as exc:
        row.update(c_star=math.nan, bracket_lo=math.nan, bracket_hi=math.nan, prefactor=math.nan)
        row.update(evaluations=0, error=f"{type(exc).__name__}: {exc}")
        return row
    row.update(
        c_star=est.value,
        bracket_lo=est.bracket_lo,
        bracket_hi=est.bracket_hi,
        prefactor=est.value / rho ** (1.0 / 3.0),
        evaluations=est.evaluations,
        error="",
    )
    if est.inconclusive:
        row["error"] = f"inconclusive points: {len(est.inconclusive)}"
    return row


def _row_job(args):
    return speed_row(*args)


def run_rows(jobs_args: Sequence[tuple], jobs: int = 1) -> list:
    """Evaluate ``speed_row`` over argument tuples, preserving input order."""
    if jobs <= 1 or len(jobs_args) <= 1:
        return [speed_row(*a) for a in jobs_args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_row_job, jobs_args))


def prefactor_scan(
    p: SystemParams,
    rho_values: Sequence[float],
    tol_c: float = 1e-4,
    tols: Tolerances = Tolerances(),
    jobs: int = 1,
) -> list:
    """Rows ``(nu, rho, c_star, ..., prefactor = c_star / rho^(1/3))`` per rho."""
    rhos = [float(r) for r in rho_values]
    if any(r <= 0 for r in rhos):
        raise DomainError("rho must be positive")
    if rhos != sorted(rhos):
        raise DomainError("rho_values must be sorted")
    return run_rows([(p.nu, r, tol_c, tols) for r in rhos], jobs)


def write_rows_csv(rows: Sequence[dict], path, fields: Sequence[str] = ROW_FIELDS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([format_value(r.get(k)) for k in fields])


def write_rows_json(rows: Sequence[dict], path) -> None:
    with open(path, "w") as fh:
        json.dump([_jsonable(r) for r in rows], fh, indent=2, allow_nan=True)
        fh.write("\n")


def format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return "" if v is None else str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def estimate_to_dict(est: SpeedEstimate) -> dict:
    return _jsonable(asdict(est))


# ---------------------------------------------------------------------------
# threshold in rho


def threshold_rho(
    p: SystemParams,
    tol: float = 1e-3,
    tol_c: float = 1e-4,
    tols: Tolerances = Tolerances(),
    rho_lo: float = 0.5,
    rho_hi: float = 8.0,
) -> float:
    """Smallest rho at which the minimal speed leaves 2, by bisection in rho.

    ``p.rho`` is ignored.  The predicate is ``c*(rho) > 2 + 10 tol_c``;
    bisection stops once the rho bracket is narrower than ``tol * rho``.
    """

    def pushed(rho):
        return min_speed(SystemParams(p.nu, rho), tol_c, tols).value > 2.0 + 10.0 * tol_c

    lo, hi = rho_lo, rho_hi
    while pushed(lo):
        lo *= 0.5
        if lo < 1e-6:
            raise BracketError("minimal speed exceeds 2 for every rho tried")
    while not pushed(hi):
        hi *= 2.0
        if hi > UPPER_LIMIT:
            raise BracketError("minimal speed stays at 2 for every rho tried")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if pushed(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def c_scan(p: SystemParams, c_values: Sequence[float], tols: Tolerances = Tolerances()) -> dict:
    """Verdicts on a speed grid and the number of EXISTS/NOT_EXISTS switches."""
    verdicts = [_classify_with_retry(WaveParams(p, float(c)), tols)[0] for c in c_values]
    decided = [v for v in verdicts if v is not Verdict.INCONCLUSIVE]
    switches = sum(1 for a, b in zip(decided, decided[1:]) if a is not b)
    return {"c": [float(c) for c in c_values], "verdicts": verdicts, "transitions": switches}


# ---------------------------------------------------------------------------
# big equilibrium


def classify_high_equilibrium(w: WaveParams, tols: Tolerances = Tolerances()) -> tuple:
    """Follow both branches of the unstable manifold of ``(1, c + rho + sqrt(c^2 + rho^2))``.

    Returns one ``HighBranch`` per branch.  Reaching the pole ``U = c`` (or
    its guard) counts as ``U_APPROACHES_C``.
    """
    if not w.params.inviscid:
        raise DomainError("the big-equilibrium dichotomy is stated for nu = 0")
    if w.c < 1:
        raise DomainError("c must be at least 1")
    u_hi = high_equilibrium(w.c, w.rho)
    J = planar_jacobian(1.0, u_hi, w)
    vals, vecs = np.linalg.eig(J)
    k = int(np.argmax(np.real(vals)))
    if np.real(vals[k]) <= 0:
        raise NumericalFailure("big equilibrium has no unstable direction")
    d = np.real(vecs[:, k])
    d = d / np.linalg.norm(d)
    offset = 1e-6 * max(1.0, math.hypot(1.0, u_hi))
    # the approach to the pole is like a square root, so the step size
    # collapses before U gets very close; 1e-4 c is still unambiguous
    near_c = 1e-4 * max(1.0, w.c)
    events = [
        Event(EventKind.T_NEGATIVE, 0.0),
        Event(EventKind.U_REACHES_C, near_c),
        Event(EventKind.NEAR_ORIGIN, NEAR_ORIGIN_RADIUS),
    ]
    out = []
    for sign in (1.0, -1.0):
        start = (1.0 + sign * offset * d[0], u_hi + sign * offset * d[1])
        try:
            tr = integrate_until_event(VectorField.planar(w), start, events, tols)
        except (SingularityError, StepSizeUnderflow) as exc:
            U = exc.state[1] if exc.state is not None else math.nan
            out.append(HighBranch.U_APPROACHES_C if abs(U - w.c) < 10 * near_c else HighBranch.INCONCLUSIVE)
            continue
        except WaveSpeedError:
            out.append(HighBranch.INCONCLUSIVE)
            continue
        if tr.terminal_event is EventKind.T_NEGATIVE:
            out.append(HighBranch.T_NEGATIVE)
        elif tr.terminal_event is EventKind.U_REACHES_C:
            out.append(HighBranch.U_APPROACHES_C)
        else:
            out.append(HighBranch.INCONCLUSIVE)
    return tuple(out)


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class WaveProfile:
    trajectory: Trajectory
    wave: WaveParams
    monotone: bool
    max_increase: float
    ordering_holds: bool
    ordering_margin: float
    left_endpoint_error: float
    diagnostics: dict = field(default_factory=dict)


def _field_rows(w: WaveParams, states: np.ndarray) -> np.ndarray:
    if w.params.inviscid:
        return np.array([planar_field(s, w) for s in states])
    return np.array([viscous_field(s, w) for s in states])


def extract_profile(w: WaveParams, tols: Tolerances = Tolerances(), check_tol: float = 1e-8) -> WaveProfile:
    """The connecting orbit with monotonicity and ordering diagnostics.

    Ordering is ``0 <= U <= rho T <= rho`` for the inviscid wave; for the
    viscous wave only monotonicity of T, U and V is checked.
    """
    cl = classify_wave(w, tols, keep_trajectory=True)
    if cl.verdict is not Verdict.EXISTS:
        raise PreconditionError(f"no connecting orbit at c={w.c} (verdict {cl.verdict.value})")
    tr = cl.trajectory
    S = tr.states
    derivs = _field_rows(w, S)
    max_increase = float(max(np.max(derivs), np.max(np.diff(S, axis=0))))
    monotone = max_increase <= check_tol
    T, U = S[:, 0], S[:, 1]
    if w.params.inviscid:
        margin = float(min(np.min(U), np.min(w.rho * T - U), np.min(w.rho - w.rho * T)))
    else:
        margin = float(min(np.min(U), np.min(T), np.min(1.0 - T)))
    left_err = float(np.max(np.abs(S[0] - np.asarray(w.left_state()))))
    diag = {"samples": len(tr), "terminal_xi": tr.terminal_xi, "tail_margin": cl.tail_margin}
    return WaveProfile(tr, w, monotone, max_increase, margin >= -check_tol, margin, left_err, diag)
