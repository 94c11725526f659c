"""Adaptive Dormand-Prince integration of the spatial ODEs with event detection."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import _pykernels as _py
from ._backend import BACKEND, kernels
from .errors import BlowUpError, DomainError, SingularityError, StepSizeUnderflow
from .model import (
    FullViscousState,
    PlanarState,
    ViscousState,
    WaveParams,
    eigen_left_equilibrium,
    reduce_V,
    singular_guard,
)

__all__ = [
    "EventKind",
    "Event",
    "Tolerances",
    "Trajectory",
    "VectorField",
    "integrate_until_event",
    "seed_unstable",
    "fixed_step_propagate",
    "BACKEND",
]


class EventKind(enum.Enum):
    U_BELOW = _py.U_BELOW
    V_BELOW = _py.V_BELOW
    NEAR_ORIGIN = _py.NEAR_ORIGIN
    T_NEGATIVE = _py.T_NEGATIVE
    T_ABOVE_ONE = _py.T_ABOVE_ONE
    U_REACHES_C = _py.U_REACHES_C
    BUDGET_EXHAUSTED = 99


@dataclass(frozen=True)
class Event:
    """Stop condition.  Each kind fires when the state crosses its threshold:

    ``U_BELOW``/``V_BELOW``/``T_NEGATIVE``: component drops to ``threshold``;
    ``T_ABOVE_ONE``: T rises to ``threshold``; ``NEAR_ORIGIN``: Euclidean
    norm drops to ``threshold``; ``U_REACHES_C``: ``|U - c|`` drops to it.
    A condition that already holds at the start never fires.
    """

    kind: EventKind
    threshold: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.threshold):
            raise DomainError("event threshold must be finite")
        if self.kind is EventKind.NEAR_ORIGIN and self.threshold <= 0:
            raise DomainError("NEAR_ORIGIN radius must be positive")

    def value(self, state, c: float = math.nan) -> float:
        """Signed event function; the event has occurred once this is ``<= 0``."""
        if self.kind is EventKind.BUDGET_EXHAUSTED:
            return 1.0
        return _py.event_value(self.kind.value, self.threshold, list(state), c)


@dataclass(frozen=True)
class Tolerances:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    event_tol: float = 1e-10
    xi_budget: float = 1e4

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "event_tol", "xi_budget"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite")
        if self.rel_tol < 1e-14:
            raise DomainError("rel_tol must be at least 1e-14")

    def tightened(self, factor: float = 10.0) -> "Tolerances":
        """Tolerances ``factor`` times tighter with a ``factor`` times longer budget."""
        return Tolerances(
            max(self.rel_tol / factor, 1e-14),
            self.abs_tol / factor,
            self.event_tol / factor,
            self.xi_budget * factor,
        )


_STATE_TYPES = {2: PlanarState, 3: ViscousState, 4: FullViscousState}
_NAMES = {2: ("T", "U"), 3: ("T", "U", "V"), 4: ("T", "U", "V", "W")}


@dataclass(frozen=True)
class Trajectory:
    """Sampled orbit: one row of ``states`` per accepted step, plus the end point."""

    xi: np.ndarray
    states: np.ndarray
    terminal_event: EventKind
    terminal_xi: float
    system: str = "custom"
    c: float = math.nan
    stats: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.xi.setflags(write=False)
        self.states.setflags(write=False)

    def __len__(self):
        return self.xi.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def samples(self):
        cls = _STATE_TYPES.get(self.dim, tuple)
        return [(float(x), cls(*row)) for x, row in zip(self.xi, self.states)]

    @property
    def terminal_state(self):
        cls = _STATE_TYPES.get(self.dim, tuple)
        return cls(*(float(v) for v in self.states[-1]))

    def component(self, name: str) -> np.ndarray:
        return self.states[:, _NAMES[self.dim].index(name)]

    def to_csv(self, path) -> None:
        """Write ``xi,T,U[,V]`` rows with 17 significant digits."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("xi",) + _NAMES[self.dim])
            for x, row in zip(self.xi, self.states):
                w.writerow([f"{x:.17g}"] + [f"{v:.17g}" for v in row])


@dataclass(frozen=True)
class VectorField:
    """A right-hand side the integrator can run.

    Built-in systems are dispatched to the compiled kernel when available;
    ``custom`` wraps an arbitrary Python callable ``f(y) -> sequence``.
    """

    name: str
    dim: int
    code: int = -1
    c: float = math.nan
    rho: float = math.nan
    nu: float = 0.0
    fn: Optional[Callable] = field(default=None, compare=False)

    @property
    def params(self) -> tuple:
        return (self.c, self.rho, self.nu, singular_guard(self.c) if math.isfinite(self.c) else 0.0)

    @classmethod
    def planar(cls, w: WaveParams) -> "VectorField":
        return cls("planar", 2, _py.PLANAR, w.c, w.rho, w.nu)

    @classmethod
    def viscous(cls, w: WaveParams) -> "VectorField":
        if w.nu <= 0:
            raise DomainError("the viscous field needs nu > 0")
        return cls("viscous", 3, _py.VISCOUS, w.c, w.rho, w.nu)

    @classmethod
    def inviscid_full(cls, w: WaveParams) -> "VectorField":
        return cls("inviscid_full", 3, _py.INVISCID_FULL, w.c, w.rho, w.nu)

    @classmethod
    def viscous_full(cls, w: WaveParams) -> "VectorField":
        if w.nu <= 0:
            raise DomainError("the viscous field needs nu > 0")
        return cls("viscous_full", 4, _py.VISCOUS_FULL, w.c, w.rho, w.nu)

    @classmethod
    def for_wave(cls, w: WaveParams) -> "VectorField":
        return cls.planar(w) if w.params.inviscid else cls.viscous(w)

    @classmethod
    def custom(cls, fn: Callable, dim: int, c: float = math.nan) -> "VectorField":
        return cls("custom", dim, -1, c, fn=fn)

    def _python_rhs(self):
        if self.fn is None:
            return _py.make_rhs(self.code, self.params)
        fn = self.fn

        def rhs(y):
            try:
                return [float(v) for v in fn(y)]
            except SingularityError:
                raise _py._Singular from None

        return rhs

    def __call__(self, y) -> np.ndarray:
        try:
            return np.array(self._python_rhs()(list(map(float, y))))
        except _py._Singular:
            raise SingularityError("field evaluated at the pole U = c", state=tuple(y)) from None


def _kernel_for(fld: VectorField):
    if fld.fn is None:
        return kernels, None
    return _py, fld._python_rhs()


def integrate_until_event(
    fld: VectorField,
    start: Sequence[float],
    events: Iterable[Event],
    tols: Tolerances = Tolerances(),
    max_norm: float = 1e8,
    max_steps: int = 2_000_000,
) -> Trajectory:
    """Integrate forward in xi until the first event or the xi budget.

    Raises ``StepSizeUnderflow`` when the step falls below ``1e-3 event_tol``,
    ``SingularityError`` when the field hits its pole and ``BlowUpError``
    when ``max|y|`` exceeds ``max_norm``.  Hitting ``max_steps`` accepted
    steps is reported like an exhausted budget.
    """
    y0 = [float(v) for v in start]
    if len(y0) != fld.dim:
        raise DomainError(f"start has {len(y0)} components, field needs {fld.dim}")
    if not all(math.isfinite(v) for v in y0):
        raise DomainError("start state must be finite")
    evs = [e for e in events if e.kind is not EventKind.BUDGET_EXHAUSTED]
    mod, rhs = _kernel_for(fld)
    status, idx, xs, ys, (n_acc, n_rej, n_eval) = mod.shoot(
        fld.code,
        fld.params,
        y0,
        tols.xi_budget,
        tols.rel_tol,
        tols.abs_tol,
        tols.event_tol,
        [e.kind.value for e in evs],
        [e.threshold for e in evs],
        max_norm,
        rhs,
        max_steps,
    )
    xi_end = float(xs[-1])
    last = tuple(float(v) for v in ys[-1])
    if status == _py.ST_UNDERFLOW:
        raise StepSizeUnderflow(f"step size underflow at xi={xi_end:.6g}, state={last}", xi_end, last)
    if status == _py.ST_SINGULAR:
        raise SingularityError(f"trajectory reached U = c near xi={xi_end:.6g}", xi_end, last)
    if status == _py.ST_BLOWUP:
        raise BlowUpError(f"trajectory exceeded |y| > {max_norm:g} at xi={xi_end:.6g}", xi_end, last)
    kind = evs[idx].kind if status == _py.ST_EVENT else EventKind.BUDGET_EXHAUSTED
    stats = {"accepted": n_acc, "rejected": n_rej, "evaluations": n_eval, "backend": mod.__name__}
    return Trajectory(np.asarray(xs, float), np.asarray(ys, float), kind, xi_end, fld.name, fld.c, stats)


def default_seed_offset(w: WaveParams) -> float:
    return 1e-6 * max(1.0, float(np.linalg.norm(w.left_state())))


def seed_unstable(w: WaveParams, offset: Optional[float] = None):
    """Left equilibrium displaced by ``offset`` along the unstable direction.

    The direction points into the box (T decreasing).  For ``nu = 0`` a
    ``PlanarState`` is returned; its V is implied by ``reduce_V``.
    """
    if offset is None:
        offset = default_seed_offset(w)
    if offset < 0 or not math.isfinite(offset):
        raise DomainError("seed offset must be non-negative")
    base = w.left_state()
    if offset == 0:
        return base
    d = eigen_left_equilibrium(w).unstable_direction
    return type(base)(*(b + offset * di for b, di in zip(base, d)))


def planar_to_full(s, w: WaveParams) -> ViscousState:
    """Lift a planar state to ``(T, U, V)`` on the zero level of the conserved quantity."""
    return ViscousState(s[0], s[1], reduce_V(s[1], w.c, w.rho))


def fixed_step_propagate(fld: VectorField, start: Sequence[float], h: float, n_steps: int) -> np.ndarray:
    """Propagate ``n_steps`` fixed Dormand-Prince steps (5th-order solution)."""
    mod, rhs = _kernel_for(fld)
    return np.asarray(mod.rk_fixed(fld.code, fld.params, [float(v) for v in start], h, n_steps, rhs))
