"""Method-of-lines simulation of the coupled FKPP-Burgers system

    T_t - T_xx + (u T)_x = T (1 - T)
    u_t - nu u_xx + u u_x = rho T (1 - T)

on a finite interval, with front tracking for spreading-speed estimates.

Finite-volume form: both advective fluxes use the local Lax-Friedrichs
flux, diffusion is central, and time stepping is the three-stage SSP
Runge-Kutta scheme.  ``T = 1`` on the left and ``T = u = 0`` on the right
are held fixed; ``u`` has a zero-gradient ghost on the left.
"""

from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._backend import kernels
from .errors import BlowUpError, CflError, DomainError, PreconditionError
from .model import SystemParams
from .shooting import Method, SpeedEstimate

BLOWUP_LIMIT = 1e3


class InitialCondition(enum.Enum):
    HEAVISIDE_BOTH = "both"
    HEAVISIDE_T_ONLY = "t-only"


@dataclass(frozen=True)
class SimConfig:
    x_min: float = -20.0
    x_max: float = 100.0
    dx: float = 0.05
    t_end: float = 50.0
    cfl: float = 0.4
    ic_kind: InitialCondition = InitialCondition.HEAVISIDE_BOTH
    ic_location: float = 0.0
    snapshot_times: tuple = (0.0, 10.0, 20.0, 30.0, 40.0, 50.0)
    # front and plateau are sampled on this fixed time cadence
    track_dt: float = 0.1
    # height of the u step for HEAVISIDE_BOTH
    u_amplitude: float = 1.0
    # test hook: switch off both source terms
    reaction: bool = True

    def __post_init__(self):
        if not (self.x_min < self.ic_location < self.x_max):
            raise DomainError("need x_min < ic_location < x_max")
        if not self.dx > 0:
            raise DomainError("dx must be positive")
        if not (0 < self.cfl <= 0.9):
            raise DomainError("cfl must lie in (0, 0.9]")
        if not self.t_end > 0:
            raise DomainError("t_end must be positive")
        if not self.track_dt > 0:
            raise DomainError("track_dt must be positive")
        if any(t < 0 or t > self.t_end for t in self.snapshot_times):
            raise DomainError("snapshot times must lie in [0, t_end]")
        if isinstance(self.ic_kind, str):
            object.__setattr__(self, "ic_kind", InitialCondition(self.ic_kind))

    @property
    def n_nodes(self) -> int:
        return int(round((self.x_max - self.x_min) / self.dx)) + 1

    def grid(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_nodes)


@dataclass(frozen=True)
class FieldSnapshot:
    t: float
    x: np.ndarray
    T: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        if not (self.x.shape == self.T.shape == self.u.shape):
            raise DomainError("snapshot arrays must share the grid")
        for a in (self.x, self.T, self.u):
            a.setflags(write=False)


@dataclass
class FrontTrack:
    times: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    plateau: list = field(default_factory=list)
    # mass of T on interior nodes and time-integrated boundary transport
    mass: list = field(default_factory=list)
    boundary_transport: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)


def front_position(x: np.ndarray, T: np.ndarray, level: float = 0.5) -> float:
    """Rightmost crossing of ``level``: last node with ``T >= level``, interpolated."""
    idx = np.nonzero(T >= level)[0]
    if idx.size == 0:
        return float(x[0])
    i = int(idx[-1])
    if i == len(x) - 1:
        return float(x[-1])
    t0, t1 = T[i], T[i + 1]
    return float(x[i] + (t0 - level) / (t0 - t1) * (x[i + 1] - x[i]))


def plateau_band(x_front: float, t: float, u_left: float, u_plateau_guess: float, cfg: SimConfig) -> tuple:
    """Window between the back shock in u and the front, where u sits at its plateau.

    The back of the plateau is a Burgers shock or fan between the left u
    value and the plateau, which cannot outrun the larger of the two; the
    window is the middle half of the stretch between that bound and the front.
    """
    back = cfg.ic_location + max(abs(u_left), abs(u_plateau_guess)) * t
    lo = back + 0.25 * (x_front - back)
    hi = x_front - 0.25 * (x_front - back)
    return lo, hi


def plateau_value(snapshot: FieldSnapshot, band: tuple) -> float:
    """Median of u over the nodes with ``band[0] <= x <= band[1]``."""
    lo, hi = band
    m = (snapshot.x >= lo) & (snapshot.x <= hi)
    if not np.any(m):
        raise DomainError(f"plateau band [{lo}, {hi}] contains no grid nodes")
    return float(np.median(snapshot.u[m]))


def _initial_fields(cfg: SimConfig) -> tuple:
    x = cfg.grid()
    left = x < cfg.ic_location
    T = np.where(left, 1.0, 0.0)
    if cfg.ic_kind is InitialCondition.HEAVISIDE_BOTH:
        u = np.where(left, cfg.u_amplitude, 0.0)
    else:
        u = np.zeros_like(x)
    T[0], T[-1], u[-1] = 1.0, 0.0, 0.0
    return x, T, u


def stable_dt(u: np.ndarray, dx: float, nu: float) -> float:
    """Stability limit ``min(dx^2 / (2 max(1, nu)), dx / max|u|)`` before the CFL factor."""
    umax = float(np.max(np.abs(u)))
    lim = dx * dx / (2.0 * max(1.0, nu))
    if umax > 0:
        lim = min(lim, dx / umax)
    return lim


def simulate(p: SystemParams, cfg: SimConfig = SimConfig()) -> tuple:
    """Run to ``cfg.t_end``; return ``(snapshots, track)``.

    Time steps are ``cfl`` times the stability limit, shrunk so that every
    snapshot and tracking time is hit exactly.  Raises ``BlowUpError`` once
    any value exceeds 1e3 in magnitude and ``CflError`` if the step in use
    would exceed the stability limit.
    """
    x, T, u = _initial_fields(cfg)
    nu, rho, dx = p.nu, p.rho, cfg.dx
    n_track = int(math.floor(cfg.t_end / cfg.track_dt + 1e-9))
    marks = {round(k * cfg.track_dt, 12) for k in range(n_track + 1)}
    marks |= {float(t) for t in cfg.snapshot_times}
    marks.add(float(cfg.t_end))
    marks = sorted(m for m in marks if 0 <= m <= cfg.t_end)
    snap_set = {float(t) for t in cfg.snapshot_times}

    snapshots = []
    track = FrontTrack()
    u_left = cfg.u_amplitude if cfg.ic_kind is InitialCondition.HEAVISIDE_BOTH else 0.0
    transport = 0.0
    steps_total = 0
    t_min, t_max = 1.0, 0.0

    def record(t):
        xf = front_position(x, T)
        u_guess = float(np.max(u[(x > cfg.ic_location) & (x <= xf)], initial=0.0))
        band = plateau_band(xf, t, u_left, u_guess, cfg)
        try:
            pl = plateau_value(FieldSnapshot(t, x, T.copy(), u.copy()), band)
        except DomainError:
            pl = math.nan
        track.times.append(t)
        track.positions.append(xf)
        track.plateau.append(pl)
        track.mass.append(float(dx * np.sum(T[1:-1])))
        track.boundary_transport.append(transport)
        if t in snap_set:
            snapshots.append(FieldSnapshot(t, x.copy(), T.copy(), u.copy()))

    record(0.0)
    t = 0.0
    for target in marks[1:]:
        span = target - t
        lim = stable_dt(u, dx, nu)
        n = max(1, int(math.ceil(span / (cfg.cfl * lim) - 1e-12)))
        dt = span / n
        done, flux, peak = kernels.pde_advance(T, u, n, dt, dx, nu, rho, cfg.reaction, BLOWUP_LIMIT)
        steps_total += done
        transport += flux
        if done < n or not math.isfinite(peak):
            t_abort = t + done * dt
            raise BlowUpError(f"field magnitude exceeded {BLOWUP_LIMIT:g} at t={t_abort:.6g}", t_abort)
        if dt > stable_dt(u, dx, nu):
            raise CflError(f"time step {dt:.3e} exceeds the stability limit at t={target:.6g}")
        t = target
        t_min = min(t_min, float(np.min(T)))
        t_max = max(t_max, float(np.max(T)))
        record(target)

    track.meta = {
        "scheme": "finite volume, local Lax-Friedrichs advection, central diffusion, SSP-RK3",
        "dx": dx,
        "cfl": cfg.cfl,
        "steps": steps_total,
        "n_nodes": cfg.n_nodes,
        "front_level": 0.5,
        "track_dt": cfg.track_dt,
        "T_min": t_min,
        "T_max": t_max,
        "backend": kernels.__name__,
    }
    return snapshots, track


def estimate_speed(track: FrontTrack, window_fraction: float = 0.4) -> SpeedEstimate:
    """Least-squares slope of front position over the final ``window_fraction`` of samples.

    The bracket is three standard errors of the slope on either side.
    """
    if not (0 < window_fraction <= 1):
        raise DomainError("window_fraction must lie in (0, 1]")
    n = len(track.times)
    k = int(math.ceil(window_fraction * n))
    if k < 10:
        raise PreconditionError(f"need at least 10 samples in the window, have {k}")
    t = np.asarray(track.times[-k:], float)
    xf = np.asarray(track.positions[-k:], float)
    A = np.vstack([t, np.ones_like(t)]).T
    coef, res, *_ = np.linalg.lstsq(A, xf, rcond=None)
    slope = float(coef[0])
    resid = xf - A @ coef
    dof = max(k - 2, 1)
    s2 = float(resid @ resid) / dof
    se = math.sqrt(s2 / float(np.sum((t - t.mean()) ** 2)))
    return SpeedEstimate(slope, slope - 3 * se, slope + 3 * se, Method.PDE_FRONT, k)


def final_plateau(snapshots: Sequence[FieldSnapshot], track: FrontTrack) -> float:
    return float(track.plateau[-1])


# ---------------------------------------------------------------------------
# output


def write_snapshot_csv(snap: FieldSnapshot, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("x", "T", "u"))
        for row in zip(snap.x, snap.T, snap.u):
            w.writerow([f"{v:.17g}" for v in row])


def write_track_csv(track: FrontTrack, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "x_front", "plateau"))
        for row in zip(track.times, track.positions, track.plateau):
            w.writerow([f"{v:.17g}" for v in row])


def _sweep_job(args):
    nu, rho, cfg, window = args
    snaps, track = simulate(SystemParams(nu, rho), cfg)
    return {"nu": nu, "rho": rho, "speed": estimate_speed(track, window).value}


def pde_sweep(
    nu_values: Sequence[float],
    rho_values: Sequence[float],
    cfg: SimConfig = SimConfig(),
    window_fraction: float = 0.4,
    jobs: int = 1,
) -> list:
    """Spreading speed for every (nu, rho) pair, in input order."""
    work = [(float(nu), float(rho), cfg, window_fraction) for nu in nu_values for rho in rho_values]
    if jobs <= 1:
        return [_sweep_job(a) for a in work]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_sweep_job, work))


def write_sweep_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("nu", "rho", "speed"))
        for r in rows:
            w.writerow([f"{float(r[k]):.17g}" for k in ("nu", "rho", "speed")])
