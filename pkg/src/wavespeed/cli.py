"""Command-line entry point: ``wavespeed {min-speed,pde,tables,verify}``."""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from . import bounds, pde, shooting
from ._backend import BACKEND
from .errors import BlowUpError, BracketError, DomainError, WaveSpeedError
from .integrate import Tolerances
from .model import SystemParams, WaveParams

EXIT_OK = 0
EXIT_BRACKET = 2
EXIT_INCONCLUSIVE = 3
EXIT_BLOWUP = 4
EXIT_PARTIAL = 5
EXIT_CHECK_FAILED = 6

# flag defaults; config files and flags override these in that order
DEFAULTS = {
    "min-speed": {
        "nu": 0.0,
        "rho": 1.0,
        "tol_c": 1e-4,
        "rel_tol": 1e-10,
        "abs_tol": 1e-12,
        "event_tol": 1e-10,
        "xi_budget": 1e4,
        "out_dir": "wavespeed-out",
    },
    "pde": {
        "nu": 1.0,
        "rho": 1.0,
        "ic": "both",
        "t_end": 50.0,
        "dx": 0.05,
        "x_min": -20.0,
        "x_max": 100.0,
        "cfl": 0.4,
        "window": 0.4,
        "out_dir": "wavespeed-out",
    },
    "tables": {
        "which": "table1",
        "nu_list": "0",
        "rho_list": "1e2,1e3,1e4",
        "tol_c": 1e-4,
        "rel_tol": 1e-10,
        "abs_tol": 1e-12,
        "event_tol": 1e-10,
        "xi_budget": 1e4,
        "jobs": 1,
        "out_dir": "wavespeed-out",
    },
    "verify": {
        "suite": "all",
        "nu": 0.0,
        "rho": 1.0,
        "c": 2.0,
        "template": "",
        "aux": "",
        "lam": None,
        "epsilon": 1e-4,
        "delta": 0.05,
        "points": 0,
        "out_dir": "wavespeed-out",
    },
}


# ---------------------------------------------------------------------------
# configuration


def parse_config(path) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment.  Keys may use dashes."""
    out = {}
    with open(path) as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{n}: expected 'key = value'")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _looks_like_aux(path) -> bool:
    with open(path) as fh:
        body = [ln.split("#", 1)[0].strip() for ln in fh]
    body = [ln for ln in body if ln]
    return bool(body) and not any("=" in ln for ln in body)


def _coerce(value, like):
    if like is None:
        return None if value in (None, "", "none") else float(value)
    if isinstance(like, bool):
        return str(value).lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(float(value))
    if isinstance(like, float):
        return float(value)
    return str(value)


def effective_params(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    base = dict(DEFAULTS[command])
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        if command == "verify" and _looks_like_aux(cfg_path):
            base["aux"] = str(cfg_path)
        else:
            for k, v in parse_config(cfg_path).items():
                if k not in base:
                    raise DomainError(f"unknown config key {k!r} for {command}")
                base[k] = _coerce(v, DEFAULTS[command][k])
    for k in base:
        v = getattr(args, k, None)
        if v is not None:
            base[k] = _coerce(v, DEFAULTS[command][k])
    return base


def parse_list(text: str) -> list:
    """Comma list of numbers; ``a..b`` or ``a..b:n`` expands to ``n`` evenly spaced values (default 16)."""
    out = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        if ".." in item:
            rng, _, n = item.partition(":")
            a, b = (float(s) for s in rng.split(".."))
            n = int(n) if n else 16
            if n < 2:
                out.append(a)
            else:
                out.extend(a + (b - a) * i / (n - 1) for i in range(n))
        else:
            out.append(float(item))
    if not out:
        raise DomainError(f"empty list {text!r}")
    return out


def _tols(p: dict) -> Tolerances:
    return Tolerances(p["rel_tol"], p["abs_tol"], p["event_tol"], p["xi_budget"])


# ---------------------------------------------------------------------------
# run records and the result cache


@dataclass
class RunRecord:
    command: str
    params: dict
    git_describe: str
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0

    def write(self, path) -> None:
        missing = [p for p in self.outputs if not Path(p).exists()]
        if missing:
            raise WaveSpeedError(f"run record lists missing outputs: {missing}")
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def git_describe() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here,
            capture_output=True,
            text=True,
            timeout=5,
        )
        tag = out.stdout.strip() if out.returncode == 0 else ""
    except (OSError, subprocess.SubprocessError):
        tag = ""
    build = f"wavespeed-{__version__}+{BACKEND}"
    return f"{build} ({tag})" if tag else build


def cache_dir() -> Path:
    env = os.environ.get("WAVESPEED_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "wavespeed"


def cache_key(kind: str, params: dict) -> str:
    blob = json.dumps({"kind": kind, "version": __version__, "params": params}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


class ResultCache:
    """Append-only JSON-lines store of ``{key, value}`` records."""

    def __init__(self, enabled: bool = True, directory: Optional[Path] = None):
        self.enabled = enabled
        self.path = (directory or cache_dir()) / "results.jsonl"
        self._mem = {}
        if enabled and self.path.exists():
            with open(self.path) as fh:
                for line in fh:
                    try:
                        rec = json.loads(line)
                    except json.JSONDecodeError:
                        continue
                    self._mem[rec["key"]] = rec["value"]

    def get(self, key: str):
        return self._mem.get(key) if self.enabled else None

    def put(self, key: str, value) -> None:
        if not self.enabled:
            return
        self._mem[key] = value
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a") as fh:
            fh.write(json.dumps({"key": key, "value": value}, sort_keys=True) + "\n")


def _row_to_json(row: dict) -> dict:
    return {k: (repr(v) if isinstance(v, float) and not math.isfinite(v) else v) for k, v in row.items()}


def _row_from_json(row: dict) -> dict:
    return {k: (float(v) if v in ("nan", "inf", "-inf") else v) for k, v in row.items()}


def cached_rows(work: list, cache: ResultCache, jobs: int) -> list:
    """``shooting.run_rows`` with a per-row cache; results stay in input order."""
    keys = []
    for nu, rho, tol_c, tols in work:
        keys.append(cache_key("speed_row", {"nu": nu, "rho": rho, "tol_c": tol_c, "tols": asdict(tols)}))
    rows = [None] * len(work)
    todo = []
    for i, k in enumerate(keys):
        hit = cache.get(k)
        if hit is not None:
            rows[i] = _row_from_json(hit)
        else:
            todo.append(i)
    fresh = shooting.run_rows([work[i] for i in todo], jobs)
    for i, row in zip(todo, fresh):
        rows[i] = row
        if not row.get("error", "").startswith(("BracketError", "DomainError")):
            cache.put(keys[i], _row_to_json(row))
    return rows


# ---------------------------------------------------------------------------
# commands


def _out_dir(p: dict) -> Path:
    d = Path(p["out_dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _finish(command, params, outputs, t0, out_dir) -> Path:
    rec = RunRecord(command, params, git_describe(), [str(o) for o in outputs], time.perf_counter() - t0)
    path = out_dir / f"{command}_run.json"
    rec.write(path)
    return path


def cmd_min_speed(args) -> int:
    t0 = time.perf_counter()
    try:
        p = effective_params("min-speed", args)
        sp = SystemParams(p["nu"], p["rho"])
        tols = _tols(p)
    except DomainError as exc:
        print(f"min-speed: parameters: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    cache = ResultCache(not args.no_cache)
    row = cached_rows([(sp.nu, sp.rho, p["tol_c"], tols)], cache, 1)[0]
    err = row.get("error", "")
    if err.startswith("BracketError") or err.startswith("DomainError"):
        print(f"min-speed: bracket: {err}", file=sys.stderr)
        return EXIT_BRACKET
    if err.startswith("NumericalFailure") or err.startswith("Step") or not math.isfinite(row["c_star"]):
        print(f"min-speed: shooting: {err}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    out = _out_dir(p)
    csv_path, json_path = out / "min_speed.csv", out / "min_speed.json"
    shooting.write_rows_csv([row], csv_path, shooting.ROW_FIELDS + ("error",))
    shooting.write_rows_json([row], json_path)
    print(f"c_star={row['c_star']:.8g} bracket=[{row['bracket_lo']:.8g},{row['bracket_hi']:.8g}]")
    print(f"prefactor={row['prefactor']:.6g} evaluations={row['evaluations']}")
    _finish("min-speed", p, [csv_path, json_path], t0, out)
    if err.startswith("inconclusive"):
        print(f"min-speed: bisection: {err} after tightening tolerances", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_pde(args) -> int:
    t0 = time.perf_counter()
    try:
        p = effective_params("pde", args)
        sp = SystemParams(p["nu"], p["rho"])
        times = tuple(t for t in (0.0, 10.0, 20.0, 30.0, 40.0, 50.0) if t <= p["t_end"])
        cfg = pde.SimConfig(
            x_min=p["x_min"],
            x_max=p["x_max"],
            dx=p["dx"],
            t_end=p["t_end"],
            cfl=p["cfl"],
            ic_kind=pde.InitialCondition(p["ic"]),
            snapshot_times=times + ((p["t_end"],) if p["t_end"] not in times else ()),
        )
    except (DomainError, ValueError) as exc:
        print(f"pde: parameters: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    try:
        snaps, track = pde.simulate(sp, cfg)
    except BlowUpError as exc:
        print(f"pde: simulate: blow-up at t={exc.where:.6g}: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    est = pde.estimate_speed(track, p["window"])
    out = _out_dir(p)
    outputs = []
    for s in snaps:
        path = out / f"snapshot_t{s.t:g}.csv"
        pde.write_snapshot_csv(s, path)
        outputs.append(path)
    tpath = out / "track.csv"
    pde.write_track_csv(track, tpath)
    outputs.append(tpath)
    plateau = pde.final_plateau(snaps, track)
    print(f"speed={est.value:.6g} bracket=[{est.bracket_lo:.6g},{est.bracket_hi:.6g}] plateau={plateau:.6g}")
    _finish("pde", p, outputs, t0, out)
    return EXIT_OK


def cmd_tables(args) -> int:
    t0 = time.perf_counter()
    try:
        p = effective_params("tables", args)
        nus = parse_list(p["nu_list"])
        tols = _tols(p)
        rhos = parse_list(p["rho_list"]) if p["which"] != "threshold" else []
        if any(r <= 0 for r in rhos):
            raise DomainError("rho must be positive")
        if any(n < 0 for n in nus):
            raise DomainError("nu must be non-negative")
    except DomainError as exc:
        print(f"tables: parameters: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    out = _out_dir(p)
    cache = ResultCache(not args.no_cache)
    which = p["which"]
    if which == "table1":
        work = [(nu, rho, p["tol_c"], tols) for nu in nus for rho in sorted(rhos)]
        rows = cached_rows(work, cache, p["jobs"])
        fields = shooting.ROW_FIELDS + ("error",)
        for r in rows:
            print(f"nu={r['nu']:g} rho={r['rho']:g} c_star={r['c_star']:.8g} prefactor={r['prefactor']:.5f}")
    elif which == "figure1":
        work = [(nu, rho, p["tol_c"], tols) for nu in nus for rho in rhos]
        rows = []
        for r in cached_rows(work, cache, p["jobs"]):
            lb = bounds.inviscid_lower_bound(r["rho"]) if r["nu"] == 0 else bounds.viscous_lower_bound(r["rho"])
            rows.append({k: r.get(k, "") for k in bounds.FIGURE1_FIELDS if k != "lower_bound"} | {"lower_bound": lb})
        fields = bounds.FIGURE1_FIELDS
        print(f"monotone_in_nu={bounds.nu_monotone(rows)}")
    elif which == "threshold":
        rows = []
        for nu in nus:
            key = cache_key("threshold", {"nu": nu, "tol_c": p["tol_c"], "tols": asdict(tols)})
            hit = cache.get(key)
            if hit is not None:
                rows.append(_row_from_json(hit))
                continue
            try:
                rho_hat = shooting.threshold_rho(SystemParams(nu, 1.0), tol_c=p["tol_c"], tols=tols)
                row = {"nu": nu, "rho_hat": rho_hat, "error": ""}
                cache.put(key, _row_to_json(row))
            except WaveSpeedError as exc:
                row = {"nu": nu, "rho_hat": math.nan, "error": f"{type(exc).__name__}: {exc}"}
            rows.append(row)
            print(f"nu={nu:g} rho_hat={row['rho_hat']:.6g}")
        fields = ("nu", "rho_hat", "error")
    else:
        print(f"tables: unknown table {which!r}", file=sys.stderr)
        return EXIT_BRACKET
    path = out / f"{which}.csv"
    shooting.write_rows_csv(rows, path, fields)
    _finish("tables", p, [path], t0, out)
    bad = [r for r in rows if r.get("error") and not str(r["error"]).startswith("inconclusive")]
    for r in bad:
        print(f"tables: row failed: {r['error']}", file=sys.stderr)
    if len(rows) - len(bad) < 0.9 * len(rows):
        return EXIT_PARTIAL
    return EXIT_OK


TRAP_SUITE = (
    ("inviscid_trap c=20 rho=1", lambda: bounds.check_inviscid_trap(20.0, 1.0)),
    ("small_rho_trap rho=0.5", lambda: bounds.check_small_rho_trap(0.5)),
    ("small_rho_trap rho=1", lambda: bounds.check_small_rho_trap(1.0)),
    ("large_rho_trap sigma=1.8 rho=1e6", lambda: bounds.check_large_rho_trap(1.8, 1e6)),
    ("viscous R1 nu=1 rho=1 c=20", lambda: bounds.check_viscous_traps("R1", WaveParams.make(1.0, 1.0, 20.0))),
    ("viscous R2 nu=0.5 rho=0.01 c=2", lambda: bounds.check_viscous_traps("R2", WaveParams.make(0.5, 0.01, 2.0))),
    ("viscous R3 nu=1 rho=1e6 c=2100", lambda: bounds.check_viscous_traps("R3", WaveParams.make(1.0, 1e6, 2100.0))),
)


def _integral_reports(p: dict) -> list:
    w = WaveParams.make(p["nu"], p["rho"], p["c"])
    cl = shooting.classify_wave(w, keep_trajectory=True)
    if cl.verdict is not shooting.Verdict.EXISTS:
        raise DomainError(f"no wave at c={w.c:g}: classifier says {cl.verdict.name}")
    return bounds.wave_integral_diagnostics(cl.trajectory, w)


def _aux_report(p: dict) -> bounds.BoundReport:
    if not p["aux"]:
        raise DomainError("the aux suite needs an auxiliary-function file (aux = <path> or --config <file>)")
    H = bounds.AuxFunction.read(p["aux"], p["lam"])
    template = p["template"] or ("inv_upper" if H.variables == 2 else "vis_upper")
    nu = p["nu"]
    if H.variables == 3 and nu <= 0:
        nu = 1.0
    w = WaveParams.make(nu, p["rho"], p["c"])
    n = p["points"] or (256 if H.variables == 2 else 64)
    spec = bounds.SampleSpec(bounds.Region.BOX_B if H.variables == 2 else bounds.Region.CUBE_C, n, p["epsilon"], p["delta"])
    return bounds.check_aux_conditions(template, H, w, spec)


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    try:
        p = effective_params("verify", args)
    except DomainError as exc:
        print(f"verify: parameters: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    suite = p["suite"]
    labelled = []
    try:
        if suite in ("traps", "all"):
            labelled += [(label, fn()) for label, fn in TRAP_SUITE]
        if suite in ("integrals", "all"):
            labelled += [(r.name, r) for r in _integral_reports(p)]
        if suite == "aux" or (suite == "all" and p["aux"]):
            r = _aux_report(p)
            labelled.append((r.name, r))
    except (DomainError, WaveSpeedError, OSError) as exc:
        print(f"verify: {suite}: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    if not labelled:
        print(f"verify: unknown suite {suite!r}", file=sys.stderr)
        return EXIT_BRACKET
    all_ok = True
    for label, rep in labelled:
        all_ok &= rep.holds
        print(f"{'PASS' if rep.holds else 'FAIL'} {label} margin={rep.margin:.6g}")
        for name, v in rep.components.items():
            flag = "ok" if v >= 0 else "violated"
            print(f"    {name}={v:.6g} {flag}")
    out = _out_dir(p)
    path = out / "verify_report.json"
    path.write_text(json.dumps([r.to_dict() for _, r in labelled], indent=2) + "\n")
    _finish("verify", p, [path], t0, out)
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavespeed", description=__doc__)
    ap.add_argument("--version", action="version", version=f"wavespeed {__version__} ({BACKEND})")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--out", "--out-dir", dest="out_dir", help="output directory")
        sp.add_argument("--no-cache", action="store_true", help="bypass the result cache")

    def tol_flags(sp):
        sp.add_argument("--tol-c", dest="tol_c", type=float)
        sp.add_argument("--rel-tol", dest="rel_tol", type=float)
        sp.add_argument("--abs-tol", dest="abs_tol", type=float)
        sp.add_argument("--event-tol", dest="event_tol", type=float)
        sp.add_argument("--xi-budget", dest="xi_budget", type=float)

    m = sub.add_parser("min-speed", help="minimal wave speed by shooting and bisection")
    m.add_argument("--nu", type=float)
    m.add_argument("--rho", type=float)
    tol_flags(m)
    common(m)
    m.set_defaults(func=cmd_min_speed)

    s = sub.add_parser("pde", help="simulate the PDE and track the front")
    s.add_argument("--nu", type=float)
    s.add_argument("--rho", type=float)
    s.add_argument("--ic", choices=[k.value for k in pde.InitialCondition])
    s.add_argument("--t-end", dest="t_end", type=float)
    s.add_argument("--dx", type=float)
    s.add_argument("--x-min", dest="x_min", type=float)
    s.add_argument("--x-max", dest="x_max", type=float)
    s.add_argument("--cfl", type=float)
    s.add_argument("--window", type=float, help="fraction of the track used for the speed fit")
    common(s)
    s.set_defaults(func=cmd_pde)

    t = sub.add_parser("tables", help="prefactor table, speed surface or threshold")
    t.add_argument("--which", choices=["table1", "figure1", "threshold"])
    t.add_argument("--nu-list", dest="nu_list")
    t.add_argument("--rho-list", dest="rho_list", help="comma list; a..b[:n] expands to n points")
    t.add_argument("--jobs", type=int)
    tol_flags(t)
    common(t)
    t.set_defaults(func=cmd_tables)

    v = sub.add_parser("verify", help="run bound and identity checks")
    v.add_argument("--suite", choices=["traps", "integrals", "aux", "all"])
    v.add_argument("--nu", type=float)
    v.add_argument("--rho", type=float)
    v.add_argument("--c", type=float)
    v.add_argument("--template", choices=[t.value for t in bounds.AuxTemplate])
    v.add_argument("--aux", help="auxiliary-function file")
    v.add_argument("--lambda", dest="lam", type=float)
    v.add_argument("--epsilon", type=float)
    v.add_argument("--delta", type=float)
    v.add_argument("--points", type=int)
    common(v)
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
