"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N] [--pde-steps N]

Both backends run the same inputs; the script also reports the largest
difference between their outputs.
"""

import argparse
import time

import numpy as np

from wavespeed import _pykernels as py
from wavespeed.integrate import default_seed_offset, seed_unstable
from wavespeed.model import WaveParams, singular_guard

try:
    from wavespeed import _ckernels as cy
except ImportError:
    cy = None


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def shoot_case(mod, code, w):
    y0 = list(seed_unstable(w, default_seed_offset(w)))
    params = (w.c, w.rho, w.nu, singular_guard(w.c))
    ev_kinds = [py.U_BELOW if code == py.PLANAR else py.V_BELOW, py.NEAR_ORIGIN]
    ev_thr = [0.0, 1e-6]
    return lambda: mod.shoot(code, params, y0, 1e4, 1e-10, 1e-12, 1e-10, ev_kinds, ev_thr, 1e8)


def pde_case(mod, n_steps, n_nodes=2401, dx=0.05):
    x = -20.0 + dx * np.arange(n_nodes)
    T0 = np.where(x < 0, 1.0, 0.0)
    u0 = np.where(x < 0, 1.0, 0.0)
    T0[-1] = u0[-1] = 0.0
    dt = 0.4 * dx * dx / 2.0

    def run():
        T, u = T0.copy(), u0.copy()
        mod.pde_advance(T, u, n_steps, dt, dx, 1.0, 1.0, True, 1e3)
        return np.concatenate([T, u])

    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--pde-steps", type=int, default=200)
    args = ap.parse_args()
    if cy is None:
        print("compiled kernels are not built; only the Python timings are shown")

    cases = [
        ("shoot planar  nu=0 rho=1 c=2.5", lambda m: shoot_case(m, py.PLANAR, WaveParams.make(0.0, 1.0, 2.5))),
        ("shoot planar  nu=0 rho=1e3 c=11.5", lambda m: shoot_case(m, py.PLANAR, WaveParams.make(0.0, 1e3, 11.5))),
        ("shoot viscous nu=1 rho=1 c=2.5", lambda m: shoot_case(m, py.VISCOUS, WaveParams.make(1.0, 1.0, 2.5))),
        (f"pde_advance   {args.pde_steps} steps, 2401 nodes", lambda m: pde_case(m, args.pde_steps)),
    ]
    print(f"{'case':42s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for label, make in cases:
        tp, outp = best_of(make(py), args.repeat)
        if cy is None:
            print(f"{label:42s} {tp:11.4f} {'-':>11s} {'-':>8s} {'-':>10s}")
            continue
        tc, outc = best_of(make(cy), args.repeat)
        if isinstance(outp, tuple):
            a, b = np.asarray(outp[3][-1]), np.asarray(outc[3][-1])
        else:
            a, b = outp, outc
        diff = float(np.max(np.abs(a - b)))
        print(f"{label:42s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
