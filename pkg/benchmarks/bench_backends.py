"""Timing comparison of the numba and numpy volume kernels.

Runs the Hadamard-form Euler volume kernel and the full Navier-Stokes
right-hand side on a distorted mesh with both backends and reports
median wall times.  Usage:

    python3 benchmarks/bench_backends.py [--degree 3] [--cells 3] [--repeats 7]
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

import gclopt.kernels as kernels
from gclopt.discretization import SemiDiscreteOperator
from gclopt.mesh import build_perturbed_cube
from gclopt.metrics import analytic_metrics, build_metrics
from gclopt.physics import GasModel, prim_to_cons
from gclopt.verification import shock_state


def median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--degree", type=int, default=3)
    ap.add_argument("--cells", type=int, default=3)
    ap.add_argument("--eta", type=float, default=1.0)
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    from gclopt.kernels import _numpy as knp

    backends = {"numpy": knp}
    try:
        from gclopt.kernels import _numba as knb

        backends["numba"] = knb
    except ImportError:
        print("numba backend unavailable; timing numpy only")

    mesh = build_perturbed_cube(
        cells_per_dir=args.cells, eta=args.eta, degree=args.degree
    )
    ana = analytic_metrics(mesh)
    vol = build_metrics(mesh, "optimized")
    gas = GasModel(mu=0.25, Pr=0.75)
    bc = lambda X, t: prim_to_cons(shock_state(X, t), gas)
    opr = SemiDiscreteOperator(
        mesh, "navier_stokes", vol, analytic=ana, gas=gas, bc=bc
    )
    q = prim_to_cons(shock_state(mesh.coords, 0.0), gas)
    op1 = mesh.op.ops[0]
    dims = mesh.op.dims
    kernel_args = (q, vol.a, op1.D, op1.D, op1.D, dims, gas.gamma, gas.R)

    K, N = q.shape[:2]
    print(f"mesh: {K} elements, degree {args.degree} ({K * N} nodes), "
          f"eta={args.eta:g}; median of {args.repeats}")
    print(f"{'backend':<8} {'euler_volume':>14} {'ns_rhs':>14}")

    results = {}
    for name, mod in backends.items():
        mod.euler_volume(*kernel_args)  # warm up (jit compile)
        kernels.euler_volume = mod.euler_volume
        opr.rhs(q, 0.0)
        tk = median_time(lambda: mod.euler_volume(*kernel_args), args.repeats)
        tr = median_time(lambda: opr.rhs(q, 0.0), args.repeats)
        results[name] = (tk, tr)
        print(f"{name:<8} {tk * 1e3:>11.3f} ms {tr * 1e3:>11.3f} ms")

    if len(results) == 2:
        sk = results["numpy"][0] / results["numba"][0]
        sr = results["numpy"][1] / results["numba"][1]
        print(f"numba speedup: kernel {sk:.2f}x, full rhs {sr:.2f}x")
        out_np = knp.euler_volume(*kernel_args)
        out_nb = backends["numba"].euler_volume(*kernel_args)
        print(f"max |numpy - numba| = {np.abs(out_np - out_nb).max():.3e}")


if __name__ == "__main__":
    main()
