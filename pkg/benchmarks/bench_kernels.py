"""Compare the compiled and numpy step kernels.

Two levels: the raw kernel calls (residual, Jacobian and the dense solve of
one Simpson step) and a full integration where model evaluation and the
Newton loop are included.

    python benchmarks/bench_kernels.py [--repeat 5] [--steps 2048]
"""
import argparse
import time
import timeit

import numpy as np

from simpvi import kernels
from simpvi.experiments import initial_point, reference_period
from simpvi.simpson import SimpsonStepSystem, integrate
from simpvi.systems import get_preset


def kernel_calls(preset, h):
    start = initial_point(preset)
    system = SimpsonStepSystem(preset.model, start, h)
    x = np.concatenate([start.q, start.p, start.q]) + 1e-3
    F = system.residual(x)
    J = system.analytic_jacobian(x)
    return {
        "residual": lambda: system.residual(x),
        "jacobian": lambda: system.analytic_jacobian(x),
        "lu_solve": lambda: kernels.active().lu_solve(J, -F),
    }


def bench(backend, preset, h, t_end, repeat, number):
    kernels.set_backend(backend)
    out = {}
    for name, fn in kernel_calls(preset, h).items():
        # the residual/Jacobian caches key on x, so time the kernel only
        out[name] = min(timeit.repeat(fn, number=number, repeat=repeat)) / number * 1e6
    start = initial_point(preset)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        traj = integrate(preset.model, start, h, t_end)
        best = min(best, time.perf_counter() - t0)
    out["integrate"] = best
    out["final_q"] = traj.final.q
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="lagrange-top-table3")
    ap.add_argument("--steps", type=int, default=2048, help="steps per nutation period (tops) or per 10 s")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=2000)
    args = ap.parse_args(argv)

    preset = get_preset(args.preset)
    t_end = reference_period(preset) if preset.is_top else 10.0
    h = t_end / args.steps
    results = {b: bench(b, preset, h, t_end, args.repeat, args.number) for b in kernels.available()}

    print(f"preset {preset.name}, {args.steps} steps, h = {h:.6g} s")
    print(f"{'':>12}" + "".join(f"{b:>14}" for b in results))
    for key, unit in (("residual", "us"), ("jacobian", "us"), ("lu_solve", "us"), ("integrate", "s")):
        print(f"{key + ' [' + unit + ']':>12}" + "".join(f"{r[key]:>14.4g}" for r in results.values()))
    if len(results) == 2:
        a, b = results["python"], results["cython"]
        print(f"speed-up (python/cython): integrate {a['integrate'] / b['integrate']:.2f}x")
        print(f"max |q_python - q_cython| at t_end: {np.max(np.abs(a['final_q'] - b['final_q'])):.3e}")


if __name__ == "__main__":
    main()
