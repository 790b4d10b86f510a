#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-numpy fallback.

Run without arguments to time both paths (the script re-invokes itself in a
subprocess with CLOSEDLOFT_NO_NUMBA=1 for the fallback) and print a
comparison table.  ``--json`` times the current interpreter's mode only and
prints machine-readable results; the first call of each workload is a
warmup so numba compilation time never pollutes the numbers.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _workloads():
    from closedloft import _kernels
    from closedloft.linalg_solve import assemble_closed_system
    from closedloft.param_knots import ParameterValues
    from closedloft.spline_core import (
        BSplineCurve,
        clamped_knot_vector,
        cyclic_knot_vector,
        eval_curve,
        eval_surface,
        BSplineSurface,
    )

    rng = np.random.default_rng(7)
    domain = np.concatenate([[0.0], np.sort(rng.uniform(0.02, 0.98, 30)), [1.0]])
    kv = cyclic_knot_vector(domain, 3)
    params = np.sort(rng.uniform(0.0, 0.999, 2000))

    def bench_collocation_rows():
        return _kernels.collocation_matrix(kv.knots, 3, kv.n_basis, params)

    t31 = ParameterValues(np.concatenate([[0.0], np.sort(rng.uniform(0.01, 0.97, 30))]))
    trial_domain = np.concatenate([[0.0], np.sort(rng.uniform(0.02, 0.98, 30)), [1.0]])

    def bench_closed_assembly():
        kv_t = cyclic_knot_vector(trial_domain, 3)
        m = None
        for _ in range(50):
            m, _shape = assemble_closed_system(t31, kv_t, 30)
        return m

    curve = BSplineCurve(3, kv, rng.normal(size=(kv.n_basis - 3, 3)), kind="closed")
    us = rng.uniform(0.0, 1.0, 200_000)

    def bench_curve_sampling():
        return eval_curve(curve, us)

    ku = clamped_knot_vector(np.concatenate([[0.0], np.linspace(0.1, 0.9, 8), [1.0]]), 3)
    net = rng.normal(size=(ku.n_basis, kv.n_basis - 3, 3))
    surf = BSplineSurface(3, 3, ku, kv, net)
    uu = rng.uniform(0, 1, 100_000)
    vv = rng.uniform(0, 1, 100_000)

    def bench_surface_sampling():
        return eval_surface(surf, uu, vv)

    return [
        ("collocation rows (2000 params, p=3)", bench_collocation_rows),
        ("closed-system assembly x50 (n=30)", bench_closed_assembly),
        ("curve sampling (200k params)", bench_curve_sampling),
        ("surface sampling (100k pairs)", bench_surface_sampling),
    ]


def run_current(repeats):
    from closedloft import _kernels

    results = {"accel": _kernels.ACCEL, "timings": {}}
    for name, fn in _workloads():
        fn()  # warmup / jit compile
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        results["timings"][name] = best
    return results


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--json", action="store_true", help="time the current mode only")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    if args.json:
        print(json.dumps(run_current(args.repeats)))
        return

    here = os.path.abspath(__file__)
    rows = {}
    for label, env_flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, CLOSEDLOFT_NO_NUMBA=env_flag)
        out = subprocess.run(
            [sys.executable, here, "--json", "--repeats", str(args.repeats)],
            env=env, capture_output=True, text=True, check=True,
        )
        payload = json.loads(out.stdout.strip().splitlines()[-1])
        if payload["accel"] != label:
            print(f"note: requested {label} path, interpreter reports {payload['accel']}")
        rows[label] = payload["timings"]

    width = max(len(n) for n in rows["numba"])
    print(f"{'workload':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name in rows["numba"]:
        a, b = rows["numba"][name], rows["numpy"][name]
        print(f"{name:<{width}}  {a * 1e3:9.2f}ms  {b * 1e3:9.2f}ms  {b / a:7.1f}x")


if __name__ == "__main__":
    main()
