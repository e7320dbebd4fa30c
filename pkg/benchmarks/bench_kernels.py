"""Compiled vs pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times each dense kernel on the 2x2 matrices of the bundled examples and on
10x10 random matrices (the supported cap), then one end-to-end lemma
bisection per backend in a subprocess (the backend is fixed at import).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from dwellcert import _kernels_py

try:
    from dwellcert import _kernels as _compiled
except ImportError:
    _compiled = None

END_TO_END = (
    "import time; from dwellcert import cli, dwell, linalg;"
    "s = cli.load_system('ex3')[0]; t = time.perf_counter();"
    "dwell.bisect_dwell(lambda T: dwell.lemma_min_dwell_check(s, T), 0.1, 10.0, 1e-4);"
    "print(linalg.BACKEND, time.perf_counter() - t)"
)


def cases():
    rng = np.random.default_rng(0)
    small = np.array([[-1.0, 100.0], [-1.0, -1.0]])
    big = rng.normal(size=(10, 10))
    return [
        ("expm 2x2", lambda k: k.expm(small, 2.1254)),
        ("expm 10x10", lambda k: k.expm(big, 1.0)),
        ("jacobi 2x2", lambda k: k.jacobi_eig(small + small.T)),
        ("jacobi 10x10", lambda k: k.jacobi_eig(big + big.T)),
        ("cholesky 10x10", lambda k: k.cholesky_ok(big @ big.T, 0.0)),
        ("eig moduli 2x2", lambda k: k.eig_moduli(small)),
        ("eig moduli 10x10", lambda k: k.eig_moduli(big)),
    ]


def per_call(fn, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':<18}{'python [us]':>14}{'compiled [us]':>15}{'speed-up':>10}")
    for name, call in cases():
        tp = per_call(lambda: call(_kernels_py), args.repeat) * 1e6
        if _compiled is None:
            print(f"{name:<18}{tp:>14.1f}{'n/a':>15}{'':>10}")
            continue
        tc = per_call(lambda: call(_compiled), args.repeat) * 1e6
        print(f"{name:<18}{tp:>14.1f}{tc:>15.1f}{tp / tc:>9.1f}x")
    print("\nlemma bisection, Example 3 (seconds):")
    for pure in ("1", ""):
        env = dict(os.environ, DWELLCERT_PURE_PYTHON=pure)
        if not pure:
            env.pop("DWELLCERT_PURE_PYTHON")
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env,
                             capture_output=True, text=True, check=True)
        print("  " + out.stdout.strip())


if __name__ == "__main__":
    main()
