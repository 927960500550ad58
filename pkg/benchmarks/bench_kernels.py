"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 20]

Times the cyclic tridiagonal factor+solve, the coupled (u, w) block solve,
and one whole TTCD run per backend (the full run switches the backend in a
subprocess through BBMB_TTCD_PURE_PYTHON).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from bbmb_ttcd.linsolve import available_backends

FULL_RUN = """
import time
from bbmb_ttcd import linsolve, make_space_grid, builtin_problems, run_ttcd
p = builtin_problems()["soliton"]
grid = make_space_grid(p.a, p.L, {M})
t = time.perf_counter()
run_ttcd(grid, p.make(1.0, 1.0), 1.0, {N_c}, 4)
print(linsolve.BACKEND, time.perf_counter() - t)
"""


def random_block_system(M, rng):
    blocks = rng.standard_normal((2, 2, 3, M)) * 0.1
    blocks[0, 0, 1] += 4.0
    blocks[1, 1, 1] += 4.0
    return blocks, rng.standard_normal((2, M))


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--sizes", default="64,600,1200,4800")
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the fallback is available")
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"{'kernel':<22}{'M':>7}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    for M in sizes:
        sub, sup = rng.uniform(-1, 1, M), rng.uniform(-1, 1, M)
        diag = 4.0 + rng.uniform(0, 1, M)
        rhs = rng.standard_normal(M)
        blocks, brhs = random_block_system(M, rng)
        rows = {
            "cyclic factor+solve": lambda k: k.cyclic_solve(k.cyclic_factor(sub, diag, sup), rhs),
            "block (u,w) solve": lambda k: k.block_cyclic_solve(blocks, brhs),
        }
        for label, call in rows.items():
            times = {name: bench(lambda k=k: call(k), args.repeat) for name, k in backends.items()}
            line = f"{label:<22}{M:>7}" + "".join(f"{1e6 * t:>12.1f}us" for t in times.values())
            if "cython" in times:
                line += f"{times['python'] / times['cython']:>9.1f}x"
            print(line)

    print("\nwhole TTCD run (soliton, h = 1/10, tau_c = 1/64, beta = 4):")
    for pure in ("", "1"):
        env = dict(os.environ, BBMB_TTCD_PURE_PYTHON=pure)
        if not pure:
            env.pop("BBMB_TTCD_PURE_PYTHON")
        out = subprocess.run([sys.executable, "-c", FULL_RUN.format(M=600, N_c=64)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:<8} {float(out[1]):.3f} s")


if __name__ == "__main__":
    main()
