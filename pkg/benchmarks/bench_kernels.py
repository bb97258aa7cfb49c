"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs once to trigger compilation, then the best of ``N`` runs
is reported for both flavours together with the speed-up.
"""

import argparse
import math
import time

import numpy as np

from softwg import _kernels as K


def cases():
    rng = np.random.default_rng(0)
    h = 1 / 16  # coarse level of the acceptance runs
    xs = np.arange(-20 + h, 20, h)
    ys = np.arange(-12 + h, 20, h)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    well = (np.array([-0.5]), np.array([0.5]), np.array([-2.0]), np.array([-2.0]))
    V = rng.uniform(-2, 0, xs.size * ys.size)
    csr = K.NUMPY_KERNELS["assemble_5pt"](xs.size, ys.size, h, V)
    x = rng.standard_normal(xs.size * ys.size)
    d = rng.uniform(-1, 3, 4000)
    e2 = rng.uniform(0.1, 1, 3999) ** 2
    a = rng.standard_normal((120, 120))
    return {
        "fermi_inverse": (4.0, math.pi / 2, X.ravel().copy(), Y.ravel().copy()),
        "cell_average_potential": (4.0, math.pi / 2, xs, ys, h, 16, *well, 0.5 + h),
        "assemble_5pt": (xs.size, ys.size, h, V),
        "csr_matvec": (*csr, x),
        "sturm_counts": (d, e2, np.linspace(-3, 5, 200), 1e-300),
        "jacobi_eigh": (a + a.T, 1e-14, 100),
    }


def best_of(fn, args, repeat):
    fn(*args)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<24}{'numpy [s]':>12}{'numba [s]':>12}{'speed-up':>10}")
    for name, fargs in cases().items():
        tn = best_of(K.NUMPY_KERNELS[name], fargs, args.repeat)
        tb = best_of(K.NUMBA_KERNELS[name], fargs, args.repeat)
        print(f"{name:<24}{tn:>12.4f}{tb:>12.4f}{tn / tb:>10.1f}")


if __name__ == "__main__":
    main()
