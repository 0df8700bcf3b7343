"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py --sizes 10 14 18 --levels 5
"""
import argparse
import time

import numpy as np

from qtsp import _kernels


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n, levels, repeats, rng):
    dim = 1 << n
    energies = rng.uniform(0, 10, dim)
    state = (rng.normal(size=dim) + 1j * rng.normal(size=dim)).astype(np.complex128)
    state /= np.linalg.norm(state)
    tm = rng.uniform(0, np.pi, levels)
    to = rng.uniform(0, 2 * np.pi, levels)
    rows = []
    for name, call in (
        ("mixer", lambda k: k["mixer"](state.copy(), n, 0.3)),
        ("subset_sum", lambda k: k["subset_sum"](energies.copy(), n)),
        ("energy_grad", lambda k: k["energy_grad"](energies, n, tm, to)),
    ):
        call(_kernels.NUMBA_KERNELS)  # compile outside the timing
        t_nb = _best_of(lambda: call(_kernels.NUMBA_KERNELS), repeats)
        t_np = _best_of(lambda: call(_kernels.NUMPY_KERNELS), repeats)
        rows.append((name, n, t_np, t_nb))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[10, 12, 14, 16, 18, 20])
    p.add_argument("--levels", type=int, default=5, help="QAOA levels for energy_grad")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<12} {'n':>3} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>8}")
    for n in args.sizes:
        for name, size, t_np, t_nb in bench(n, args.levels, args.repeats, rng):
            print(f"{name:<12} {size:>3} {t_np * 1e3:>12.3f} {t_nb * 1e3:>12.3f} {t_np / t_nb:>8.2f}")


if __name__ == "__main__":
    main()
