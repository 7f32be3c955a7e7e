"""Time the numba kernels against their pure-numpy counterparts.

Run with ``python3 benchmarks/bench_kernels.py``. Numba compile time is paid
once in a warm-up call and excluded from the timings.
"""
import argparse
import timeit

import numpy as np

from dgrkit import kernels


def _unit_rows(rng, N, n):
    M = rng.normal(size=(N, n))
    return np.ascontiguousarray(M / np.linalg.norm(M, axis=1, keepdims=True))


def cases(n, N, seed=0):
    rng = np.random.default_rng(seed)
    At, Bt, D = (np.ascontiguousarray(rng.normal(size=(n, n)) / np.sqrt(n)) for _ in range(3))
    terms = (At, Bt, D, rng.normal(size=n), _unit_rows(rng, N, n), _unit_rows(rng, N, n))
    a = rng.random(N)
    b = np.tril(rng.random((N, N)))
    Q0 = np.zeros((n, n))
    P0 = np.zeros((n, n))
    xs = rng.normal(size=(n, n))
    ys = rng.normal(size=(n, n))

    def rank_one(fn):
        Q, P = Q0.copy(), P0.copy()
        for i in range(n):
            fn(Q, P, xs[i], ys[i], 1e-10)

    return {
        "bound_terms": lambda fn: fn(*terms),
        "bound_recursion": lambda fn: fn(a, b),
        "rank_one_update x n": rank_one,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8, help="state dimension")
    ap.add_argument("--steps", type=int, default=200, help="trajectory length N")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    impls = {"numpy": ("bound_terms_numpy", "bound_recursion_numpy", "rank_one_update_numpy")}
    if kernels.HAVE_NUMBA:
        impls["numba"] = ("bound_terms_numba", "bound_recursion_numba", "rank_one_update_numba")
    else:
        print("numba not installed; timing the numpy path only")

    print(f"n={args.n} N={args.steps}")
    print(f"{'kernel':<22}" + "".join(f"{b:>14}" for b in impls) + ("    speedup" if len(impls) == 2 else ""))
    for idx, (name, call) in enumerate(cases(args.n, args.steps).items()):
        times = {}
        for backend, names in impls.items():
            fn = getattr(kernels, names[idx])
            call(fn)  # warm-up, triggers compilation
            number = max(1, int(0.2 / max(timeit.timeit(lambda: call(fn), number=1), 1e-7)))
            best = min(timeit.repeat(lambda: call(fn), number=number, repeat=args.repeat)) / number
            times[backend] = best
        row = f"{name:<22}" + "".join(f"{times[b] * 1e6:>11.1f} us" for b in impls)
        if len(times) == 2:
            row += f"  {times['numpy'] / times['numba']:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
