"""Compare the numba and pure-numpy kernels on the workloads that dominate runtime.

    python benchmarks/bench_kernels.py [--vars 20] [--rows 300] [--repeat 3]

Each kernel is timed under both backends on identical inputs; outputs are
checked for equality before timing is reported. The first numba call
(compilation, or cache load) is excluded.
"""

import argparse
import time

import numpy as np

from causalstab import _kernels as K
from causalstab.citest import critical_value
from causalstab.data import random_sem, sufficient_stats, synth_sem


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--vars", type=int, default=20)
    ap.add_argument("--rows", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    spec = random_sem(args.vars, 0.2, args.seed, weight_range=(0.1, 0.6))
    s = sufficient_stats(synth_sem(spec, args.rows, args.seed))
    corr = np.ascontiguousarray(s.corr)
    rng = np.random.default_rng(args.seed)
    idx_sets = [rng.permutation(args.vars)[: k + 2].astype(np.int64) for k in rng.integers(0, 4, 2000)]
    a = rng.normal(size=2000)
    b = rng.normal(size=2000)

    cases = []
    for alpha in (0.01, 0.5, 0.999):
        crit = critical_value(alpha)
        cases.append((f"skeleton alpha={alpha}",
                      lambda f, c=crit: f(corr, s.n, c, -1),
                      K.skeleton_numpy, K.skeleton_numba))
    cases.append(("pcorr x2000",
                  lambda f: [f(corr, idx) for idx in idx_sets],
                  K.pcorr_numpy, K.pcorr_numba))
    cases.append(("sign_sum 2000x2000", lambda f: f(a, b), K.sign_sum_numpy, K.sign_sum_numba))

    print(f"{args.vars} variables, {args.rows} rows, best of {args.repeat}")
    print(f"{'kernel':<24} {'numpy s':>10} {'numba s':>10} {'speedup':>8}")
    for label, call, f_np, f_nb in cases:
        ref, got = call(f_np), call(f_nb)  # also warms up numba
        if isinstance(ref, tuple):
            assert all(np.array_equal(x, y) for x, y in zip(ref, got)), label
        else:
            assert np.allclose(ref, got, rtol=0, atol=1e-12), label
        t_np = best_of(lambda: call(f_np), args.repeat)
        t_nb = best_of(lambda: call(f_nb), args.repeat)
        print(f"{label:<24} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
