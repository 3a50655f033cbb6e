"""Time the Husimi and coherent-matrix kernels under both backends.

    python benchmarks/bench_kernels.py [--samples 200000] [--repeat 3]

The first numba call compiles (or loads the on-disk cache); it is run once
before timing so only steady-state throughput is reported.
"""

import argparse
import time

import numpy as np

from wehrl_lab import _accel, kernels
from wehrl_lab.projmeasure import sample_chart_array
from wehrl_lab.symrep import SpaceSignature, random_density

CELLS = [(2, 1), (2, 6), (3, 2), (3, 4), (4, 2), (5, 3)]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    prev = _accel.numba_enabled()
    print(f"{'N':>2} {'M':>2} {'dim':>4} {'rank':>4} {'kernel':>9} {'numpy s':>9} {'numba s':>9} {'speedup':>8}")
    try:
        for N, M in CELLS:
            sig = SpaceSignature(N, M)
            rho = random_density(sig, min(4, sig.dim), 0)
            lifts = sample_chart_array(N, args.samples, 0).lift
            jobs = {
                "husimi": lambda: kernels.husimi_values(lifts, sig.exps, sig.sqrt_mult, rho.vecs, rho.weights),
                "coherent": lambda: kernels.coherent_matrix(lifts, sig.exps, sig.sqrt_mult),
            }
            for name, fn in jobs.items():
                out = {}
                for flag in (False, True):
                    _accel.use_numba(flag)
                    fn()  # warm-up / compile
                    out[flag] = best_of(fn, args.repeat)
                print(f"{N:>2} {M:>2} {sig.dim:>4} {rho.rank:>4} {name:>9} {out[False]:>9.4f} {out[True]:>9.4f} "
                      f"{out[False] / out[True]:>7.1f}x")
            vals = []
            for flag in (False, True):
                _accel.use_numba(flag)
                vals.append(jobs["husimi"]())
            assert np.allclose(vals[0], vals[1], atol=1e-13), "backends disagree"
    finally:
        _accel.use_numba(prev)


if __name__ == "__main__":
    main()
