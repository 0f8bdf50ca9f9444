"""Compare the compiled and pure-numpy kernel backends.

    python benchmarks/bench_kernels.py --ns 50,100,200 --repeats 3
"""
import argparse
import time

import numpy as np

from pointline import kernels
from pointline.align import candidate_costs, iter_candidate_blocks
from pointline.cost import MIN_HUBER
from pointline.harness import GenConfig, gen_instance
from pointline.matching import align_and_match


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def enumerate_and_score(A):
    # enumeration plus cost evaluation, block by block, like solve_exhaustive
    for blk in iter_candidate_blocks(A):
        if len(blk):
            candidate_costs(A, blk, MIN_HUBER)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", default="25,50,100")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--hungarian-n", type=int, default=200)
    args = ap.parse_args(argv)
    ns = [int(x) for x in args.ns.split(",")]
    backends = [b for b in kernels.BACKENDS if b != "numba" or kernels.numba_available()]

    # compile once so the first timing is not a JIT measurement
    warm = gen_instance(GenConfig(n=6, seed=0)).pairs
    with kernels.use_backend("numba"):
        enumerate_and_score(warm)
        align_and_match(warm.subset([0, 1, 2]))
        kernels.hungarian(np.eye(3))

    print(f"{'task':<24}{'n':>6}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for n in ns:
        A = gen_instance(GenConfig(n=n, seed=n)).pairs
        times = []
        for b in backends:
            with kernels.use_backend(b):
                times.append(_best_of(lambda: enumerate_and_score(A), args.repeats))
        _row("enumerate+score", n, times)

    M = np.random.default_rng(0).uniform(0, 100, (args.hungarian_n, args.hungarian_n))
    times = []
    for b in backends:
        with kernels.use_backend(b):
            times.append(_best_of(lambda: kernels.hungarian(M), args.repeats))
    _row("hungarian", args.hungarian_n, times)

    U = gen_instance(GenConfig(n=5, seed=1, shuffle=True)).pairs
    times = []
    for b in backends:
        with kernels.use_backend(b):
            times.append(_best_of(lambda: align_and_match(U), args.repeats))
    _row("align_and_match", 5, times)


def _row(task, n, times):
    speed = f"{times[-1] / times[0]:>9.1f}x" if len(times) > 1 else ""
    print(f"{task:<24}{n:>6}" + "".join(f"{t:>11.4f}s" for t in times) + speed)


if __name__ == "__main__":
    main()
