"""Compiled vs pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N] [--quick]
"""

import argparse
import random
import time

from plausibility_mc import kernels
from plausibility_mc.butterfly import Flutter


def best_of(fn, repeat):
    best, out = None, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return best, out


def comparable(result):
    # chains may differ between equally short witnesses; depths may not
    if isinstance(result, dict):
        return {h: steps for h, (steps, _) in result.items()}
    return list(map(int, result))


def bfs_case(k, m, d):
    targets = list(range(100))
    steps = 2 * d + 4
    return f"alt_bfs k={k} m={m} d={d}", lambda impl: impl.alt_bfs(k, m, d, 0, 0, targets, steps)


def ck_case(k, m, d):
    F = Flutter(k, k, m, d)
    states = F.butterfly_states(k)
    index = {s: i for i, s in enumerate(states)}
    labels = [[min(index[x] for x in F.component(a, s)) for s in states] for a in F.agents]
    mask = [F.value(s) > 100 for s in states]
    return f"ck_fixpoint {len(states)} states", lambda impl: impl.ck_fixpoint(labels, mask)


def random_ck_case(n, seed=0):
    rng = random.Random(seed)
    labels = [[rng.randrange(i + 1) for i in range(n)] for _ in range(2)]
    for lab in labels:
        for i in range(n):
            lab[i] = lab[lab[i]]
    mask = [rng.random() < 0.9 for _ in range(n)]
    return f"ck_fixpoint random n={n}", lambda impl: impl.ck_fixpoint(labels, mask)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="skip the m=10, d=20 search")
    args = ap.parse_args()
    if kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; run `python setup.py build_ext --inplace`")
    cases = [bfs_case(300, 50, 6), bfs_case(300, 20, 12), ck_case(300, 50, 6), ck_case(300, 50, 10), random_ck_case(20000)]
    if not args.quick:
        cases.append(bfs_case(300, 10, 20))
    print(f"{'case':34} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for name, run in cases:
        py, a = best_of(lambda: run(kernels.python), 1 if "d=20" in name else args.repeat)
        cy, b = best_of(lambda: run(kernels.compiled), args.repeat)
        if comparable(a) != comparable(b):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:34} {py:10.4f} {cy:10.4f} {py / cy:7.1f}x")


if __name__ == "__main__":
    main()
