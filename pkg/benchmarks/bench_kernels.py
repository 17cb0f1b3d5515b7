"""Compare the compiled feature kernel with its pure-Python twin.

    python3 benchmarks/bench_kernels.py [--gates 400] [--links 4000] [--repeat 3]

Two timings per backend: the raw kernel on a batch of links, and one full
attack evaluation (training plus key prediction), which is what the GA pays
per fitness call.
"""
import argparse
import random
import time

import numpy as np

from autolock import attack, kernels
from autolock.circuits import random_dag
from autolock.lock import apply_genotype, sample_random_genotype


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gates", type=int, default=400)
    ap.add_argument("--links", type=int, default=4000)
    ap.add_argument("--key-length", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    n = random_dag(32, args.gates, 0)
    ln = apply_genotype(n, sample_random_genotype(n, args.key_length, random.Random(0)))
    g = attack.build_attack_graph(ln)
    rng = random.Random(1)
    size = len(g.names)
    links = [(rng.randrange(size), rng.randrange(size), rng.randrange(2)) for _ in range(args.links)]
    arr = np.asarray(links, dtype=np.intc)
    remove = np.array([tuple(l) in g.edge_set for l in links], dtype=np.intc)
    kargs = (*g.csr, g.kinds, arr[:, 0], arr[:, 1], arr[:, 2], remove)

    backends = {"python": kernels.py_link_features}
    if kernels.BACKEND == "cython":
        backends["cython"] = kernels.link_features
    else:
        print("compiled kernel not built; timing the Python fallback only")

    print(f"graph: {size} nodes, {len(g.edges)} edges, K={args.key_length}; {args.links} links")
    results = {}
    original = kernels.link_features
    try:
        for name, fn in backends.items():
            kernels.link_features = fn
            t_kernel = best_of(lambda: fn(*kargs), args.repeat)
            t_attack = best_of(lambda: attack.attack_accuracy(ln, 0), args.repeat)
            results[name] = (t_kernel, t_attack)
            print(f"{name:>7}: kernel {t_kernel * 1e3:9.2f} ms   full attack {t_attack * 1e3:9.2f} ms")
    finally:
        kernels.link_features = original

    if "cython" in results:
        same = np.array_equal(np.asarray(backends["cython"](*kargs)), np.asarray(backends["python"](*kargs)))
        print(f"speedup: kernel x{results['python'][0] / results['cython'][0]:.1f}, "
              f"full attack x{results['python'][1] / results['cython'][1]:.1f}; outputs identical: {same}")


if __name__ == "__main__":
    main()
