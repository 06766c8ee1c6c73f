"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per workload with the best-of-``repeat`` wall time of each
backend, the speedup, and the largest absolute difference between results.
"""
import argparse
import timeit

import numpy as np

from singdmc import kernels


def workloads():
    rng = np.random.default_rng(0)
    v3 = np.array([0.0, 0.4, 1.1])
    lp3 = np.log([0.5, 0.3, 0.2])
    lp_a, s_a = kernels.pure.composition_terms(v3, lp3, 150)
    lp_b, s_b = kernels.pure.composition_terms(np.array([0.0, 0.7]), np.log([0.4, 0.6]), 400)
    w = rng.dirichlet(np.ones(3), size=3)
    cb = rng.integers(3, size=(16, 10))
    return [
        ("iid_tail 2 classes n=200000", "iid_tail",
         (np.array([0.0, np.log(2)]), np.log([0.5, 0.5]), 200000, 70000.0, 2e-7)),
        ("iid_tail 3 classes n=1500", "iid_tail", (v3, lp3, 1500, 700.0, 1.5e-9)),
        ("composition_terms 3 classes n=1500", "composition_terms", (v3, lp3, 1500)),
        ("product_tail 11476 x 401", "product_tail", ([lp_a, lp_b], [s_a, s_b], 150.0, 5e-10)),
        ("ml_error |Y|^n=3^10, M=16", "ml_error", (w, cb)),
    ]


def _max_diff(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return max(float(np.max(np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))))
               for x, y in zip(a, b))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if kernels.compiled is None:
        print("compiled extension not built; nothing to compare")
        return 1
    print(f"{'workload':38s} {'python':>10s} {'cython':>10s} {'speedup':>8s} {'max diff':>10s}")
    for label, name, call in workloads():
        fp, fc = getattr(kernels.pure, name), getattr(kernels.compiled, name)
        tp = min(timeit.repeat(lambda: fp(*call), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: fc(*call), number=1, repeat=args.repeat))
        diff = _max_diff(fp(*call), fc(*call))
        print(f"{label:38s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f} {diff:10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
