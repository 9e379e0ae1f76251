"""Compare the compiled and pure-Python exact solver kernels.

    python benchmarks/bench_exact.py [--sizes 8 10 11] [--repeats 3]

Prints per (variant, n) the median solve time of each kernel, the speed-up
and whether both returned the same objective.
"""

from __future__ import annotations

import argparse
import statistics
import time

from mtlkd.core.variant import VariantSpec
from mtlkd.data.generate import generate_instance
from mtlkd.search import _exact_py
from mtlkd.search.exact import exact_solve

try:
    from mtlkd.search import _exact_ext
except ImportError:
    _exact_ext = None


def timed(inst, kernel, repeats):
    times, obj = [], None
    for _ in range(repeats):
        t = time.perf_counter()
        _, obj = exact_solve(inst, kernel=kernel)
        times.append(time.perf_counter() - t)
    return statistics.median(times), obj


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 10, 11])
    ap.add_argument("--variants", nargs="+", default=["CVRP", "OVRPL", "VRPBTW"])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _exact_ext is None:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation`")
        return
    print(f"{'variant':<10}{'n':>4}{'compiled_s':>12}{'python_s':>12}{'speedup':>9}  same")
    for name in args.variants:
        for n in args.sizes:
            inst = generate_instance(VariantSpec.from_name(name), n, args.seed)
            tc, oc = timed(inst, _exact_ext, args.repeats)
            tp, op = timed(inst, _exact_py, args.repeats)
            print(f"{name:<10}{n:>4}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}  {oc == op}")


if __name__ == "__main__":
    main()
