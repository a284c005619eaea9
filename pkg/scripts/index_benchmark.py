"""Time exact kNN search on random data for several worker counts."""
import argparse
import os
import time

import numpy as np

from ndbench.index import FlatIndex


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=100_000)
    ap.add_argument("--queries", type=int, default=1000)
    ap.add_argument("--dim", type=int, default=512)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--threads", type=int, nargs="+", default=[1, 4, os.cpu_count() or 1])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    index = FlatIndex(rng.standard_normal((args.rows, args.dim), dtype=np.float32),
                      [str(i) for i in range(args.rows)])
    q = rng.standard_normal((args.queries, args.dim), dtype=np.float32)
    ref = None
    for n in args.threads:
        t0 = time.perf_counter()
        res = index.knn_batch(q, args.k, threads=n)
        dt = time.perf_counter() - t0
        same = ref is None or res == ref
        ref = ref or res
        print(f"threads={n:3d}  {dt:7.2f}s  {args.queries / dt:9.1f} queries/s  identical={same}")


if __name__ == "__main__":
    main()
