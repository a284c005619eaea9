"""Average FPs per query at the threshold picked for a mined FP rate, hn1 vs hn2.

With hn2 keeping H mined pairs from K queries over a pool of M, the
threshold at mined rate r should give about r*H/K false positives per
query against the pool. hn1 selects one pair per query and drifts away
from this as the dimension grows.
"""
import argparse

import numpy as np

from ndbench.evaluation import pick_thresholds, roc_from_distances
from ndbench.formats import DescriptorSet
from ndbench.index import FlatIndex
from ndbench.mining import MiningConfig, mine


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--M", type=int, default=5000)
    ap.add_argument("--K", type=int, default=500)
    ap.add_argument("--dims", type=int, nargs="+", default=[8, 16, 64])
    ap.add_argument("--rate", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print("dim strategy  threshold  avg_fp/query  expected")
    for d in args.dims:
        q = DescriptorSet(tuple(f"q{i}" for i in range(args.K)), rng.standard_normal((args.K, d)))
        p = DescriptorSet(tuple(f"p{i}" for i in range(args.M)), rng.standard_normal((args.M, d)))
        index = FlatIndex.from_set(p)
        for cfg in (MiningConfig("hn1"), MiningConfig("hn2", knn_per_query=10, total_pairs=2 * args.K)):
            hn = mine(index, q, cfg)
            (t,) = pick_thresholds(roc_from_distances([0.0], hn.distances), [args.rate])
            hits = index.range_batch(q.matrix, t)
            avg = np.mean([len(h) for h in hits])
            expected = args.rate * len(hn) / args.K
            print(f"{d:3d} {cfg.strategy.value:8s} {t:10.4f}  {avg:12.4f}  {expected:8.4f}")


if __name__ == "__main__":
    main()
