"""Compare the AUC on mined hard negatives with the AUC over every negative pair.

Prints, per positive-noise level, how often AUC_hn is above, equal to or below
AUC_full for hn1 and exact-regime hn2.
"""
import argparse

import numpy as np

from ndbench.evaluation import verify_upper_bound
from ndbench.formats import DescriptorSet
from ndbench.index import FlatIndex
from ndbench.mining import MiningConfig, mine


def trial(rng, k, m, d, n_pos, noise):
    q = DescriptorSet(tuple(f"q{i}" for i in range(k)), rng.standard_normal((k, d)))
    p = DescriptorSet(tuple(f"p{i}" for i in range(m)), rng.standard_normal((m, d)))
    pos = np.linalg.norm(noise * rng.standard_normal((n_pos, d)), axis=1)
    full = np.sqrt(((q.matrix[:, None].astype(float) - p.matrix[None].astype(float)) ** 2).sum(-1))
    index = FlatIndex.from_set(p)
    hn1 = mine(index, q, MiningConfig("hn1"))
    hn2 = mine(index, q, MiningConfig("hn2", knn_per_query=m, total_pairs=k))
    return verify_upper_bound(pos, full, hn1), verify_upper_bound(pos, full, hn2)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--K", type=int, default=20)
    ap.add_argument("--M", type=int, default=100)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--positives", type=int, default=10)
    ap.add_argument("--noise", type=float, nargs="+", default=[0.5, 1.0, 1.5])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print("noise strategy  above  equal  below  mean(auc_full)  mean(auc_hn)")
    for noise in args.noise:
        reps = [trial(rng, args.K, args.M, args.dim, args.positives, noise) for _ in range(args.trials)]
        for j, name in enumerate(("hn1", "hn2")):
            r = [x[j] for x in reps]
            above = sum(x.auc_hn > x.auc_full for x in r)
            equal = sum(x.auc_hn == x.auc_full for x in r)
            print(f"{noise:5.2f} {name:8s} {above:6d} {equal:6d} {len(r) - above - equal:6d}"
                  f"  {np.mean([x.auc_full for x in r]):14.4f}  {np.mean([x.auc_hn for x in r]):12.4f}")


if __name__ == "__main__":
    main()
