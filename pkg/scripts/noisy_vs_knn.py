"""Hash-table classifier against brute-force 1-NN on noisy synthetic clusters, across radii and seeds."""

import argparse

import numpy as np

from fslbm import synthetic
from fslbm.bitcode import Codeword
from fslbm.evaluation import evaluate
from fslbm.labels import crisp
from fslbm.sht import Fallback, TrainConfig, build_arrays


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--f", type=int, default=24)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--prototypes", type=int, default=4, help="prototypes per class")
    p.add_argument("--train", type=int, default=4000)
    p.add_argument("--test", type=int, default=1000)
    p.add_argument("--flip", type=float, default=0.08)
    p.add_argument("--label-noise", type=float, default=0.1)
    p.add_argument("--radii", default="0,1,2,3")
    p.add_argument("--fallback", type=int, default=4)
    p.add_argument("--seeds", type=int, default=5)
    args = p.parse_args()

    f, k = args.f, args.classes
    print("seed,method,crisp_accuracy,total_accuracy,unmatched_rate")
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        tr, ytr, centers = synthetic.noisy_clusters(
            rng, f, k, args.prototypes, args.train, args.flip, args.label_noise
        )
        te, yte, _ = synthetic.noisy_clusters(
            rng, f, k, args.prototypes, args.test, args.flip, args.label_noise, centers=centers
        )
        nn = float(np.mean(synthetic.nearest_neighbor_predict(tr, ytr, te) == yte))
        print(f"{seed},1-NN,{nn:.4f},{nn:.4f},0.0000")
        test = [(Codeword(int(x), f), crisp(int(y), k)) for x, y in zip(te, yte)]
        for e in (int(r) for r in args.radii.split(",")):
            table = build_arrays(tr, synthetic.one_hot(ytr, k), TrainConfig(f, e), n_classes=k)
            r = evaluate(table, test, Fallback(args.fallback))
            print(f"{seed},sht e={e},{r.crisp_accuracy:.4f},{r.total_accuracy:.4f},{r.unmatched_rate:.4f}")


if __name__ == "__main__":
    main()
