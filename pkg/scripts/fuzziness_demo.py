"""Recover a label mixture at a prototype as the number of training points grows."""

import argparse

import numpy as np

from fslbm import synthetic
from fslbm.bitcode import Codeword
from fslbm.labels import fuzziness, render
from fslbm.sht import TrainConfig, build_arrays


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--f", type=int, default=24)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--mixture", default="0.2,0.8")
    p.add_argument("--sizes", default="50,200,1000,4000,16000")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    mixture = tuple(float(x) for x in args.mixture.split(","))
    k = len(mixture)
    print("n,distribution,fuzziness,max_abs_error")
    for n in (int(s) for s in args.sizes.split(",")):
        rng = np.random.default_rng(args.seed)
        codes, labels, protos = synthetic.mixture_at_prototype(rng, args.f, args.radius, n, mixture)
        table = build_arrays(codes, synthetic.one_hot(labels, k), TrainConfig(args.f, args.radius), n_classes=k)
        dist = table.query(Codeword(int(protos[0]), args.f)).distribution
        err = max(abs(a - b) for a, b in zip(dist.probs, mixture))
        print(f"{n},{render(dist)},{fuzziness(dist):.4f},{err:.4f}")


if __name__ == "__main__":
    main()
