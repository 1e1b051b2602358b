"""Build and query timings as the training set grows; prints CSV and the fitted ratios."""

import argparse

from fslbm.evaluation import bench_scaling, bench_to_csv, fit_doubling_ratio


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--f", type=int, default=24)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--phi", default="1000,10000,100000")
    p.add_argument("--queries", type=int, default=5000)
    p.add_argument("--storage", default="sparse")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    phis = [int(x) for x in args.phi.split(",")]
    rows = bench_scaling(
        args.f, args.radius, phis, args.queries, seed=args.seed, storage=args.storage, repeats=args.repeats
    )
    print(bench_to_csv(rows), end="")
    build = fit_doubling_ratio(phis, [r.build_seconds for r in rows])
    query = rows[-1].mean_query_seconds / rows[0].mean_query_seconds
    print(f"# build doubling ratio {build:.3f}; query time ratio largest/smallest {query:.3f}")


if __name__ == "__main__":
    main()
