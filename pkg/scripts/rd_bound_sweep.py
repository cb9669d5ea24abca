"""Achieved distortion of the baseline embedder against n^(2/d) (ln n)^(3/2).

    python3 scripts/rd_bound_sweep.py --sizes 16 32 64 --dims 1 2 3 --seeds 3
"""

import argparse
import json

import numpy as np

from embedlab.embedder import embed_rd
from embedlab.metric import FiniteMetric


def random_points_metric(n: int, seed: int) -> FiniteMetric:
    pts = np.random.default_rng(seed).normal(size=(n, 8))
    return FiniteMetric.from_points(pts)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--dims", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--out", default="rd_bound.json")
    args = ap.parse_args()

    rows = []
    for n in args.sizes:
        m = random_points_metric(n, n)
        for d in args.dims:
            _, rep = embed_rd(m, d, seeds=range(args.seeds))
            rows.append(rep.to_json())
            print(f"n {n:4d} d {d} distortion {rep.distortion:9.4f} "
                  f"bound {rep.bound:9.2f} c {rep.c_achieved:.4f}")
    with open(args.out, "w") as fh:
        json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
