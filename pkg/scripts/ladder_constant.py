"""Measure the rerouted-embedding constant K on sqrt(n)-point subsets of the
ladder space, for several n.

    python3 scripts/ladder_constant.py --sizes 16 64 144 --trials 50
"""

import argparse
import json
import math

import numpy as np

from embedlab.counterexamples import ladder_subset_embedding, planar_ladder_space
from embedlab.errors import NoGapFound
from embedlab.metric import aspect_ratio, distortion_of_map


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 64, 144])
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--out", default="ladder.json")
    args = ap.parse_args()

    rows = []
    for n in args.sizes:
        sp = planar_ladder_space(n)
        rng = np.random.default_rng(n)
        r = math.isqrt(n)
        ks = []
        for _ in range(args.trials):
            sub = rng.choice(sp.metric.n, size=r, replace=False)
            try:
                e = ladder_subset_embedding(sp, sub)
            except NoGapFound:
                continue
            ks.append(distortion_of_map(e.source, e).distortion)
        rows.append({"n": n, "points": sp.metric.n, "aspect_ratio": aspect_ratio(sp.metric),
                     "K_max": max(ks), "K_median": float(np.median(ks)), "subsets": len(ks)})
        print(rows[-1])
    with open(args.out, "w") as fh:
        json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
