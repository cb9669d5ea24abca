"""Subspace distortions and the crossing lower bound for the K_{3,3} space.

    python3 scripts/k33_certificate.py --n 60 --k 10 --eps 0.5 --seeds 10
"""

import argparse
import json

import numpy as np

from embedlab.counterexamples import crossing_certificate, k33_space, k33_subspace_embedding
from embedlab.embedder import embed_rd
from embedlab.metric import distortion_of_map


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--subsets", type=int, default=100)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--out", default="k33.json")
    args = ap.parse_args()

    sp = k33_space(args.n, args.k, args.eps)
    rng = np.random.default_rng(7)
    sub = []
    for _ in range(args.subsets):
        s = sorted(int(i) for i in rng.choice(sp.n, size=sp.k, replace=False))
        e = k33_subspace_embedding(sp, s)
        sub.append(distortion_of_map(e.source, e).distortion)
    e, rep = embed_rd(sp.metric, 2, seeds=range(args.seeds))
    cert = crossing_certificate(sp, e)
    out = {"n": sp.n, "k": sp.k, "eps": sp.eps, "w": sp.w, "subset_worst": max(sub),
           "subset_mean": float(np.mean(sub)), "full_distortion": rep.distortion,
           "L": cert.L, "L_over_nw": cert.L / (sp.n * sp.w), "crossings": cert.crossings}
    print(json.dumps(out, indent=1))
    with open(args.out, "w") as fh:
        json.dump(out, fh, indent=1)


if __name__ == "__main__":
    main()
