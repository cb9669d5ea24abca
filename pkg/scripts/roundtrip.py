"""Push optimal line embeddings of random small metrics through the plane
gadget and read them back.

    python3 scripts/roundtrip.py --cases 20 [--faithful]

By default the gadget is built with D_max = 1, which keeps the product
small.  With --faithful, D_max is the optimal line distortion of each metric,
so the radius and the net grow with it (about 20 s per case on one core).
"""

import argparse
import json
import time

import numpy as np

from embedlab.gadget import forward_distortion, forward_embedding, reduction_gadget
from embedlab.line import extract_line_embedding, optimal_line_embedding_bruteforce
from embedlab.metric import FiniteMetric, shortest_path_closure


def random_metric(seed: int, n: int) -> FiniteMetric:
    rng = np.random.default_rng(seed)
    labels = [str(i) for i in range(n)]
    edges = [(labels[i], labels[j], rng.uniform(1, 4)) for i in range(n) for j in range(i + 1, n)]
    m = shortest_path_closure(labels, edges)
    off = m.dist[~np.eye(n, dtype=bool)]
    return m.scaled(1.0 / off.min())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", type=int, default=20)
    ap.add_argument("--faithful", action="store_true")
    ap.add_argument("--C", type=float, default=100.0)
    ap.add_argument("--out", default="roundtrip.json")
    args = ap.parse_args()

    rows = []
    for seed in range(args.cases):
        t0 = time.perf_counter()
        x = random_metric(1000 + seed, 3 + seed % 3)
        f = optimal_line_embedding_bruteforce(x)
        dmax = f.distortion if args.faithful else 1.0
        params, p = reduction_gadget(x, dmax, 2, args.C)
        g = forward_embedding(f.positions, p)
        ex = extract_line_embedding(g, p, seed=seed)
        same = tuple(ex.line.ordering) in (tuple(f.ordering), tuple(f.ordering[::-1]))
        rows.append({
            "seed": seed, "n": x.n, "optimal": f.distortion,
            "forward": forward_distortion(f.positions, p).distortion,
            "extracted": ex.line.distortion, "ratio": ex.line.distortion / f.distortion,
            "ordering_recovered": same, "product_size": p.size, "D_max": dmax,
            "seconds": time.perf_counter() - t0,
        })
        r = rows[-1]
        print(f"seed {seed:3d} n {x.n} opt {r['optimal']:.4f} extracted {r['extracted']:.4f} "
              f"ratio {r['ratio']:.6f} size {p.size} {r['seconds']:.1f}s")
    worst = max(r["ratio"] for r in rows)
    print(f"recovered {sum(r['ordering_recovered'] for r in rows)}/{len(rows)}, worst ratio {worst:.6f}")
    with open(args.out, "w") as fh:
        json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
