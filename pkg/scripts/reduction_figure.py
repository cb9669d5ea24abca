"""Build the punctured-layer space for a consistent instance, embed it along a
consistent ordering, recover the ordering from the layer curves and draw it.

    python3 scripts/reduction_figure.py --out-dir figs
"""

import argparse
import json
from pathlib import Path

from embedlab.reductions import (FOUR_ELEMENT_TRIPLES, NON_BETWEENNESS, BetweennessInstance,
                                 consistency_check, recover_ordering, section5_embedding,
                                 section5_report, section5_space)
from embedlab.svg import render_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--D", type=float, default=1.0)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--R", type=float, default=12.0)
    ap.add_argument("--out-dir", default=".")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t = BetweennessInstance(4, FOUR_ELEMENT_TRIPLES, NON_BETWEENNESS)
    order = consistency_check(t)
    s = section5_space(t, D=args.D, d=2, eps=args.eps, R=args.R)
    e = section5_embedding(s, order)
    rep = dict(section5_report(s, e), ordering=list(order), recovered=list(recover_ordering(s, e)))
    print(json.dumps(rep, indent=1))
    (out / "section5.report.json").write_text(json.dumps(rep, indent=1))
    curves = [e.coords[s.layer_points(layer)].tolist() for layer in range(1, t.n + 1)]
    segments = [list(ends) for ends in s.path_ends]
    (out / "section5.svg").write_text(
        render_svg({"coords": e.coords.tolist(), "segments": segments}, "embedding2d"))
    (out / "section5.curves.svg").write_text(render_svg({"curves": curves}, "curves+holes"))


if __name__ == "__main__":
    main()
