"""Command-line front end: ``embedlab <command> [options]``.

Every command writes its outputs into ``--out-dir`` together with a run
manifest ``manifest.<command>.json``.  ``embedlab replay <manifest>`` re-runs
a stored manifest.  Exit codes: 0 ok, 1 invalid input, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmbedLabError

SEED_ENV = "EMBEDLAB_SEED"


@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int
    argv: list
    inputs: dict = field(default_factory=dict)  # path -> sha256
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0

    def to_json(self) -> dict:
        return {"command": self.command, "params": self.params, "seed": self.seed,
                "argv": self.argv, "inputs": self.inputs, "outputs": self.outputs,
                "wall_time": self.wall_time}


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read(path) -> dict:
    return json.loads(Path(path).read_text())


class _Run:
    """Per-run context: resolves output paths and records inputs and outputs."""

    def __init__(self, args):
        self.args = args
        self.out_dir = Path(args.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(args.command, _params(args), args.seed, list(args.argv))

    def input(self, path) -> dict:
        self.manifest.inputs[str(path)] = _digest(path)
        return _read(path)

    def write(self, name: str, obj) -> Path:
        path = self.out_dir / name
        text = obj if isinstance(obj, str) else json.dumps(obj) + "\n"
        path.write_text(text)
        self.manifest.outputs.append(str(path))
        return path

    def say(self, *parts) -> None:
        if not self.args.quiet:
            print(*parts)


def _params(args) -> dict:
    skip = {"func", "argv"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _load_metric(run, path):
    from .metric import FiniteMetric, validate_metric

    m = FiniteMetric.from_json(run.input(path))
    validate_metric(m)
    return m


# --- commands -------------------------------------------------------------

def cmd_gen_product(run, a):
    from .gadget import MAX_DENSE_POINTS, forward_embedding, reduction_gadget

    x = _load_metric(run, a.metric)
    params, prod = reduction_gadget(x, a.dmax, a.dim, a.C)
    run.write("product.params.json", dict(params.__dict__, size=prod.size))
    run.write("product.sidecar.json", prod.sidecar())
    if prod.size <= MAX_DENSE_POINTS:
        run.write("product.metric.json", prod.metric.to_json())
    if a.line:
        from .line import LineEmbedding

        f = LineEmbedding.from_json(run.input(a.line))
        run.write("product.embedding.json", forward_embedding(f.positions, prod).to_json())
    run.say(f"product size {prod.size} (net {len(prod.net)}, R {params.R}, eps {params.epsilon})")


def cmd_gen_section5(run, a):
    from .reductions import (BETWEENNESS, BetweennessInstance, consistency_check,
                             section5_embedding, section5_report, section5_space,
                             to_non_betweenness)

    t = BetweennessInstance.from_json(run.input(a.instance))
    if t.semantics == BETWEENNESS:
        t = to_non_betweenness(t)
    s = section5_space(t, a.D, a.dim, a.eps, a.R, a.separation, seed=a.seed)
    run.write("section5.metric.json", s.space.to_json())
    run.write("section5.sidecar.json", s.sidecar())
    ordering = _ints(a.ordering) if a.ordering else (consistency_check(t) if a.solve else None)
    if a.solve and ordering is None:
        run.say("inconsistent: no embedding written")
    if ordering is not None:
        e = section5_embedding(s, ordering)
        rep = dict(section5_report(s, e), ordering=list(ordering))
        run.write("section5.embedding.json", e.to_json())
        run.write("section5.report.json", rep)
        run.say(f"distortion {rep['distortion']} kappa {rep['kappa']}")
    run.say(f"size {s.size}")


def cmd_gen_k33(run, a):
    from .counterexamples import K33Config, k33_space

    sp = k33_space(a.n, a.k, a.eps, K33Config(clearance=a.clearance))
    run.write("k33.metric.json", sp.metric.to_json())
    run.write("k33.sidecar.json", sp.sidecar())
    run.write("k33.drawing.json", {"dim": 2, "coords": sp.drawing.tolist()})
    run.say(f"n {sp.n} strip points {sp.m} w {sp.w}")


def cmd_gen_ladder(run, a):
    from .counterexamples import planar_ladder_space

    sp = planar_ladder_space(a.n)
    run.write("ladder.metric.json", sp.metric.to_json())
    run.write("ladder.graph.json", {
        "n": sp.n,
        "pos": {k: sp.pos[k].tolist() for k in sp.metric.labels},
        "edges": [[u, v, float(w)] for u, v, w in sp.graph.edges(data="weight")],
    })
    run.say(f"{sp.metric.n} vertices, {sp.graph.number_of_edges()} edges")


def cmd_gen_graph(run, a):
    from .reductions import branching_graph

    b = branching_graph(a.n)
    key = lambda v: (len(v), sorted(v))  # noqa: E731
    verts = sorted(b.graph, key=key)
    run.write("graph.json", {
        "n": b.n,
        "vertices": [sorted(v) for v in verts],
        "edges": sorted([sorted(sorted(v) for v in e) for e in b.graph.edges()]),
        "subgraphs": {str(i): [sorted(v) for v in sorted(g, key=key)]
                      for i, g in sorted(b.subgraphs.items())},
    })
    run.say(f"{b.graph.number_of_nodes()} vertices, {b.graph.number_of_edges()} edges")


def cmd_distortion(run, a):
    from .metric import EuclideanEmbedding, distortion_of_map

    m = _load_metric(run, a.metric)
    e = EuclideanEmbedding.from_json(run.input(a.embedding), m)
    rep = distortion_of_map(m, e)
    run.write("distortion.json", rep.to_json())
    run.say(f"distortion {rep.distortion}")


def cmd_embed(run, a):
    from .embedder import LocalSearchConfig, embed_rd

    m = _load_metric(run, a.metric)
    seeds = _ints(a.seeds) if a.seeds else [a.seed]
    e, rep = embed_rd(m, a.d, seeds, a.trials, LocalSearchConfig(iters=a.iters))
    run.write("embedding.json", e.to_json())
    run.write("embed.report.json", rep.to_json())
    run.say(f"distortion {rep.distortion} c_achieved {rep.c_achieved}")


def cmd_extract_line(run, a):
    from .gadget import ProductSpace
    from .line import extract_line_embedding
    from .metric import EuclideanEmbedding

    prod = ProductSpace.from_sidecar(run.input(a.sidecar))
    if a.metric:
        n = len(run.input(a.metric)["labels"])
        if n != prod.size:
            raise ValueError(f"metric has {n} points, sidecar describes {prod.size}")
    g = EuclideanEmbedding.from_json(run.input(a.embedding))
    ex = extract_line_embedding(g, prod, seed=a.seed, samples=a.samples)
    out = dict(ex.line.to_json(), ordering=list(map(int, ex.line.ordering)),
               nesting=list(ex.nesting.order), scale=ex.scale, scale_exact=ex.scale_exact,
               error_bound=ex.error_bound)
    run.write("line.json", out)
    run.say("positions", " ".join(repr(float(p)) for p in ex.line.positions))


def _curve_list(obj) -> list:
    if "curves" in obj:
        return obj["curves"]
    return [obj["vertices"]]


def cmd_nesting(run, a):
    from .topology import ClosedPolyline, nesting

    curves = [ClosedPolyline(np.asarray(c, dtype=float)) for c in _curve_list(run.input(a.curves))]
    h = a.h or min(c.diameter for c in curves) / 512
    res = nesting(curves, h)
    run.write("nesting.json", {"order": list(res.order), "flood_agrees": res.flood_agrees})
    run.say("order", " ".join(map(str, res.order)))


def cmd_holes(run, a):
    from .topology import ClosedPolyline, compute_holes

    curves = _curve_list(run.input(a.curve))
    reports = [compute_holes(ClosedPolyline(np.asarray(c, dtype=float)), a.h).to_json()
               for c in curves]
    run.write("holes.json", reports[0] if len(reports) == 1 else {"reports": reports})
    run.say("holes", " ".join(str(len(r["holes"])) for r in reports))


def cmd_reduce_betweenness(run, a):
    from .reductions import BETWEENNESS, BetweennessInstance, consistency_check, to_non_betweenness

    t = BetweennessInstance.from_json(run.input(a.instance))
    if a.check:
        order = consistency_check(t)
        run.write("consistency.json", {"consistent": order is not None,
                                       "ordering": list(order) if order else None})
        if not a.quiet:
            print("inconsistent" if order is None else "consistent " + " ".join(map(str, order)))
    if t.semantics == BETWEENNESS:
        run.write("instance.nonbetweenness.json", to_non_betweenness(t).to_json())


def _k33_from_sidecar(obj):
    from .counterexamples import K33Config, k33_space

    return k33_space(int(obj["n"]), int(obj["k"]), float(obj["eps"]),
                     K33Config(**obj.get("config", {})))


def cmd_certify(run, a):
    from .counterexamples import crossing_certificate
    from .metric import EuclideanEmbedding

    sp = _k33_from_sidecar(run.input(a.sidecar))
    e = EuclideanEmbedding.from_json(run.input(a.embedding))
    pts = _ints(a.points) if a.points else None
    cert = crossing_certificate(sp, e, pts)
    run.write("certificate.json", {"L": cert.L, "crossings": cert.crossings,
                                   "witness": cert.witness, "n": sp.n, "w": sp.w,
                                   "L_over_nw": cert.L / (sp.n * sp.w)})
    run.say(f"L {cert.L} crossings {cert.crossings}")


def cmd_optimal_line(run, a):
    from .line import optimal_line_embedding_bruteforce

    m = _load_metric(run, a.metric)
    f = optimal_line_embedding_bruteforce(m)
    run.write("optimal_line.json", f.to_json())
    run.say(f"distortion {f.distortion}")


def cmd_render(run, a):
    from .svg import render_svg

    obj = run.input(a.input)
    run.write(a.output, render_svg(obj, a.kind))


# --- grammar --------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out-dir", default=".")
    common.add_argument("--quiet", action="store_true")

    p = argparse.ArgumentParser(prog="embedlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    s = add("gen-product", cmd_gen_product, "product of a metric with a sphere net")
    s.add_argument("--metric", required=True)
    s.add_argument("--dmax", type=float, required=True)
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--C", type=float, default=100.0)
    s.add_argument("--line", help="line embedding to push forward into the plane")

    s = add("gen-section5", cmd_gen_section5, "space of a non-betweenness instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--D", type=float, default=1.0)
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--eps", type=float)
    s.add_argument("--R", type=float)
    s.add_argument("--separation", type=float)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--ordering", help="comma separated ordering to embed")
    g.add_argument("--solve", action="store_true", help="embed a consistent ordering if one exists")

    s = add("gen-k33", cmd_gen_k33, "points on a drawing of K_{3,3}")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--clearance", type=float, default=10.0)

    s = add("gen-ladder", cmd_gen_ladder, "planar graph metric with a ladder")
    s.add_argument("--n", type=int, required=True)

    s = add("gen-graph", cmd_gen_graph, "branching graph on 2- and 3-subsets")
    s.add_argument("--n", type=int, required=True)

    s = add("distortion", cmd_distortion, "distortion of an embedding")
    s.add_argument("--metric", required=True)
    s.add_argument("--embedding", required=True)

    s = add("embed", cmd_embed, "embed a metric into R^d")
    s.add_argument("--metric", required=True)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--seeds", help="comma separated seeds (default: --seed)")
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--iters", type=int, default=4000)

    s = add("extract-line", cmd_extract_line, "line embedding from a plane embedding of a product")
    s.add_argument("--metric")
    s.add_argument("--embedding", required=True)
    s.add_argument("--sidecar", required=True)
    s.add_argument("--samples", type=int, default=200_000)

    s = add("nesting", cmd_nesting, "nesting order of disjoint closed curves")
    s.add_argument("--curves", required=True)
    s.add_argument("--h", type=float)

    s = add("holes", cmd_holes, "bounded complementary regions of a closed curve")
    s.add_argument("--curve", required=True)
    s.add_argument("--h", type=float)

    s = add("reduce-betweenness", cmd_reduce_betweenness, "betweenness to non-betweenness")
    s.add_argument("--instance", required=True)
    s.add_argument("--check", action="store_true", help="report whether the instance is consistent")

    s = add("certify", cmd_certify, "crossing lower bound for a plane embedding of the K33 space")
    s.add_argument("--sidecar", required=True)
    s.add_argument("--embedding", required=True)
    s.add_argument("--points", help="comma separated point indices the embedding covers")

    s = add("optimal-line", cmd_optimal_line, "exact optimal line embedding (n <= 10)")
    s.add_argument("--metric", required=True)

    s = add("render", cmd_render, "SVG figure of an artifact")
    s.add_argument("--input", required=True)
    s.add_argument("--kind", required=True)
    s.add_argument("--output", default="figure.svg")

    s = add("replay", None, "re-run a stored manifest")
    s.add_argument("manifest")
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "replay":
        try:
            stored = _read(args.manifest)
            stored = list(stored["argv"]) + ["--seed", str(stored["seed"])]
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            print(f"error: cannot read manifest: {exc}", file=sys.stderr)
            return 1
        return main(stored)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            args.seed = int(env)
        except ValueError:
            print(f"error: {SEED_ENV}={env!r} is not an integer", file=sys.stderr)
            return 2
    args.argv = argv
    start = time.perf_counter()
    try:
        run = _Run(args)
        args.func(run, args)
    except (EmbedLabError, ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    run.manifest.wall_time = time.perf_counter() - start
    path = run.out_dir / f"manifest.{args.command}.json"
    path.write_text(json.dumps(run.manifest.to_json(), indent=1) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
