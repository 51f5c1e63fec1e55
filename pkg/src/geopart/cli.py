"""Command-line interface: generate, partition, evaluate, compare."""

from __future__ import annotations

import argparse
import json
import sys
import time

from .baselines import rcb_partition, sfc_partition
from .fileio import (
    MetisParseError,
    load_metis_graph,
    read_partition,
    write_coords,
    write_metis_graph,
    write_partition,
)
from .generators import generate_grid_mesh, generate_random_geometric
from .geometry import GeometryError
from .graph import GraphError
from .kmeans import KMeansSettings, balanced_kmeans
from .metrics import MetricsReport, evaluate, geometric_mean, harmonic_mean_diameters
from .ranksim import RankWorld

ALGORITHMS = ("geographer", "rcb", "sfc")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geopart", description="Geometric graph partitioning toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic graph + coordinates")
    g.add_argument("--kind", choices=("rgg", "grid"), default="rgg")
    g.add_argument("--n", type=int, default=1000, help="vertex count (rgg)")
    g.add_argument("--dim", type=int, default=2, choices=(2, 3))
    g.add_argument("--deg", type=float, default=12.0, help="average degree target (rgg)")
    g.add_argument("--side", type=int, default=None, help="vertices per axis (grid)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output prefix: writes .graph and .xyz")
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("partition", help="partition a graph into k blocks")
    p.add_argument("--graph", required=True)
    p.add_argument("--coords", required=True)
    p.add_argument("--algo", choices=ALGORITHMS, default="geographer")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.03)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=int, default=1, help="simulated rank count")
    p.add_argument("--out", required=True, help="partition file to write")
    p.add_argument("--report", default=None, help="also write a metrics report (JSON)")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--max-balance-iter", type=int, default=20)
    p.add_argument("--init-sample", type=int, default=100)
    p.add_argument("--no-erosion", action="store_true")
    p.add_argument("--sfc-depth", type=int, default=None)
    p.set_defaults(func=cmd_partition)

    e = sub.add_parser("evaluate", help="score an existing partition")
    e.add_argument("--graph", required=True)
    e.add_argument("--coords", default=None, help="optional; metrics are combinatorial")
    e.add_argument("--partition", required=True)
    e.add_argument("--report", default=None, help="write the machine-readable report here")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare", help="run several algorithms and aggregate ratios")
    c.add_argument("--graph", action="append", required=True)
    c.add_argument("--coords", action="append", required=True)
    c.add_argument("--algos", default="geographer,rcb,sfc")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--epsilon", type=float, default=0.03)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--p", type=int, default=1)
    c.add_argument("--report", default=None, help="write per-instance records (JSON)")
    c.set_defaults(func=cmd_compare)
    return parser


def cmd_generate(args) -> int:
    if args.kind == "grid":
        if args.side is None:
            raise ValueError("--side is required for --kind grid")
        graph = generate_grid_mesh(args.side, args.dim)
    else:
        graph = generate_random_geometric(args.n, args.dim, args.deg, args.seed)
    write_metis_graph(graph, args.out + ".graph")
    write_coords(graph.coords, args.out + ".xyz")
    print(
        f"generated {args.kind}: n={graph.n} m={graph.m} dim={graph.dim} "
        f"-> {args.out}.graph, {args.out}.xyz"
    )
    return 0


def _run_algorithm(graph, algo, args):
    if algo == "geographer":
        settings = KMeansSettings(
            k=args.k,
            epsilon=args.epsilon,
            seed=args.seed,
            max_iter=getattr(args, "max_iter", 50),
            max_balance_iter=getattr(args, "max_balance_iter", 20),
            init_sample=getattr(args, "init_sample", 100),
            erosion=not getattr(args, "no_erosion", False),
            sfc_depth=getattr(args, "sfc_depth", None),
        )
        world = RankWorld.from_graph(graph, args.p)
        return balanced_kmeans(graph, settings, world)
    if algo == "rcb":
        return rcb_partition(graph, args.k, args.epsilon)
    if algo == "sfc":
        return sfc_partition(graph, args.k, epsilon=args.epsilon)
    raise ValueError(f"unknown algorithm {algo!r}")


def cmd_partition(args) -> int:
    graph = load_metis_graph(args.graph, args.coords)
    t0 = time.perf_counter()
    partition = _run_algorithm(graph, args.algo, args)
    elapsed = time.perf_counter() - t0
    write_partition(partition, args.out)
    report = evaluate(graph, partition)
    if args.report:
        with open(args.report, "w", encoding="ascii") as f:
            f.write(report.to_json() + "\n")
    status = "balance-FAILED" if partition.balance_failed else "balanced"
    print(
        f"algo={args.algo} k={args.k} n={graph.n} imbalance={report.imbalance:.4f} "
        f"cut={report.edge_cut:g} comm_total={report.comm_total:g} "
        f"{status} time={elapsed:.2f}s out={args.out}"
    )
    return 3 if partition.balance_failed else 0


def cmd_evaluate(args) -> int:
    graph = load_metis_graph(args.graph, args.coords)
    partition = read_partition(args.partition, expect_n=graph.n)
    report = evaluate(graph, partition)
    print(report.to_text())
    if args.report:
        with open(args.report, "w", encoding="ascii") as f:
            f.write(report.to_json() + "\n")
    return 0


_RATIO_METRICS = ("edge_cut", "comm_max", "comm_total", "harmonic_diameter")


def cmd_compare(args) -> int:
    if len(args.graph) != len(args.coords):
        raise ValueError("each --graph needs a matching --coords")
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    for a in algos:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    if "geographer" not in algos:
        raise ValueError("compare needs 'geographer' as the ratio baseline")

    records = []
    for gi, (gpath, cpath) in enumerate(zip(args.graph, args.coords)):
        graph = load_metis_graph(gpath, cpath)
        for algo in algos:
            entry = {"input": gpath, "algorithm": algo}
            try:
                partition = _run_algorithm(graph, algo, args)
                report = evaluate(graph, partition)
                entry.update(
                    edge_cut=report.edge_cut,
                    comm_max=report.comm_max,
                    comm_total=report.comm_total,
                    harmonic_diameter=report.harmonic_diameter,
                    imbalance=report.imbalance,
                    balance_failed=partition.balance_failed,
                )
            except Exception as e:  # a sub-run failure leaves a hole, not an abort
                entry["error"] = str(e)
            records.append(entry)

    base = {
        r["input"]: r for r in records if r["algorithm"] == "geographer" and "error" not in r
    }
    table = {}
    for algo in algos:
        table[algo] = {}
        for metric in _RATIO_METRICS:
            ratios = []
            for r in records:
                if r["algorithm"] != algo or "error" in r:
                    continue
                b = base.get(r["input"])
                if b is None or not b[metric] > 0:
                    continue
                ratios.append(r[metric] / b[metric])
            if not ratios:
                table[algo][metric] = None
            elif metric == "harmonic_diameter":
                table[algo][metric] = harmonic_mean_diameters(ratios)
            else:
                table[algo][metric] = geometric_mean(ratios)

    width = max(len(a) for a in algos) + 2
    print(f"metric ratios vs geographer over {len(args.graph)} input(s), k={args.k}")
    header = "algorithm".ljust(width) + "".join(m.rjust(18) for m in _RATIO_METRICS)
    print(header)
    for algo in algos:
        row = algo.ljust(width)
        for metric in _RATIO_METRICS:
            v = table[algo][metric]
            row += ("-" if v is None else f"{v:.4f}").rjust(18)
        print(row)
    if args.report:
        with open(args.report, "w", encoding="ascii") as f:
            json.dump({"records": records, "ratios": table}, f, indent=2)
            f.write("\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MetisParseError, GraphError, GeometryError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
