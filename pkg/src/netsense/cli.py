"""Command line: ``netsense {ingest,anonymize,analyze,gen,bench}``.

Exit status is 0 on success, 1 on a data error (the module's message is
printed verbatim to stderr) and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import __version__, anonymize, edges, kernels, synth
from .analytics import all_properties
from .errors import NetsenseError
from .pcap import ingest_pcap
from .report import CACHE_HINTS, RunReport, write_distributions


def _edge_format(path: Path, flag: str | None) -> str:
    if flag:
        return flag
    return "csv" if path.suffix.lower() == ".csv" else "binary"


def _input_format(path: Path) -> str:
    with open(path, "rb") as fh:
        return "binary" if fh.read(4) == edges.BINARY_MAGIC else "csv"


def cmd_ingest(args) -> int:
    batch, stats = ingest_pcap(args.pcap)
    vertices, table = edges.build(batch)
    if args.aggregate:
        table = edges.aggregate(table)
    out = Path(args.out)
    edges.write_edges(table, vertices, out, _edge_format(out, args.format))
    print(json.dumps(stats.to_dict(), indent=2))
    return 0


def cmd_anonymize(args) -> int:
    vertices, table = edges.read_edges(args.edges)
    amap = anonymize.make_permutation(len(vertices), args.seed, args.rounds)
    new_table, new_vertices = anonymize.apply(amap, table, vertices)
    out = Path(args.out)
    edges.write_edges(new_table, new_vertices, out, _edge_format(out, args.format))
    if args.key_out:
        anonymize.write_key(amap, vertices, args.key_out)
    return 0


def _analyze_once(args, timings: dict):
    t_start = time.perf_counter()
    t0 = time.perf_counter()
    vertices, table = edges.read_edges(args.edges)
    timings["load"] = time.perf_counter() - t0
    if args.seed is not None:
        t0 = time.perf_counter()
        amap = anonymize.make_permutation(len(vertices), args.seed, args.rounds)
        table, vertices = anonymize.apply(amap, table, vertices)
        timings["anonymize"] = time.perf_counter() - t0
    query_times: dict = {}
    props = all_properties(table, workers=args.threads, timings=query_times)
    timings["queries"] = query_times
    timings["total"] = time.perf_counter() - t_start
    return vertices, table, props


def cmd_analyze(args) -> int:
    timings: dict = {}
    vertices, table, props = _analyze_once(args, timings)
    if args.oracle:
        from .oracle import oracle_all_properties

        expected = oracle_all_properties(table)
        if expected != props:
            print("oracle mismatch: " + json.dumps({"oracle": expected.scalars(),
                                                    "analytics": props.scalars()}), file=sys.stderr)
            return 1
    path = Path(args.edges)
    report = RunReport(str(path), _input_format(path), path.stat().st_size, props,
                       cache_hint=args.cache_hint, seed=args.seed,
                       rounds=args.rounds if args.seed is not None else None,
                       timings=timings)
    if args.distributions:
        report.distributions = write_distributions(props, vertices, args.distributions)
    text = report.to_json(include_timings=not args.no_timings)
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_gen(args, parser) -> int:
    try:
        cfg = synth.SynthConfig(args.packets, args.vertices, args.model, args.exponent, args.seed,
                                args.invalid_fraction)
    except ValueError as exc:
        parser.error(str(exc))
    batch, truth = synth.generate(cfg)
    out = Path(args.out)
    if args.pcap:
        synth.write_pcap(batch, out, cfg.invalid_fraction, cfg.seed, args.byteorder)
    else:
        vertices, table = edges.build(batch)
        if args.aggregate:
            table = edges.aggregate(table)
        edges.write_edges(table, vertices, out, _edge_format(out, args.format))
    text = json.dumps({"config": asdict(cfg), "properties": truth.scalars(),
                       "unique_ips": asdict(truth.unique_ips)}, indent=2) + "\n"
    if args.truth:
        Path(args.truth).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_bench(args) -> int:
    columns = ["run", "cache_hint", "load_s", "queries_s", "total_s"]
    print("  ".join(f"{c:>10}" for c in columns))
    first = None
    for run in range(1, args.repeats + 1):
        timings: dict = {}
        _, _, props = _analyze_once(args, timings)
        if first is None:
            first = props
        elif props != first:
            print(f"run {run}: properties differ from run 1", file=sys.stderr)
            return 1
        q = sum(timings["queries"].values())
        row = [str(run), args.cache_hint or "-", f"{timings['load']:.4f}", f"{q:.4f}",
               f"{timings['total']:.4f}"]
        print("  ".join(f"{c:>10}" for c in row))
    return 0


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netsense", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"netsense {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fmt = dict(choices=("csv", "binary"), default=None,
               help="output edge format (default: csv for *.csv, else binary)")

    p = sub.add_parser("ingest", help="parse a pcap file into an edge file")
    p.add_argument("pcap")
    p.add_argument("out")
    p.add_argument("--format", **fmt)
    p.add_argument("--aggregate", action="store_true", help="store one row per link")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("anonymize", help="relabel vertices with a seeded random permutation")
    p.add_argument("edges")
    p.add_argument("out")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rounds", type=_positive, default=1)
    p.add_argument("--key-out", help="also write the de-anonymization key here")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_anonymize)

    def analysis_flags(p):
        p.add_argument("edges")
        p.add_argument("--threads", type=_positive, default=kernels.default_workers())
        p.add_argument("--cache-hint", choices=CACHE_HINTS, default=None)
        p.add_argument("--seed", type=int, default=None, help="anonymize in memory before analysis")
        p.add_argument("--rounds", type=_positive, default=1)

    p = sub.add_parser("analyze", help="compute the traffic-matrix properties of an edge file")
    analysis_flags(p)
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.add_argument("--distributions", help="directory for the per-vertex and per-link CSV files")
    p.add_argument("--no-timings", action="store_true", help="omit wall times from the report")
    p.add_argument("--oracle", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gen", help="generate synthetic traffic")
    p.add_argument("out")
    p.add_argument("--packets", type=_non_negative, required=True)
    p.add_argument("--vertices", type=_non_negative, required=True)
    p.add_argument("--model", choices=synth.MODELS, default="uniform")
    p.add_argument("--exponent", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pcap", action="store_true", help="write a pcap file instead of an edge file")
    p.add_argument("--invalid-fraction", type=float, default=0.0)
    p.add_argument("--byteorder", choices=("little", "big"), default="little")
    p.add_argument("--aggregate", action="store_true")
    p.add_argument("--format", **fmt)
    p.add_argument("--truth", help="write the ground-truth JSON here instead of stdout")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="time repeated analysis runs")
    analysis_flags(p)
    p.add_argument("--repeats", type=_positive, default=3)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.func is cmd_gen:
            return cmd_gen(args, parser)
        return args.func(args)
    except (NetsenseError, OSError) as exc:
        print(f"netsense {args.command}: {exc}", file=sys.stderr)
        return 1
