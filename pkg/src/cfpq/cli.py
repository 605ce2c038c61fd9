"""Command-line front end: ``cfpq reach|paths|sppf|grammar-inspect|bench|stats``.

Exit codes: 0 success, 1 input or parse error, 2 unknown vertex, 3 no derivation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import bench
from .engine import GllEngine, run
from .grammar import GrammarError, format_bnf, ebnf_to_bnf, parse_grammar_text
from .graph import GraphParseError, load_edge_list_file
from .results import NoDerivationError, build_pair_sppf, enumerate_paths, sppf_to_dot
from .rsm import rsm_to_dot

EXIT_OK, EXIT_INPUT, EXIT_VERTEX, EXIT_NO_DERIVATION = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fail(code: int, message: str):
    raise CliError(code, message)


def _load_graph(args):
    suffix = getattr(args, "add_inverse", None)
    try:
        return load_edge_list_file(args.graph, add_inverse=bool(suffix), inverse_suffix=suffix or "_r")
    except OSError as exc:
        _fail(EXIT_INPUT, f"cannot read graph: {exc}")
    except GraphParseError as exc:
        _fail(EXIT_INPUT, f"{args.graph}: {exc}")


def _load_grammar(args, graph=None):
    if args.grammar:
        try:
            with open(args.grammar, encoding="utf-8") as fh:
                return parse_grammar_text(fh.read())
        except OSError as exc:
            _fail(EXIT_INPUT, f"cannot read grammar: {exc}")
        except GrammarError as exc:
            _fail(EXIT_INPUT, f"{args.grammar}: {exc}")
    queries = bench.builtin_queries()
    if args.query not in queries:
        _fail(EXIT_INPUT, f"unknown query {args.query!r}; choose from {', '.join(queries)}")
    suffix = getattr(args, "add_inverse", None) or "_r"
    return bench.instantiate(queries[args.query], graph, inverse_suffix=suffix)


def _vertex(graph, name: str) -> int:
    if not graph.has_vertex(name):
        _fail(EXIT_VERTEX, f"unknown vertex {name!r}")
    return graph.vertex_id(name)


def _parse_starts(graph, starts: str | None) -> list[int]:
    if starts is None:
        return list(range(graph.vertex_count))
    if os.path.isfile(starts):
        with open(starts, encoding="utf-8") as fh:
            text = fh.read()
        names = [n for line in text.splitlines() if not line.lstrip().startswith("#") for n in line.replace(",", " ").split()]
    else:
        names = [n.strip() for n in starts.split(",") if n.strip()]
    return [_vertex(graph, n) for n in names]


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", encoding="utf-8", newline=""), True
    except OSError as exc:
        _fail(EXIT_INPUT, f"cannot write {path}: {exc}")


def _query_setup(args):
    graph = _load_graph(args)
    grammar = _load_grammar(args, graph)
    return graph, grammar, bench.compile_query(grammar, args.mode)


# subcommands -----------------------------------------------------------------


def cmd_reach(args) -> int:
    graph, _, rsm = _query_setup(args)
    starts = _parse_starts(graph, args.starts)
    names = graph.vertex_names
    out, close = _open_out(args.out)
    try:
        # one source at a time, in name order, so output is sorted and streamed
        found: list[tuple[int, int]] = []
        engine = GllEngine(rsm, graph, on_accept=lambda u, t: found.append((u, t)))
        for s in sorted(set(starts), key=lambda v: names[v]):
            engine.add_start(s)
            engine.run()
            # a source's pairs are complete once the worklist drains
            for t in sorted(names[t] for u, t in found if u == s):
                out.write(f"{names[s]},{t}\n")
            out.flush()
            found.clear()
    finally:
        if close:
            out.close()
    return EXIT_OK


def _pair_setup(args):
    graph, _, rsm = _query_setup(args)
    source, target = _vertex(graph, args.source), _vertex(graph, args.target)
    return graph, run(rsm, graph, [source]), source, target


def cmd_paths(args) -> int:
    graph, qr, source, target = _pair_setup(args)
    paths = enumerate_paths(qr, source, target, max_paths=args.max_paths, max_length=args.max_length)
    if not paths:
        print(f"no path from {args.source} to {args.target} within length {args.max_length}", file=sys.stderr)
    for p in paths:
        print(graph.format_path(p))
    return EXIT_OK


def cmd_sppf(args) -> int:
    _, qr, source, target = _pair_setup(args)
    try:
        sppf = build_pair_sppf(qr, source, target)
    except NoDerivationError:
        _fail(EXIT_NO_DERIVATION, f"no derivation for {args.source} -> {args.target}")
    out, close = _open_out(args.out)
    try:
        out.write(sppf_to_dot(sppf, qr))
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_grammar_inspect(args) -> int:
    try:
        with open(args.grammar, encoding="utf-8") as fh:
            grammar = parse_grammar_text(fh.read())
    except OSError as exc:
        _fail(EXIT_INPUT, f"cannot read grammar: {exc}")
    except GrammarError as exc:
        _fail(EXIT_INPUT, f"{args.grammar}: {exc}")
    rsm = bench.compile_query(grammar, args.mode)
    if not args.extended:
        rsm = rsm.inner
    if args.show_bnf:
        print(format_bnf(ebnf_to_bnf(grammar)), file=sys.stderr)
    out, close = _open_out(args.out)
    try:
        out.write(rsm_to_dot(rsm))
    finally:
        if close:
            out.close()
    print(f"boxes={len(rsm.boxes)} states={rsm.state_count}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    seed = os.environ.get("CFPQ_SEED")
    try:
        seed_override = int(seed) if seed is not None else None
    except ValueError:
        _fail(EXIT_INPUT, f"CFPQ_SEED must be an integer, got {seed!r}")
    records = []
    try:
        for path in args.scenario:
            records += bench.run_scenario(bench.parse_scenario_file(path, seed_override), jobs=args.jobs)
    except (bench.ScenarioError, GrammarError, GraphParseError) as exc:
        _fail(EXIT_INPUT, str(exc))
    out, close = _open_out(args.out)
    try:
        bench.write_csv(out, records)
    finally:
        if close:
            out.close()
    for row in bench.summarize(records):
        print(
            f"{row['scenario']} {row['mode']} chunk={row['chunk_size']} "
            f"mean_ms={row['millis']:.3f} pairs={row['pairs']:g} descriptors={row['descriptors']:g}",
            file=sys.stderr,
        )
    if len({r.mode for r in records}) > 1:
        report = bench.speedup_report(records)
        print("scenario,chunk_size,bnf_over_ebnf", file=sys.stderr)
        for scenario, size, ratio in report.rows:
            print(f"{scenario},{size},{ratio:.3f}", file=sys.stderr)
        print(f"geometric_mean,,{report.geometric_mean:.3f}", file=sys.stderr)
    return EXIT_OK


def cmd_stats(args) -> int:
    graph = _load_graph(args)
    print(json.dumps(graph.stats(), sort_keys=True))
    return EXIT_OK


# parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfpq", description="Context-free path queries over edge-list graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_flags(p):
        p.add_argument("--graph", required=True, help="edge-list file: 'source label target' per line")
        p.add_argument("--add-inverse", metavar="SUFFIX", help="also add reversed edges labelled <label>SUFFIX")

    def query_flags(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--grammar", help="grammar file")
        group.add_argument("--query", help="built-in query name (G1, G2, Geo, reg1..reg4)")
        p.add_argument("--mode", choices=("ebnf", "bnf"), default="ebnf", help="RSM construction pipeline")

    p = sub.add_parser("reach", help="reachable pairs as CSV")
    graph_flags(p)
    query_flags(p)
    p.add_argument("--starts", help="comma-separated vertex names or a file of names (default: all vertices)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_reach)

    for name, func, help_text in (("paths", cmd_paths, "witness paths for one pair"), ("sppf", cmd_sppf, "SPPF of one pair as DOT")):
        p = sub.add_parser(name, help=help_text)
        graph_flags(p)
        query_flags(p)
        p.add_argument("--source", required=True)
        p.add_argument("--target", required=True)
        if name == "paths":
            p.add_argument("--max-paths", type=int, default=10)
            p.add_argument("--max-length", type=int, default=20)
        else:
            p.add_argument("--out", help="DOT file (default: stdout)")
        p.set_defaults(func=func)

    p = sub.add_parser("grammar-inspect", help="render the RSM of a grammar as DOT")
    p.add_argument("--grammar", required=True)
    p.add_argument("--mode", choices=("ebnf", "bnf"), default="ebnf")
    p.add_argument("--extended", action="store_true", help="include the synthetic start box")
    p.add_argument("--show-bnf", action="store_true", help="print the BNF lowering to standard error")
    p.add_argument("--out", help="DOT file (default: stdout)")
    p.set_defaults(func=cmd_grammar_inspect)

    p = sub.add_parser("bench", help="run benchmark scenarios")
    p.add_argument("--scenario", required=True, action="append", help="scenario file (repeatable)")
    p.add_argument("--out", help="CSV file (default: stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="graph statistics as one JSON line")
    graph_flags(p)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"cfpq: {exc}", file=sys.stderr)
        return exc.code
    except BrokenPipeError:
        # downstream closed early (e.g. `| head`)
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
