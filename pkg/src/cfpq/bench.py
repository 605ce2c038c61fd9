"""Query library and multiple-source benchmark scenarios (EBNF vs BNF pipelines)."""

from __future__ import annotations

import csv
import logging
import math
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from . import grammar as gr
from .engine import run
from .graph import Graph, load_edge_list_file
from .rsm import ExtendedRsm, build_rsm, build_rsm_from_bnf, extend_rsm

log = logging.getLogger(__name__)

PLACEHOLDERS = ("a", "b", "c", "d")
CSV_FIELDS = ("scenario", "mode", "chunk_size", "repeat", "millis", "pairs", "descriptors", "gss_nodes", "gss_edges")


@dataclass(frozen=True)
class QueryTemplate:
    name: str
    kind: str  # "cfg" or "rpq"
    text: str  # full grammar for cfg, bare regex for rpq
    binding: dict = field(default_factory=dict)

    def grammar_text(self) -> str:
        return self.text if self.kind == "cfg" else f"S -> {self.text}"


def builtin_queries() -> dict[str, QueryTemplate]:
    return {
        "G1": QueryTemplate("G1", "cfg", "S -> a_r S a | b_r S b | a_r a | b_r b", {"a": "subClassOf", "b": "type"}),
        "G2": QueryTemplate("G2", "cfg", "S -> a_r S a | a", {"a": "subClassOf"}),
        "Geo": QueryTemplate("Geo", "cfg", "S -> a S a_r | a a_r", {"a": "broaderTransitive"}),
        "reg1": QueryTemplate("reg1", "rpq", "(a | b)*"),
        "reg2": QueryTemplate("reg2", "rpq", "a* b*"),
        "reg3": QueryTemplate("reg3", "rpq", "(a | b | c)+"),
        "reg4": QueryTemplate("reg4", "rpq", "(a | b)+ (c | d)+"),
    }


def _rename(r: gr.Regex, mapping: dict) -> gr.Regex:
    if isinstance(r, gr.Sym):
        if r.symbol.is_terminal and r.symbol.name in mapping:
            return gr.Sym(gr.T(mapping[r.symbol.name]))
        return r
    if isinstance(r, (gr.Concat, gr.Union)):
        return type(r)(tuple(_rename(i, mapping) for i in r.items))
    if isinstance(r, (gr.Star, gr.Plus, gr.Optional)):
        return type(r)(_rename(r.child, mapping))
    return r


def most_frequent_labels(graph: Graph, inverse_suffix: str = "_r") -> list[str]:
    """Labels by descending edge count, ties by name; materialized inverses are skipped."""
    stats = graph.label_stats()
    plain = [
        name
        for name in stats
        if not (inverse_suffix and name.endswith(inverse_suffix) and name[: -len(inverse_suffix)] in stats)
    ]
    return sorted(plain, key=lambda name: (-stats[name], name))


def instantiate(
    template: QueryTemplate,
    graph: Graph | None = None,
    binding: dict | None = None,
    inverse_suffix: str = "_r",
) -> gr.EbnfGrammar:
    """Bind placeholder labels and return the grammar.

    Placeholders without an explicit or default binding take the most
    frequent graph labels in order.
    """
    g = gr.parse_grammar_text(template.grammar_text())
    used = [p for p in PLACEHOLDERS if p in g.terminals() or p + "_r" in g.terminals()]
    bound = {**template.binding, **(binding or {})}
    if graph is not None:
        free = [lab for lab in most_frequent_labels(graph, inverse_suffix) if lab not in bound.values()]
        for p in used:
            if p not in bound and free:
                bound[p] = free.pop(0)
    missing = [p for p in used if p not in bound]
    if missing:
        log.warning("query %s: placeholders %s left unbound", template.name, missing)
    mapping = {}
    for p in used:
        label = bound.get(p, p)
        mapping[p] = label
        mapping[p + "_r"] = label + inverse_suffix
    productions = {lhs: _rename(body, mapping) for lhs, body in g.productions.items()}
    return gr.EbnfGrammar(productions, g.start)


def compile_query(g: gr.EbnfGrammar, mode: str = "ebnf") -> ExtendedRsm:
    """Grammar to extended RSM through the EBNF (``ebnf``) or BNF (``bnf``) pipeline."""
    if mode in ("ebnf", "ebnf-rsm"):
        return extend_rsm(build_rsm(g))
    if mode in ("bnf", "bnf-rsm"):
        return extend_rsm(build_rsm_from_bnf(gr.ebnf_to_bnf(g)))
    raise ValueError(f"unknown mode {mode!r}")


def start_fraction(vertex_count: int) -> float:
    if vertex_count < 10_000:
        return 1.0
    if vertex_count <= 100_000:
        return 0.1
    return 0.01


class Chunk(NamedTuple):
    size: int
    vertices: tuple


def chunk_starts(graph: Graph | int, sizes: Iterable[int] = (1, 10, 100), seed: int = 0, fraction_rule=start_fraction) -> list[Chunk]:
    """Seeded random start sets: one permutation of the selected vertices, cut into
    consecutive chunks for each requested size."""
    sizes = list(sizes)
    if not sizes:
        raise ValueError("at least one chunk size is required")
    n = graph if isinstance(graph, int) else graph.vertex_count
    order = list(range(n))
    random.Random(seed).shuffle(order)
    selected = order[: max(1, round(n * fraction_rule(n)))] if n else []
    return [Chunk(size, tuple(selected[i : i + size])) for size in sizes for i in range(0, len(selected), size)]


@dataclass
class Scenario:
    name: str
    graph: Graph
    grammar: gr.EbnfGrammar
    chunks: list
    modes: tuple = ("ebnf",)
    repeats: int = 1


class RunRecord(NamedTuple):
    scenario: str
    mode: str
    chunk_size: int
    chunk_index: int
    repeat: int
    millis: float
    pairs: int
    descriptors: int
    gss_nodes: int
    gss_edges: int
    pair_set: frozenset = frozenset()

    def csv_row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_FIELDS}


def _timed_run(args):
    name, mode, rsm, graph, chunk_index, chunk, repeat = args
    t0 = time.perf_counter()
    result = run(rsm, graph, chunk.vertices)
    millis = (time.perf_counter() - t0) * 1000.0
    d = result.diagnostics
    pairs = frozenset(result.pairs())
    return RunRecord(
        name, mode, chunk.size, chunk_index, repeat, millis, len(pairs),
        d["descriptor_count"], d["gss_node_count"], d["gss_edge_count"], pairs,
    )


def run_scenario(s: Scenario, jobs: int = 1) -> list[RunRecord]:
    """One record per chunk, repeat and mode."""
    missing = sorted(t for t in s.grammar.terminals() if s.graph.label_id(t) is None)
    if missing:
        log.warning("scenario %s: labels absent from graph: %s", s.name, ", ".join(missing))
    tasks = []
    for mode in s.modes:
        rsm = compile_query(s.grammar, mode)
        for index, chunk in enumerate(s.chunks):
            for repeat in range(s.repeats):
                tasks.append((s.name, mode, rsm, s.graph, index, chunk, repeat))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_timed_run, tasks))
    else:
        records = [_timed_run(t) for t in tasks]
    by_chunk: dict[int, set] = {}
    for r in records:
        by_chunk.setdefault(r.chunk_index, set()).add(r.pair_set)
    for index, sets in by_chunk.items():
        if len(sets) > 1:
            log.error("scenario %s chunk %d: modes disagree on reachable pairs", s.name, index)
    return records


def summarize(records: Iterable[RunRecord]) -> list[dict]:
    """Mean timing and counts per (scenario, mode, chunk size)."""
    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.scenario, r.mode, r.chunk_size), []).append(r)
    rows = []
    for (scenario, mode, size), rs in groups.items():
        rows.append({
            "scenario": scenario,
            "mode": mode,
            "chunk_size": size,
            "repeat": "mean",
            "millis": sum(r.millis for r in rs) / len(rs),
            "pairs": sum(r.pairs for r in rs) / len(rs),
            "descriptors": sum(r.descriptors for r in rs) / len(rs),
            "gss_nodes": sum(r.gss_nodes for r in rs) / len(rs),
            "gss_edges": sum(r.gss_edges for r in rs) / len(rs),
        })
    return rows


@dataclass
class SpeedupReport:
    rows: list  # (scenario, chunk_size, bnf_millis / ebnf_millis)
    geometric_mean: float


def speedup_report(records: Iterable[RunRecord], slow: str = "bnf", fast: str = "ebnf") -> SpeedupReport:
    """Ratio of mean BNF time to mean EBNF time per scenario and chunk size."""
    means: dict[tuple, dict[str, list[float]]] = {}
    for r in records:
        means.setdefault((r.scenario, r.chunk_size), {}).setdefault(r.mode, []).append(r.millis)
    rows = []
    for key in sorted(means, key=lambda k: (k[0], k[1])):
        modes = means[key]
        if slow not in modes or fast not in modes:
            raise ValueError(f"scenario {key[0]} chunk size {key[1]} lacks a {slow}/{fast} pair")
        slow_t = sum(modes[slow]) / len(modes[slow])
        fast_t = sum(modes[fast]) / len(modes[fast])
        rows.append((key[0], key[1], slow_t / fast_t if fast_t > 0 else math.inf))
    finite = [r[2] for r in rows if 0 < r[2] < math.inf]
    geo = math.exp(sum(math.log(x) for x in finite) / len(finite)) if finite else math.nan
    return SpeedupReport(rows, geo)


def write_csv(stream, records: Iterable[RunRecord], summary: bool = True) -> None:
    records = list(records)
    writer = csv.DictWriter(stream, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        row = r.csv_row()
        row["millis"] = f"{r.millis:.3f}"
        writer.writerow(row)
    if summary:
        for row in summarize(records):
            row = {k: (f"{v:.3f}" if isinstance(v, float) else v) for k, v in row.items()}
            writer.writerow(row)


# scenario files ----------------------------------------------------------------


class ScenarioError(ValueError):
    pass


def parse_scenario_file(path: str, seed_override: int | None = None) -> Scenario:
    """Read a ``key = value`` scenario description.

    Keys: ``name``, ``graph``, ``query`` or ``grammar``, ``add_inverse``,
    ``chunk_sizes``, ``chunks`` (explicit vertex names, ``;`` between
    chunks), ``seed``, ``mode`` (``ebnf``, ``bnf`` or ``both``), ``repeats``.
    Relative paths resolve against the scenario file's directory.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    conf: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ScenarioError(f"{path}:{line_no}: expected 'key = value'")
        key, value = line.split("=", 1)
        conf[key.strip()] = value.strip()

    base = os.path.dirname(os.path.abspath(path))

    def resolve(p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(base, p)

    if "graph" not in conf:
        raise ScenarioError(f"{path}: 'graph' is required")
    suffix = conf.get("add_inverse")
    try:
        graph = load_edge_list_file(resolve(conf["graph"]), add_inverse=bool(suffix), inverse_suffix=suffix or "_r")
    except OSError as exc:
        raise ScenarioError(f"cannot read graph: {exc}") from exc

    if "grammar" in conf:
        try:
            with open(resolve(conf["grammar"]), encoding="utf-8") as fh:
                grammar = gr.parse_grammar_text(fh.read())
        except OSError as exc:
            raise ScenarioError(f"cannot read grammar: {exc}") from exc
    elif "query" in conf:
        queries = builtin_queries()
        if conf["query"] not in queries:
            raise ScenarioError(f"unknown query {conf['query']!r}")
        grammar = instantiate(queries[conf["query"]], graph, inverse_suffix=suffix or "_r")
    else:
        raise ScenarioError(f"{path}: one of 'query' or 'grammar' is required")

    seed = seed_override if seed_override is not None else int(conf.get("seed", "0"))
    if "chunks" in conf:
        chunks = []
        for group in conf["chunks"].split(";"):
            names = [n.strip() for n in group.split(",") if n.strip()]
            unknown = [n for n in names if not graph.has_vertex(n)]
            if unknown:
                raise ScenarioError(f"unknown vertices in chunks: {unknown}")
            chunks.append(Chunk(len(names), tuple(graph.vertex_id(n) for n in names)))
    else:
        sizes = [int(x) for x in conf.get("chunk_sizes", "1, 10, 100").split(",")]
        chunks = chunk_starts(graph, sizes, seed)

    mode = conf.get("mode", "ebnf")
    modes = ("ebnf", "bnf") if mode == "both" else (mode,)
    if any(m not in ("ebnf", "bnf") for m in modes):
        raise ScenarioError(f"unknown mode {mode!r}")
    name = conf.get("name", os.path.splitext(os.path.basename(path))[0])
    return Scenario(name, graph, grammar, chunks, modes, int(conf.get("repeats", "1")))
