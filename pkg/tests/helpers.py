"""Shared fixtures data and seeded instance generators for the test suite."""

from __future__ import annotations

import random

from cfpq.grammar import N, T, parse_grammar_text, parse_regex
from cfpq.graph import Graph, load_edge_list
from cfpq.rsm import ParserRsmBuilder, extend_rsm, build_rsm, rsm_from_parts

WORKED_GRAPH_TEXT = "v0 a v0\nv0 b v1\nv1 b v0\n"
WORKED_GRAMMAR_TEXT = "S -> a b | a S b"


def worked_graph() -> Graph:
    return load_edge_list(WORKED_GRAPH_TEXT)


def worked_grammar():
    return parse_grammar_text(WORKED_GRAMMAR_TEXT)


def worked_rsm():
    """Explicit parts with the state ids q0..q6 of the worked example."""
    builder = ParserRsmBuilder("S", extended_states=(4, 5, 6)).box(
        "S",
        range(4),
        0,
        [3],
        [(0, T("a"), 1), (1, N("S"), 2), (1, T("b"), 3), (2, T("b"), 3)],
    )
    return rsm_from_parts(builder)


def compile_text(text: str):
    return extend_rsm(build_rsm(parse_grammar_text(text)))


def string_graph(word) -> Graph:
    """Linear graph 0 -w0-> 1 -w1-> ... spelling ``word``."""
    return Graph.from_edges([(i, a, i + 1) for i, a in enumerate(word)], vertices=range(len(word) + 1))


# grammar families over labels a and b
CFG_FAMILIES = {
    "anbn": "S -> a b | a S b",
    "balanced": "S -> a S b S | eps",
    "g2_shape": "S -> b S a | a",
    "eps_admitting": "S -> eps | a S b | b",
}

RPQ_QUERIES = {
    "reg1": "(a | b)*",
    "reg2": "a* b*",
    "reg3": "(a | b | c)+",
    "reg4": "(a | b)+ (c | d)+",
}


def random_graph(rng: random.Random, labels=("a", "b"), max_vertices=6, max_edges=10) -> Graph:
    n = rng.randint(1, max_vertices)
    m = rng.randint(0, max_edges)
    edges = [(rng.randrange(n), rng.choice(labels), rng.randrange(n)) for _ in range(m)]
    return Graph.from_edges(edges, vertices=range(n))


def cfg_instances(count: int, seed: int = 2024):
    """``count`` seeded (graph, family name, grammar text) triples, families in rotation."""
    rng = random.Random(seed)
    names = sorted(CFG_FAMILIES)
    for i in range(count):
        name = names[i % len(names)]
        yield random_graph(rng), name, CFG_FAMILIES[name]


def rpq_instances(count: int, seed: int = 4048):
    rng = random.Random(seed)
    names = sorted(RPQ_QUERIES)
    for i in range(count):
        name = names[i % len(names)]
        yield random_graph(rng, labels=("a", "b", "c", "d"), max_edges=12), name, parse_regex(RPQ_QUERIES[name])
