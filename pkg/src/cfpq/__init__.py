"""Context-free path querying over labelled graphs.

Grammars compile to recursive state machines, a GLL-style engine answers
multiple-source reachability over them, and :mod:`cfpq.results` turns the
resulting path index into shared parse forests and witness paths.
"""

from .engine import GllEngine, PathIndex, QueryResult, Range, run, run_rpq
from .grammar import (
    BnfGrammar,
    CnfGrammar,
    EbnfGrammar,
    GrammarError,
    GrammarSyntaxError,
    ebnf_to_bnf,
    parse_grammar_text,
    parse_regex,
    to_cnf,
    validate,
)
from .graph import Graph, GraphParseError, InvalidPathError, Path, load_edge_list, load_edge_list_file
from .results import NoDerivationError, build_pair_sppf, build_sppf, enumerate_paths, reachable_pairs, sppf_to_dot
from .rsm import ExtendedRsm, Rsm, build_rsm, build_rsm_from_bnf, extend_rsm, rsm_to_dot

__all__ = [
    "BnfGrammar", "CnfGrammar", "EbnfGrammar", "ExtendedRsm", "GllEngine", "Graph", "GraphParseError",
    "GrammarError", "GrammarSyntaxError", "InvalidPathError", "NoDerivationError", "Path", "PathIndex",
    "QueryResult", "Range", "Rsm", "build_pair_sppf", "build_rsm", "build_rsm_from_bnf", "build_sppf",
    "ebnf_to_bnf", "enumerate_paths", "extend_rsm", "load_edge_list", "load_edge_list_file",
    "parse_grammar_text", "parse_regex", "reachable_pairs", "rsm_to_dot", "run", "run_rpq", "sppf_to_dot",
    "to_cnf", "validate",
]
