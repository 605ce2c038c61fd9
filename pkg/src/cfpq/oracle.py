"""Brute-force reference procedures for testing the engine.

Nothing here touches the engine or the RSM compiler: membership is CYK on a
CNF grammar, regular languages are handled with Brzozowski derivatives, and
paths are enumerated explicitly.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

from . import grammar as gr
from .graph import Graph, Path


# CYK -----------------------------------------------------------------------


class CykTable:
    """CYK over a CNF grammar, extendable one letter at a time.

    ``columns[j][i]`` is the bitmask of nonterminals deriving ``word[i:j+1]``.
    """

    def __init__(self, cnf: gr.CnfGrammar):
        self.cnf = cnf
        names = sorted({cnf.start} | {a for a, *_ in cnf.binary} | {x for r in cnf.binary for x in r[1:]} | {a for a, _ in cnf.unary})
        self.bit = {name: 1 << i for i, name in enumerate(names)}
        self.start_bit = self.bit[cnf.start]
        self.unary: dict[str, int] = {}
        for a, t in cnf.unary:
            self.unary[t] = self.unary.get(t, 0) | self.bit[a]
        self.rules = [(self.bit[a], self.bit[b], self.bit[c]) for a, b, c in cnf.binary]
        self._combine_cache: dict[tuple[int, int], int] = {}
        self._columns: dict[tuple, tuple] = {(): ()}

    def _combine(self, left: int, right: int) -> int:
        key = (left, right)
        out = self._combine_cache.get(key)
        if out is None:
            out = 0
            for a, b, c in self.rules:
                if left & b and right & c:
                    out |= a
            self._combine_cache[key] = out
        return out

    def columns(self, word: tuple) -> tuple:
        cols = self._columns.get(word)
        if cols is not None:
            return cols
        prev = self.columns(word[:-1])
        n = len(word) - 1
        col = [0] * (n + 1)
        col[n] = self.unary.get(word[-1], 0)
        for i in range(n - 1, -1, -1):
            mask = 0
            for k in range(i + 1, n + 1):
                left = prev[k - 1][i]
                if left:
                    right = col[k]
                    if right:
                        mask |= self._combine(left, right)
            col[i] = mask
        cols = prev + (tuple(col),)
        self._columns[word] = cols
        return cols

    def accepts(self, word) -> bool:
        word = tuple(word)
        if not word:
            return self.cnf.nullable
        return bool(self.columns(word)[-1][0] & self.start_bit)


def cyk_membership(word, g: gr.CnfGrammar) -> bool:
    """Is ``word`` (a sequence of terminal names) in ``L(g)``?"""
    word = list(word)
    n = len(word)
    if n == 0:
        return g.nullable
    table = [[set() for _ in range(n + 1)] for _ in range(n + 1)]
    for i, t in enumerate(word):
        table[i][i + 1] = {a for a, x in g.unary if x == t}
    for span in range(2, n + 1):
        for i in range(n - span + 1):
            j = i + span
            for k in range(i + 1, j):
                left, right = table[i][k], table[k][j]
                if left and right:
                    table[i][j] |= {a for a, b, c in g.binary if b in left and c in right}
    return g.start in table[0][n]


def as_cnf(grammar) -> gr.CnfGrammar:
    if isinstance(grammar, gr.CnfGrammar):
        return grammar
    if isinstance(grammar, gr.EbnfGrammar):
        grammar = gr.ebnf_to_bnf(grammar)
    return gr.to_cnf(grammar)


def bounded_language(g: gr.BnfGrammar, max_len: int) -> set[tuple[str, ...]]:
    """All words of length <= ``max_len`` derivable from the start, by least fixpoint."""
    words: dict[str, set] = {lhs: set() for lhs, _ in g.productions}
    changed = True
    while changed:
        changed = False
        for lhs, rhs in g.productions:
            partial = {()}
            for s in rhs:
                options = {(s.name,)} if s.is_terminal else words.get(s.name, set())
                partial = {p + o for p in partial for o in options if len(p) + len(o) <= max_len}
                if not partial:
                    break
            new = partial - words[lhs]
            if new:
                words[lhs] |= new
                changed = True
    return words.get(g.start, set())


# paths ---------------------------------------------------------------------


def enumerate_paths_bounded(g: Graph, source: int, max_len: int) -> Iterator[Path]:
    """Every path from ``source`` with at most ``max_len`` edges, shortest first."""
    queue = deque([Path(source)])
    while queue:
        path = queue.popleft()
        yield path
        if len(path) < max_len:
            for lab, t in g.out_edges(path.end):
                queue.append(Path(source, path.steps + ((lab, t),)))


@dataclass
class OracleReport:
    pairs: set = field(default_factory=set)
    witness: dict = field(default_factory=dict)
    bound: int = 0


def cfpq_oracle(g: Graph, grammar, starts, max_len: int) -> OracleReport:
    """Pairs ``(u, v)``, ``u`` in ``starts``, joined by a path of at most
    ``max_len`` edges whose word is in the language.

    Paths with the same end vertex and word are explored once, which keeps
    the search at ``|V| * |words|`` states.
    """
    cyk = CykTable(as_cnf(grammar))
    names = g.label_names
    report = OracleReport(bound=max_len)
    for u in sorted(set(starts)):
        frontier = {(u, ()): Path(u)}
        seen = set(frontier)
        for length in range(max_len + 1):
            for (v, word), path in frontier.items():
                if (u, v) not in report.pairs and cyk.accepts(word):
                    report.pairs.add((u, v))
                    report.witness[(u, v)] = path
            if length == max_len:
                break
            nxt = {}
            for (v, word), path in frontier.items():
                for lab, t in g.out_edges(v):
                    state = (t, word + (names[lab],))
                    if state not in seen:
                        seen.add(state)
                        nxt[state] = Path(u, path.steps + ((lab, t),))
            frontier = nxt
    return report


# regular path queries via derivatives ----------------------------------------

_EMPTY = ("empty",)
_EPS = ("eps",)


def _cat(a, b):
    if a == _EMPTY or b == _EMPTY:
        return _EMPTY
    if a == _EPS:
        return b
    if b == _EPS:
        return a
    if a[0] == "cat":
        return _cat(a[1], _cat(a[2], b))
    return ("cat", a, b)


def _alt(*items):
    flat = set()
    for item in items:
        if item[0] == "alt":
            flat |= item[1]
        elif item != _EMPTY:
            flat.add(item)
    if not flat:
        return _EMPTY
    if len(flat) == 1:
        return next(iter(flat))
    return ("alt", frozenset(flat))


def _star(a):
    if a in (_EMPTY, _EPS):
        return _EPS
    if a[0] == "star":
        return a
    return ("star", a)


def _lower(r):
    if isinstance(r, gr.Epsilon):
        return _EPS
    if isinstance(r, gr.Sym):
        if not r.symbol.is_terminal:
            raise ValueError("regular queries cannot reference nonterminals")
        return ("sym", r.symbol.name)
    if isinstance(r, gr.Concat):
        out = _EPS
        for item in reversed(r.items):
            out = _cat(_lower(item), out)
        return out
    if isinstance(r, gr.Union):
        return _alt(*(_lower(i) for i in r.items))
    child = _lower(r.child)
    if isinstance(r, gr.Star):
        return _star(child)
    if isinstance(r, gr.Plus):
        return _cat(child, _star(child))
    return _alt(child, _EPS)


def _nullable(r) -> bool:
    kind = r[0]
    if kind in ("eps", "star"):
        return True
    if kind in ("empty", "sym"):
        return False
    if kind == "cat":
        return _nullable(r[1]) and _nullable(r[2])
    return any(_nullable(x) for x in r[1])


def _derive(r, a: str):
    kind = r[0]
    if kind in ("empty", "eps"):
        return _EMPTY
    if kind == "sym":
        return _EPS if r[1] == a else _EMPTY
    if kind == "cat":
        head = _cat(_derive(r[1], a), r[2])
        return _alt(head, _derive(r[2], a)) if _nullable(r[1]) else head
    if kind == "alt":
        return _alt(*(_derive(x, a) for x in r[1]))
    return _cat(_derive(r[1], a), r)


def regex_matches(regex: gr.Regex, word) -> bool:
    r = _lower(regex)
    for a in word:
        r = _derive(r, a)
        if r == _EMPTY:
            return False
    return _nullable(r)


def rpq_oracle(g: Graph, regex: gr.Regex, starts) -> set[tuple[int, int]]:
    """Exact regular-path reachability by BFS over (derivative, vertex) pairs."""
    initial = _lower(regex)
    names = g.label_names
    pairs = set()
    derivatives: dict = {}
    for s in sorted(set(starts)):
        seen = {(initial, s)}
        queue = deque(seen)
        while queue:
            r, v = queue.popleft()
            if _nullable(r):
                pairs.add((s, v))
            for lab, t in g.out_edges(v):
                key = (r, lab)
                if key not in derivatives:
                    derivatives[key] = _derive(r, names[lab])
                nr = derivatives[key]
                if nr != _EMPTY and (nr, t) not in seen:
                    seen.add((nr, t))
                    queue.append((nr, t))
    return pairs


def all_words(alphabet, max_len: int) -> Iterator[tuple]:
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)
