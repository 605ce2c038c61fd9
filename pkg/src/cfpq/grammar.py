"""Context-free grammars in EBNF/BNF form: text syntax, validation, normal forms.

Grammar text is one rule per line::

    S -> a S b | a b
    Expr -> Term ('+' Term)*

Bare tokens starting with an uppercase letter are nonterminals; any other
bare token or single-quoted string is a terminal.  ``eps`` is the empty
word.  The first rule names the start nonterminal and repeated left-hand
sides are folded into one union.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterator, Union as _U

TERMINAL = "terminal"
NONTERMINAL = "nonterminal"


@dataclass(frozen=True, order=True)
class Symbol:
    kind: str
    name: str

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL

    @property
    def is_nonterminal(self) -> bool:
        return self.kind == NONTERMINAL

    def __str__(self) -> str:
        return self.name


def T(name: str) -> Symbol:
    return Symbol(TERMINAL, name)


def N(name: str) -> Symbol:
    return Symbol(NONTERMINAL, name)


# Regex AST ----------------------------------------------------------------


@dataclass(frozen=True)
class Epsilon:
    pass


@dataclass(frozen=True)
class Sym:
    symbol: Symbol


@dataclass(frozen=True)
class Concat:
    items: tuple


@dataclass(frozen=True)
class Union:
    items: tuple


@dataclass(frozen=True)
class Star:
    child: object


@dataclass(frozen=True)
class Plus:
    child: object


@dataclass(frozen=True)
class Optional:
    child: object


Regex = _U[Epsilon, Sym, Concat, Union, Star, Plus, Optional]
EPS = Epsilon()


def concat(*items: Regex) -> Regex:
    """Concatenation, flattening nested concats and dropping epsilons."""
    flat: list = []
    for item in items:
        if isinstance(item, Concat):
            flat.extend(item.items)
        elif not isinstance(item, Epsilon):
            flat.append(item)
    if not flat:
        return EPS
    if len(flat) == 1:
        return flat[0]
    return Concat(tuple(flat))


def union(*items: Regex) -> Regex:
    flat: list = []
    for item in items:
        if isinstance(item, Union):
            flat.extend(item.items)
        else:
            flat.append(item)
    if len(flat) == 1:
        return flat[0]
    return Union(tuple(flat))


def regex_symbols(r: Regex) -> Iterator[Symbol]:
    if isinstance(r, Sym):
        yield r.symbol
    elif isinstance(r, (Concat, Union)):
        for item in r.items:
            yield from regex_symbols(item)
    elif isinstance(r, (Star, Plus, Optional)):
        yield from regex_symbols(r.child)


# Grammar containers --------------------------------------------------------


@dataclass(frozen=True, eq=True)
class EbnfGrammar:
    productions: dict  # nonterminal name -> Regex, declaration order
    start: str

    @property
    def nonterminals(self) -> list[str]:
        return list(self.productions)

    def terminals(self) -> set[str]:
        return {s.name for r in self.productions.values() for s in regex_symbols(r) if s.is_terminal}


@dataclass(frozen=True)
class BnfGrammar:
    productions: tuple  # of (lhs name, tuple of Symbol)
    start: str

    @property
    def nonterminals(self) -> list[str]:
        return list(dict.fromkeys(lhs for lhs, _ in self.productions))

    def rules_for(self, lhs: str) -> list[tuple]:
        return [rhs for name, rhs in self.productions if name == lhs]

    def terminals(self) -> set[str]:
        return {s.name for _, rhs in self.productions for s in rhs if s.is_terminal}


@dataclass(frozen=True)
class CnfGrammar:
    """Rules ``A -> B C`` (``binary``) and ``A -> t`` (``unary``); ``nullable``
    flags ``start -> eps``."""

    start: str
    binary: tuple
    unary: tuple
    nullable: bool = False

    @property
    def is_empty(self) -> bool:
        return not self.binary and not self.unary and not self.nullable


# Parsing -------------------------------------------------------------------


class GrammarError(ValueError):
    pass


class GrammarSyntaxError(GrammarError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<op>[|*+?()])
  | (?P<quoted>'(?:[^'\\]|\\.)*')
  | (?P<word>(?:(?!->)[^\s|*+?()'])+)
  """,
    re.VERBOSE,
)


def _tokenize(line: str, line_no: int) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            raise GrammarSyntaxError(line_no, pos + 1, f"unexpected character {line[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            if kind == "quoted":
                text = re.sub(r"\\(.)", r"\1", text[1:-1])
            tokens.append((kind, text, pos + 1))
        pos = m.end()
    return tokens


def _is_nonterminal_word(word: str) -> bool:
    return word[:1].isupper()


class _LineParser:
    def __init__(self, tokens, line_no: int, line_len: int):
        self.tokens = tokens
        self.i = 0
        self.line_no = line_no
        self.line_len = line_len

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def error(self, message: str):
        tok = self.peek()
        col = tok[2] if tok else self.line_len + 1
        raise GrammarSyntaxError(self.line_no, col, message)

    def parse_union(self) -> Regex:
        branches = [self.parse_concat()]
        while (tok := self.peek()) and tok[:2] == ("op", "|"):
            self.i += 1
            branches.append(self.parse_concat())
        return union(*branches)

    def parse_concat(self) -> Regex:
        items = []
        while (tok := self.peek()) and not (tok[0] == "op" and tok[1] in "|)"):
            items.append(self.parse_postfix())
        if not items:
            self.error("empty alternative (use 'eps')")
        return concat(*items)

    def parse_postfix(self) -> Regex:
        node = self.parse_atom()
        while (tok := self.peek()) and tok[0] == "op" and tok[1] in "*+?":
            self.i += 1
            node = {"*": Star, "+": Plus, "?": Optional}[tok[1]](node)
        return node

    def parse_atom(self) -> Regex:
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of rule")
        kind, text, _ = tok
        if kind == "op" and text == "(":
            self.i += 1
            inner = self.parse_union()
            if self.peek() is None or self.peek()[:2] != ("op", ")"):
                self.error("expected ')'")
            self.i += 1
            return inner
        if kind == "quoted":
            self.i += 1
            return Sym(T(text))
        if kind == "word":
            self.i += 1
            if text == "eps":
                return EPS
            return Sym(N(text) if _is_nonterminal_word(text) else T(text))
        self.error(f"unexpected token {text!r}")


def parse_grammar_text(text: str) -> EbnfGrammar:
    """Parse grammar text into an :class:`EbnfGrammar`.

    Raises :class:`GrammarSyntaxError` on malformed lines and
    :class:`GrammarError` for empty input or undefined nonterminals.
    """
    productions: dict[str, Regex] = {}
    start = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = _tokenize(line, line_no)
        if len(tokens) < 2 or tokens[0][0] != "word" or tokens[1][0] != "arrow":
            col = tokens[0][2] if tokens else 1
            raise GrammarSyntaxError(line_no, col, "expected 'Lhs -> regex'")
        lhs = tokens[0][1]
        if not _is_nonterminal_word(lhs):
            raise GrammarSyntaxError(line_no, tokens[0][2], f"left-hand side {lhs!r} is not a nonterminal")
        parser = _LineParser(tokens[2:], line_no, len(line))
        body = parser.parse_union()
        if parser.peek() is not None:
            parser.error(f"unexpected token {parser.peek()[1]!r}")
        start = start or lhs
        productions[lhs] = union(productions[lhs], body) if lhs in productions else body
    if start is None:
        raise GrammarError("empty grammar")
    grammar = EbnfGrammar(productions, start)
    problems = validate(grammar)
    if problems:
        raise GrammarError("; ".join(str(p) for p in problems))
    return grammar


def parse_regex(text: str) -> Regex:
    """Parse a bare regular expression (the right-hand side of one rule)."""
    parser = _LineParser(_tokenize(text, 1), 1, len(text))
    node = parser.parse_union()
    if parser.peek() is not None:
        parser.error(f"unexpected token {parser.peek()[1]!r}")
    return node


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    subject: str

    def __str__(self) -> str:
        return f"{self.kind} {self.subject}".strip()


def _shape_problems(r: Regex) -> Iterator[str]:
    if isinstance(r, (Concat, Union)):
        if len(r.items) < 2:
            yield f"{type(r).__name__} with {len(r.items)} children"
        for item in r.items:
            yield from _shape_problems(item)
    elif isinstance(r, (Star, Plus, Optional)):
        yield from _shape_problems(r.child)
    elif not isinstance(r, (Sym, Epsilon)):
        yield f"unknown regex node {r!r}"


def validate(g: EbnfGrammar) -> list[Diagnostic]:
    problems = []
    if g.start not in g.productions:
        problems.append(Diagnostic("missing-start", g.start))
    seen = set()
    for lhs, body in g.productions.items():
        for shape in _shape_problems(body):
            problems.append(Diagnostic("malformed-regex", f"{lhs}: {shape}"))
        for s in regex_symbols(body):
            if s.is_nonterminal and s.name not in g.productions and s.name not in seen:
                seen.add(s.name)
                problems.append(Diagnostic("undefined-nonterminal", s.name))
    return problems


# Pretty printing -----------------------------------------------------------

_BARE_TERMINAL_RE = re.compile(r"^[^\s|*+?()'A-Z][^\s|*+?()']*$")


def format_symbol(s: Symbol) -> str:
    if s.is_nonterminal:
        return s.name
    if _BARE_TERMINAL_RE.match(s.name) and s.name != "eps" and "->" not in s.name:
        return s.name
    return "'" + s.name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_regex(r: Regex, _prec: int = 0) -> str:
    # precedence: 0 union, 1 concat, 2 postfix operand
    if isinstance(r, Epsilon):
        return "eps"
    if isinstance(r, Sym):
        return format_symbol(r.symbol)
    if isinstance(r, Union):
        text = " | ".join(format_regex(i, 1) for i in r.items)
        return f"({text})" if _prec > 0 else text
    if isinstance(r, Concat):
        text = " ".join(format_regex(i, 2) for i in r.items)
        return f"({text})" if _prec > 1 else text
    op = {Star: "*", Plus: "+", Optional: "?"}[type(r)]
    return format_regex(r.child, 2) + op


def format_grammar(g: EbnfGrammar) -> str:
    lines = [f"{g.start} -> {format_regex(g.productions[g.start])}"]
    lines += [f"{lhs} -> {format_regex(body)}" for lhs, body in g.productions.items() if lhs != g.start]
    return "\n".join(lines) + "\n"


def format_bnf(g: BnfGrammar) -> str:
    return "".join(
        f"{lhs} -> {' '.join(format_symbol(s) for s in rhs) if rhs else 'eps'}\n" for lhs, rhs in g.productions
    )


# EBNF -> BNF ---------------------------------------------------------------


class _BnfLowering:
    def __init__(self, lhs: str):
        self.lhs = lhs
        self.counter = itertools.count()
        self.extra: list[tuple[str, tuple]] = []

    def fresh(self, r: Regex) -> Symbol:
        name = f"{self.lhs}#{next(self.counter)}"
        pending: list = []
        self.extra.append((name, pending))
        pending.extend(self.alternatives(r, name))
        return N(name)

    def sequence(self, r: Regex) -> list[Symbol]:
        if isinstance(r, Sym):
            return [r.symbol]
        if isinstance(r, Epsilon):
            return []
        if isinstance(r, Concat):
            return [s for item in r.items for s in self.sequence(item)]
        return [self.fresh(r)]

    def alternatives(self, r: Regex, owner: str) -> list[list[Symbol]]:
        if isinstance(r, Star):
            return [[], self.sequence(r.child) + [N(owner)]]
        if isinstance(r, Plus):
            body = self.sequence(r.child)
            return [body, body + [N(owner)]]
        if isinstance(r, Optional):
            return [[], self.sequence(r.child)]
        if isinstance(r, Union):
            out = []
            for item in r.items:
                if isinstance(item, Optional):
                    out += [[], self.sequence(item.child)]
                else:
                    out.append(self.sequence(item))
            return out
        return [self.sequence(r)]


def ebnf_to_bnf(g: EbnfGrammar) -> BnfGrammar:
    """Rewrite regular operators as plain productions.

    Fresh nonterminals are named ``Lhs#k`` with ``k`` counted in pre-order.
    """
    productions = []
    for lhs, body in g.productions.items():
        lowering = _BnfLowering(lhs)
        for rhs in lowering.alternatives(body, lhs):
            productions.append((lhs, tuple(rhs)))
        for name, alts in lowering.extra:
            productions += [(name, tuple(rhs)) for rhs in alts]
    return BnfGrammar(tuple(productions), g.start)


def bnf_to_ebnf(g: BnfGrammar) -> EbnfGrammar:
    productions: dict[str, Regex] = {}
    for lhs, rhs in g.productions:
        alt = concat(*(Sym(s) for s in rhs))
        productions[lhs] = union(productions[lhs], alt) if lhs in productions else alt
    return EbnfGrammar(productions, g.start)


# BNF -> CNF ----------------------------------------------------------------


def _productive(prods: set) -> set[str]:
    productive: set[str] = set()
    changed = True
    while changed:
        changed = False
        for lhs, rhs in prods:
            if lhs not in productive and all(s.is_terminal or s.name in productive for s in rhs):
                productive.add(lhs)
                changed = True
    return productive


def _reachable(prods: set, start: str) -> set[str]:
    seen = {start}
    stack = [start]
    while stack:
        a = stack.pop()
        for lhs, rhs in prods:
            if lhs == a:
                for s in rhs:
                    if s.is_nonterminal and s.name not in seen:
                        seen.add(s.name)
                        stack.append(s.name)
    return seen


def _reduce(prods: set, start: str) -> set:
    productive = _productive(prods)
    prods = {(lhs, rhs) for lhs, rhs in prods if lhs in productive and all(s.is_terminal or s.name in productive for s in rhs)}
    reachable = _reachable(prods, start)
    return {(lhs, rhs) for lhs, rhs in prods if lhs in reachable}


def to_cnf(g: BnfGrammar) -> CnfGrammar:
    """Chomsky normal form with ``start -> eps`` kept as a flag."""
    prods = _reduce(set(g.productions), g.start)
    if not any(lhs == g.start for lhs, _ in prods):
        return CnfGrammar(g.start, (), (), False)

    nullable: set[str] = set()
    changed = True
    while changed:
        changed = False
        for lhs, rhs in prods:
            if lhs not in nullable and all(s.is_nonterminal and s.name in nullable for s in rhs):
                nullable.add(lhs)
                changed = True

    no_eps = set()
    for lhs, rhs in prods:
        options = [((s,), ()) if s.is_nonterminal and s.name in nullable else ((s,),) for s in rhs]
        for combo in itertools.product(*options):
            new_rhs = tuple(s for part in combo for s in part)
            if new_rhs:
                no_eps.add((lhs, new_rhs))

    def is_unit(rhs):
        return len(rhs) == 1 and rhs[0].is_nonterminal

    names = {lhs for lhs, _ in no_eps} | {g.start}
    unit_closure = {}
    for a in names:
        seen = {a}
        stack = [a]
        while stack:
            b = stack.pop()
            for lhs, rhs in no_eps:
                if lhs == b and is_unit(rhs) and rhs[0].name not in seen:
                    seen.add(rhs[0].name)
                    stack.append(rhs[0].name)
        unit_closure[a] = seen
    no_units = {
        (a, rhs) for a in names for b in unit_closure[a] for lhs, rhs in no_eps if lhs == b and not is_unit(rhs)
    }
    no_units = _reduce(no_units, g.start) if any(lhs == g.start for lhs, _ in no_units) else set()

    binary: set = set()
    unary: set = set()
    pair_names: dict[tuple, str] = {}

    def lift(s: Symbol) -> str:
        if s.is_nonterminal:
            return s.name
        name = f"<T:{s.name}>"
        unary.add((name, s.name))
        return name

    def chain(parts: tuple) -> str:
        if len(parts) == 1:
            return parts[0]
        if parts not in pair_names:
            pair_names[parts] = f"<B{len(pair_names)}>"
            binary.add((pair_names[parts], parts[0], chain(parts[1:])))
        return pair_names[parts]

    for lhs, rhs in no_units:
        if len(rhs) == 1:
            unary.add((lhs, rhs[0].name))
            continue
        parts = tuple(lift(s) for s in rhs)
        binary.add((lhs, parts[0], chain(parts[1:])))

    start = g.start
    start_nullable = g.start in nullable
    if start_nullable and any(start in (b, c) for _, b, c in binary):
        start = "<START>"
        binary |= {(start, b, c) for a, b, c in binary if a == g.start}
        unary |= {(start, t) for a, t in unary if a == g.start}
    return CnfGrammar(start, tuple(sorted(binary)), tuple(sorted(unary)), start_nullable)
