"""Recursive state machines: one deterministic, epsilon-free box per nonterminal.

Call transitions are labelled with the callee's nonterminal symbol
(``Symbol(NONTERMINAL, name)``); the callee start state is looked up
through :meth:`Rsm.start_state`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .grammar import (
    NONTERMINAL,
    BnfGrammar,
    Concat,
    EbnfGrammar,
    Epsilon,
    GrammarError,
    Optional,
    Plus,
    Regex,
    Star,
    Sym,
    Symbol,
    Union,
    concat,
    union,
    validate,
)

END_MARKER = Symbol("end", "$")


class RsmError(ValueError):
    pass


def label_order(sym: Symbol) -> tuple:
    """Sort key for transition labels: calls first, then terminals, then ``$``."""
    rank = {NONTERMINAL: 0, "end": 2}.get(sym.kind, 1)
    return (rank, sym.name)


# Regex -> minimal DFA -------------------------------------------------------


@dataclass
class Dfa:
    size: int
    start: int
    finals: frozenset
    transitions: dict  # (state, Symbol) -> state

    def accepts(self, word: Iterable[Symbol]) -> bool:
        state = self.start
        for sym in word:
            state = self.transitions.get((state, sym))
            if state is None:
                return False
        return state in self.finals

    def alphabet(self) -> list[Symbol]:
        return sorted({sym for _, sym in self.transitions}, key=label_order)


class _Thompson:
    def __init__(self):
        self.eps: list[list[int]] = []
        self.moves: list[list[tuple[Symbol, int]]] = []

    def new(self) -> int:
        self.eps.append([])
        self.moves.append([])
        return len(self.eps) - 1

    def build(self, r: Regex) -> tuple[int, int]:
        s, f = self.new(), self.new()
        if isinstance(r, Epsilon):
            self.eps[s].append(f)
        elif isinstance(r, Sym):
            self.moves[s].append((r.symbol, f))
        elif isinstance(r, Concat):
            cur = s
            for item in r.items:
                a, b = self.build(item)
                self.eps[cur].append(a)
                cur = b
            self.eps[cur].append(f)
        elif isinstance(r, Union):
            for item in r.items:
                a, b = self.build(item)
                self.eps[s].append(a)
                self.eps[b].append(f)
        elif isinstance(r, (Star, Plus, Optional)):
            a, b = self.build(r.child)
            self.eps[s].append(a)
            self.eps[b].append(f)
            if not isinstance(r, Plus):
                self.eps[s].append(f)
            if not isinstance(r, Optional):
                self.eps[b].append(a)
        else:
            raise TypeError(f"not a regex node: {r!r}")
        return s, f

    def closure(self, states: Iterable[int]) -> frozenset:
        seen = set(states)
        stack = list(seen)
        while stack:
            for t in self.eps[stack.pop()]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)


def _subset_construction(r: Regex) -> Dfa:
    nfa = _Thompson()
    nfa_start, nfa_final = nfa.build(r)
    start = nfa.closure([nfa_start])
    ids = {start: 0}
    order = [start]
    transitions = {}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        by_symbol: dict[Symbol, set[int]] = {}
        for q in current:
            for sym, t in nfa.moves[q]:
                by_symbol.setdefault(sym, set()).add(t)
        for sym in sorted(by_symbol, key=label_order):
            target = nfa.closure(by_symbol[sym])
            if target not in ids:
                ids[target] = len(ids)
                order.append(target)
                queue.append(target)
            transitions[(ids[current], sym)] = ids[target]
    finals = frozenset(ids[s] for s in order if nfa_final in s)
    return Dfa(len(order), 0, finals, transitions)


def _hopcroft(dfa: Dfa) -> Dfa:
    alphabet = dfa.alphabet()
    sink = dfa.size
    total = dfa.size + 1
    delta = [[dfa.transitions.get((s, a), sink) for a in alphabet] for s in range(dfa.size)]
    delta.append([sink] * len(alphabet))
    inverse = [[[] for _ in range(total)] for _ in alphabet]
    for s in range(total):
        for i, t in enumerate(delta[s]):
            inverse[i][t].append(s)

    finals = set(dfa.finals)
    others = set(range(total)) - finals
    partition = [blk for blk in (finals, others) if blk]
    work = [min(partition, key=len)] if len(partition) == 2 else []
    while work:
        splitter = work.pop()
        for i in range(len(alphabet)):
            pre = {s for t in splitter for s in inverse[i][t]}
            if not pre:
                continue
            refined = []
            for block in partition:
                inside, outside = block & pre, block - pre
                if inside and outside:
                    refined += [inside, outside]
                    if block in work:
                        work.remove(block)
                        work += [inside, outside]
                    else:
                        work.append(min(inside, outside, key=len))
                else:
                    refined.append(block)
            partition = refined

    block_of = {s: i for i, blk in enumerate(partition) for s in blk}
    dead = block_of[sink]
    start_block = block_of[dfa.start]
    if start_block == dead:
        return Dfa(1, 0, frozenset(), {})

    # renumber breadth-first from the start block, labels in label_order
    ids = {start_block: 0}
    queue = deque([start_block])
    transitions = {}
    while queue:
        blk = queue.popleft()
        rep = next(iter(partition[blk]))
        for i, sym in enumerate(alphabet):
            target = block_of[delta[rep][i]]
            if target == dead:
                continue
            if target not in ids:
                ids[target] = len(ids)
                queue.append(target)
            transitions[(ids[blk], sym)] = ids[target]
    new_finals = frozenset(ids[b] for b in ids if partition[b] & finals)
    return Dfa(len(ids), 0, new_finals, transitions)


def regex_to_dfa(r: Regex, minimize: bool = True) -> Dfa:
    """Thompson NFA, subset construction, then Hopcroft minimization.

    Nonterminal symbols are ordinary letters here.  States of the result
    are numbered breadth-first from the start with labels visited in
    :func:`label_order`.
    """
    dfa = _subset_construction(r)
    return _hopcroft(dfa) if minimize else dfa


# RSM -------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    nonterminal: str
    states: tuple
    start: int
    finals: frozenset
    transitions: dict = field(compare=True)  # (state, Symbol) -> state

    @classmethod
    def from_dfa(cls, nonterminal: str, dfa: Dfa, offset: int) -> "Box":
        return cls(
            nonterminal,
            tuple(range(offset, offset + dfa.size)),
            dfa.start + offset,
            frozenset(f + offset for f in dfa.finals),
            {(s + offset, sym): t + offset for (s, sym), t in dfa.transitions.items()},
        )

    def to_dfa(self) -> Dfa:
        index = {s: i for i, s in enumerate(self.states)}
        return Dfa(
            len(self.states),
            index[self.start],
            frozenset(index[f] for f in self.finals),
            {(index[s], sym): index[t] for (s, sym), t in self.transitions.items()},
        )


class Rsm:
    """A set of boxes keyed by nonterminal name."""

    def __init__(self, boxes: Iterable[Box], start_nonterminal: str, state_names: dict | None = None):
        self.boxes: dict[str, Box] = {}
        for box in boxes:
            if box.nonterminal in self.boxes:
                raise RsmError(f"duplicate box for {box.nonterminal}")
            self.boxes[box.nonterminal] = box
        self.start_nonterminal = start_nonterminal
        self._box_of_state: dict[int, Box] = {}
        self._check()
        self.state_names = dict(state_names or {})

    def _check(self):
        if self.start_nonterminal not in self.boxes:
            raise RsmError(f"start box {self.start_nonterminal!r} missing")
        for box in self.boxes.values():
            states = set(box.states)
            if len(states) != len(box.states):
                raise RsmError(f"box {box.nonterminal}: repeated state ids")
            for s in states:
                if s in self._box_of_state:
                    raise RsmError(f"state {s} belongs to more than one box")
                self._box_of_state[s] = box
            if box.start not in states:
                raise RsmError(f"box {box.nonterminal}: start state outside the box")
            if not set(box.finals) <= states:
                raise RsmError(f"box {box.nonterminal}: final state outside the box")
            for (src, sym), dst in box.transitions.items():
                if sym is None:
                    raise RsmError(f"box {box.nonterminal}: epsilon transition")
                if src not in states or dst not in states:
                    raise RsmError(f"box {box.nonterminal}: transition leaves the box")
                if sym.kind == NONTERMINAL and sym.name not in self.boxes:
                    raise RsmError(f"box {box.nonterminal}: call to unknown box {sym.name}")

    @property
    def state_count(self) -> int:
        return len(self._box_of_state)

    @property
    def states(self) -> list[int]:
        return sorted(self._box_of_state)

    @property
    def delta(self) -> dict:
        """Union of all box transition functions."""
        out = {}
        for box in self.boxes.values():
            out.update(box.transitions)
        return out

    def box_of(self, state: int) -> Box:
        return self._box_of_state[state]

    def start_state(self, nonterminal: str) -> int:
        return self.boxes[nonterminal].start

    def terminals(self) -> set[str]:
        return {sym.name for box in self.boxes.values() for (_, sym) in box.transitions if sym.is_terminal}

    def state_name(self, state: int) -> str:
        return self.state_names.get(state, f"q{state}")


class ExtendedRsm(Rsm):
    """An RSM plus the synthetic start box ``S' : q0' -S-> q1' -$-> q2'``."""

    def __init__(self, inner: Rsm, start_box: Box):
        if inner.start_nonterminal == start_box.nonterminal:
            raise RsmError("start box name collides with an inner box")
        super().__init__(list(inner.boxes.values()) + [start_box], start_box.nonterminal, inner.state_names)
        self.inner = inner
        self.start_box = start_box
        self.end_marker = END_MARKER
        by_label = {sym: (src, dst) for (src, sym), dst in start_box.transitions.items()}
        call = by_label.get(Symbol(NONTERMINAL, inner.start_nonterminal))
        end = by_label.get(END_MARKER)
        if call is None or end is None or len(by_label) != 2 or call[1] != end[0]:
            raise RsmError("start box must be q0' -S-> q1' -$-> q2'")
        if call[0] != start_box.start or start_box.finals != frozenset([end[1]]):
            raise RsmError("start box must be q0' -S-> q1' -$-> q2'")
        self.initial_state, self.accept_state = call
        self.end_state = end[1]


# Construction ----------------------------------------------------------------


def build_rsm(g: EbnfGrammar) -> Rsm:
    problems = validate(g)
    if problems:
        raise GrammarError("; ".join(map(str, problems)))
    boxes = []
    offset = 0
    for name, body in g.productions.items():
        dfa = regex_to_dfa(body)
        boxes.append(Box.from_dfa(name, dfa, offset))
        offset += dfa.size
    return Rsm(boxes, g.start)


def build_rsm_from_bnf(g: BnfGrammar) -> Rsm:
    """One box per nonterminal: the minimal DFA of the union of its right-hand sides."""
    alternatives: dict[str, list[Regex]] = {}
    for lhs, rhs in g.productions:
        alternatives.setdefault(lhs, []).append(concat(*(Sym(s) for s in rhs)))
    for _, rhs in g.productions:
        for s in rhs:
            if s.is_nonterminal and s.name not in alternatives:
                raise GrammarError(f"undefined-nonterminal {s.name}")
    if g.start not in alternatives:
        raise GrammarError(f"missing-start {g.start}")
    boxes = []
    offset = 0
    for name, alts in alternatives.items():
        dfa = regex_to_dfa(union(*alts))
        boxes.append(Box.from_dfa(name, dfa, offset))
        offset += dfa.size
    return Rsm(boxes, g.start)


def extend_rsm(r: Rsm) -> ExtendedRsm:
    if isinstance(r, ExtendedRsm):
        raise RsmError("RSM already carries the end marker")
    base = max(r.states) + 1
    q0, q1, q2 = base, base + 1, base + 2
    box = Box(
        r.start_nonterminal + "'",
        (q0, q1, q2),
        q0,
        frozenset([q2]),
        {(q0, Symbol(NONTERMINAL, r.start_nonterminal)): q1, (q1, END_MARKER): q2},
    )
    return ExtendedRsm(r, box)


@dataclass
class ParserRsmBuilder:
    """Explicit RSM parts, kept verbatim (no renumbering).

    ``boxes`` holds ``(nonterminal, states, start, finals, transitions)``
    where transitions are ``(src, Symbol, dst)`` triples.  When
    ``extended_states`` is set, the result is an :class:`ExtendedRsm`
    whose start box uses those three state ids.
    """

    start: str
    boxes: list = field(default_factory=list)
    extended_states: tuple | None = None
    state_names: dict = field(default_factory=dict)

    def box(self, nonterminal, states, start, finals, transitions) -> "ParserRsmBuilder":
        self.boxes.append((nonterminal, tuple(states), start, tuple(finals), tuple(transitions)))
        return self


def rsm_from_parts(builder: ParserRsmBuilder) -> Rsm:
    boxes = []
    for nonterminal, states, start, finals, transitions in builder.boxes:
        table = {}
        for src, sym, dst in transitions:
            if sym is None:
                raise RsmError(f"box {nonterminal}: epsilon transition")
            if (src, sym) in table and table[(src, sym)] != dst:
                raise RsmError(f"box {nonterminal}: box not deterministic at state {src} on {sym}")
            table[(src, sym)] = dst
        boxes.append(Box(nonterminal, states, start, frozenset(finals), table))
    rsm = Rsm(boxes, builder.start, builder.state_names)
    if builder.extended_states is None:
        return rsm
    q0, q1, q2 = builder.extended_states
    box = Box(
        builder.start + "'",
        (q0, q1, q2),
        q0,
        frozenset([q2]),
        {(q0, Symbol(NONTERMINAL, builder.start)): q1, (q1, END_MARKER): q2},
    )
    return ExtendedRsm(rsm, box)


def rsm_to_dot(r: Rsm) -> str:
    """Graphviz text: a cluster per box, double circles for finals, dashed call edges."""
    lines = ["digraph rsm {", "  rankdir=LR;"]
    for i, box in enumerate(r.boxes.values()):
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append(f'    label="{_dot_escape(box.nonterminal)}";')
        for s in box.states:
            shape = "doublecircle" if s in box.finals else "circle"
            lines.append(f'    s{s} [label="{_dot_escape(r.state_name(s))}", shape={shape}];')
        lines.append(f'    start_{i} [shape=point]; start_{i} -> s{box.start};')
        for (src, sym), dst in sorted(box.transitions.items(), key=lambda kv: (kv[0][0], label_order(kv[0][1]))):
            style = ", style=dashed" if sym.kind == NONTERMINAL else ""
            lines.append(f'    s{src} -> s{dst} [label="{_dot_escape(sym.name)}"{style}];')
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')
