"""GLL-style context-free path querying over an extended RSM.

The engine keeps a worklist of descriptors ``(state, vertex, gss node, range)``
and a graph-structured stack whose nodes are keyed by ``(callee start
state, vertex)``.  Every handled descriptor records how its matched range was
built into a sparse path index, from which :mod:`cfpq.results` rebuilds
derivations and witness paths.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

from .grammar import EbnfGrammar, Regex
from .graph import Graph
from .rsm import ExtendedRsm, build_rsm, extend_rsm


class Range(NamedTuple):
    from_state: int
    from_vertex: int
    to_state: int
    to_vertex: int


# ``None`` is the empty range.
EMPTY = None


class Descriptor(NamedTuple):
    state: int
    vertex: int
    gss: tuple  # GSS node key (callee start state, vertex)
    range: Range | None


class GssEdge(NamedTuple):
    return_state: int
    caller_range: Range | None
    target: tuple


@dataclass
class GssNode:
    state: int
    vertex: int
    edges: set = field(default_factory=set)
    stored_pops: set = field(default_factory=set)

    @property
    def key(self) -> tuple:
        return (self.state, self.vertex)


@dataclass(frozen=True)
class Terminal:
    label: int


@dataclass(frozen=True)
class Nonterminal:
    name: str


@dataclass(frozen=True)
class EpsilonEntry:
    pass


@dataclass(frozen=True)
class IntermediatePoint:
    state: int
    vertex: int


EPSILON = EpsilonEntry()


class PathIndex:
    """Sparse map ``((state, vertex), (state, vertex)) -> set of entries``."""

    def __init__(self):
        self._cells: dict[tuple, set] = {}

    def add(self, src: tuple, dst: tuple, entry) -> None:
        self._cells.setdefault((src, dst), set()).add(entry)

    def get(self, src: tuple, dst: tuple) -> frozenset:
        return frozenset(self._cells.get((src, dst), ()))

    def __getitem__(self, key: tuple) -> frozenset:
        return frozenset(self._cells.get(key, ()))

    def __contains__(self, key: tuple) -> bool:
        return key in self._cells

    def __len__(self) -> int:
        return len(self._cells)

    def cells(self) -> dict:
        return {key: frozenset(entries) for key, entries in self._cells.items()}

    def __eq__(self, other) -> bool:
        return isinstance(other, PathIndex) and self._cells == other._cells

    __hash__ = None


@dataclass
class QueryResult:
    rsm: ExtendedRsm
    graph: Graph
    index: PathIndex
    accepted: set  # (start vertex, final vertex, root Range)
    diagnostics: dict
    _sppf_memo: dict = field(default_factory=dict, repr=False, compare=False)

    def pairs(self) -> set[tuple[int, int]]:
        return {(u, v) for u, v, _ in self.accepted}

    def root_range(self, source: int, target: int) -> Range:
        return Range(self.rsm.initial_state, source, self.rsm.accept_state, target)


class GllEngine:
    """One query evaluation.  Not thread-safe; the graph and RSM are only read."""

    def __init__(
        self,
        rsm: ExtendedRsm,
        graph: Graph,
        order: str = "fifo",
        on_accept: Callable[[int, int], None] | None = None,
    ):
        if order not in ("fifo", "lifo"):
            raise ValueError(f"unknown descriptor order {order!r}")
        self.rsm = rsm
        self.graph = graph
        self.order = order
        self.on_accept = on_accept

        self._terminal_moves: dict[int, list[tuple[int, int]]] = {}
        self._call_moves: dict[int, list[tuple[str, int, int]]] = {}
        self._final_of: dict[int, str] = {}
        for box in rsm.boxes.values():
            if box is not rsm.start_box:
                for f in box.finals:
                    self._final_of[f] = box.nonterminal
            for (src, sym), dst in sorted(box.transitions.items(), key=lambda kv: (kv[0][0], kv[0][1].name)):
                if sym.is_terminal:
                    label = graph.label_id(sym.name)
                    if label is not None:
                        self._terminal_moves.setdefault(src, []).append((label, dst))
                elif sym.is_nonterminal:
                    self._call_moves.setdefault(src, []).append((sym.name, rsm.start_state(sym.name), dst))
                # the end marker is never matched against graph edges

        self.gss: dict[tuple, GssNode] = {}
        self.index = PathIndex()
        self.queue: deque[Descriptor] = deque()
        self.seen: set[Descriptor] = set()
        self.handled: set[Descriptor] = set()
        self.accepted: set[tuple[int, int, Range]] = set()
        self._pairs: set[tuple[int, int]] = set()

    # GSS ---------------------------------------------------------------

    def gss_node(self, state: int, vertex: int) -> GssNode:
        key = (state, vertex)
        node = self.gss.get(key)
        if node is None:
            node = self.gss[key] = GssNode(state, vertex)
        return node

    # worklist ----------------------------------------------------------

    def add_start(self, vertex: int) -> bool:
        if not 0 <= vertex < self.graph.vertex_count:
            raise ValueError(f"start vertex {vertex} not in graph")
        node = self.gss_node(self.rsm.initial_state, vertex)
        return self.add_descriptor(Descriptor(self.rsm.initial_state, vertex, node.key, EMPTY))

    def add_descriptor(self, d: Descriptor) -> bool:
        """Queue ``d`` unless it was queued or handled before."""
        if d in self.seen:
            return False
        self.seen.add(d)
        self.queue.append(d)
        return True

    # the three descriptor cases ------------------------------------------

    def step_terminal(self, d: Descriptor) -> list[Descriptor]:
        q0, v0, s0, r0 = d
        out = []
        for label, q1 in self._terminal_moves.get(q0, ()):
            for v1 in self.graph.outgoing(v0, label):
                self.index.add((q0, v0), (q1, v1), Terminal(label))
                if r0 is EMPTY:
                    new_range = Range(q0, v0, q1, v1)
                else:
                    self.index.add((r0.from_state, r0.from_vertex), (q1, v1), IntermediatePoint(q0, v0))
                    new_range = Range(r0.from_state, r0.from_vertex, q1, v1)
                out.append(Descriptor(q1, v1, s0, new_range))
        return out

    def step_nonterminal(self, d: Descriptor) -> list[Descriptor]:
        q0, v0, s0, r0 = d
        out = []
        for name, callee_start, q1 in self._call_moves.get(q0, ()):
            callee = self.gss_node(callee_start, v0)
            edge = GssEdge(q1, r0, s0)
            is_new = edge not in callee.edges
            callee.edges.add(edge)
            out.append(Descriptor(callee_start, v0, callee.key, EMPTY))
            if not is_new:
                continue
            for pop in list(callee.stored_pops):
                end_vertex = v0 if pop is EMPTY else pop.to_vertex
                out.append(self._return(name, q0, v0, q1, end_vertex, r0, s0))
        return out

    def step_final(self, d: Descriptor) -> list[Descriptor]:
        q0, v0, s0, r0 = d
        name = self._final_of.get(q0)
        if name is None:
            return []
        node = self.gss[s0]
        node.stored_pops.add(r0)
        if r0 is EMPTY:
            self.index.add((q0, v0), (q0, v0), EPSILON)
        out = []
        for return_state, caller_range, target in list(node.edges):
            # the call was made at this node's vertex, from the state where the
            # caller range ends (or the caller box start if nothing was matched yet)
            call_state = target[0] if caller_range is EMPTY else caller_range.to_state
            out.append(self._return(name, call_state, node.vertex, return_state, v0, caller_range, target))
        return out

    def _return(self, name, call_state, call_vertex, return_state, end_vertex, caller_range, target) -> Descriptor:
        self.index.add((call_state, call_vertex), (return_state, end_vertex), Nonterminal(name))
        if caller_range is EMPTY:
            new_range = Range(call_state, call_vertex, return_state, end_vertex)
        else:
            src = (caller_range.from_state, caller_range.from_vertex)
            self.index.add(src, (return_state, end_vertex), IntermediatePoint(call_state, call_vertex))
            new_range = Range(caller_range.from_state, caller_range.from_vertex, return_state, end_vertex)
        return Descriptor(return_state, end_vertex, target, new_range)

    # main loop ---------------------------------------------------------

    def process(self, d: Descriptor) -> list[Descriptor]:
        if d in self.handled:
            raise AssertionError(f"descriptor handled twice: {d}")
        self.handled.add(d)
        if d.state == self.rsm.accept_state:
            start = d.gss[1]
            self.accepted.add((start, d.vertex, d.range))
            if (start, d.vertex) not in self._pairs:
                self._pairs.add((start, d.vertex))
                if self.on_accept is not None:
                    self.on_accept(start, d.vertex)
        return self.step_terminal(d) + self.step_nonterminal(d) + self.step_final(d)

    def run(self) -> "QueryResult":
        pop = self.queue.popleft if self.order == "fifo" else self.queue.pop
        while self.queue:
            for created in self.process(pop()):
                self.add_descriptor(created)
        return self.result()

    def result(self) -> QueryResult:
        return QueryResult(
            rsm=self.rsm,
            graph=self.graph,
            index=self.index,
            accepted=set(self.accepted),
            diagnostics={
                "descriptor_count": len(self.handled),
                "gss_node_count": len(self.gss),
                "gss_edge_count": sum(len(n.edges) for n in self.gss.values()),
            },
        )


def initialize(rsm: ExtendedRsm, graph: Graph, starts: Iterable[int], order: str = "fifo") -> GllEngine:
    starts = sorted(set(starts))
    bad = [v for v in starts if not 0 <= v < graph.vertex_count]
    if bad:
        raise ValueError(f"start vertices not in graph: {bad}")
    engine = GllEngine(rsm, graph, order=order)
    for v in starts:
        engine.add_start(v)
    return engine


def run(rsm: ExtendedRsm, graph: Graph, starts: Iterable[int], order: str = "fifo") -> QueryResult:
    """Evaluate the query from every vertex in ``starts``."""
    return initialize(rsm, graph, starts, order).run()


def run_rpq(regex: Regex, graph: Graph, starts: Iterable[int], order: str = "fifo") -> QueryResult:
    """Regular path query through the same engine, as the grammar ``S -> regex``."""
    rsm = extend_rsm(build_rsm(EbnfGrammar({"S": regex}, "S")))
    return run(rsm, graph, starts, order)
