"""Reading a finished query: reachable pairs, SPPF reconstruction, witness paths, DOT."""

from __future__ import annotations

from .engine import (
    EPSILON,
    EpsilonEntry,
    IntermediatePoint,
    Nonterminal,
    QueryResult,
    Range,
    Terminal,
)
from .graph import Path


class NoDerivationError(LookupError):
    pass


class RangeNode:
    __slots__ = ("range", "children")

    def __init__(self, rng: Range):
        self.range = rng
        self.children: list = []

    def __repr__(self):
        return f"RangeNode{tuple(self.range)}"


class TerminalNode:
    __slots__ = ("label", "edge")

    def __init__(self, label: int, edge: tuple[int, int, int]):
        self.label = label
        self.edge = edge

    @property
    def children(self):
        return []


class NonterminalNode:
    __slots__ = ("name", "children")

    def __init__(self, name: str):
        self.name = name
        self.children: list = []


class IntermediateNode:
    __slots__ = ("point", "left", "right")

    def __init__(self, point: tuple[int, int], left: RangeNode, right: RangeNode):
        self.point = point
        self.left = left
        self.right = right

    @property
    def children(self):
        return [self.left, self.right]


class EpsilonNode:
    __slots__ = ()

    @property
    def children(self):
        return []


class Sppf:
    def __init__(self, root: RangeNode):
        self.root = root
        self.nodes = _reachable_nodes(root)

    def range_nodes(self) -> list[RangeNode]:
        return [n for n in self.nodes if isinstance(n, RangeNode)]


def _reachable_nodes(root) -> list:
    seen = {id(root)}
    order = [root]
    stack = [root]
    while stack:
        node = stack.pop()
        for child in reversed(node.children):
            if id(child) not in seen:
                seen.add(id(child))
                order.append(child)
                stack.append(child)
    return order


def reachable_pairs(qr: QueryResult) -> set[tuple[int, int]]:
    return qr.pairs()


def _entry_key(qr: QueryResult, entry) -> tuple:
    if isinstance(entry, Terminal):
        return (0, qr.graph.label_names[entry.label])
    if isinstance(entry, Nonterminal):
        return (1, entry.name)
    if isinstance(entry, IntermediatePoint):
        return (2, entry.state, entry.vertex)
    return (3,)


def _range_node(qr: QueryResult, rng: Range, pending: list) -> RangeNode:
    memo = qr._sppf_memo.setdefault("nodes", {})
    node = memo.get(rng)
    if node is None:
        node = memo[rng] = RangeNode(rng)
        pending.append(node)
    return node


def _expand(qr: QueryResult, node: RangeNode, pending: list) -> None:
    p, u, q, w = node.range
    entries = sorted(qr.index.get((p, u), (q, w)), key=lambda e: _entry_key(qr, e))
    for entry in entries:
        if isinstance(entry, Terminal):
            node.children.append(TerminalNode(entry.label, (u, entry.label, w)))
        elif isinstance(entry, EpsilonEntry):
            node.children.append(EpsilonNode())
        elif isinstance(entry, IntermediatePoint):
            a, b = entry.state, entry.vertex
            left = _range_node(qr, Range(p, u, a, b), pending)
            right = _range_node(qr, Range(a, b, q, w), pending)
            node.children.append(IntermediateNode((a, b), left, right))
        elif isinstance(entry, Nonterminal):
            box = qr.rsm.boxes[entry.name]
            nt = NonterminalNode(entry.name)
            for final in sorted(box.finals):
                body = Range(box.start, u, final, w)
                cell = qr.index.get((box.start, u), (final, w))
                if not cell:
                    continue
                if cell == {EPSILON} and body.from_vertex == body.to_vertex and final == box.start:
                    nt.children.append(EpsilonNode())
                else:
                    nt.children.append(_range_node(qr, body, pending))
            node.children.append(nt)


def build_sppf(qr: QueryResult, root: Range) -> Sppf:
    """Unfold the path index top-down from ``root``.

    Range nodes are memoized on ``qr`` so every root built from the same
    result shares them; the forest can contain cycles.
    """
    if not qr.index.get((root.from_state, root.from_vertex), (root.to_state, root.to_vertex)):
        raise NoDerivationError(f"no derivation for range {tuple(root)}")
    expanded = qr._sppf_memo.setdefault("expanded", set())
    pending: list[RangeNode] = []
    top = _range_node(qr, root, pending)
    if root not in expanded:
        pending.append(top)
    while pending:
        node = pending.pop()
        if node.range in expanded:
            continue
        expanded.add(node.range)
        _expand(qr, node, pending)
    return Sppf(top)


def build_pair_sppf(qr: QueryResult, source: int, target: int) -> Sppf:
    return build_sppf(qr, qr.root_range(source, target))


# witness paths -------------------------------------------------------------


def _smallest(candidates: set, limit: int, key) -> list:
    return sorted(candidates, key=key)[:limit]


def enumerate_paths(
    qr: QueryResult,
    source: int,
    target: int,
    max_paths: int = 10,
    max_length: int = 20,
) -> list[Path]:
    """Distinct paths ``source -> target`` whose words the query accepts.

    Paths come out shortest first, ties ordered by label names.
    """
    return range_paths(qr, qr.root_range(source, target), max_paths, max_length)


def range_paths(qr: QueryResult, root: Range, max_paths: int = 10, max_length: int = 20) -> list[Path]:
    """Paths spelled by the derivations of ``root``, shortest first.

    For each range and length only the ``max_paths`` smallest partial paths
    are kept, which is exact because concatenation of equal-length pieces
    preserves lexicographic order.
    """
    if max_paths <= 0 or max_length < 0:
        raise ValueError("limits must be positive")
    source = root.from_vertex
    if not qr.index.get((root.from_state, root.from_vertex), (root.to_state, root.to_vertex)):
        return []
    sppf = build_sppf(qr, root)
    ranges = sppf.range_nodes()
    names = qr.graph.label_names

    def key(steps):
        return tuple((names[lab], v) for lab, v in steps)

    table: dict[int, list[list]] = {id(n): [] for n in ranges}

    def level(node, length):
        if isinstance(node, RangeNode):
            return table[id(node)][length]
        if isinstance(node, EpsilonNode):
            return [()] if length == 0 else []
        if isinstance(node, TerminalNode):
            return [((node.label, node.edge[2]),)] if length == 1 else []
        if isinstance(node, NonterminalNode):
            return [steps for child in node.children for steps in level(child, length)]
        out = []
        for k in range(length + 1):
            left = table[id(node.left)][k]
            if not left:
                continue
            right = table[id(node.right)][length - k]
            out += [x + y for x in left for y in right]
        return out

    found: list[Path] = []
    for length in range(max_length + 1):
        for node in ranges:
            table[id(node)].append([])
        changed = True
        while changed:
            changed = False
            for node in ranges:
                current = table[id(node)][length]
                candidates = set(current)
                for child in node.children:
                    candidates.update(level(child, length))
                if len(candidates) != len(current):
                    best = _smallest(candidates, max_paths, key)
                    if best != current:
                        table[id(node)][length] = best
                        changed = True
        for steps in table[id(sppf.root)][length]:
            path = Path(source, steps)
            qr.graph.word_of_path(path)
            found.append(path)
            if len(found) >= max_paths:
                return found
    return found


# DOT -------------------------------------------------------------------------


def _esc(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def sppf_to_dot(sppf: Sppf, qr: QueryResult | None = None) -> str:
    """Deterministic Graphviz text for an SPPF.

    Range nodes get ids from their endpoints; other nodes are named after
    their parent range and position.  Pass ``qr`` to print original state
    and vertex names.
    """

    def state(s):
        return qr.rsm.state_name(s) if qr else f"q{s}"

    def vertex(v):
        return qr.graph.vertex_names[v] if qr else f"v{v}"

    def label(lab):
        return qr.graph.label_names[lab] if qr else str(lab)

    ids: dict[int, str] = {}
    lines = ["digraph sppf {"]
    edges = []

    def visit(node, node_id):
        ids[id(node)] = node_id
        if isinstance(node, RangeNode):
            p, u, q, w = node.range
            lines.append(f'  {node_id} [shape=box, label="R({_esc(state(p))},{_esc(vertex(u))} -> {_esc(state(q))},{_esc(vertex(w))})"];')
        elif isinstance(node, TerminalNode):
            lines.append(f'  {node_id} [shape=plaintext, label="{_esc(label(node.label))}"];')
        elif isinstance(node, NonterminalNode):
            lines.append(f'  {node_id} [shape=ellipse, label="{_esc(node.name)}"];')
        elif isinstance(node, IntermediateNode):
            a, b = node.point
            lines.append(f'  {node_id} [shape=diamond, label="I({_esc(state(a))},{_esc(vertex(b))})"];')
        else:
            lines.append(f'  {node_id} [shape=circle, label="ε"];')

    def range_id(node):
        return "r_{}_{}_{}_{}".format(*node.range)

    stack = [(sppf.root, range_id(sppf.root))]
    while stack:
        node, node_id = stack.pop()
        if id(node) in ids:
            continue
        visit(node, node_id)
        children = []
        for k, child in enumerate(node.children):
            child_id = range_id(child) if isinstance(child, RangeNode) else f"{node_id}_{k}"
            edges.append(f"  {node_id} -> {child_id};")
            children.append((child, child_id))
        stack.extend(reversed(children))
    lines += edges
    lines.append("}")
    return "\n".join(lines) + "\n"
