"""Edge-labelled directed multigraph with interned vertices and labels."""

from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, TextIO


class GraphParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class InvalidPathError(ValueError):
    pass


@dataclass(frozen=True)
class Path:
    """A walk in the graph: a start vertex and ``(label, target)`` steps."""

    start: int
    steps: tuple[tuple[int, int], ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def end(self) -> int:
        return self.steps[-1][1] if self.steps else self.start

    def vertices(self) -> list[int]:
        return [self.start] + [v for _, v in self.steps]


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable labelled multigraph.

    Vertices and labels are dense integer ids; ``vertex_names`` and
    ``label_names`` map them back to the tokens they were loaded from.
    Duplicate edges are kept.
    """

    vertex_names: tuple[str, ...]
    label_names: tuple[str, ...]
    edges: tuple[tuple[int, int, int], ...]
    _adjacency: dict = field(init=False, repr=False)
    _vertex_ids: dict = field(init=False, repr=False)
    _label_ids: dict = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.vertex_names)
        adjacency: dict[tuple[int, int], list[int]] = {}
        for u, lab, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge endpoint out of range: {(u, lab, v)}")
            if not 0 <= lab < len(self.label_names):
                raise ValueError(f"unknown label id {lab}")
            adjacency.setdefault((u, lab), []).append(v)
        object.__setattr__(self, "_adjacency", adjacency)
        object.__setattr__(self, "_vertex_ids", {name: i for i, name in enumerate(self.vertex_names)})
        object.__setattr__(self, "_label_ids", {name: i for i, name in enumerate(self.label_names)})
        if len(self._vertex_ids) != n or len(self._label_ids) != len(self.label_names):
            raise ValueError("vertex and label names must be unique")

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[object, object, object]], vertices: Iterable[object] = ()) -> "Graph":
        """Build a graph from ``(source, label, target)`` name triples.

        Names are interned in order of first appearance; ``vertices`` can
        pre-register isolated vertices.
        """
        vids: dict[str, int] = {}
        lids: dict[str, int] = {}
        for v in vertices:
            vids.setdefault(str(v), len(vids))
        triples = []
        for u, lab, v in edges:
            u_id = vids.setdefault(str(u), len(vids))
            l_id = lids.setdefault(str(lab), len(lids))
            v_id = vids.setdefault(str(v), len(vids))
            triples.append((u_id, l_id, v_id))
        return cls(tuple(vids), tuple(lids), tuple(triples))

    @property
    def vertex_count(self) -> int:
        return len(self.vertex_names)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def vertex_id(self, name: object) -> int:
        return self._vertex_ids[str(name)]

    def label_id(self, name: str) -> int | None:
        return self._label_ids.get(name)

    def has_vertex(self, name: object) -> bool:
        return str(name) in self._vertex_ids

    def outgoing(self, v: int, label: int | None) -> list[int]:
        if label is None:
            return []
        return self._adjacency.get((v, label), [])

    def out_edges(self, v: int) -> list[tuple[int, int]]:
        """All ``(label, target)`` pairs leaving ``v``, ordered by label id."""
        return [(lab, t) for lab in range(len(self.label_names)) for t in self._adjacency.get((v, lab), ())]

    def label_stats(self) -> dict[str, int]:
        counts = Counter(lab for _, lab, _ in self.edges)
        return {self.label_names[i]: counts[i] for i in range(len(self.label_names))}

    def stats(self) -> dict:
        return {
            "vertices": self.vertex_count,
            "edges": self.edge_count,
            "labels": self.label_stats(),
        }

    def word_of_path(self, path: Path) -> list[int]:
        """Labels along ``path``; raises :class:`InvalidPathError` on a non-edge."""
        if not 0 <= path.start < self.vertex_count:
            raise InvalidPathError(f"start vertex {path.start} not in graph")
        cur = path.start
        word = []
        for lab, nxt in path.steps:
            if nxt not in self._adjacency.get((cur, lab), ()):
                raise InvalidPathError(f"no edge {cur} -{lab}-> {nxt}")
            word.append(lab)
            cur = nxt
        return word

    def format_path(self, path: Path) -> str:
        parts = [self.vertex_names[path.start]]
        for lab, v in path.steps:
            parts.append(f"-{self.label_names[lab]}->")
            parts.append(self.vertex_names[v])
        return " ".join(parts)

    def to_edge_list(self) -> str:
        return "".join(
            f"{self.vertex_names[u]} {self.label_names[lab]} {self.vertex_names[v]}\n" for u, lab, v in self.edges
        )


def load_edge_list(stream: TextIO | str, add_inverse: bool = False, inverse_suffix: str = "_r") -> Graph:
    """Read ``source label target`` lines. Blank lines and ``#`` comments are skipped.

    With ``add_inverse`` every edge ``(u, l, v)`` also yields ``(v, l + inverse_suffix, u)``.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    triples = []
    for line_no, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) != 3:
            raise GraphParseError(line_no, f"expected 3 tokens, got {len(tokens)}")
        triples.append(tuple(tokens))
    if add_inverse:
        triples = triples + [(v, lab + inverse_suffix, u) for u, lab, v in triples]
    return Graph.from_edges(triples)


def load_edge_list_file(path: str, add_inverse: bool = False, inverse_suffix: str = "_r") -> Graph:
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh, add_inverse=add_inverse, inverse_suffix=inverse_suffix)
