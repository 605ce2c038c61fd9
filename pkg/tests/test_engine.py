import pytest
from hypothesis import given, settings, strategies as st

from cfpq import grammar as gr
from cfpq.engine import (
    EMPTY,
    EPSILON,
    Descriptor,
    GllEngine,
    GssEdge,
    IntermediatePoint,
    Nonterminal,
    Range,
    Terminal,
    initialize,
    run,
    run_rpq,
)
from cfpq.grammar import parse_grammar_text, parse_regex
from cfpq.graph import Graph
from cfpq.oracle import CykTable, as_cnf
from cfpq.results import range_paths
from cfpq.rsm import extend_rsm, build_rsm
from helpers import CFG_FAMILIES, compile_text
from strategies import small_graphs

A, B = 0, 1  # label ids in the worked graph
V0, V1 = 0, 1

WORKED_INDEX = {
    ((0, V0), (1, V0)): {Terminal(A)},
    ((0, V0), (2, V0)): {IntermediatePoint(1, V0)},
    ((0, V0), (2, V1)): {IntermediatePoint(1, V0)},
    ((0, V0), (3, V0)): {IntermediatePoint(2, V1)},
    ((0, V0), (3, V1)): {IntermediatePoint(1, V0), IntermediatePoint(2, V0)},
    ((1, V0), (2, V0)): {Nonterminal("S")},
    ((1, V0), (2, V1)): {Nonterminal("S")},
    ((1, V0), (3, V1)): {Terminal(B)},
    ((2, V0), (3, V1)): {Terminal(B)},
    ((2, V1), (3, V0)): {Terminal(B)},
    ((4, V0), (5, V0)): {Nonterminal("S")},
    ((4, V0), (5, V1)): {Nonterminal("S")},
}


@pytest.fixture
def engine(rsm, graph):
    return initialize(rsm, graph, [V0])


def test_worked_example_pairs(rsm, graph):
    qr = run(rsm, graph, [V0])
    assert qr.pairs() == {(V0, V1), (V0, V0)}
    assert qr.diagnostics["descriptor_count"] == 9


def test_worked_example_index(rsm, graph):
    qr = run(rsm, graph, [V0])
    assert {k: set(v) for k, v in qr.index.cells().items()} == WORKED_INDEX


def test_worked_walkthrough(engine):
    # step 1: the start descriptor
    d1 = Descriptor(4, V0, (4, V0), EMPTY)
    assert list(engine.queue) == [d1]
    # step 2: call S from q4
    assert engine.step_nonterminal(d1) == [Descriptor(0, V0, (0, V0), EMPTY)]
    assert engine.gss[(0, V0)].edges == {GssEdge(5, EMPTY, (4, V0))}
    # step 3: read a
    d3 = Descriptor(0, V0, (0, V0), EMPTY)
    r01 = Range(0, V0, 1, V0)
    assert engine.step_terminal(d3) == [Descriptor(1, V0, (0, V0), r01)]
    assert engine.index[((0, V0), (1, V0))] == {Terminal(A)}
    # step 4: recursive call creates a self-loop; the re-created descriptor is a duplicate
    engine.add_descriptor(d3)
    d4 = Descriptor(1, V0, (0, V0), r01)
    assert engine.step_nonterminal(d4) == [d3]
    assert GssEdge(2, r01, (0, V0)) in engine.gss[(0, V0)].edges
    assert engine.add_descriptor(d3) is False
    # step 5: reaching q3 at v1 returns to both callers
    d5 = Descriptor(3, V1, (0, V0), Range(0, V0, 3, V1))
    assert set(engine.step_final(d5)) == {
        Descriptor(2, V1, (0, V0), Range(0, V0, 2, V1)),
        Descriptor(5, V1, (4, V0), Range(4, V0, 5, V1)),
    }
    assert Nonterminal("S") in engine.index[((4, V0), (5, V1))]
    assert Nonterminal("S") in engine.index[((1, V0), (2, V1))]
    assert IntermediatePoint(1, V0) in engine.index[((0, V0), (2, V1))]
    # step 6: read b back to v0
    d6 = Descriptor(2, V1, (0, V0), Range(0, V0, 2, V1))
    assert engine.step_terminal(d6) == [Descriptor(3, V0, (0, V0), Range(0, V0, 3, V0))]
    assert engine.index[((2, V1), (3, V0))] == {Terminal(B)}
    assert IntermediatePoint(2, V1) in engine.index[((0, V0), (3, V0))]
    # step 7: the second accepted configuration
    d7 = Descriptor(3, V0, (0, V0), Range(0, V0, 3, V0))
    assert Descriptor(5, V0, (4, V0), Range(4, V0, 5, V0)) in engine.step_final(d7)
    assert Nonterminal("S") in engine.index[((4, V0), (5, V0))]
    # step 8: resubmission is rejected
    assert engine.add_descriptor(d5) is True
    assert engine.add_descriptor(d5) is False


def test_step_terminal_without_moves(engine):
    assert engine.step_terminal(Descriptor(3, V0, (0, V0), Range(0, V0, 3, V0))) == []


def test_call_without_pops_has_no_contractions(engine):
    out = engine.step_nonterminal(Descriptor(4, V0, (4, V0), EMPTY))
    assert out == [Descriptor(0, V0, (0, V0), EMPTY)]


def test_final_without_edges_stores_pop(rsm, graph):
    e = GllEngine(rsm, graph)
    node = e.gss_node(0, V1)
    r = Range(0, V1, 3, V0)
    assert e.step_final(Descriptor(3, V0, node.key, r)) == []
    assert r in node.stored_pops


def test_empty_and_double_starts(rsm, graph):
    assert run(rsm, graph, []).pairs() == set()
    e = initialize(rsm, graph, [V0, V1])
    assert len(e.queue) == 2 and len(e.gss) == 2


def test_unknown_start(rsm, graph):
    with pytest.raises(ValueError):
        initialize(rsm, graph, [7])


def test_epsilon_grammar():
    g = Graph.from_edges([("x", "a", "y")])
    qr = run(compile_text("S -> eps"), g, [0, 1])
    assert qr.pairs() == {(0, 0), (1, 1)}
    assert EPSILON in qr.index[((0, 0), (0, 0))]


def test_run_rpq(graph):
    assert run_rpq(parse_regex("(a | b)*"), graph, [V0]).pairs() == {(V0, V0), (V0, V1)}
    assert run_rpq(parse_regex("a* b*"), graph, [V0]).pairs() == {(V0, V0), (V0, V1)}
    assert run_rpq(parse_regex("(a | b | c)+"), Graph.from_edges([]), []).pairs() == set()


def test_bad_order(rsm, graph):
    with pytest.raises(ValueError):
        GllEngine(rsm, graph, order="random")


def test_streaming_restart(rsm, graph):
    """Adding a start after a run extends the result."""
    seen = []
    e = GllEngine(rsm, graph, on_accept=lambda u, v: seen.append((u, v)))
    e.add_start(V1)
    e.run()
    assert seen == []
    e.add_start(V0)
    e.run()
    assert sorted(seen) == [(V0, V0), (V0, V1)]


# properties ----------------------------------------------------------------

families = st.sampled_from(sorted(CFG_FAMILIES.values()))


def _cells(index):
    return {k: set(v) for k, v in index.cells().items()}


def _run_instrumented(rsm, graph, starts, order="fifo"):
    """Run step by step, checking that index cells and stored pops only grow."""
    e = initialize(rsm, graph, starts, order)
    pop = e.queue.popleft if order == "fifo" else e.queue.pop
    before_cells, before_pops = {}, {}
    while e.queue:
        for created in e.process(pop()):
            e.add_descriptor(created)
        cells = _cells(e.index)
        pops = {k: set(n.stored_pops) for k, n in e.gss.items()}
        assert all(before_cells[k] <= cells.get(k, set()) for k in before_cells)
        assert all(before_pops[k] <= pops.get(k, set()) for k in before_pops)
        before_cells, before_pops = cells, pops
    return e


@settings(max_examples=80, deadline=None)
@given(small_graphs(), families)
def test_engine_invariants(graph, text):
    rsm = compile_text(text)
    starts = range(graph.vertex_count)
    e = _run_instrumented(rsm, graph, starts)
    delta = rsm.delta
    for ((q0, v0), (q1, v1)), entries in e.index.cells().items():
        for entry in entries:
            if isinstance(entry, Terminal):
                assert delta[(q0, gr.T(graph.label_names[entry.label]))] == q1
                assert v1 in graph.outgoing(v0, entry.label)
            elif isinstance(entry, Nonterminal):
                assert delta[(q0, gr.N(entry.name))] == q1
            elif isinstance(entry, IntermediatePoint):
                mid = (entry.state, entry.vertex)
                assert e.index[((q0, v0), mid)] and e.index[(mid, (q1, v1))]
    assert all(node.key == key for key, node in e.gss.items())
    assert len(e.handled) == len(e.seen)


@settings(max_examples=60, deadline=None)
@given(small_graphs(), families)
def test_order_independence(graph, text):
    rsm = compile_text(text)
    starts = range(graph.vertex_count)
    fifo, lifo = run(rsm, graph, starts, "fifo"), run(rsm, graph, starts, "lifo")
    assert fifo.pairs() == lifo.pairs()
    assert fifo.index == lifo.index


@settings(max_examples=40, deadline=None)
@given(small_graphs(max_vertices=4, max_edges=6), families)
def test_nonterminal_entries_have_derivable_witnesses(graph, text):
    g = parse_grammar_text(text)
    rsm = extend_rsm(build_rsm(g))
    qr = run(rsm, graph, range(graph.vertex_count))
    cyk = CykTable(as_cnf(g))
    box = rsm.boxes["S"]
    for ((q0, u), (q1, w)), entries in qr.index.cells().items():
        if Nonterminal("S") not in entries:
            continue
        bodies = [Range(box.start, u, f, w) for f in sorted(box.finals)]
        witnesses = [p for r in bodies for p in range_paths(qr, r, max_paths=1, max_length=40)]
        assert witnesses, (u, w)
        word = [graph.label_names[lab] for lab in graph.word_of_path(witnesses[0])]
        assert witnesses[0].end == w and cyk.accepts(word)
