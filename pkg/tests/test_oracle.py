import pytest

from tupa_mrp.companion import companion_to_rows
from tupa_mrp.constraints import profile_for
from tupa_mrp.errors import IllegalTransition, OracleError
from tupa_mrp.evaluate import score_pair
from tupa_mrp.graph import Edge, Graph, Node
from tupa_mrp.irep import ANCHOR, IEdge, IGraph, INode, from_intermediate, igraph_signature, to_intermediate
from tupa_mrp.oracle import EXHAUSTIVE, INCREMENTAL, Oracle, derive, gold_sequence, replay, verify
from tupa_mrp.synthetic import FRAMEWORKS, generate_corpus
from tupa_mrp.transitions import FINISH, SHIFT, Transition, format_sequence


@pytest.fixture
def crossing(fox_rows):
    """'fox' heads 'The'; built left to right, the head has to sink below 'The' to reach the root."""
    rows = fox_rows[:2]
    graph = Graph(id='crossing', framework='ucca', input='The fox', tops=[1],
                  nodes=[Node(0, None, {}, [rows[0].anchor]), Node(1, None, {}, [rows[1].anchor])],
                  edges=[Edge(1, 0, 'A')])
    return graph, rows


def test_crossing_fixture_needs_swap(crossing):
    graph, rows = crossing
    igraph = to_intermediate(graph, rows)
    seq = gold_sequence(igraph, rows)
    assert format_sequence(seq).splitlines() == [
        'Shift', 'Node\t<ANCHOR>', 'Reduce', 'Shift', 'Shift', 'Node\t<ANCHOR>', 'Reduce', 'Shift',
        'LeftEdge\tA', 'Swap', 'RightEdge\t<TOP>', 'Reduce', 'Shift', 'Reduce', 'Finish',
    ]
    assert verify(igraph, rows)


def test_exhaustive_strategy_shifts_everything_first(crossing):
    graph, rows = crossing
    igraph = to_intermediate(graph, rows)
    oracle = Oracle(igraph, rows, EXHAUSTIVE)
    seq = oracle.sequence()
    assert seq[:2] == [Transition(SHIFT), Transition(SHIFT)]
    replayed = replay(rows, seq, igraph.meta)
    assert igraph_signature(igraph, oracle.node_map.get) == igraph_signature(replayed)


def test_derive_prefers_incremental(crossing):
    graph, rows = crossing
    oracle = derive(to_intermediate(graph, rows), rows)
    assert oracle.strategy == INCREMENTAL
    assert oracle.state.terminal


def test_unknown_strategy(fox_graph, fox_rows):
    with pytest.raises(OracleError):
        Oracle(to_intermediate(fox_graph, fox_rows), fox_rows, 'greedy')


def test_ptg_example_replays(ptg_graph, ptg_rows):
    igraph = to_intermediate(ptg_graph, ptg_rows)
    assert verify(igraph, ptg_rows)


def test_amr_example_replays_with_reentrancy(amr_graph, amr_rows):
    igraph = to_intermediate(amr_graph, amr_rows)
    seq = gold_sequence(igraph, amr_rows)
    replayed = replay(amr_rows, seq, igraph.meta)
    graph = from_intermediate(replayed, amr_rows)
    assert score_pair(amr_graph, graph).overall.f1 == 1.0
    assert any(e.label == 'ARG0' for e in graph.edges if graph.node(e.source).label == 'graduate-01')


def test_node_map_covers_every_gold_node(amr_graph, amr_rows):
    igraph = to_intermediate(amr_graph, amr_rows)
    oracle = Oracle(igraph, amr_rows)
    oracle.sequence()
    assert sorted(oracle.node_map) == sorted(n.id for n in igraph.nodes)
    assert not oracle.pending_edges()


def test_states_yield_gold_path(fox_graph, fox_rows):
    igraph = to_intermediate(fox_graph, fox_rows)
    pairs = list(Oracle(igraph, fox_rows).states())
    assert [t for _, t in pairs] == gold_sequence(igraph, fox_rows)
    assert all(not state.terminal for state, _ in pairs)


def test_sequence_is_deterministic(ptg_graph, ptg_rows):
    igraph = to_intermediate(ptg_graph, ptg_rows)
    assert gold_sequence(igraph, ptg_rows) == gold_sequence(igraph, ptg_rows)


def test_empty_graph():
    igraph = IGraph(nodes=[INode(0, is_virtual=True)], root=0, terminals=[])
    assert gold_sequence(igraph, []) == [Transition(FINISH)]


def test_invalid_gold_is_rejected():
    igraph = IGraph(
        nodes=[INode(0, is_virtual=True), INode(1, is_virtual=True), INode(2, 'a'), INode(3, 'b')],
        edges=[IEdge(0, 2, '<TOP>'), IEdge(2, 3, 'x'), IEdge(3, 2, 'y')],
        root=0, terminals=[1],
    )
    with pytest.raises(OracleError):
        Oracle(igraph)


def test_unreachable_node_is_rejected():
    igraph = IGraph(
        nodes=[INode(0, is_virtual=True), INode(1, is_virtual=True), INode(2, 'a'), INode(3, 'floating')],
        edges=[IEdge(0, 2, '<TOP>'), IEdge(2, 1, ANCHOR)],
        root=0, terminals=[1],
    )
    with pytest.raises(OracleError):
        Oracle(igraph)


def test_rows_must_match_terminals(fox_graph, fox_rows):
    igraph = to_intermediate(fox_graph, fox_rows)
    with pytest.raises(OracleError):
        Oracle(igraph, fox_rows[:2])


def test_replay_reports_position(fox_graph, fox_rows):
    igraph = to_intermediate(fox_graph, fox_rows)
    seq = gold_sequence(igraph, fox_rows)
    broken = seq[:3] + [Transition(FINISH)] + seq[3:]
    with pytest.raises(IllegalTransition) as info:
        replay(fox_rows, broken)
    assert info.value.index == 3


def test_replay_needs_finish(fox_graph, fox_rows):
    igraph = to_intermediate(fox_graph, fox_rows)
    with pytest.raises(IllegalTransition):
        replay(fox_rows, gold_sequence(igraph, fox_rows)[:-1])


@pytest.mark.parametrize('framework', FRAMEWORKS)
def test_generated_graphs_replay(corpora, framework):
    profile = profile_for(framework)
    for graph, rows in corpora[framework]:
        assert verify(to_intermediate(graph, rows, profile), rows), graph.id


@pytest.mark.slow
@pytest.mark.parametrize('framework', FRAMEWORKS)
def test_oracle_exactness_at_scale(framework):
    profile = profile_for(framework)
    for graph, companion in generate_corpus(framework, 500, seed=11, cyclic_fraction=0.3):
        rows = companion_to_rows(companion)
        assert verify(to_intermediate(graph, rows, profile), rows), graph.id
