import io

import pytest

from tupa_mrp.companion import (
    companion_to_rows, read_conllu, rows_to_companion, text_from_rows, write_conllu,
)
from tupa_mrp.errors import CompanionError
from tupa_mrp.graph import Anchor, Graph, Node

GOLDEN = (
    "# sent_id = fox\n"
    "# text = The fox gazed\n"
    "1\tThe\tthe\tDET\tDT\t_\t_\t_\t_\tTokenRange=0:3\n"
    "2\tfox\tfox\tNOUN\tNN\t_\t_\t_\t_\tTokenRange=4:7\n"
    "3\tgazed\tgaze\tVERB\tVBD\t_\t_\t_\t_\tTokenRange=8:13\n"
    "\n"
)


def test_three_rows_from_companion(fox_companion):
    rows = companion_to_rows(fox_companion)
    assert [r.form for r in rows] == ['The', 'fox', 'gazed']
    assert [r.index for r in rows] == [1, 2, 3]
    assert rows[2].lemma == 'gaze'


def test_rows_follow_anchor_order_not_node_order(fox_companion):
    shuffled = fox_companion.copy(nodes=list(reversed(fox_companion.nodes)))
    assert [r.form for r in companion_to_rows(shuffled)] == ['The', 'fox', 'gazed']


def test_golden_conllu(fox_companion):
    sink = io.StringIO()
    write_conllu(companion_to_rows(fox_companion), sink, sent_id='fox', text=fox_companion.input)
    assert sink.getvalue() == GOLDEN


def test_read_conllu_recovers_rows(fox_rows):
    ((sent_id, rows),) = read_conllu(io.StringIO(GOLDEN))
    assert sent_id == 'fox'
    assert rows == fox_rows


def test_read_conllu_skips_multiword_lines():
    text = "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n" + GOLDEN.split('\n', 2)[2]
    ((_, rows),) = read_conllu(io.StringIO(text))
    assert len(rows) == 3


def test_read_conllu_needs_token_range():
    with pytest.raises(CompanionError):
        read_conllu(io.StringIO("1\tThe\tthe\tDET\tDT\t_\t_\t_\t_\t_\n"))


def test_missing_lemma_is_rejected():
    graph = Graph(id='x', input='fox', nodes=[Node(0, 'fox', {'upos': 'NOUN', 'xpos': 'NN'}, [Anchor(0, 3)])])
    with pytest.raises(CompanionError):
        companion_to_rows(graph)


def test_overlapping_anchors_are_rejected():
    props = {'lemma': 'x', 'upos': 'X', 'xpos': 'X'}
    graph = Graph(id='x', input='abcdef', nodes=[Node(0, 'abc', props, [Anchor(0, 3)]),
                                                Node(1, 'cde', props, [Anchor(2, 5)])])
    with pytest.raises(CompanionError):
        companion_to_rows(graph)


def test_anchor_beyond_input_is_rejected():
    props = {'lemma': 'x', 'upos': 'X', 'xpos': 'X'}
    graph = Graph(id='x', input='ab', nodes=[Node(0, 'abc', props, [Anchor(0, 3)])])
    with pytest.raises(CompanionError):
        companion_to_rows(graph)


def test_identical_forms_keep_distinct_rows():
    props = {'lemma': 'a', 'upos': 'DET', 'xpos': 'DT'}
    graph = Graph(id='x', input='a a', nodes=[Node(0, 'a', props, [Anchor(0, 1)]), Node(1, 'a', props, [Anchor(2, 3)])])
    rows = companion_to_rows(graph)
    assert [r.index for r in rows] == [1, 2]
    assert rows[0].anchor != rows[1].anchor


def test_text_from_rows(fox_rows):
    assert text_from_rows(fox_rows) == 'The fox gazed'
    assert text_from_rows([]) == ''


def test_rows_to_companion_inverts(fox_rows):
    assert companion_to_rows(rows_to_companion(fox_rows, 'fox', 'The fox gazed')) == fox_rows
