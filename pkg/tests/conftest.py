"""Shared fixtures: hand-built graphs with their companion rows, and seeded synthetic corpora."""
import pytest

from tupa_mrp.companion import TokenRow, companion_to_rows, rows_to_companion
from tupa_mrp.graph import Anchor, Edge, Graph, Node
from tupa_mrp.synthetic import generate_corpus


def make_rows(tokens, text):
    """(form, lemma, upos, xpos) tuples laid out left to right in text."""
    rows, cursor = [], 0
    for i, (form, lemma, upos, xpos) in enumerate(tokens, start=1):
        start = text.index(form, cursor)
        cursor = start + len(form)
        rows.append(TokenRow(i, form, lemma, upos, xpos, Anchor(start, cursor)))
    return rows


FOX_TEXT = "The fox gazed"
FOX_TOKENS = [('The', 'the', 'DET', 'DT'), ('fox', 'fox', 'NOUN', 'NN'), ('gazed', 'gaze', 'VERB', 'VBD')]

PTG_TEXT = "*Actual performance, not annualized"
PTG_TOKENS = [
    ('*', '*', 'PUNCT', 'SYM'), ('Actual', 'actual', 'ADJ', 'JJ'), ('performance', 'performance', 'NOUN', 'NN'),
    (',', ',', 'PUNCT', ','), ('not', 'not', 'PART', 'RB'), ('annualized', 'annualize', 'VERB', 'VBN'),
]

AMR_TEXT = "After graduation, John moved to New York City."
AMR_TOKENS = [
    ('After', 'after', 'ADP', 'IN'), ('graduation', 'graduate', 'NOUN', 'NN'), (',', ',', 'PUNCT', ','),
    ('John', 'John', 'PROPN', 'NNP'), ('moved', 'move', 'VERB', 'VBD'), ('to', 'to', 'ADP', 'IN'),
    ('New', 'New', 'PROPN', 'NNP'), ('York', 'York', 'PROPN', 'NNP'), ('City', 'City', 'PROPN', 'NNP'),
    ('.', '.', 'PUNCT', '.'),
]


@pytest.fixture
def fox_rows():
    return make_rows(FOX_TOKENS, FOX_TEXT)


@pytest.fixture
def fox_companion(fox_rows):
    return rows_to_companion(fox_rows, 'fox', FOX_TEXT)


@pytest.fixture
def fox_graph(fox_rows):
    """gaze -ARG1-> fox, the determiner left out."""
    return Graph(
        id='fox', framework='eds', flavor=1, input=FOX_TEXT, tops=[0],
        nodes=[
            Node(0, '_gaze_v_1', {'TENSE': 'past'}, [fox_rows[2].anchor]),
            Node(1, '_fox_n_1', {'NUM': 'sg'}, [fox_rows[1].anchor]),
        ],
        edges=[Edge(0, 1, 'ARG1')],
    )


@pytest.fixture
def ptg_rows():
    return make_rows(PTG_TOKENS, PTG_TEXT)


@pytest.fixture
def ptg_graph(ptg_rows):
    """performance is restricted by actual and by the negated annualize, which corefers back to it."""
    anchor = {row.form: row.anchor for row in ptg_rows}
    return Graph(
        id='ptg-example', framework='ptg', flavor=1, input=PTG_TEXT, tops=[0],
        nodes=[
            Node(0, 'performance', {'sempos': 'n.denot'}, [anchor['performance']]),
            Node(1, 'actual', {'sempos': 'adj.denot'}, [anchor['Actual']]),
            Node(2, 'annualize', {'sempos': 'v', 'frame': 'annualize-v1'}, [anchor['annualized']]),
            Node(3, '#Neg', {}, [anchor['not']]),
            Node(4, '#Gen', {}),
        ],
        edges=[
            Edge(0, 1, 'RSTR'),
            Edge(0, 2, 'RSTR'),
            Edge(2, 3, 'RHEM'),
            Edge(2, 4, 'ACT'),
            Edge(2, 0, 'coref.gram'),
        ],
        extra={'version': 1.1},
    )


@pytest.fixture
def amr_rows():
    return make_rows(AMR_TOKENS, AMR_TEXT)


@pytest.fixture
def amr_graph(amr_rows):
    """move-01 with a reentrant ARG0: the person who graduated is the one who moved."""
    anchor = {row.form: row.anchor for row in amr_rows}
    return Graph(
        id='amr-example', framework='amr', flavor=2, input=AMR_TEXT, tops=[0],
        nodes=[
            Node(0, 'move-01', {}, [anchor['moved']]),
            Node(1, 'after', {}, [anchor['After']]),
            Node(2, 'graduate-01', {}, [anchor['graduation']]),
            Node(3, 'person'),
            Node(4, 'name', {'op1': 'John'}, [anchor['John']]),
            Node(5, 'city'),
            Node(6, 'name', {'op1': 'New', 'op2': 'York', 'op3': 'City'},
                 [anchor['New'], anchor['York'], anchor['City']]),
        ],
        edges=[
            Edge(0, 1, 'time'),
            Edge(1, 2, 'op1'),
            Edge(0, 3, 'ARG0'),
            Edge(3, 4, 'name'),
            Edge(0, 5, 'ARG2'),
            Edge(5, 6, 'name'),
            Edge(2, 3, 'ARG0'),
        ],
    )


@pytest.fixture(scope='session')
def corpora():
    """Twenty graphs per framework, a quarter of them cyclic."""
    return {
        framework: [(graph, companion_to_rows(companion))
                    for graph, companion in generate_corpus(framework, 20, seed=7, cyclic_fraction=0.25)]
        for framework in ('ucca', 'ptg', 'amr', 'drg', 'eds', 'dm', 'psd')
    }
