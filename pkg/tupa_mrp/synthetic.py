"""
Deterministic miniature corpora, one per framework profile.

Sentences come from a small built-in lexicon ("The quick fox chased the dogs in New
York."). Each framework builder turns the same sentence plan into a graph of that
framework's shape, and the companion graph carries the token rows.
"""
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .companion import TokenRow, rows_to_companion
from .constraints import flavor_for
from .errors import UnknownFrameworkError
from .graph import Anchor, Edge, Graph, Node

FRAMEWORKS = ('ucca', 'ptg', 'amr', 'drg', 'eds', 'dm', 'psd')

NOUNS = [('fox', 'fox'), ('dogs', 'dog'), ('cat', 'cat'), ('children', 'child'), ('bird', 'bird'),
         ('teachers', 'teacher'), ('river', 'river'), ('book', 'book')]
VERBS = [('gazed', 'gaze'), ('chased', 'chase'), ('saw', 'see'), ('found', 'find'), ('likes', 'like'),
         ('watched', 'watch')]
ADJECTIVES = ['quick', 'old', 'brown', 'small']
DETERMINERS = [('the', 'the'), ('a', 'a')]
NAMES = [('New', 'York'), ('Los', 'Angeles'), ('San', 'Francisco')]


@dataclass
class Sentence:
    rows: List[TokenRow]
    text: str
    slots: Dict[str, int] = field(default_factory=dict)
    name: Tuple[int, ...] = ()

    def has(self, slot: str) -> bool:
        return slot in self.slots

    def row(self, slot: str) -> TokenRow:
        return self.rows[self.slots[slot]]


def make_sentence(rng: random.Random) -> Sentence:
    tokens: List[Tuple[str, str, str, str, str]] = []

    def add(slot, form, lemma, upos, xpos):
        tokens.append((slot, form, lemma, upos, xpos))

    det, det_lemma = rng.choice(DETERMINERS)
    add('subj_det', det.capitalize(), det_lemma, 'DET', 'DT')
    if rng.random() < 0.5:
        adjective = rng.choice(ADJECTIVES)
        add('subj_adj', adjective, adjective, 'ADJ', 'JJ')
    form, lemma = rng.choice(NOUNS)
    add('subj', form, lemma, 'NOUN', 'NN' if form == lemma else 'NNS')
    form, lemma = rng.choice(VERBS)
    add('verb', form, lemma, 'VERB', 'VBZ' if form.endswith('s') else 'VBD')
    if rng.random() < 0.7:
        det, det_lemma = rng.choice(DETERMINERS)
        add('obj_det', det, det_lemma, 'DET', 'DT')
        if rng.random() < 0.4:
            adjective = rng.choice(ADJECTIVES)
            add('obj_adj', adjective, adjective, 'ADJ', 'JJ')
        form, lemma = rng.choice(NOUNS)
        add('obj', form, lemma, 'NOUN', 'NN' if form == lemma else 'NNS')
    if rng.random() < 0.3:
        add('prep', 'in', 'in', 'ADP', 'IN')
        first, second = rng.choice(NAMES)
        add('name1', first, first, 'PROPN', 'NNP')
        add('name2', second, second, 'PROPN', 'NNP')
    add('punct', '.', '.', 'PUNCT', '.')

    rows, slots, text = [], {}, ''
    for i, (slot, form, lemma, upos, xpos) in enumerate(tokens):
        if text and upos != 'PUNCT':
            text += ' '
        start = len(text)
        text += form
        rows.append(TokenRow(i + 1, form, lemma, upos, xpos, Anchor(start, len(text))))
        slots[slot] = i
    name = tuple(slots[s] for s in ('name1', 'name2') if s in slots)
    return Sentence(rows, text, slots, name)


class _Builder:
    """Collects nodes and edges with sequential integer ids."""

    def __init__(self, sentence: Sentence):
        self.sentence = sentence
        self.nodes: List[Node] = []
        self.edges: List[Edge] = []

    def node(self, label: Optional[str] = None, slots=(), properties=None, positions=()) -> int:
        anchors = [self.sentence.row(s).anchor for s in slots] + [self.sentence.rows[p].anchor for p in positions]
        self.nodes.append(Node(len(self.nodes), label, dict(properties or {}), anchors))
        return len(self.nodes) - 1

    def edge(self, source: int, target: int, label: Optional[str], attributes=None):
        self.edges.append(Edge(source, target, label, dict(attributes or {})))

    def lemma(self, slot: str) -> str:
        return self.sentence.row(slot).lemma


def _ucca(b: _Builder, s: Sentence, rng: random.Random, cyclic: bool) -> List[int]:
    scene = b.node()
    leaves = {slot: b.node(slots=[slot]) for slot in s.slots}

    def noun_phrase(prefix: str, label: str) -> int:
        unit = b.node()
        b.edge(scene, unit, label)
        b.edge(unit, leaves[prefix], 'C')
        if s.has(f'{prefix}_adj'):
            b.edge(unit, leaves[f'{prefix}_adj'], 'E')
        b.edge(unit, leaves[f'{prefix}_det'], 'F')
        return unit

    subject = noun_phrase('subj', 'A')
    b.edge(scene, leaves['verb'], 'P')
    if s.has('obj'):
        noun_phrase('obj', 'A')
    if s.has('prep'):
        place = b.node()
        b.edge(scene, place, 'A')
        b.edge(place, leaves['prep'], 'R')
        b.edge(place, leaves['name1'], 'C')
        b.edge(place, leaves['name2'], 'C')
    b.edge(scene, leaves['punct'], 'U')
    if s.has('subj_adj') and rng.random() < 0.5:
        b.edge(scene, leaves['subj_adj'], 'D', {'remote': True})
    if cyclic:
        b.edge(subject, scene, 'H')
    return [scene]


def _ptg(b: _Builder, s: Sentence, rng: random.Random, cyclic: bool) -> List[int]:
    verb = b.node(b.lemma('verb'), ['verb'], {'sempos': 'v', 'frame': f"{b.lemma('verb')}-v1"})
    actor = b.node(b.lemma('subj'), ['subj'], {'sempos': 'n.denot'})
    b.edge(verb, actor, 'ACT')
    if s.has('subj_adj'):
        b.edge(actor, b.node(b.lemma('subj_adj'), ['subj_adj'], {'sempos': 'adj.denot'}), 'RSTR')
    if s.has('obj'):
        patient = b.node(b.lemma('obj'), ['obj'], {'sempos': 'n.denot'})
        b.edge(verb, patient, 'PAT')
        if s.has('obj_adj'):
            b.edge(patient, b.node(b.lemma('obj_adj'), ['obj_adj'], {'sempos': 'adj.denot'}), 'RSTR')
        if rng.random() < 0.25:
            b.edge(verb, patient, 'EFF')
    if s.has('prep'):
        place = b.node(' '.join(s.rows[i].lemma for i in s.name), positions=s.name, properties={'sempos': 'n.denot'})
        b.edge(verb, place, 'LOC', {'member': True} if rng.random() < 0.3 else None)
    if cyclic:
        b.edge(actor, verb, 'coref.gram')
    return [verb]


def _amr(b: _Builder, s: Sentence, rng: random.Random, cyclic: bool) -> List[int]:
    verb = b.node(f"{b.lemma('verb')}-01", ['verb'], {'polarity': '-'} if rng.random() < 0.1 else None)
    agent = b.node(b.lemma('subj'), ['subj'])
    b.edge(verb, agent, 'ARG0')
    if s.has('subj_adj'):
        b.edge(agent, b.node(b.lemma('subj_adj'), ['subj_adj']), 'mod')
    if s.has('obj'):
        patient = b.node(b.lemma('obj'), ['obj'])
        b.edge(verb, patient, 'ARG1')
        if s.has('obj_adj'):
            b.edge(patient, b.node(b.lemma('obj_adj'), ['obj_adj']), 'mod')
        if rng.random() < 0.3:
            b.edge(patient, agent, 'poss')
    if s.has('prep'):
        city = b.node('city')
        b.edge(verb, city, 'location')
        ops = {f'op{k}': s.rows[i].form for k, i in enumerate(s.name, start=1)}
        b.edge(city, b.node('name', positions=s.name, properties=ops), 'name')
    if cyclic:
        b.edge(agent, verb, 'ARG0-of')
    return [verb]


def _drg(b: _Builder, s: Sentence, rng: random.Random, cyclic: bool) -> List[int]:
    box = b.node('box')
    event = b.node(f"{b.lemma('verb')}.v.01")
    agent = b.node(f"{b.lemma('subj')}.n.01")
    b.edge(box, event, 'in')
    b.edge(box, agent, 'in')
    b.edge(event, agent, 'Agent')
    if s.has('subj_adj'):
        b.edge(agent, b.node(f"{b.lemma('subj_adj')}.a.01"), 'Attribute')
    if s.has('obj'):
        theme = b.node(f"{b.lemma('obj')}.n.01")
        b.edge(box, theme, 'in')
        b.edge(event, theme, 'Theme')
    if s.has('prep'):
        city = b.node('city.n.01')
        b.edge(event, city, 'Location')
        b.edge(city, b.node('"' + '_'.join(s.rows[i].lemma.lower() for i in s.name) + '"'), 'Name')
    if cyclic:
        b.edge(agent, event, 'Topic')
    return [box]


def _eds(b: _Builder, s: Sentence, rng: random.Random, cyclic: bool) -> List[int]:
    tense = 'pres' if s.row('verb').xpos == 'VBZ' else 'past'
    verb = b.node(f"_{b.lemma('verb')}_v_1", ['verb'], {'TENSE': tense})

    def noun_phrase(prefix: str) -> int:
        number = 'pl' if s.row(prefix).xpos == 'NNS' else 'sg'
        noun = b.node(f"_{b.lemma(prefix)}_n_1", [prefix], {'NUM': number})
        b.edge(b.node(f"_{b.lemma(f'{prefix}_det')}_q", [f'{prefix}_det']), noun, 'BV')
        if s.has(f'{prefix}_adj'):
            b.edge(b.node(f"_{b.lemma(f'{prefix}_adj')}_a_1", [f'{prefix}_adj']), noun, 'ARG1')
        return noun

    subject = noun_phrase('subj')
    b.edge(verb, subject, 'ARG1')
    if s.has('obj'):
        b.edge(verb, noun_phrase('obj'), 'ARG2')
    if s.has('prep'):
        place = b.node('named', positions=s.name, properties={'CARG': ' '.join(s.rows[i].form for i in s.name)})
        preposition = b.node('_in_p', ['prep'])
        b.edge(preposition, verb, 'ARG1')
        b.edge(preposition, place, 'ARG2')
    if cyclic:
        b.edge(subject, verb, 'ARG2')
    return [verb]


def _bilexical(labels: Dict[str, str]):
    def build(b: _Builder, s: Sentence, rng: random.Random, cyclic: bool) -> List[int]:
        ids = {}
        for slot in s.slots:
            if slot == 'punct':
                continue
            row = s.row(slot)
            ids[slot] = b.node(row.lemma, [slot], {'pos': row.xpos, 'frame': f"{row.upos.lower()}:x"})
        b.edge(ids['verb'], ids['subj'], labels['subj'])
        for prefix in ('subj', 'obj'):
            if prefix not in ids:
                continue
            if labels.get('det'):
                b.edge(ids[f'{prefix}_det'], ids[prefix], labels['det'])
            if f'{prefix}_adj' in ids:
                b.edge(ids[f'{prefix}_adj'], ids[prefix], labels['adj'])
        if 'obj' in ids:
            b.edge(ids['verb'], ids['obj'], labels['obj'])
        if 'prep' in ids:
            b.edge(ids['prep'], ids['verb'], labels['prep'])
            b.edge(ids['prep'], ids['name2'], labels['pobj'])
            b.edge(ids['name1'], ids['name2'], labels['name'])
        if cyclic:
            b.edge(ids['subj'], ids['verb'], labels['back'])
        return [ids['verb']]
    return build


BUILDERS = {
    'ucca': _ucca,
    'ptg': _ptg,
    'amr': _amr,
    'drg': _drg,
    'eds': _eds,
    'dm': _bilexical({'subj': 'ARG1', 'obj': 'ARG2', 'det': 'BV', 'adj': 'ARG1', 'prep': 'ARG1',
                      'pobj': 'ARG2', 'name': 'compound', 'back': 'mwe'}),
    'psd': _bilexical({'subj': 'ACT-arg', 'obj': 'PAT-arg', 'det': None, 'adj': 'RSTR', 'prep': 'LOC',
                       'pobj': 'LOC', 'name': 'NE', 'back': 'CPR'}),
}


def generate_corpus(framework: str, size: int, seed: int = 1,
                    cyclic_fraction: float = 0.0) -> List[Tuple[Graph, Graph]]:
    """(graph, companion) pairs; exactly round(size * cyclic_fraction) graphs carry a planted cycle."""
    key = framework.lower()
    if key not in BUILDERS:
        raise UnknownFrameworkError(framework)
    rng = random.Random(seed)
    cyclic = set(rng.sample(range(size), round(size * cyclic_fraction))) if size else set()
    corpus = []
    for i in range(size):
        sentence = make_sentence(rng)
        builder = _Builder(sentence)
        tops = BUILDERS[key](builder, sentence, rng, i in cyclic)
        graph_id = f"{key}-{seed}-{i:04d}"
        graph = Graph(id=graph_id, framework=key, flavor=flavor_for(key), input=sentence.text,
                      tops=tops, nodes=builder.nodes, edges=builder.edges, extra={'version': 1.1})
        corpus.append((graph, rows_to_companion(sentence.rows, graph_id, sentence.text)))
    return corpus


def generate_cyclic_corpus(size: int, cyclic_count: int, seed: int = 1, framework: str = 'ptg') -> List[Graph]:
    """Three-node chains; cyclic_count of them get a back edge closing a cycle."""
    rng = random.Random(seed)
    cyclic = set(rng.sample(range(size), cyclic_count))
    graphs = []
    for i in range(size):
        nodes = [Node(k, f"n{k}") for k in range(3)]
        edges = [Edge(0, 1, 'a'), Edge(1, 2, 'b')]
        if i in cyclic:
            edges.append(Edge(2, rng.choice([0, 1]), 'back'))
        graphs.append(Graph(id=f"c{i:05d}", framework=framework, flavor=flavor_for(framework),
                            input='', tops=[0], nodes=nodes, edges=edges))
    return graphs
