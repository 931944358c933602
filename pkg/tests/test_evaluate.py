import json
import random
from itertools import permutations

import pytest

from tupa_mrp.errors import MrpValidationError
from tupa_mrp.evaluate import (
    CLASSES, _Matcher, best_correspondence, format_report, score_corpus, score_pair, tuples,
)
from tupa_mrp.graph import Anchor, Edge, Graph, Node

TEXT = "a b c d e f"


def random_graph(rng, gid, size):
    ids = rng.sample(range(100), size)
    nodes = []
    for node_id in ids:
        props = {'p': rng.choice('xy')} if rng.random() < 0.3 else {}
        anchors = [Anchor(2 * k, 2 * k + 1) for k in [rng.randrange(6)]] if rng.random() < 0.5 else []
        nodes.append(Node(node_id, rng.choice(['u', 'v', 'w', None]), props, anchors))
    edges = []
    for _ in range(rng.randint(0, size + 1)):
        source, target = rng.choice(ids), rng.choice(ids)
        if source != target:
            attrs = {'remote': 'true'} if rng.random() < 0.2 else {}
            edges.append(Edge(source, target, rng.choice('AB'), attrs))
    tops = [ids[0]] if rng.random() < 0.8 else []
    return Graph(id=gid, framework='eds', input=TEXT, tops=tops, nodes=nodes, edges=edges)


def brute_force(gold, system):
    """Largest tuple overlap over every maximal injective correspondence."""
    gold_bag = tuples(gold)
    gold_ids = [n.id for n in gold.nodes]
    sys_ids = [n.id for n in system.nodes]
    best = 0
    if len(sys_ids) <= len(gold_ids):
        candidates = (dict(zip(sys_ids, p)) for p in permutations(gold_ids, len(sys_ids)))
    else:
        candidates = (dict(zip(p, gold_ids)) for p in permutations(sys_ids, len(gold_ids)))
    for correspondence in candidates:
        bag = tuples(system, correspondence)
        best = max(best, sum(len(gold_bag.get(c) & bag.get(c)) for c in CLASSES))
    return best


@pytest.fixture(scope='module')
def pairs():
    rng = random.Random(5)
    return [(random_graph(rng, i, rng.randint(1, 4)), random_graph(rng, i, rng.randint(1, 4))) for i in range(100)]


@pytest.mark.parametrize('name', ['fox_graph', 'ptg_graph', 'amr_graph'])
def test_self_score_is_perfect(request, name):
    graph = request.getfixturevalue(name)
    report = score_pair(graph, graph)
    assert report.exact
    assert report.overall.f1 == 1.0
    assert report.macro_f == 1.0
    searched = score_pair(graph, graph, exact_limit=0)
    assert not searched.exact
    assert searched.overall.f1 == 1.0


def test_exact_mode_finds_the_optimum(pairs):
    for gold, system in pairs:
        _, value, exact = best_correspondence(gold, system)
        assert exact
        assert value == brute_force(gold, system), gold.id


def test_search_sits_between_greedy_and_exact(pairs):
    for gold, system in pairs:
        matcher = _Matcher(gold, system)
        greedy = matcher.score(matcher.greedy())
        _, exact, _ = best_correspondence(gold, system)
        _, searched, is_exact = best_correspondence(gold, system, restarts=5, exact_limit=0)
        assert not is_exact
        assert greedy <= searched <= exact, gold.id


def test_matched_count_agrees_with_tuples(pairs):
    for gold, system in pairs[:20]:
        report = score_pair(gold, system)
        _, value, _ = best_correspondence(gold, system)
        assert report.overall.matched == value


def test_search_is_seeded(pairs):
    gold, system = pairs[0]
    assert (best_correspondence(gold, system, exact_limit=0, seed=3)
            == best_correspondence(gold, system, exact_limit=0, seed=3))


def test_changed_label_costs_one_tuple(fox_graph):
    system = Graph(id='fox', framework='eds', input=fox_graph.input, tops=[10],
                   nodes=[Node(10, '_gaze_v_1', {'TENSE': 'past'}, fox_graph.nodes[0].anchors),
                          Node(11, '_dog_n_1', {'NUM': 'sg'}, fox_graph.nodes[1].anchors)],
                   edges=[Edge(10, 11, 'ARG1')])
    report = score_pair(fox_graph, system)
    assert report.correspondence == {10: 0, 11: 1}
    assert report.classes['labels'].matched == 1
    assert report.overall.matched == report.overall.gold - 1


def test_empty_graphs():
    empty = Graph(id='e')
    report = score_pair(empty, empty)
    assert report.overall.gold == report.overall.system == 0
    assert report.overall.f1 == 0.0


def test_anchors_ignore_whitespace(amr_graph):
    chars = [c for n, c in tuples(amr_graph).anchors if n == 6]
    assert len(chars[0]) == len('NewYorkCity')


def test_ptg_edge_tuples(ptg_graph):
    assert len(tuples(ptg_graph).edges) == len(ptg_graph.edges)


def test_missing_system_graph_counts_as_empty(fox_graph, ptg_graph):
    report = score_corpus([fox_graph, ptg_graph], [fox_graph])
    assert report.pairs == 2
    assert report.overall.precision == 1.0
    assert report.overall.recall < 1.0
    assert report.overall.gold == tuples(fox_graph).size() + tuples(ptg_graph).size()


def test_duplicate_ids_are_rejected(fox_graph):
    with pytest.raises(MrpValidationError):
        score_corpus([fox_graph, fox_graph], [])
    with pytest.raises(MrpValidationError):
        score_corpus([fox_graph], [fox_graph, fox_graph])


def test_system_graph_without_gold(fox_graph, ptg_graph):
    with pytest.raises(MrpValidationError):
        score_corpus([fox_graph], [ptg_graph])


def test_parallel_scoring_matches_serial(pairs):
    golds = [g for g, _ in pairs[:30]]
    systems = [s for _, s in pairs[:30]]
    serial = score_corpus(golds, systems)
    parallel = score_corpus(golds, systems, jobs=4)
    assert serial.to_json() == parallel.to_json()


def test_invalid_search_parameters(fox_graph):
    with pytest.raises(ValueError):
        score_pair(fox_graph, fox_graph, restarts=0)


def test_report_formats(fox_graph):
    report = score_corpus([fox_graph], [fox_graph])
    text = format_report(report, macro=True)
    assert text.splitlines()[-1] == '1 pair(s), exact, seed=1'
    assert 'macro F' in text
    data = report.to_json(macro=True)
    assert data['all']['f'] == 1.0
    assert data['macro'] == {'f': 1.0}
    assert data['params']['pairs'] == 1


@pytest.fixture(scope='module')
def larger_pairs():
    rng = random.Random(11)
    return [(random_graph(rng, i, rng.randint(1, 6)), random_graph(rng, i, rng.randint(1, 6))) for i in range(100)]


def renamed(graph, rng):
    new_ids = dict(zip([n.id for n in graph.nodes], rng.sample(range(1000, 2000), len(graph.nodes))))
    return Graph(id=graph.id, framework=graph.framework, input=graph.input,
                 tops=[new_ids[t] for t in graph.tops],
                 nodes=[Node(new_ids[n.id], n.label, dict(n.properties), list(n.anchors)) for n in graph.nodes],
                 edges=[Edge(new_ids[e.source], new_ids[e.target], e.label, dict(e.attributes)) for e in graph.edges])


def test_default_search_matches_exhaustive_enumeration(larger_pairs):
    for gold, system in larger_pairs:
        _, searched, exact = best_correspondence(gold, system, exact_limit=0)
        assert not exact
        assert searched == brute_force(gold, system), gold.id


def test_scores_ignore_node_ids(larger_pairs):
    rng = random.Random(2)
    for gold, system in larger_pairs:
        expected = score_pair(gold, system).overall
        variants = [(renamed(gold, rng), system), (gold, renamed(system, rng)),
                    (renamed(gold, rng), renamed(system, rng))]
        for a, b in variants:
            got = score_pair(a, b).overall
            assert (got.gold, got.system, got.matched) == (expected.gold, expected.system, expected.matched), gold.id


def test_reports_are_identical_across_runs(larger_pairs):
    golds = [g for g, _ in larger_pairs]
    systems = [s for _, s in larger_pairs]
    runs = [score_corpus(golds, systems, exact_limit=0, seed=4) for _ in range(3)]
    texts = [format_report(report, macro=True) for report in runs]
    dumps = [json.dumps(report.to_json(macro=True), sort_keys=True) for report in runs]
    assert texts[0] == texts[1] == texts[2]
    assert dumps[0] == dumps[1] == dumps[2]


def test_more_restarts_never_lower_the_score(larger_pairs):
    for gold, system in larger_pairs:
        values = [best_correspondence(gold, system, restarts=r, iterations=3, exact_limit=0)[1]
                  for r in (1, 2, 3, 5, 10)]
        assert values == sorted(values), gold.id
