"""
MRP F-score: graphs are decomposed into tuples and compared under the node
correspondence that maximizes their overlap.

Small instances are solved exactly by enumerating every maximal injective
correspondence. Larger ones run seeded restarts of greedy initialization plus hill
climbing; restart 0 is the identity on node ids, so a graph scored against itself
always reaches F = 1.
"""
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import MrpValidationError
from .graph import Graph
from .irep import value_text
from .logger import get_logger

logger = get_logger('evaluate')

CLASSES = ('tops', 'labels', 'properties', 'anchors', 'edges', 'attributes')
UNMATCHED = 'unmatched'


def anchor_chars(graph: Graph, node) -> FrozenSet[int]:
    """Covered character offsets, whitespace excluded."""
    chars = set()
    for anchor in node.anchors:
        for i in range(anchor.start, anchor.end):
            if i >= len(graph.input) or not graph.input[i].isspace():
                chars.add(i)
    return frozenset(chars)


@dataclass
class TupleBag:
    tops: Set[Tuple] = field(default_factory=set)
    labels: Set[Tuple] = field(default_factory=set)
    properties: Set[Tuple] = field(default_factory=set)
    anchors: Set[Tuple] = field(default_factory=set)
    edges: Set[Tuple] = field(default_factory=set)
    attributes: Set[Tuple] = field(default_factory=set)

    def get(self, name: str) -> Set[Tuple]:
        return getattr(self, name)

    def size(self) -> int:
        return sum(len(self.get(name)) for name in CLASSES)


def tuples(graph: Graph, correspondence: Optional[Dict[Any, Any]] = None) -> TupleBag:
    """Tuple decomposition; with a correspondence, mapped nodes take their partner's name."""
    if correspondence is None:
        name = lambda node_id: node_id  # noqa: E731
    else:
        name = lambda node_id: correspondence.get(node_id, (UNMATCHED, node_id))  # noqa: E731

    bag = TupleBag()
    for top in graph.tops:
        bag.tops.add((name(top),))
    for node in graph.nodes:
        n = name(node.id)
        if node.label is not None:
            bag.labels.add((n, node.label))
        for key, value in node.properties.items():
            bag.properties.add((n, key, value_text(value)))
        chars = anchor_chars(graph, node)
        if chars:
            bag.anchors.add((n, chars))
    for edge in graph.edges:
        triple = (name(edge.source), name(edge.target), edge.label)
        bag.edges.add(triple)
        for key, value in edge.attributes.items():
            bag.attributes.add(triple + (key, value_text(value)))
    return bag


@dataclass
class ClassScore:
    gold: int = 0
    system: int = 0
    matched: int = 0

    @property
    def precision(self) -> float:
        return self.matched / self.system if self.system else 0.0

    @property
    def recall(self) -> float:
        return self.matched / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: 'ClassScore') -> 'ClassScore':
        return ClassScore(self.gold + other.gold, self.system + other.system, self.matched + other.matched)

    def to_json(self) -> Dict[str, Any]:
        return {'g': self.gold, 's': self.system, 'c': self.matched,
                'p': self.precision, 'r': self.recall, 'f': self.f1}


@dataclass
class ScoreReport:
    classes: Dict[str, ClassScore] = field(default_factory=lambda: {c: ClassScore() for c in CLASSES})
    correspondence: Dict[Any, Any] = field(default_factory=dict)
    exact: bool = True
    restarts: int = 0
    iterations: int = 0
    seed: int = 0
    pairs: int = 0

    @property
    def overall(self) -> ClassScore:
        total = ClassScore()
        for score in self.classes.values():
            total = total + score
        return total

    @property
    def macro_f(self) -> float:
        """Mean F over tuple classes that occur on either side."""
        scores = [s.f1 for s in self.classes.values() if s.gold or s.system]
        return sum(scores) / len(scores) if scores else 0.0

    def merge(self, other: 'ScoreReport') -> 'ScoreReport':
        return ScoreReport(
            classes={c: self.classes[c] + other.classes[c] for c in CLASSES},
            exact=self.exact and other.exact,
            restarts=self.restarts, iterations=self.iterations, seed=self.seed,
            pairs=self.pairs + other.pairs,
        )

    def to_json(self, macro: bool = False) -> Dict[str, Any]:
        data = {c: self.classes[c].to_json() for c in CLASSES}
        data['all'] = self.overall.to_json()
        if macro:
            data['macro'] = {'f': self.macro_f}
        data['params'] = {'restarts': self.restarts, 'iterations': self.iterations,
                          'seed': self.seed, 'exact': self.exact, 'pairs': self.pairs}
        return data


# --------------------------------------------------------------------------- #
# Correspondence search
# --------------------------------------------------------------------------- #

class _Matcher:
    """Overlap of a fixed gold/system pair under correspondences given as index lists."""

    def __init__(self, gold: Graph, system: Graph):
        self.gold_ids = [n.id for n in gold.nodes]
        self.sys_ids = [n.id for n in system.nodes]
        g_index = {node_id: i for i, node_id in enumerate(self.gold_ids)}
        s_index = {node_id: i for i, node_id in enumerate(self.sys_ids)}

        gold_bag = tuples(gold)
        sys_bag = tuples(system)
        self.upper_bound = sum(min(len(gold_bag.get(c)), len(sys_bag.get(c))) for c in CLASSES)

        self.node_scores = np.zeros((len(self.sys_ids), len(self.gold_ids)), dtype=np.int64)
        gold_local = [self._local(gold, node, node.id in gold.tops) for node in gold.nodes]
        for si, node in enumerate(system.nodes):
            local = self._local(system, node, node.id in system.tops)
            for gi, other in enumerate(gold_local):
                self.node_scores[si, gi] = self._overlap(local, other)

        self.gold_edges: Dict[Tuple[int, int, Any], Set[Tuple[str, str]]] = {}
        for edge in gold.edges:
            key = (g_index[edge.source], g_index[edge.target], edge.label)
            attrs = self.gold_edges.setdefault(key, set())
            attrs.update((k, value_text(v)) for k, v in edge.attributes.items())
        self.sys_edges: Dict[Tuple[int, int, Any], Set[Tuple[str, str]]] = {}
        for edge in system.edges:
            key = (s_index[edge.source], s_index[edge.target], edge.label)
            attrs = self.sys_edges.setdefault(key, set())
            attrs.update((k, value_text(v)) for k, v in edge.attributes.items())
        self.incident: List[List[Tuple[int, int, Any]]] = [[] for _ in self.sys_ids]
        for key in self.sys_edges:
            self.incident[key[0]].append(key)
            if key[1] != key[0]:
                self.incident[key[1]].append(key)

    @staticmethod
    def _local(graph: Graph, node, is_top: bool):
        return (is_top, node.label,
                {(k, value_text(v)) for k, v in node.properties.items()},
                anchor_chars(graph, node))

    @staticmethod
    def _overlap(a, b) -> int:
        score = int(a[0] and b[0])
        score += int(a[1] is not None and a[1] == b[1])
        score += len(a[2] & b[2])
        score += int(bool(a[3]) and a[3] == b[3])
        return score

    def edge_value(self, key, mapping: Sequence[int]) -> int:
        source, target = mapping[key[0]], mapping[key[1]]
        if source < 0 or target < 0:
            return 0
        gold_attrs = self.gold_edges.get((source, target, key[2]))
        if gold_attrs is None:
            return 0
        return 1 + len(self.sys_edges[key] & gold_attrs)

    def score(self, mapping: Sequence[int]) -> int:
        total = sum(int(self.node_scores[s, g]) for s, g in enumerate(mapping) if g >= 0)
        return total + sum(self.edge_value(key, mapping) for key in self.sys_edges)

    def _delta(self, mapping: List[int], changed: Dict[int, int]) -> int:
        keys = {key for s in changed for key in self.incident[s]}
        before = sum(self.edge_value(key, mapping) for key in keys)
        before += sum(int(self.node_scores[s, mapping[s]]) for s in changed if mapping[s] >= 0)
        trial = list(mapping)
        for s, g in changed.items():
            trial[s] = g
        after = sum(self.edge_value(key, trial) for key in keys)
        after += sum(int(self.node_scores[s, g]) for s, g in changed.items() if g >= 0)
        return after - before

    # Initializations ------------------------------------------------------ #

    def identity(self) -> List[int]:
        g_index = {node_id: i for i, node_id in enumerate(self.gold_ids)}
        return [g_index.get(node_id, -1) for node_id in self.sys_ids]

    def greedy(self) -> List[int]:
        mapping = [-1] * len(self.sys_ids)
        taken = set()
        pairs = sorted(
            ((-int(self.node_scores[s, g]), s, g) for s in range(len(self.sys_ids)) for g in range(len(self.gold_ids))),
        )
        for neg, s, g in pairs:
            if neg == 0:
                break
            if mapping[s] < 0 and g not in taken:
                mapping[s] = g
                taken.add(g)
        return mapping

    def randomized(self, rng: random.Random) -> List[int]:
        mapping = [-1] * len(self.sys_ids)
        free = list(range(len(self.gold_ids)))
        order = list(range(len(self.sys_ids)))
        rng.shuffle(order)
        for s in order:
            if not free:
                break
            best = max(int(self.node_scores[s, g]) for g in free)
            choice = rng.choice([g for g in free if self.node_scores[s, g] == best])
            mapping[s] = choice
            free.remove(choice)
        return mapping

    # Search ---------------------------------------------------------------- #

    def climb(self, mapping: List[int], iterations: int) -> Tuple[List[int], int]:
        """First-improvement hill climbing over reassign and swap moves."""
        current = self.score(mapping)
        inverse = {g: s for s, g in enumerate(mapping) if g >= 0}
        steps = 0
        improved = True
        while improved and steps < iterations and current < self.upper_bound:
            improved = False
            for s in range(len(self.sys_ids)):
                for g in range(len(self.gold_ids)):
                    if mapping[s] == g:
                        continue
                    other = inverse.get(g)
                    changed = {s: g} if other is None else {s: g, other: mapping[s]}
                    delta = self._delta(mapping, changed)
                    if delta > 0:
                        for node, target in changed.items():
                            mapping[node] = target
                        inverse = {gg: ss for ss, gg in enumerate(mapping) if gg >= 0}
                        current += delta
                        steps += 1
                        improved = True
                        break
                if improved or steps >= iterations:
                    break
        return mapping, current

    def exhaustive_count(self) -> int:
        s, g = len(self.sys_ids), len(self.gold_ids)
        return math.perm(g, s) if s <= g else math.perm(s, g)

    def exhaustive(self) -> Tuple[List[int], int]:
        """Best of all maximal injective correspondences; ties go to the first enumerated."""
        s_count, g_count = len(self.sys_ids), len(self.gold_ids)
        best_mapping, best = [-1] * s_count, -1
        if s_count <= g_count:
            candidates = (list(p) for p in permutations(range(g_count), s_count))
        else:
            def inverted():
                for p in permutations(range(s_count), g_count):
                    mapping = [-1] * s_count
                    for g, s in enumerate(p):
                        mapping[s] = g
                    yield mapping
            candidates = inverted()
        for mapping in candidates:
            value = self.score(mapping)
            if value > best:
                best_mapping, best = mapping, value
                if best == self.upper_bound:
                    break
        return best_mapping, max(best, 0)


def _correspondence(matcher: _Matcher, mapping: Sequence[int]) -> Dict[Any, Any]:
    return {matcher.sys_ids[s]: matcher.gold_ids[g] for s, g in enumerate(mapping) if g >= 0}


def best_correspondence(gold: Graph, system: Graph, restarts: int = 10, iterations: int = 5000,
                        seed: int = 1, exact_limit: int = 5040) -> Tuple[Dict[Any, Any], int, bool]:
    """Returns (system id -> gold id, matched tuple count, whether the search was exhaustive)."""
    matcher = _Matcher(gold, system)
    if matcher.exhaustive_count() <= exact_limit:
        mapping, value = matcher.exhaustive()
        return _correspondence(matcher, mapping), value, True

    best_mapping, best = None, -1
    for r in range(max(restarts, 1)):
        if r == 0:
            start = matcher.identity()
        elif r == 1:
            start = matcher.greedy()
        else:
            start = matcher.randomized(random.Random(seed * 7919 + r))
        mapping, value = matcher.climb(start, iterations)
        if value > best:
            best_mapping, best = mapping, value
        if best == matcher.upper_bound:
            break
    return _correspondence(matcher, best_mapping), best, False


def score_pair(gold: Graph, system: Graph, restarts: int = 10, iterations: int = 5000, seed: int = 1,
               exact_limit: int = 5040) -> ScoreReport:
    if restarts < 1 or iterations < 0:
        raise ValueError("restarts must be >= 1 and iterations >= 0")
    correspondence, _, exact = best_correspondence(gold, system, restarts, iterations, seed, exact_limit)
    gold_bag = tuples(gold)
    sys_bag = tuples(system, correspondence)
    classes = {
        c: ClassScore(len(gold_bag.get(c)), len(sys_bag.get(c)), len(gold_bag.get(c) & sys_bag.get(c)))
        for c in CLASSES
    }
    return ScoreReport(classes=classes, correspondence=correspondence, exact=exact,
                       restarts=restarts, iterations=iterations, seed=seed, pairs=1)


def _empty_like(gold: Graph) -> Graph:
    return Graph(id=gold.id, framework=gold.framework, flavor=gold.flavor, input=gold.input)


def score_corpus(golds: Iterable[Graph], systems: Iterable[Graph], restarts: int = 10, iterations: int = 5000,
                 seed: int = 1, exact_limit: int = 5040, jobs: int = 1) -> ScoreReport:
    """Micro-averaged score; graphs are paired by id and missing system graphs count as empty."""
    gold_by_id: Dict[Any, Graph] = {}
    for graph in golds:
        if graph.id in gold_by_id:
            raise MrpValidationError(graph.id, "duplicate gold graph id")
        gold_by_id[graph.id] = graph
    sys_by_id: Dict[Any, Graph] = {}
    for graph in systems:
        if graph.id in sys_by_id:
            raise MrpValidationError(graph.id, "duplicate system graph id")
        if graph.id not in gold_by_id:
            raise MrpValidationError(graph.id, "system graph has no gold counterpart")
        sys_by_id[graph.id] = graph

    pairs = [(gold, sys_by_id.get(gid) or _empty_like(gold)) for gid, gold in gold_by_id.items()]

    def run(pair):
        return score_pair(pair[0], pair[1], restarts, iterations, seed, exact_limit)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            reports = list(executor.map(run, pairs))
    else:
        reports = [run(pair) for pair in pairs]

    total = ScoreReport(restarts=restarts, iterations=iterations, seed=seed, pairs=0)
    for report in reports:
        total = total.merge(report)
    missing = len(gold_by_id) - len(sys_by_id)
    if missing:
        logger.warning(f"{missing} gold graph(s) have no system counterpart")
    return total


def format_report(report: ScoreReport, macro: bool = False) -> str:
    lines = [f"{'class':<12}{'gold':>8}{'system':>8}{'match':>8}{'P':>8}{'R':>8}{'F':>8}"]
    rows = [(c, report.classes[c]) for c in CLASSES] + [('all', report.overall)]
    for name, score in rows:
        lines.append(f"{name:<12}{score.gold:>8}{score.system:>8}{score.matched:>8}"
                     f"{score.precision:>8.4f}{score.recall:>8.4f}{score.f1:>8.4f}")
    if macro:
        lines.append(f"{'macro F':<44}{report.macro_f:>8.4f}")
    mode = 'exact' if report.exact else f"search (restarts={report.restarts}, iterations={report.iterations})"
    lines.append(f"{report.pairs} pair(s), {mode}, seed={report.seed}")
    return '\n'.join(lines)
