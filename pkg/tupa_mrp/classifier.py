"""
Averaged perceptron over hashed state features.

One weight table scores transition kinds. Separate payload tables score node labels,
properties, attributes and edge labels over the framework vocabulary. Prediction is
greedy and always restricted to the profile mask.
"""
import json
import math
import random
import zipfile
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .companion import TokenRow, text_from_rows
from .config import Config
from .constraints import (
    FrameworkProfile, Mask, allowed_transitions, bounded_mask, collect_vocabulary, flavor_for, recovery_mask,
)
from .errors import ModelFormatError, TrainingError, TupaMrpError
from .evaluate import score_corpus
from .features import REGISTRY_VERSION, extract_features
from .graph import Graph
from .irep import ANCHOR, TOP, IGraph, from_intermediate, has_placeholder, to_intermediate
from .logger import get_logger
from .oracle import EXHAUSTIVE, INCREMENTAL, Oracle, derive
from .transitions import (
    ATTRIBUTE, CHILD, KINDS, LABEL, LEFT_EDGE, NODE, PROPERTY, RIGHT_EDGE,
    ParserState, Transition, apply, extract_igraph, initial_state,
)

logger = get_logger('classifier')

FORMAT_VERSION = 1
ARCHIVE_TIMESTAMP = (1980, 1, 1, 0, 0, 0)
PAYLOAD_CLASS = {
    LABEL: 'label', PROPERTY: 'property', ATTRIBUTE: 'attribute',
    NODE: 'edge', CHILD: 'edge', LEFT_EDGE: 'edge', RIGHT_EDGE: 'edge',
}
KIND_INDEX = {kind: i for i, kind in enumerate(KINDS)}
# semantic nodes per token when a model does not record its own ratio
DEFAULT_NODE_RATIO = 3.0
NODE_SLACK = 2

Corpus = Sequence[Tuple[Graph, List[TokenRow]]]


class AveragedTable:
    """Weight table with lazy averaging: averaged = W - U / c."""

    def __init__(self, weights: np.ndarray):
        self.weights = weights.astype(np.float64, copy=True)
        self.updates = np.zeros_like(self.weights)

    def scores(self, index: np.ndarray, values: np.ndarray) -> np.ndarray:
        return values @ self.weights[index]

    def update(self, index: np.ndarray, values: np.ndarray, column: int, delta: float, step: int):
        np.add.at(self.weights[:, column], index, delta * values)
        np.add.at(self.updates[:, column], index, step * delta * values)

    def averaged(self, steps: int) -> np.ndarray:
        if steps == 0:
            return self.weights.copy()
        return self.weights - self.updates / steps


@dataclass
class Model:
    profile: FrameworkProfile
    buckets: int
    transition_weights: np.ndarray
    vocab: Dict[str, List[str]]
    payload_weights: Dict[str, np.ndarray]
    multitask: bool = False
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self._index = {name: {p: i for i, p in enumerate(items)} for name, items in self.vocab.items()}

    @property
    def framework(self) -> str:
        return self.profile.framework

    def payload_scores(self, table: str, index, values) -> Optional[np.ndarray]:
        weights = self.payload_weights.get(table)
        if weights is None or weights.shape[1] == 0:
            return None
        return values @ weights[index]

    def payload_column(self, table: str, payload: str) -> Optional[int]:
        return self._index.get(table, {}).get(payload)


def _tables_for(profile: FrameworkProfile) -> List[str]:
    tables = ['edge']
    if profile.allows_node_labels:
        tables.append('label')
    if profile.allows_node_properties:
        tables.append('property')
    if profile.allows_edge_attributes:
        tables.append('attribute')
    return sorted(tables)


# --------------------------------------------------------------------------- #
# Prediction
# --------------------------------------------------------------------------- #

def _choose(mask: Mask, kind_scores: np.ndarray, payload_score) -> Transition:
    """Best kind, then best payload; ties go to the lexicographically smallest."""
    kind = min(mask, key=lambda k: (-kind_scores[KIND_INDEX[k]], k))
    payloads = mask[kind]
    if None in payloads:
        return Transition(kind)
    payload = min(payloads, key=lambda p: (-payload_score(kind, p), p))
    return Transition(kind, payload)


def predict(model: Model, state: ParserState, mask: Mask, rows: Sequence[TokenRow] = ()) -> Transition:
    if not mask:
        raise TupaMrpError("cannot predict from an empty mask")
    if len(mask) == 1:
        only = next(iter(mask))
        if None in mask[only]:
            return Transition(only)
    fv = extract_features(state, rows, framework=model.framework if model.multitask else None)
    index, values = fv.hashed(model.buckets)
    kind_scores = values @ model.transition_weights[index]
    cache: Dict[str, Optional[np.ndarray]] = {}

    def payload_score(kind: str, payload: str) -> float:
        table = PAYLOAD_CLASS[kind]
        if kind not in cache:
            cache[kind] = model.payload_scores(table, *fv.hashed(model.buckets, conjoin=kind))
        column = model.payload_column(table, payload)
        if cache[kind] is None or column is None:
            return 0.0
        return float(cache[kind][column])

    return _choose(mask, kind_scores, payload_score)


@dataclass
class ParseOutcome:
    graph: Graph
    transitions: List[Transition]
    truncated: bool = False


def _repair_labels(igraph: IGraph, model: Model):
    """Required labels that the parser never assigned get the most frequent training label."""
    if not model.profile.required_node_labels:
        return
    default = model.meta.get('default_label') or '_'
    for node in igraph.semantic_nodes():
        if node.label is None:
            node.label = default


def node_limit(model: Model, tokens: int) -> int:
    """Most semantic nodes a parse may create, from the densest training sentence."""
    ratio = model.meta.get('max_node_ratio') or DEFAULT_NODE_RATIO
    return math.ceil(ratio * max(tokens, 1)) + NODE_SLACK


def parse(model: Model, rows: Sequence[TokenRow], profile: Optional[FrameworkProfile] = None,
          graph_id: Any = None, text: Optional[str] = None, step_budget_factor: int = 10) -> ParseOutcome:
    """Greedy parse; always returns a well-formed graph, flagged when the step budget ran out."""
    if profile is None:
        profile = model.profile
    else:
        profile = profile.with_vocabulary(model.profile.node_labels, model.profile.properties,
                                          model.profile.attributes, model.profile.edge_labels)
    state = initial_state(list(range(1, len(rows) + 1)))
    budget = step_budget_factor * (2 * len(rows) + 10)
    max_nodes = node_limit(model, len(rows))
    truncated = False
    while not state.terminal:
        if len(state.history) >= budget:
            truncated = True
            break
        mask = bounded_mask(state, profile, max_nodes)
        state = apply(state, predict(model, state, mask, rows))
    if truncated:
        logger.debug(f"graph {graph_id}: step budget of {budget} exhausted")
        while not state.terminal:
            mask = recovery_mask(state)
            state = apply(state, Transition(next(iter(mask))))

    if text is None:
        text = text_from_rows(list(rows))
    meta = {'id': graph_id, 'framework': model.framework, 'flavor': flavor_for(model.framework), 'input': text}
    igraph = extract_igraph(state, meta)
    _repair_labels(igraph, model)
    graph = from_intermediate(igraph, list(rows), text, strict=False)
    return ParseOutcome(graph, list(state.history), truncated)


def parse_corpus(model: Model, items: Sequence[Tuple[Any, str, List[TokenRow]]], jobs: int = 1,
                 step_budget_factor: int = 10) -> List[ParseOutcome]:
    """Parse (graph id, text, rows) items; output order follows the input."""
    def run(item):
        graph_id, text, rows = item
        return parse(model, rows, graph_id=graph_id, text=text, step_budget_factor=step_budget_factor)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            return list(executor.map(run, items))
    return [run(item) for item in items]


# --------------------------------------------------------------------------- #
# Training
# --------------------------------------------------------------------------- #

@dataclass
class _Step:
    index: np.ndarray
    values: np.ndarray
    gold: Transition
    mask: Mask
    payload_index: Optional[np.ndarray] = None
    payload_values: Optional[np.ndarray] = None


def _prepare(corpus: Corpus, profile: FrameworkProfile) -> Tuple[List[IGraph], List[List[TokenRow]], List[str], int]:
    """Intermediate graphs, their rows and the oracle strategy that derives each of them."""
    igraphs, rows_list, strategies, skipped = [], [], [], 0
    for graph, rows in corpus:
        try:
            igraph = to_intermediate(graph, rows, profile)
            strategy = derive(igraph, rows).strategy
        except TupaMrpError as e:
            logger.warning(f"graph {graph.id}: skipped ({e})")
            skipped += 1
            continue
        igraphs.append(igraph)
        rows_list.append(rows)
        strategies.append(strategy)
    fallbacks = sum(s != INCREMENTAL for s in strategies)
    if fallbacks:
        logger.info(f"{fallbacks} sentence(s) need the {EXHAUSTIVE} oracle")
    return igraphs, rows_list, strategies, skipped


def _node_ratio(igraphs: Sequence[IGraph]) -> float:
    return max(len(g.semantic_nodes()) / max(len(g.terminals), 1) for g in igraphs)


def _walk(igraph: IGraph, rows: List[TokenRow], profile: FrameworkProfile, buckets: int,
          framework: Optional[str], strategy: str) -> List[_Step]:
    steps = []
    oracle = Oracle(igraph, rows, strategy)
    for state, gold in oracle.states():
        fv = extract_features(state, rows, framework=framework)
        index, values = fv.hashed(buckets)
        payload_index = payload_values = None
        if gold.payload is not None:
            payload_index, payload_values = fv.hashed(buckets, conjoin=gold.kind)
        mask = dict(allowed_transitions(state, profile))
        if gold.payload is None:
            mask.setdefault(gold.kind, set()).add(None)
        else:
            mask[gold.kind] = set(mask.get(gold.kind, set())) | {gold.payload}
        steps.append(_Step(index, values, gold, mask, payload_index, payload_values))
    return steps


def _default_label(igraphs: Sequence[IGraph]) -> Optional[str]:
    counts = Counter(n.label for g in igraphs for n in g.semantic_nodes()
                     if n.label is not None and not has_placeholder(n.label))
    if not counts:
        return None
    return min(counts, key=lambda label: (-counts[label], label))


def train(corpus: Corpus, profile: FrameworkProfile, config: Optional[Config] = None, *,
          epochs: Optional[int] = None, seed: Optional[int] = None, init: Optional[Model] = None,
          dev: Optional[Corpus] = None, multitask: Optional[bool] = None, progress: bool = True) -> Model:
    """Train on (graph, rows) pairs. With init, training continues from that model's weights."""
    config = config or Config()
    epochs = epochs if epochs is not None else config.getint('epochs', 20)
    seed = seed if seed is not None else config.getint('seed', 1)
    multitask = multitask if multitask is not None else config.getbool('multitask')
    buckets = init.buckets if init is not None else config.getint('feature_buckets', 16384)
    if not corpus:
        raise TrainingError("no training data")

    igraphs, rows_list, strategies, skipped = _prepare(corpus, profile)
    if not igraphs:
        raise TrainingError(f"no training data: all {skipped} sentence(s) failed the oracle")

    vocab = collect_vocabulary(igraphs)
    profile = profile.with_vocabulary(**vocab)
    if init is not None:
        profile = profile.with_vocabulary(
            node_labels=init.vocab.get('label', []), properties=init.vocab.get('property', []),
            attributes=init.vocab.get('attribute', []), edge_labels=init.vocab.get('edge', []))
    tables = _tables_for(profile)
    model_vocab = {
        'label': sorted(profile.node_labels),
        'property': sorted(profile.properties),
        'attribute': sorted(profile.attributes),
        'edge': sorted(profile.edge_labels | {TOP, ANCHOR}),
    }
    model_vocab = {name: model_vocab[name] for name in tables}

    transition_table = AveragedTable(
        init.transition_weights if init is not None else np.zeros((buckets, len(KINDS))))
    payload_tables: Dict[str, AveragedTable] = {}
    for name in tables:
        table = AveragedTable(np.zeros((buckets, len(model_vocab[name]))))
        if init is not None and name in init.payload_weights:
            for column, payload in enumerate(init.vocab.get(name, [])):
                table.weights[:, model_vocab[name].index(payload)] = init.payload_weights[name][:, column]
        payload_tables[name] = table
    index = {name: {p: i for i, p in enumerate(items)} for name, items in model_vocab.items()}

    node_ratio = _node_ratio(igraphs)
    if init is not None:
        node_ratio = max(node_ratio, init.meta.get('max_node_ratio') or 0.0)
    init_dev_f = None
    if init is not None and dev:
        init_dev_f = evaluate_model(init, dev, config)
        logger.info(f"continuing from a model with dev F {init_dev_f:.4f}")

    framework = profile.framework if multitask else None
    walks = [_walk(g, r, profile, buckets, framework, s) for g, r, s in zip(igraphs, rows_list, strategies)]
    logger.info(f"training on {len(walks)} sentence(s), {sum(len(w) for w in walks)} transitions, "
                f"{skipped} skipped")

    def snapshot(history) -> Model:
        return Model(
            profile=profile,
            buckets=buckets,
            transition_weights=transition_table.averaged(counter),
            vocab=model_vocab,
            payload_weights={name: t.averaged(counter) for name, t in payload_tables.items()},
            multitask=multitask,
            meta={
                'epochs': epochs, 'seed': seed, 'skipped': skipped, 'sentences': len(walks),
                'registry_version': REGISTRY_VERSION, 'history': list(history),
                'default_label': _default_label(igraphs),
                'continued': init is not None,
                'init_dev_f': init_dev_f,
                'max_node_ratio': node_ratio,
            },
        )

    rng = random.Random(seed)
    order = list(range(len(walks)))
    counter = 0
    history: List[Dict[str, Any]] = []
    best: Optional[Model] = None
    best_f = -1.0

    for epoch in tqdm(range(1, epochs + 1), desc='Training', unit='epoch', disable=not progress):
        rng.shuffle(order)
        correct = total = 0
        for i in order:
            for step in walks[i]:
                counter += 1
                kind_scores = transition_table.scores(step.index, step.values)
                gold = step.gold
                predicted_kind = min(step.mask, key=lambda k: (-kind_scores[KIND_INDEX[k]], k))
                if predicted_kind != gold.kind:
                    transition_table.update(step.index, step.values, KIND_INDEX[gold.kind], 1.0, counter)
                    transition_table.update(step.index, step.values, KIND_INDEX[predicted_kind], -1.0, counter)
                ok = predicted_kind == gold.kind
                if gold.payload is not None:
                    name = PAYLOAD_CLASS[gold.kind]
                    table = payload_tables.get(name)
                    gold_column = index.get(name, {}).get(gold.payload)
                    if table is not None and gold_column is not None:
                        scores = table.scores(step.payload_index, step.payload_values)
                        candidates = [p for p in step.mask[gold.kind] if p in index[name]]
                        predicted = min(candidates, key=lambda p: (-scores[index[name][p]], p))
                        if predicted != gold.payload:
                            table.update(step.payload_index, step.payload_values, gold_column, 1.0, counter)
                            table.update(step.payload_index, step.payload_values,
                                         index[name][predicted], -1.0, counter)
                            ok = False
                correct += ok
                total += 1

        record: Dict[str, Any] = {'epoch': epoch, 'train_accuracy': correct / total if total else 0.0}
        if dev:
            model = snapshot(history)
            record['dev_f'] = evaluate_model(model, dev, config)
            if record['dev_f'] > best_f:
                best_f, best = record['dev_f'], model
                record['best'] = True
        history.append(record)
        logger.debug(f"epoch {epoch}: {record}")

    if best is not None:
        best.meta['history'] = history
        best.meta['best_epoch'] = max((r for r in history if r.get('best')), key=lambda r: r['epoch'])['epoch']
        logger.info(f"best epoch {best.meta['best_epoch']} (dev F {best_f:.4f})")
        return best
    model = snapshot(history)
    model.meta['best_epoch'] = epochs
    return model


def evaluate_model(model: Model, corpus: Corpus, config: Optional[Config] = None, jobs: int = 1) -> float:
    """Overall F of the model's parses against the gold graphs of a corpus."""
    config = config or Config()
    items = [(g.id, g.input, rows) for g, rows in corpus]
    outcomes = parse_corpus(model, items, jobs, config.getint('step_budget_factor', 10))
    report = score_corpus(
        [g for g, _ in corpus], [o.graph for o in outcomes],
        restarts=config.getint('restarts', 10), iterations=config.getint('iterations', 5000),
        seed=config.getint('seed', 1), exact_limit=config.getint('exact_limit', 5040), jobs=jobs,
    )
    return report.overall.f1


# --------------------------------------------------------------------------- #
# Persistence
# --------------------------------------------------------------------------- #

def save_model(model: Model, path) -> Path:
    """numpy .npz container: weight arrays plus a JSON header.

    Archive entries carry a fixed timestamp, so the same model always gives the same bytes.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        'format_version': FORMAT_VERSION,
        'registry_version': REGISTRY_VERSION,
        'buckets': model.buckets,
        'multitask': model.multitask,
        'profile': model.profile.to_json(),
        'vocab': model.vocab,
        'kinds': list(KINDS),
        'meta': model.meta,
    }
    arrays = {'header': np.array(json.dumps(header, sort_keys=True)), 'transition': model.transition_weights}
    for name, weights in sorted(model.payload_weights.items()):
        arrays[f'payload_{name}'] = weights
    with zipfile.ZipFile(path, 'w', compression=zipfile.ZIP_DEFLATED) as archive:
        for name, array in arrays.items():
            info = zipfile.ZipInfo(f'{name}.npy', date_time=ARCHIVE_TIMESTAMP)
            info.compress_type = zipfile.ZIP_DEFLATED
            with archive.open(info, 'w', force_zip64=True) as f:
                np.lib.format.write_array(f, np.asanyarray(array), allow_pickle=False)
    return path


def load_model(path) -> Model:
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data['header']))
            if header.get('format_version') != FORMAT_VERSION:
                raise ModelFormatError(f"{path}: unsupported model format {header.get('format_version')}")
            if header.get('registry_version') != REGISTRY_VERSION:
                raise ModelFormatError(f"{path}: feature registry {header.get('registry_version')} "
                                       f"does not match {REGISTRY_VERSION}")
            transition = data['transition']
            payloads = {name: data[f'payload_{name}'] for name in header['vocab']}
    except (OSError, ValueError, KeyError) as e:
        raise ModelFormatError(f"{path}: cannot read model ({e})") from e
    return Model(
        profile=FrameworkProfile.from_json(header['profile']),
        buckets=header['buckets'],
        transition_weights=transition,
        vocab={name: list(items) for name, items in header['vocab'].items()},
        payload_weights=payloads,
        multitask=header.get('multitask', False),
        meta=header.get('meta', {}),
    )
