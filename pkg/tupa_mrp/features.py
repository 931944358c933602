"""
Feature extraction over parser states.

Every feature is a (template, value) pair. Categorical features have value 1.0 and
carry their category in the template string; numeric features keep their value.
Templates are hashed into a fixed number of buckets.
"""
import zlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .companion import TokenRow
from .transitions import ParserState, Transition

REGISTRY_VERSION = 2
WINDOW = 3
NONE = 'none'
HISTORY = 3
LEXICON_RANKS = 2

# Template prefixes, as in "s0.lemma=fox"
REGISTRY = (
    'bias',
    'kind', 'lemma', 'upos', 'xpos', 'punct', 'label', 'gap',
    'in', 'out', 'props', 'edge', 'act', 'len', 'conj', 'fw',
    'height', 'parents', 'children', 'ratio', 'rel', 'lex',
)


@dataclass
class FeatureVector:
    categorical: List[Tuple[str, str]] = field(default_factory=list)
    numeric: List[Tuple[str, float]] = field(default_factory=list)

    def add(self, template: str, value):
        self.categorical.append((template, str(value)))

    def add_numeric(self, template: str, value: float):
        self.numeric.append((template, float(value)))

    def hashed(self, buckets: int, conjoin: Optional[str] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Bucket indices and values, ready for a dot product with a weight table.

        With ``conjoin`` every categorical feature is also emitted prefixed by it, so
        payload scores can depend on the transition kind they complete.
        """
        keys = [f"{t}={v}" for t, v in self.categorical] + [t for t, _ in self.numeric]
        values = [1.0] * len(self.categorical) + [v for _, v in self.numeric]
        if conjoin is not None:
            keys += [f"{conjoin}^{t}={v}" for t, v in self.categorical]
            values += [1.0] * len(self.categorical)
        index = np.fromiter((zlib.crc32(k.encode('utf-8')) % buckets for k in keys), dtype=np.int64, count=len(keys))
        return index, np.asarray(values, dtype=np.float64)


def head_terminal(ref: Optional[int], state: ParserState) -> Optional[int]:
    """Follow the alphabetically first outgoing edge until a terminal is reached."""
    visited = set()
    while ref is not None and ref not in visited:
        if ref in state.terminals:
            return ref
        visited.add(ref)
        outgoing = sorted(state.outgoing(ref), key=lambda e: (e.label or '', e.target))
        ref = outgoing[0].target if outgoing else None
    return None


def _height(ref: int, state: ParserState, memo: Dict[int, int]) -> int:
    if ref in memo:
        return memo[ref]
    memo[ref] = 0
    children = [e.target for e in state.outgoing(ref)]
    memo[ref] = 1 + max(_height(c, state, memo) for c in children) if children else 0
    return memo[ref]


def gap_type(ref: int, state: ParserState) -> str:
    """none / one / multiple discontinuities in the terminal yield of ref."""
    seen = {ref}
    frontier = [ref]
    positions = set()
    while frontier:
        node = frontier.pop()
        if node in state.terminals:
            positions.add(state.index[node])
        for edge in state.outgoing(node):
            if edge.target not in seen:
                seen.add(edge.target)
                frontier.append(edge.target)
    ordered = sorted(positions)
    gaps = sum(1 for a, b in zip(ordered, ordered[1:]) if b != a + 1)
    return NONE if gaps == 0 else 'one' if gaps == 1 else 'multiple'


def _kind(ref: int, state: ParserState) -> str:
    if ref == state.root:
        return 'root'
    return 'terminal' if ref in state.terminals else 'node'


def _action(t: Transition) -> str:
    return t.kind if t.payload is None else f"{t.kind}:{t.payload}"


def _labels(edges) -> str:
    return '|'.join(sorted(e.label or '' for e in edges)) or NONE


def lexicon(rows: Sequence[TokenRow]) -> Dict[str, str]:
    """Lemma of the first tokens of each coarse tag ("NOUN2" is the second noun), plus tag counts."""
    entries: Dict[str, str] = {}
    counts: Dict[str, int] = {}
    for row in rows:
        counts[row.upos] = counts.get(row.upos, 0) + 1
        if counts[row.upos] <= LEXICON_RANKS:
            entries[f"{row.upos}{counts[row.upos]}"] = row.lemma
    for upos, count in counts.items():
        entries[f"{upos}.n"] = str(min(count, LEXICON_RANKS + 1))
    return entries


def extract_features(state: ParserState, rows: Sequence[TokenRow],
                     history: Optional[Sequence[Transition]] = None,
                     framework: Optional[str] = None) -> FeatureVector:
    history = state.history if history is None else history
    row_of = {ref: rows[i] for i, ref in enumerate(state.terminals) if i < len(rows)}
    heights: Dict[int, int] = {}
    fv = FeatureVector()
    fv.add('bias', 1)

    window = {}
    for k in range(WINDOW):
        window[f's{k}'] = state.stack[-1 - k] if len(state.stack) > k else None
        window[f'b{k}'] = state.buffer[k] if len(state.buffer) > k else None

    summary = {}
    for name, ref in window.items():
        if ref is None:
            for template in ('kind', 'lemma', 'upos', 'xpos', 'label'):
                fv.add(f'{name}.{template}', NONE)
            summary[name] = (NONE, NONE, NONE)
            continue
        head = head_terminal(ref, state)
        row = row_of.get(head)
        kind = _kind(ref, state)
        label = state.labels.get(ref, NONE)
        fv.add(f'{name}.kind', kind)
        fv.add(f'{name}.lemma', row.lemma if row else NONE)
        fv.add(f'{name}.upos', row.upos if row else NONE)
        fv.add(f'{name}.xpos', row.xpos if row else NONE)
        fv.add(f'{name}.label', label)
        if row is not None and row.upos == 'PUNCT':
            fv.add(f'{name}.punct', 1)
        fv.add_numeric(f'{name}.height', _height(ref, state, heights))
        fv.add_numeric(f'{name}.parents', len(state.incoming(ref)))
        fv.add_numeric(f'{name}.children', len(state.outgoing(ref)))
        summary[name] = (kind, row.upos if row else NONE, label)

    s0, s1 = window['s0'], window['s1']
    if s0 is not None:
        fv.add('s0.gap', gap_type(s0, state))
        fv.add('s0.in', _labels(state.incoming(s0)))
        fv.add('s0.out', _labels(state.outgoing(s0)))
        fv.add('s0.props', '|'.join(sorted(state.properties.get(s0, {}))) or NONE)
    if s1 is not None:
        fv.add('s1.in', _labels(state.incoming(s1)))
        fv.add('s1.out', _labels(state.outgoing(s1)))
        between = [f">{e.label or ''}" for e in state.outgoing(s0) if e.target == s1]
        between += [f"<{e.label or ''}" for e in state.incoming(s0) if e.source == s1]
        fv.add('rel.s0s1', '|'.join(sorted(between)) or NONE)

    # nodes without an anchored descendant only see the sentence through the lexicon
    if s0 is not None and _kind(s0, state) == 'node' and head_terminal(s0, state) is None:
        context = f"{_labels(state.incoming(s0))}/{_labels(state.outgoing(s0))}"
        for key, value in sorted(lexicon(rows).items()):
            fv.add(f'lex.{key}', value)
            fv.add(f'lex.{context}.{key}', value)

    latest = state.latest_edge
    fv.add('edge', (latest.label or '') if latest is not None else NONE)
    if latest is not None:
        fv.add('edge.attrs', '|'.join(name for name, _ in latest.attributes) or NONE)

    for k in range(HISTORY):
        fv.add(f'act{k}', _action(history[-1 - k]) if len(history) > k else NONE)
    fv.add('act0.kind', history[-1].kind if history else NONE)

    fv.add('len.stack', min(len(state.stack), 5))
    fv.add('len.buffer', min(len(state.buffer), 5))

    fv.add('conj.s0s1.upos', f"{summary['s0'][1]}|{summary['s1'][1]}")
    fv.add('conj.s0s2.upos', f"{summary['s0'][1]}|{summary['s2'][1]}|{summary['s2'][0]}")
    fv.add('conj.s0b0.upos', f"{summary['s0'][1]}|{summary['b0'][1]}|{summary['b0'][0]}")
    fv.add('conj.s0b0.kind', f"{summary['s0'][0]}|{summary['b0'][0]}")
    fv.add('conj.s0s1.label', f"{summary['s0'][2]}|{summary['s1'][2]}")
    fv.add('conj.s0.kind.act0', f"{summary['s0'][0]}|{history[-1].kind if history else NONE}")
    lemmas = {name: (row_of[head].lemma if head in row_of else NONE)
              for name, head in ((n, head_terminal(window[n], state)) for n in ('s0', 's1', 'b0'))}
    fv.add('conj.s0s1.lemma.act0', f"{lemmas['s0']}|{lemmas['s1']}|{_action(history[-1]) if history else NONE}")
    fv.add('conj.s0b0.lemma', f"{lemmas['s0']}|{lemmas['b0']}|{summary['s0'][0]}|{summary['b0'][0]}")
    fv.add('conj.s0.lemma.len', f"{lemmas['s0']}|{summary['s0'][0]}|{min(len(state.stack), 5)}|{len(state.buffer) > 0}")

    fv.add_numeric('ratio', len(state.terminals) / len(state.nodes))
    if framework:
        fv.add('fw', framework)
    return fv
