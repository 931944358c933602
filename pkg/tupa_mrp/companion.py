"""
Companion data: morpho-syntactic token rows from MRP companion graphs, and CoNLL-U I/O.
"""
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import CompanionError
from .graph import Anchor, Graph, Node, id_key
from .logger import get_logger

logger = get_logger('companion')

REQUIRED = ('lemma', 'upos', 'xpos')
TOKEN_RANGE = re.compile(r'TokenRange=(\d+):(\d+)')


@dataclass(frozen=True)
class TokenRow:
    index: int
    form: str
    lemma: str
    upos: str
    xpos: str
    anchor: Anchor


def companion_to_rows(companion: Graph) -> List[TokenRow]:
    """One row per companion node, ordered by anchor start and numbered from 1."""
    pending: List[Tuple[Anchor, str, Dict[str, str]]] = []
    for node in sorted(companion.nodes, key=lambda n: id_key(n.id)):
        for name in REQUIRED:
            if name not in node.properties:
                raise CompanionError(node.id, f"missing property '{name}'")
        if len(node.anchors) != 1:
            raise CompanionError(node.id, f"expected exactly one anchor, found {len(node.anchors)}")
        form = node.label if node.label is not None else node.properties.get('form')
        if form is None:
            raise CompanionError(node.id, "no form (label or 'form' property)")
        pending.append((node.anchors[0], str(form), node.properties))

    pending.sort(key=lambda item: (item[0].start, item[0].end))
    rows = []
    previous: Optional[Anchor] = None
    for i, (anchor, form, props) in enumerate(pending, start=1):
        if previous is not None and anchor.start < previous.end:
            raise CompanionError(
                f"{i - 1}/{i}",
                f"anchors {previous.start}:{previous.end} and {anchor.start}:{anchor.end} overlap",
            )
        if companion.input and anchor.end > len(companion.input):
            raise CompanionError(i, f"anchor {anchor.start}:{anchor.end} exceeds input length {len(companion.input)}")
        rows.append(TokenRow(i, form, str(props['lemma']), str(props['upos']), str(props['xpos']), anchor))
        previous = anchor
    return rows


def companion_index(companions: Iterable[Graph]) -> Dict[str, List[TokenRow]]:
    """Rows for every companion graph, keyed by graph id."""
    index = {}
    for graph in companions:
        index[str(graph.id)] = companion_to_rows(graph)
    return index


def rows_to_companion(rows: List[TokenRow], graph_id, text: str = "") -> Graph:
    """Inverse of companion_to_rows, for the generator and tests."""
    nodes = [
        Node(row.index - 1, row.form, {'lemma': row.lemma, 'upos': row.upos, 'xpos': row.xpos}, [row.anchor])
        for row in rows
    ]
    return Graph(id=graph_id, framework='conllu', flavor=0, input=text, nodes=nodes)


def write_conllu(rows: List[TokenRow], sink, sent_id=None, text: Optional[str] = None):
    """One sentence block: optional comments, ten tab-separated columns per row, then a blank line."""
    if sent_id is not None:
        sink.write(f"# sent_id = {sent_id}\n")
    if text is not None:
        sink.write(f"# text = {text}\n")
    for row in rows:
        columns = [
            str(row.index), row.form, row.lemma, row.upos, row.xpos,
            '_', '_', '_', '_', f"TokenRange={row.anchor.start}:{row.anchor.end}",
        ]
        sink.write('\t'.join(columns) + '\n')
    sink.write('\n')


def read_conllu(stream) -> List[Tuple[Optional[str], List[TokenRow]]]:
    """Sentences as (sent_id, rows). Multiword and empty-node lines are skipped."""
    sentences = []
    sent_id = None
    rows: List[TokenRow] = []
    started = False
    for line_no, line in enumerate(stream, start=1):
        line = line.rstrip('\n')
        if not line.strip():
            if started:
                sentences.append((sent_id, rows))
            sent_id, rows, started = None, [], False
            continue
        started = True
        if line.startswith('#'):
            if line.startswith('# sent_id'):
                sent_id = line.split('=', 1)[1].strip()
            continue
        columns = line.split('\t')
        if len(columns) != 10:
            raise CompanionError(line_no, f"expected 10 columns, found {len(columns)}")
        if not columns[0].isdigit():
            continue
        match = TOKEN_RANGE.search(columns[9])
        if not match:
            raise CompanionError(line_no, "no TokenRange in MISC column")
        anchor = Anchor(int(match.group(1)), int(match.group(2)))
        rows.append(TokenRow(int(columns[0]), columns[1], columns[2], columns[3], columns[4], anchor))
    if started:
        sentences.append((sent_id, rows))
    return sentences


def text_from_rows(rows: List[TokenRow]) -> str:
    """Rebuild a source string with every form at its anchor; gaps become spaces."""
    if not rows:
        return ''
    chars = [' '] * max(row.anchor.end for row in rows)
    for row in rows:
        span = row.anchor.end - row.anchor.start
        chars[row.anchor.start:row.anchor.end] = list(row.form[:span].ljust(span))
    return ''.join(chars)
