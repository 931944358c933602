"""
Intermediate representation used by the parser.

An MRP graph becomes an IGraph with a virtual root (ref 0) linked to every top by a
<TOP> edge, one virtual terminal per token (refs 1..n) linked from anchored nodes by
<ANCHOR> edges, and labels/properties rewritten to placeholders where they spell out
the anchored tokens. Cycles are broken first; the removed edges are kept for bookkeeping.
"""
import json
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from .companion import TokenRow
from .errors import IntermediateError
from .graph import Anchor, Edge, Graph, Node, edge_from_json, edge_to_json, find_cycles
from .logger import get_logger

logger = get_logger('irep')

ROOT = 0
TOP = '<TOP>'
ANCHOR = '<ANCHOR>'
LEMMA = '<l>'
FORM = '<f>'
CASINGS = {'lower': str.lower, 'title': str.title, 'upper': str.upper}
PLACEHOLDER_PATTERN = re.compile(r'<([lf])(?::(lower|title|upper))?>')
NAME_FRAMEWORKS = ('amr',)
OP_PATTERN = re.compile(r'op(\d+)$')


def value_text(value: Any) -> str:
    """Canonical string for a property or attribute value."""
    if isinstance(value, str):
        return value
    return json.dumps(value, ensure_ascii=False)


@dataclass
class INode:
    id: int
    label: Optional[str] = None
    properties: Dict[str, str] = field(default_factory=dict)
    is_virtual: bool = False
    source_id: Any = None


@dataclass
class IEdge:
    source: int
    target: int
    label: Optional[str] = None
    attributes: Dict[str, str] = field(default_factory=dict)

    @property
    def is_virtual(self) -> bool:
        return self.label in (TOP, ANCHOR)


@dataclass
class IGraph:
    nodes: List[INode] = field(default_factory=list)
    edges: List[IEdge] = field(default_factory=list)
    root: int = ROOT
    terminals: List[int] = field(default_factory=list)
    removed_edges: List[Edge] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)

    def node(self, ref: int) -> INode:
        for node in self.nodes:
            if node.id == ref:
                return node
        raise KeyError(ref)

    def semantic_nodes(self) -> List[INode]:
        return [n for n in self.nodes if not n.is_virtual]

    def semantic_edges(self) -> List[IEdge]:
        return [e for e in self.edges if not e.is_virtual]

    def check(self) -> List[str]:
        """Structural problems, empty when every invariant holds."""
        problems = []
        refs = {n.id for n in self.nodes}
        terminals = set(self.terminals)
        roots = [n for n in self.nodes if n.id == self.root]
        if len(roots) != 1:
            problems.append("exactly one virtual root expected")
        for node in self.nodes:
            if node.is_virtual and (node.label is not None or node.properties):
                problems.append(f"virtual node {node.id} is decorated")
        for edge in self.edges:
            if edge.source not in refs or edge.target not in refs:
                problems.append(f"edge {edge.source}->{edge.target} is dangling")
            if edge.target == self.root:
                problems.append(f"edge {edge.source}->{edge.target} enters the root")
            if edge.source in terminals:
                problems.append(f"terminal {edge.source} has an outgoing edge")
            if edge.label == TOP and edge.source != self.root:
                problems.append(f"<TOP> edge from non-root {edge.source}")
            if edge.label == ANCHOR and edge.target not in terminals:
                problems.append(f"<ANCHOR> edge to non-terminal {edge.target}")
            if edge.label != TOP and edge.source == self.root:
                problems.append("non-<TOP> edge from the root")
            if edge.label != ANCHOR and edge.target in terminals:
                problems.append(f"non-<ANCHOR> edge into terminal {edge.target}")
        if _has_cycle([(e.source, e.target) for e in self.semantic_edges()]):
            problems.append("semantic subgraph is cyclic")
        return problems


def _has_cycle(pairs: List[Tuple[int, int]]) -> bool:
    # Kahn's algorithm
    indegree: Dict[int, int] = {}
    children: Dict[int, List[int]] = {}
    for source, target in pairs:
        indegree.setdefault(source, 0)
        indegree[target] = indegree.get(target, 0) + 1
        children.setdefault(source, []).append(target)
    queue = [n for n, d in indegree.items() if d == 0]
    seen = 0
    while queue:
        n = queue.pop()
        seen += 1
        for child in children.get(n, []):
            indegree[child] -= 1
            if indegree[child] == 0:
                queue.append(child)
    return seen != len(indegree)


# --------------------------------------------------------------------------- #
# Cycle breaking
# --------------------------------------------------------------------------- #

def break_cycles(graph: Graph) -> Tuple[Graph, List[Edge]]:
    """Remove the greatest (source, target, label) edge of the first cycle until none is left."""
    result = graph.copy()
    removed: List[Edge] = []
    while True:
        cycles = find_cycles(result)
        if not cycles:
            break
        victim = max(cycles[0], key=Edge.key)
        for i, edge in enumerate(result.edges):
            if edge is victim or (edge.source, edge.target, edge.label) == (victim.source, victim.target, victim.label):
                removed.append(result.edges.pop(i))
                break
    if removed:
        logger.debug(f"graph {graph.id}: removed {len(removed)} edge(s) to break cycles")
    return result, removed


# --------------------------------------------------------------------------- #
# Placeholders
# --------------------------------------------------------------------------- #

def _overlaps(a: Anchor, b: Anchor) -> bool:
    return a.start < b.end and b.start < a.end


def merge_anchors(positions: List[int], rows: List[TokenRow]) -> List[Anchor]:
    """One span per run of consecutive token positions, from the first start to the last end."""
    anchors: List[Anchor] = []
    previous = None
    for i in positions:
        if anchors and previous == i - 1:
            anchors[-1] = Anchor(anchors[-1].start, rows[i].anchor.end)
        else:
            anchors.append(Anchor(rows[i].anchor.start, rows[i].anchor.end))
        previous = i
    return anchors


def _casing(spelled: str, concat: str) -> Optional[str]:
    """How the spelled-out text differs in case from the anchored text, if it is one of CASINGS."""
    if spelled == concat:
        return ''
    for name, change in CASINGS.items():
        if change(concat) == spelled:
            return name
    return None


def substitute(value: str, lemmas: str, forms: str) -> str:
    """Replace the spelled-out anchored text in a label or value with a placeholder.

    Matching ignores case; a casing change is kept in the placeholder, as in ``<l:title>``.
    """
    for concat, token in ((lemmas, LEMMA), (forms, FORM)):
        if not concat:
            continue
        match = re.fullmatch(r'(_?)(' + re.escape(concat) + r')([-_].*)?', value, flags=re.IGNORECASE)
        if match is None:
            continue
        casing = _casing(match.group(2), concat)
        if casing is None:
            continue
        placeholder = f"{token[:-1]}:{casing}>" if casing else token
        return match.group(1) + placeholder + (match.group(3) or '')
    return value


def has_placeholder(value: Optional[str]) -> bool:
    return value is not None and PLACEHOLDER_PATTERN.search(value) is not None


def resolve(value: str, lemmas: str, forms: str) -> str:
    def spell(match) -> str:
        text = lemmas if match.group(1) == 'l' else forms
        return CASINGS[match.group(2)](text) if match.group(2) else text
    return PLACEHOLDER_PATTERN.sub(spell, value)


def _collapse_names(properties: Dict[str, str], rows: List[TokenRow]) -> Optional[Dict[str, str]]:
    """op1..opK spelling out the anchored forms become a single op placeholder."""
    ops = {}
    for name in properties:
        match = OP_PATTERN.match(name)
        if match:
            ops[int(match.group(1))] = name
    if not ops or sorted(ops) != list(range(1, len(ops) + 1)):
        return None
    forms = [row.form for row in rows]
    if [properties[ops[k]] for k in range(1, len(ops) + 1)] != forms:
        return None
    if any(' ' in form for form in forms):
        return None
    token = LEMMA if forms == [row.lemma for row in rows] else FORM
    collapsed = {}
    for name, value in properties.items():
        if name == ops[1]:
            collapsed['op'] = token
        elif name not in ops.values():
            collapsed[name] = value
    return collapsed


def _expand_names(properties: Dict[str, str], lemmas: str, forms: str) -> Dict[str, str]:
    expanded = {}
    for name, value in properties.items():
        if name == 'op' and has_placeholder(value):
            for k, part in enumerate(resolve(value, lemmas, forms).split(' '), start=1):
                expanded[f'op{k}'] = part
        else:
            expanded[name] = value
    return expanded


# --------------------------------------------------------------------------- #
# Conversion
# --------------------------------------------------------------------------- #

def to_intermediate(graph: Graph, rows: List[TokenRow], profile=None) -> IGraph:
    """Build the parser's view of a gold graph."""
    acyclic, removed = break_cycles(graph)
    framework = (graph.framework or (profile.framework if profile else '')).lower()
    n = len(rows)

    igraph = IGraph(
        root=ROOT,
        terminals=list(range(1, n + 1)),
        removed_edges=removed,
        meta={'id': graph.id, 'framework': graph.framework, 'flavor': graph.flavor,
              'input': graph.input, 'extra': dict(graph.extra)},
    )
    igraph.nodes.append(INode(ROOT, is_virtual=True))
    igraph.nodes.extend(INode(ref, is_virtual=True) for ref in igraph.terminals)

    refs: Dict[Any, int] = {}
    for k, node in enumerate(acyclic.nodes):
        refs[node.id] = n + 1 + k

    for top in acyclic.tops:
        igraph.edges.append(IEdge(ROOT, refs[top], TOP))

    anchor_edges: List[IEdge] = []
    for node in acyclic.nodes:
        anchored = []
        for anchor in node.anchors:
            hits = [i for i, row in enumerate(rows) if _overlaps(row.anchor, anchor)]
            if not hits:
                raise IntermediateError(graph.id, f"node {node.id} anchor {anchor.start}:{anchor.end} matches no token")
            anchored.extend(hits)
        anchored = sorted(set(anchored))
        anchored_rows = [rows[i] for i in anchored]
        lemmas = ' '.join(row.lemma for row in anchored_rows)
        forms = ' '.join(row.form for row in anchored_rows)

        properties = {name: value_text(value) for name, value in node.properties.items()}
        collapsed = None
        if framework in NAME_FRAMEWORKS and anchored_rows:
            collapsed = _collapse_names(properties, anchored_rows)
        if collapsed is not None:
            properties = {name: value if name == 'op' else substitute(value, lemmas, forms)
                          for name, value in collapsed.items()}
        else:
            properties = {name: substitute(value, lemmas, forms) for name, value in properties.items()}
        label = substitute(node.label, lemmas, forms) if node.label is not None else None

        ref = refs[node.id]
        igraph.nodes.append(INode(ref, label, properties, source_id=node.id))
        anchor_edges.extend(IEdge(ref, i + 1, ANCHOR) for i in anchored)

    for edge in acyclic.edges:
        attributes = {name: value_text(value) for name, value in edge.attributes.items()}
        igraph.edges.append(IEdge(refs[edge.source], refs[edge.target], edge.label, attributes))
    igraph.edges.extend(anchor_edges)
    return igraph


def from_intermediate(igraph: IGraph, rows: List[TokenRow], input: Optional[str] = None,
                      strict: bool = True) -> Graph:
    """Turn a gold or predicted IGraph back into an MRP graph."""
    meta = igraph.meta
    graph_id = meta.get('id')
    framework = (meta.get('framework') or '').lower()
    position = {ref: i for i, ref in enumerate(igraph.terminals)}

    anchored: Dict[int, List[int]] = {}
    for edge in igraph.edges:
        if edge.label == ANCHOR and edge.target in position:
            anchored.setdefault(edge.source, []).append(position[edge.target])

    semantic = igraph.semantic_nodes()
    used = {n.source_id for n in semantic if n.source_id is not None}
    next_id = max([i for i in used if isinstance(i, int)], default=-1) + 1
    ids: Dict[int, Any] = {}
    for node in sorted(semantic, key=lambda n: n.id):
        if node.source_id is not None:
            ids[node.id] = node.source_id
        else:
            while next_id in used:
                next_id += 1
            ids[node.id] = next_id
            used.add(next_id)

    nodes = []
    for node in sorted(semantic, key=lambda n: n.id):
        token_rows = [rows[i] for i in sorted(set(anchored.get(node.id, [])))]
        lemmas = ' '.join(row.lemma for row in token_rows)
        forms = ' '.join(row.form for row in token_rows)
        decorated = [node.label] + list(node.properties.values())
        if not token_rows and any(has_placeholder(v) for v in decorated):
            if strict:
                raise IntermediateError(graph_id, f"node {ids[node.id]} has a placeholder but no anchors")
            logger.debug(f"graph {graph_id}: unresolvable placeholder on node {ids[node.id]}")

        properties = node.properties
        if framework in NAME_FRAMEWORKS:
            properties = _expand_names(properties, lemmas, forms)
        properties = {name: resolve(value, lemmas, forms) for name, value in properties.items()}
        label = resolve(node.label, lemmas, forms) if node.label is not None else None
        anchors = merge_anchors(sorted(set(anchored.get(node.id, []))), rows)
        nodes.append(Node(ids[node.id], label, properties, anchors))

    tops = [ids[e.target] for e in igraph.edges if e.label == TOP and e.target in ids]
    edges = [Edge(ids[e.source], ids[e.target], e.label, dict(e.attributes))
             for e in igraph.semantic_edges() if e.source in ids and e.target in ids]

    extra = dict(meta.get('extra') or {})
    return Graph(
        id=graph_id,
        framework=meta.get('framework', ''),
        flavor=meta.get('flavor'),
        input=input if input is not None else meta.get('input', ''),
        tops=list(dict.fromkeys(tops)),
        nodes=nodes,
        edges=edges,
        extra=extra,
    )


def igraph_signature(igraph: IGraph, rename: Optional[Callable[[int], Any]] = None) -> Tuple:
    """Canonical content of an IGraph; refs are passed through rename before comparison."""
    rename = rename or (lambda ref: ref)
    labels = sorted((rename(n.id), n.label) for n in igraph.nodes if n.label is not None)
    properties = sorted((rename(n.id), name, value) for n in igraph.nodes for name, value in n.properties.items())
    edges = sorted(
        (rename(e.source), rename(e.target), e.label or '', tuple(sorted(e.attributes.items())))
        for e in igraph.edges
    )
    return (len(igraph.nodes), tuple(labels), tuple(properties), tuple(edges))


# --------------------------------------------------------------------------- #
# JSON lines
# --------------------------------------------------------------------------- #

def igraph_to_json(igraph: IGraph) -> Dict[str, Any]:
    return {
        'id': igraph.meta.get('id'),
        'meta': igraph.meta,
        'root': igraph.root,
        'terminals': igraph.terminals,
        'nodes': [
            {'id': n.id, 'label': n.label, 'properties': n.properties, 'virtual': n.is_virtual, 'source': n.source_id}
            for n in igraph.nodes
        ],
        'edges': [
            {'source': e.source, 'target': e.target, 'label': e.label, 'attributes': e.attributes}
            for e in igraph.edges
        ],
        'removed': [edge_to_json(e) for e in igraph.removed_edges],
    }


def igraph_from_json(obj: Dict[str, Any]) -> IGraph:
    return IGraph(
        nodes=[INode(n['id'], n.get('label'), dict(n.get('properties') or {}), bool(n.get('virtual')), n.get('source'))
               for n in obj.get('nodes', [])],
        edges=[IEdge(e['source'], e['target'], e.get('label'), dict(e.get('attributes') or {}))
               for e in obj.get('edges', [])],
        root=obj.get('root', ROOT),
        terminals=list(obj.get('terminals', [])),
        removed_edges=[edge_from_json(e, obj.get('id')) for e in obj.get('removed', [])],
        meta=dict(obj.get('meta') or {'id': obj.get('id')}),
    )


def write_irep(igraphs: Iterable[IGraph], stream):
    for igraph in igraphs:
        stream.write(json.dumps(igraph_to_json(igraph), ensure_ascii=False) + '\n')


def read_irep(stream) -> List[IGraph]:
    igraphs = []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            igraphs.append(igraph_from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as e:
            raise IntermediateError(f"line {line_no}", f"malformed intermediate graph ({e})") from e
    return igraphs
