"""
MRP graph data model: reading and writing the JSON-lines interchange format,
validation against framework profiles, cycle witnesses and corpus statistics.
"""
from __future__ import annotations

import io
import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, TYPE_CHECKING, Any, Dict, Iterable, List, Optional, Tuple, Union

import networkx as nx

from .errors import MrpParseError, MrpValidationError
from .logger import get_logger

if TYPE_CHECKING:
    from .constraints import FrameworkProfile

logger = get_logger('graph')

GRAPH_FIELDS = ('id', 'flavor', 'framework', 'version', 'time', 'provenance', 'source', 'targets', 'input', 'tops', 'nodes', 'edges')
NODE_FIELDS = ('id', 'label', 'properties', 'values', 'anchors')
EDGE_FIELDS = ('source', 'target', 'label', 'attributes', 'values')
# Wire order for the optional fields MRP tools expect before "input"
META_FIELDS = ('version', 'time', 'provenance', 'source', 'targets')


def id_key(node_id: Any) -> Tuple[int, Any]:
    """Sort key that puts integer ids first, in numeric order."""
    if isinstance(node_id, int) and not isinstance(node_id, bool):
        return (0, node_id)
    return (1, str(node_id))


@dataclass(frozen=True)
class Anchor:
    start: int
    end: int

    def to_json(self) -> Dict[str, int]:
        return {'from': self.start, 'to': self.end}


@dataclass
class Node:
    id: Any
    label: Optional[str] = None
    properties: Dict[str, Any] = field(default_factory=dict)
    anchors: List[Anchor] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass
class Edge:
    source: Any
    target: Any
    label: Optional[str] = None
    attributes: Dict[str, Any] = field(default_factory=dict)
    extra: Dict[str, Any] = field(default_factory=dict)

    def key(self) -> Tuple:
        return (id_key(self.source), id_key(self.target), self.label or "")


@dataclass
class Graph:
    """One MRP graph. Treated as immutable once built; conversions return new graphs."""
    id: Any
    framework: str = ""
    flavor: Optional[int] = None
    input: str = ""
    tops: List[Any] = field(default_factory=list)
    nodes: List[Node] = field(default_factory=list)
    edges: List[Edge] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)

    def node(self, node_id: Any) -> Optional[Node]:
        for node in self.nodes:
            if node.id == node_id:
                return node
        return None

    def node_ids(self) -> List[Any]:
        return [node.id for node in self.nodes]

    def copy(self, **changes) -> 'Graph':
        graph = Graph(
            id=self.id, framework=self.framework, flavor=self.flavor, input=self.input,
            tops=list(self.tops),
            nodes=[Node(n.id, n.label, dict(n.properties), list(n.anchors), dict(n.extra)) for n in self.nodes],
            edges=[Edge(e.source, e.target, e.label, dict(e.attributes), dict(e.extra)) for e in self.edges],
            extra=dict(self.extra),
        )
        for key, value in changes.items():
            setattr(graph, key, value)
        return graph


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass
class ValidationReport:
    graph_id: Any
    violations: List[Violation] = field(default_factory=list)

    def __bool__(self) -> bool:
        """True when the graph is valid."""
        return not self.violations

    def codes(self) -> List[str]:
        return [v.code for v in self.violations]


@dataclass
class FrameworkStats:
    graph_count: int = 0
    cyclic_count: int = 0

    @property
    def cyclic_fraction(self) -> Optional[float]:
        if self.graph_count == 0:
            return None
        return self.cyclic_count / self.graph_count

    def to_json(self) -> Dict[str, Any]:
        return {'graphs': self.graph_count, 'cyclic': self.cyclic_count, 'cyclic_fraction': self.cyclic_fraction}


@dataclass
class CorpusStats:
    graph_count: int = 0
    cyclic_count: int = 0
    per_framework: Dict[str, FrameworkStats] = field(default_factory=dict)

    @property
    def cyclic_fraction(self) -> Optional[float]:
        if self.graph_count == 0:
            return None
        return self.cyclic_count / self.graph_count

    def to_json(self) -> Dict[str, Any]:
        return {
            'graphs': self.graph_count,
            'cyclic': self.cyclic_count,
            'cyclic_fraction': self.cyclic_fraction,
            'frameworks': {name: stats.to_json() for name, stats in sorted(self.per_framework.items())},
        }


# --------------------------------------------------------------------------- #
# Reading and writing
# --------------------------------------------------------------------------- #

def _node_from_json(obj: Dict[str, Any], graph_id: Any) -> Node:
    names = obj.get('properties') or []
    values = obj.get('values') or []
    if len(names) != len(values):
        raise MrpValidationError(graph_id, f"node {obj.get('id')} has {len(names)} properties but {len(values)} values")
    properties: Dict[str, Any] = {}
    for name, value in zip(names, values):
        if name in properties:
            raise MrpValidationError(graph_id, f"node {obj.get('id')} repeats property '{name}'")
        properties[name] = value
    anchors = [Anchor(int(a['from']), int(a['to'])) for a in obj.get('anchors') or []]
    extra = {k: v for k, v in obj.items() if k not in NODE_FIELDS}
    return Node(obj['id'], obj.get('label'), properties, anchors, extra)


def edge_from_json(obj: Dict[str, Any], graph_id: Any = None) -> Edge:
    names = obj.get('attributes') or []
    values = obj.get('values') or []
    if len(names) != len(values):
        raise MrpValidationError(graph_id, f"edge {obj.get('source')}->{obj.get('target')} has mismatched attributes")
    extra = {k: v for k, v in obj.items() if k not in EDGE_FIELDS}
    return Edge(obj['source'], obj['target'], obj.get('label'), dict(zip(names, values)), extra)


def graph_from_json(obj: Dict[str, Any]) -> Graph:
    graph_id = obj.get('id')
    try:
        nodes = [_node_from_json(n, graph_id) for n in obj.get('nodes') or []]
        edges = [edge_from_json(e, graph_id) for e in obj.get('edges') or []]
    except KeyError as e:
        raise MrpValidationError(graph_id, f"missing field {e}") from e
    extra = {k: v for k, v in obj.items() if k not in GRAPH_FIELDS}
    for key in META_FIELDS:
        if key in obj:
            extra[key] = obj[key]
    graph = Graph(
        id=graph_id,
        framework=obj.get('framework', ''),
        flavor=obj.get('flavor'),
        input=obj.get('input', ''),
        tops=list(obj.get('tops') or []),
        nodes=nodes,
        edges=edges,
        extra=extra,
    )
    _check_references(graph)
    return graph


def _check_references(graph: Graph):
    ids = set()
    for node in graph.nodes:
        if node.id in ids:
            raise MrpValidationError(graph.id, f"duplicate node id {node.id}")
        ids.add(node.id)
    for edge in graph.edges:
        for end in (edge.source, edge.target):
            if end not in ids:
                raise MrpValidationError(graph.id, f"edge {edge.source}->{edge.target} references missing node {end}")
    for top in graph.tops:
        if top not in ids:
            raise MrpValidationError(graph.id, f"top references missing node {top}")


def edge_to_json(edge: Edge) -> Dict[str, Any]:
    entry: Dict[str, Any] = {'source': edge.source, 'target': edge.target}
    if edge.label is not None:
        entry['label'] = edge.label
    if edge.attributes:
        entry['attributes'] = list(edge.attributes.keys())
        entry['values'] = list(edge.attributes.values())
    entry.update(edge.extra)
    return entry


def graph_to_json(graph: Graph) -> Dict[str, Any]:
    obj: Dict[str, Any] = {'id': graph.id}
    if graph.flavor is not None:
        obj['flavor'] = graph.flavor
    obj['framework'] = graph.framework
    for key in META_FIELDS:
        if key in graph.extra:
            obj[key] = graph.extra[key]
    obj['input'] = graph.input
    obj['tops'] = list(graph.tops)

    nodes = []
    for node in graph.nodes:
        entry: Dict[str, Any] = {'id': node.id}
        if node.label is not None:
            entry['label'] = node.label
        if node.properties:
            entry['properties'] = list(node.properties.keys())
            entry['values'] = list(node.properties.values())
        if node.anchors:
            entry['anchors'] = [a.to_json() for a in node.anchors]
        entry.update(node.extra)
        nodes.append(entry)
    obj['nodes'] = nodes

    obj['edges'] = [edge_to_json(edge) for edge in graph.edges]

    for key, value in graph.extra.items():
        if key not in META_FIELDS:
            obj[key] = value
    return obj


def _text_lines(stream: Union[IO[str], IO[bytes], Iterable]) -> Iterable[str]:
    for line in stream:
        if isinstance(line, bytes):
            line = line.decode('utf-8')
        yield line


def read_mrp(stream) -> List[Graph]:
    """Read one graph per line. Blank lines are skipped."""
    graphs = []
    for line_no, line in enumerate(_text_lines(stream), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise MrpParseError(line_no, f"malformed JSON ({e.msg})") from e
        if not isinstance(obj, dict):
            raise MrpParseError(line_no, "expected a JSON object")
        graphs.append(graph_from_json(obj))
    return graphs


def write_mrp(graphs: Iterable[Graph], stream):
    """Write one graph per line. Accepts text or binary sinks."""
    binary = isinstance(stream, (io.BufferedIOBase, io.RawIOBase)) or 'b' in getattr(stream, 'mode', '')
    for graph in graphs:
        line = json.dumps(graph_to_json(graph), ensure_ascii=False) + '\n'
        stream.write(line.encode('utf-8') if binary else line)


def load_mrp(path) -> List[Graph]:
    with open(path, 'r', encoding='utf-8') as f:
        return read_mrp(f)


def save_mrp(graphs: Iterable[Graph], path):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        write_mrp(graphs, f)


# --------------------------------------------------------------------------- #
# Validation
# --------------------------------------------------------------------------- #

def validate(graph: Graph, profile: 'FrameworkProfile') -> ValidationReport:
    """List every structural and profile violation; an empty report means valid."""
    report = ValidationReport(graph.id)
    add = report.violations.append

    ids = Counter(node.id for node in graph.nodes)
    for node_id, count in ids.items():
        if count > 1:
            add(Violation('duplicate-node', f"node id {node_id} occurs {count} times"))
    for edge in graph.edges:
        for end in (edge.source, edge.target):
            if end not in ids:
                add(Violation('dangling-edge', f"edge {edge.source}->{edge.target} references missing node {end}"))
    for top in graph.tops:
        if top not in ids:
            add(Violation('dangling-top', f"top {top} is not a node"))

    length = len(graph.input)
    for node in graph.nodes:
        for anchor in node.anchors:
            if not 0 <= anchor.start < anchor.end <= length:
                add(Violation('anchor-range', f"node {node.id} anchor {anchor.start}:{anchor.end} outside [0, {length}]"))

    if not profile.allows_node_labels:
        for node in graph.nodes:
            if node.label is not None:
                add(Violation('node-label', f"node labels forbidden (node {node.id})"))
    elif profile.required_node_labels:
        for node in graph.nodes:
            if node.label is None:
                add(Violation('missing-label', f"node label required (node {node.id})"))
    if not profile.allows_node_properties:
        for node in graph.nodes:
            if node.properties:
                add(Violation('node-properties', f"node properties forbidden (node {node.id})"))
    if not profile.allows_anchors:
        for node in graph.nodes:
            if node.anchors:
                add(Violation('anchors', f"anchors forbidden (node {node.id})"))
    if not profile.allows_edge_attributes:
        for edge in graph.edges:
            if edge.attributes:
                add(Violation('edge-attributes', f"edge attributes forbidden ({edge.source}->{edge.target})"))
    if not profile.allows_multigraph:
        triples = Counter((e.source, e.target, e.label) for e in graph.edges)
        for (source, target, label), count in triples.items():
            if count > 1:
                add(Violation('multigraph', f"edge {source}-{label}->{target} repeated {count} times"))
    if profile.max_tops is not None and len(graph.tops) > profile.max_tops:
        add(Violation('max-tops', f"{len(graph.tops)} tops, at most {profile.max_tops} allowed"))
    if len(set(graph.tops)) != len(graph.tops):
        add(Violation('duplicate-top', "tops repeat a node"))

    return report


# --------------------------------------------------------------------------- #
# Cycles
# --------------------------------------------------------------------------- #

def to_digraph(graph: Graph) -> nx.MultiDiGraph:
    g = nx.MultiDiGraph()
    g.add_nodes_from(sorted(graph.node_ids(), key=id_key))
    for edge in sorted(graph.edges, key=Edge.key):
        g.add_edge(edge.source, edge.target, edge=edge)
    return g


def _witness(scc: set, successors: Dict[Any, List[Tuple[Any, Edge]]]) -> List[Edge]:
    """Depth-first from the lowest id of the component until an edge returns to it."""
    start = min(scc, key=id_key)
    path: List[Edge] = []
    visited = {start}
    stack = [(start, iter(successors.get(start, [])))]
    while stack:
        node, it = stack[-1]
        for target, edge in it:
            if target not in scc:
                continue
            if target == start:
                return path + [edge]
            if target not in visited:
                visited.add(target)
                path.append(edge)
                stack.append((target, iter(successors.get(target, []))))
                break
        else:
            stack.pop()
            if path:
                path.pop()
    return path


def find_cycles(graph: Graph) -> List[List[Edge]]:
    """One witness cycle per non-trivial strongly connected component, plus every self-loop."""
    g = to_digraph(graph)
    successors: Dict[Any, List[Tuple[Any, Edge]]] = {}
    for edge in sorted(graph.edges, key=lambda e: (id_key(e.source), id_key(e.target), e.label or "")):
        if edge.source != edge.target:
            successors.setdefault(edge.source, []).append((edge.target, edge))

    cycles = []
    for scc in nx.strongly_connected_components(g):
        if len(scc) >= 2:
            cycles.append(_witness(scc, successors))
    for edge in sorted(graph.edges, key=Edge.key):
        if edge.source == edge.target:
            cycles.append([edge])
    cycles.sort(key=lambda cycle: [e.key() for e in cycle])
    return cycles


def is_cyclic(graph: Graph) -> bool:
    return any(edge.source == edge.target for edge in graph.edges) or not nx.is_directed_acyclic_graph(to_digraph(graph))


def corpus_stats(graphs: List[Graph], jobs: int = 1) -> CorpusStats:
    """Count graphs and cyclic graphs, overall and per framework."""
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            flags = list(executor.map(is_cyclic, graphs))
    else:
        flags = [is_cyclic(g) for g in graphs]

    stats = CorpusStats()
    for graph, cyclic in zip(graphs, flags):
        per = stats.per_framework.setdefault(graph.framework or '', FrameworkStats())
        per.graph_count += 1
        stats.graph_count += 1
        if cyclic:
            per.cyclic_count += 1
            stats.cyclic_count += 1
    logger.debug(f"{stats.cyclic_count}/{stats.graph_count} graphs are cyclic")
    return stats


# --------------------------------------------------------------------------- #
# Graphviz
# --------------------------------------------------------------------------- #

def _dot_quote(text: Any) -> str:
    return '"' + str(text).replace('\\', '\\\\').replace('"', '\\"').replace('\n', '\\n') + '"'


def graph_to_dot(graph: Graph) -> str:
    """Graphviz source for a graph; tops are drawn bold and anchors shown under the label."""
    lines = [f"digraph {_dot_quote(graph.id)} {{", '  node [shape=box, fontname="Helvetica"];']
    tops = set(graph.tops)
    for node in graph.nodes:
        text = node.label if node.label is not None else ''
        spans = [graph.input[a.start:a.end] for a in node.anchors if a.end <= len(graph.input)]
        if spans:
            text += '\n⟨' + ' '.join(spans) + '⟩'
        for key, value in node.properties.items():
            text += f"\n{key}={value}"
        style = ', style=bold' if node.id in tops else ''
        lines.append(f"  {_dot_quote(node.id)} [label={_dot_quote(text)}{style}];")
    for edge in graph.edges:
        label = edge.label or ''
        if edge.attributes:
            label += ' (' + ', '.join(f"{k}={v}" for k, v in edge.attributes.items()) + ')'
        lines.append(f"  {_dot_quote(edge.source)} -> {_dot_quote(edge.target)} [label={_dot_quote(label)}];")
    lines.append('}')
    return '\n'.join(lines) + '\n'
