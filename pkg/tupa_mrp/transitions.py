"""
The uniform transition set: parser state, preconditions and effects.

Stack top is the last element of ``stack``; buffer head is ``buffer[0]``. With
``stack == [..., x, y]`` the edge transitions read: LeftEdge adds (y, x) and
RightEdge adds (x, y), i.e. LeftEdge points from the top down and RightEdge from
the second item up. Swap sends x back to the buffer.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import IllegalTransition, TupaMrpError
from .irep import ANCHOR, TOP, IEdge, IGraph, INode

SHIFT = 'Shift'
REDUCE = 'Reduce'
NODE = 'Node'
CHILD = 'Child'
LABEL = 'Label'
PROPERTY = 'Property'
LEFT_EDGE = 'LeftEdge'
RIGHT_EDGE = 'RightEdge'
ATTRIBUTE = 'Attribute'
SWAP = 'Swap'
FINISH = 'Finish'

KINDS = (SHIFT, REDUCE, NODE, CHILD, LABEL, PROPERTY, LEFT_EDGE, RIGHT_EDGE, ATTRIBUTE, SWAP, FINISH)
PAYLOAD_KINDS = frozenset({NODE, CHILD, LABEL, PROPERTY, LEFT_EDGE, RIGHT_EDGE, ATTRIBUTE})
EDGE_KINDS = frozenset({NODE, CHILD, LEFT_EDGE, RIGHT_EDGE})
PAIR_KINDS = frozenset({PROPERTY, ATTRIBUTE})
VIRTUAL_LABELS = (TOP, ANCHOR)


@dataclass(frozen=True, order=True)
class Transition:
    kind: str
    payload: Optional[str] = None

    def __str__(self):
        return self.kind if self.payload is None else f"{self.kind}\t{self.payload}"

    @classmethod
    def parse(cls, text: str) -> 'Transition':
        kind, sep, payload = text.rstrip('\n').partition('\t')
        return cls(kind, payload if sep else None)

    @property
    def edge_label(self) -> Optional[str]:
        """Edge payload "" stands for an unlabeled edge."""
        return self.payload or None

    def pair(self) -> Tuple[str, str]:
        name, _, value = self.payload.partition('=')
        return name, value


def pair_payload(name: str, value: str) -> str:
    return f"{name}={value}"


@dataclass(frozen=True)
class StateEdge:
    source: int
    target: int
    label: Optional[str] = None
    attributes: Tuple[Tuple[str, str], ...] = ()

    @property
    def is_virtual(self) -> bool:
        return self.label in VIRTUAL_LABELS


@dataclass(frozen=True)
class Legality:
    ok: bool
    reason: str = ''

    def __bool__(self):
        return self.ok


LEGAL = Legality(True)


def illegal(reason: str) -> Legality:
    return Legality(False, reason)


@dataclass
class ParserState:
    stack: List[int]
    buffer: List[int]
    nodes: List[int]
    index: Dict[int, int]
    terminals: Tuple[int, ...]
    root: int = 0
    labels: Dict[int, str] = field(default_factory=dict)
    properties: Dict[int, Dict[str, str]] = field(default_factory=dict)
    edges: List[StateEdge] = field(default_factory=list)
    history: List[Transition] = field(default_factory=list)
    terminal: bool = False

    def copy(self) -> 'ParserState':
        return ParserState(
            stack=list(self.stack),
            buffer=list(self.buffer),
            nodes=list(self.nodes),
            index=dict(self.index),
            terminals=self.terminals,
            root=self.root,
            labels=dict(self.labels),
            properties={ref: dict(props) for ref, props in self.properties.items()},
            edges=list(self.edges),
            history=list(self.history),
            terminal=self.terminal,
        )

    # Convenience accessors ------------------------------------------------ #

    @property
    def top(self) -> Optional[int]:
        return self.stack[-1] if self.stack else None

    @property
    def second(self) -> Optional[int]:
        return self.stack[-2] if len(self.stack) > 1 else None

    @property
    def latest_edge(self) -> Optional[StateEdge]:
        return self.edges[-1] if self.edges else None

    def is_terminal_node(self, ref: int) -> bool:
        return ref in self.terminals

    def outgoing(self, ref: int) -> List[StateEdge]:
        return [e for e in self.edges if e.source == ref]

    def incoming(self, ref: int) -> List[StateEdge]:
        return [e for e in self.edges if e.target == ref]

    def has_path(self, source: int, target: int) -> bool:
        """Directed path over semantic edges; <TOP>/<ANCHOR> edges are ignored."""
        if source == target:
            return True
        children: Dict[int, List[int]] = {}
        for edge in self.edges:
            if not edge.is_virtual:
                children.setdefault(edge.source, []).append(edge.target)
        seen = {source}
        frontier = [source]
        while frontier:
            node = frontier.pop()
            for child in children.get(node, []):
                if child == target:
                    return True
                if child not in seen:
                    seen.add(child)
                    frontier.append(child)
        return False


def initial_state(terminals: Sequence[int], root: int = 0) -> ParserState:
    refs = list(terminals)
    if len(set(refs)) != len(refs) or root in refs:
        raise TupaMrpError(f"terminal refs must be distinct and differ from the root: {refs}")
    index = {root: 0}
    for i, ref in enumerate(refs, start=1):
        index[ref] = i
    return ParserState(
        stack=[root],
        buffer=list(refs),
        nodes=[root] + refs,
        index=index,
        terminals=tuple(refs),
        root=root,
    )


def _edge_ends(state: ParserState, kind: str) -> Tuple[int, int]:
    x, y = state.second, state.top
    return (y, x) if kind == LEFT_EDGE else (x, y)


def is_legal(state: ParserState, t: Transition) -> Legality:
    """Whether t may be applied to state, with the reason when it may not.

    The root never leaves the stack: Reduce, Node, Label and Property refuse a root on top,
    and Swap refuses a root directly below the top. LeftEdge and RightEdge never make the
    root a target, and Attribute refuses the latest edge when it leaves the root.
    """
    if state.terminal:
        return illegal("terminal state")
    kind = t.kind
    if kind not in KINDS:
        return illegal(f"unknown transition kind '{kind}'")
    if (t.payload is not None) != (kind in PAYLOAD_KINDS):
        return illegal("malformed payload")
    if kind == LABEL and not t.payload:
        return illegal("malformed payload")
    if kind in PAIR_KINDS and ('=' not in t.payload or not t.pair()[0]):
        return illegal("malformed payload")

    if kind == SHIFT:
        return LEGAL if state.buffer else illegal("empty buffer")
    if kind == FINISH:
        if state.stack == [state.root] and not state.buffer:
            return LEGAL
        return illegal("finish requires stack [root] and empty buffer")
    if kind == ATTRIBUTE:
        edge = state.latest_edge
        if edge is None:
            return illegal("no edge")
        if edge.source == state.root:
            return illegal("x is root")
        if state.is_terminal_node(edge.target):
            return illegal("y is terminal")
        return LEGAL

    if not state.stack:
        return illegal("empty stack")
    x = state.top

    if kind == REDUCE:
        return illegal("x is root") if x == state.root else LEGAL
    if kind == NODE:
        return illegal("x is root") if x == state.root else LEGAL
    if kind == CHILD:
        return illegal("x is terminal") if state.is_terminal_node(x) else LEGAL
    if kind in (LABEL, PROPERTY):
        if x == state.root:
            return illegal("x is root")
        if state.is_terminal_node(x):
            return illegal("x is terminal")
        if kind == LABEL and x in state.labels:
            return illegal("node already labeled")
        return LEGAL

    if len(state.stack) < 2:
        return illegal("stack has fewer than two items")
    if kind == SWAP:
        below = state.second
        if below == state.root:
            return illegal("x is root")
        if state.index[below] >= state.index[x]:
            return illegal("swap index order")
        return LEGAL

    # LeftEdge / RightEdge
    source, target = _edge_ends(state, kind)
    if state.is_terminal_node(source):
        return illegal("x is terminal")
    if target == state.root:
        return illegal("y is root")
    if state.has_path(target, source):
        return illegal("directed path from y to x")
    return LEGAL


def apply(state: ParserState, t: Transition) -> ParserState:
    """Return the successor state; the input state is left untouched."""
    legality = is_legal(state, t)
    if not legality:
        raise IllegalTransition(legality.reason, len(state.history), t)

    new = state.copy()
    kind = t.kind
    if kind == SHIFT:
        new.stack.append(new.buffer.pop(0))
    elif kind == REDUCE:
        new.stack.pop()
    elif kind in (NODE, CHILD):
        x = new.stack[-1]
        y = max(new.nodes) + 1
        new.index[y] = len(new.nodes)
        new.nodes.append(y)
        new.buffer.insert(0, y)
        edge = StateEdge(y, x, t.edge_label) if kind == NODE else StateEdge(x, y, t.edge_label)
        new.edges.append(edge)
    elif kind == LABEL:
        new.labels[new.stack[-1]] = t.payload
    elif kind == PROPERTY:
        name, value = t.pair()
        new.properties.setdefault(new.stack[-1], {})[name] = value
    elif kind in (LEFT_EDGE, RIGHT_EDGE):
        source, target = _edge_ends(new, kind)
        new.edges.append(StateEdge(source, target, t.edge_label))
    elif kind == ATTRIBUTE:
        name, value = t.pair()
        edge = new.edges[-1]
        attributes = dict(edge.attributes)
        attributes[name] = value
        new.edges[-1] = StateEdge(edge.source, edge.target, edge.label, tuple(attributes.items()))
    elif kind == SWAP:
        below = new.stack.pop(-2)
        new.buffer.insert(0, below)
    elif kind == FINISH:
        new.terminal = True
    new.history.append(t)
    return new


def apply_all(state: ParserState, transitions: Iterable[Transition]) -> ParserState:
    for t in transitions:
        state = apply(state, t)
    return state


def is_terminal(state: ParserState) -> bool:
    return state.terminal


def extract_igraph(state: ParserState, meta: Optional[dict] = None) -> IGraph:
    if not state.terminal:
        raise IllegalTransition("state is not terminal", len(state.history), "extract")
    virtual = {state.root, *state.terminals}
    nodes = [
        INode(ref, state.labels.get(ref), dict(state.properties.get(ref, {})), is_virtual=ref in virtual)
        for ref in state.nodes
    ]
    edges = [IEdge(e.source, e.target, e.label, dict(e.attributes)) for e in state.edges]
    return IGraph(nodes=nodes, edges=edges, root=state.root, terminals=list(state.terminals),
                  meta=dict(meta or {}))


def format_sequence(transitions: Iterable[Transition]) -> str:
    return ''.join(f"{t}\n" for t in transitions)


def parse_sequence(lines: Iterable[str]) -> List[Transition]:
    return [Transition.parse(line) for line in lines if line.strip('\n')]
