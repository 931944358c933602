"""
Static oracle: compiles a gold IGraph into a transition sequence that rebuilds it.

Two strategies share the bookkeeping:

* ``incremental`` reads the sentence left to right. A terminal is shifted only when
  the stack has nothing left to do; nodes with anchored descendants are built bottom
  up with Node from their first child on the stack top (anchored nodes wait for their
  last terminal), and the remaining nodes are built top down with Child from their
  lowest parent. A finished node sinks with Swap towards older partners.
* ``exhaustive`` shifts all terminals first. After that the stack stays ordered by
  creation index, so Swap is legal whenever a node has to sink; it derives graphs the
  incremental strategy gets stuck on.

``derive`` tries them in that order.
"""
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .companion import TokenRow
from .errors import IllegalTransition, OracleError
from .irep import ANCHOR, IGraph, igraph_signature
from .logger import get_logger
from .transitions import (
    ATTRIBUTE, CHILD, FINISH, LABEL, LEFT_EDGE, NODE, PROPERTY, REDUCE, RIGHT_EDGE, SHIFT, SWAP,
    ParserState, Transition, apply, extract_igraph, initial_state, is_legal, pair_payload,
)

logger = get_logger('oracle')

INCREMENTAL = 'incremental'
EXHAUSTIVE = 'exhaustive'
STRATEGIES = (INCREMENTAL, EXHAUSTIVE)


class Oracle:
    """Walks a gold graph alongside a parser state and hands out the next gold transition."""

    def __init__(self, gold: IGraph, rows: Optional[Sequence[TokenRow]] = None, strategy: str = INCREMENTAL):
        if strategy not in STRATEGIES:
            raise OracleError("unknown oracle strategy", strategy)
        problems = gold.check()
        if problems:
            raise OracleError("gold graph violates the intermediate invariants", problems[0])
        if rows is not None and len(rows) != len(gold.terminals):
            raise OracleError("token rows do not match the terminals", f"{len(rows)} != {len(gold.terminals)}")

        self.gold = gold
        self.strategy = strategy
        self.state: ParserState = initial_state(gold.terminals, gold.root)
        self.node_map: Dict[int, int] = {ref: ref for ref in [gold.root, *gold.terminals]}
        self._gold_of: Dict[int, int] = dict(self.node_map)
        self._nodes = {node.id: node for node in gold.nodes}
        self._terminals = frozenset(gold.terminals)
        self._created = [False] * len(gold.edges)
        self._incident: Dict[int, List[int]] = {ref: [] for ref in self._nodes}
        for i, edge in enumerate(gold.edges):
            self._incident[edge.source].append(i)
            if edge.target != edge.source:
                self._incident[edge.target].append(i)
        self._stacked: Set[int] = {gold.root}
        self._last_edge: Optional[int] = None
        self._planned: Optional[Tuple[Transition, int]] = None
        self._check_reachable()

        self._anchors: Dict[int, List[int]] = {ref: [] for ref in self._nodes}
        for edge in gold.edges:
            if edge.label == ANCHOR:
                self._anchors[edge.source].append(edge.target)
        self._bottom_up = self._bottom_up_nodes()
        self._creators = self._child_creators()

    def _check_reachable(self):
        seen = set(self.node_map)
        frontier = list(seen)
        while frontier:
            ref = frontier.pop()
            for i in self._incident[ref]:
                other = self._other(i, ref)
                if other not in seen:
                    seen.add(other)
                    frontier.append(other)
        missing = sorted(set(self._nodes) - seen)
        if missing:
            raise OracleError("nodes connected to neither a top nor an anchor", missing)

    def _bottom_up_nodes(self) -> Set[int]:
        """Nodes with an anchored descendant, plus nodes nothing points to."""
        parents: Dict[int, List[int]] = {}
        for edge in self.gold.semantic_edges():
            parents.setdefault(edge.target, []).append(edge.source)
        grounded = {ref for ref, anchors in self._anchors.items() if anchors}
        frontier = list(grounded)
        while frontier:
            for parent in parents.get(frontier.pop(), []):
                if parent not in grounded:
                    grounded.add(parent)
                    frontier.append(parent)
        entered = {edge.target for edge in self.gold.edges}
        return grounded | {node.id for node in self.gold.semantic_nodes() if node.id not in entered}

    def _child_creators(self) -> Dict[int, Set[int]]:
        """For top-down nodes, the parents allowed to create them: those below every other parent."""
        below: Dict[int, List[int]] = {}
        for edge in self.gold.semantic_edges():
            below.setdefault(edge.source, []).append(edge.target)

        def descendants(ref: int) -> Set[int]:
            seen: Set[int] = set()
            frontier = list(below.get(ref, []))
            while frontier:
                child = frontier.pop()
                if child not in seen:
                    seen.add(child)
                    frontier.extend(below.get(child, []))
            return seen

        creators = {}
        for node in self.gold.semantic_nodes():
            if node.id in self._bottom_up:
                continue
            parents = {edge.source for edge in self.gold.edges if edge.target == node.id}
            semantic = parents - {self.gold.root}
            if not semantic:
                creators[node.id] = parents
                continue
            reach = {p: descendants(p) for p in semantic}
            creators[node.id] = {p for p in semantic if not any(q in reach[p] for q in semantic if q != p)}
        return creators

    # Gold bookkeeping ----------------------------------------------------- #

    def _other(self, i: int, ref: int) -> int:
        edge = self.gold.edges[i]
        return edge.target if edge.source == ref else edge.source

    def _uncreated(self, ref: int) -> List[int]:
        """Incident gold edges whose other endpoint does not exist yet."""
        return [i for i in self._incident[ref] if self._other(i, ref) not in self.node_map]

    def _pending(self, ref: int) -> List[int]:
        """Incident gold edges between existing nodes that are still missing."""
        return [i for i in self._incident[ref]
                if not self._created[i] and self._other(i, ref) in self.node_map]

    def _ready(self, ref: int) -> bool:
        return all(terminal in self._stacked for terminal in self._anchors[ref])

    def _done(self, top: int, g: int) -> bool:
        return not self._pending(g) and not self._uncreated(g) and self._decoration(top, g) is None

    def pending_edges(self) -> List[int]:
        return [i for i, done in enumerate(self._created) if not done]

    # Decisions ------------------------------------------------------------ #

    def next_gold(self) -> List[Transition]:
        if self.state.terminal:
            raise OracleError("parser state is already terminal")
        self._planned = None
        return [self._choose()]

    def _choose(self) -> Transition:
        state = self.state
        if self._last_edge is not None and state.latest_edge is not None:
            current = dict(state.latest_edge.attributes)
            for name, value in self.gold.edges[self._last_edge].attributes.items():
                if current.get(name) != value:
                    return Transition(ATTRIBUTE, pair_payload(name, value))
        if self.strategy == EXHAUSTIVE:
            return self._choose_exhaustive()
        return self._choose_incremental()

    def _decoration(self, top: int, g: int) -> Optional[Transition]:
        node = self._nodes[g]
        if node.is_virtual:
            return None
        if node.label is not None and top not in self.state.labels:
            return Transition(LABEL, node.label)
        current = self.state.properties.get(top, {})
        for name, value in node.properties.items():
            if current.get(name) != value:
                return Transition(PROPERTY, pair_payload(name, value))
        return None

    def _edge_with_second(self, g: int, pending: List[int]) -> Optional[Transition]:
        if self.state.second is None:
            return None
        second = self._gold_of[self.state.second]
        candidates = []
        for i in pending:
            edge = self.gold.edges[i]
            if edge.source == g and edge.target == second:
                candidates.append((0, edge.label or '', i))
            elif edge.source == second and edge.target == g:
                candidates.append((1, edge.label or '', i))
        if not candidates:
            return None
        direction, label, _ = min(candidates)
        return Transition(LEFT_EDGE if direction == 0 else RIGHT_EDGE, label)

    def _plan(self, creation: Tuple[str, str, int]) -> Transition:
        kind, label, i = creation
        t = Transition(kind, label)
        self._planned = (t, i)
        return t

    def _choose_incremental(self) -> Transition:
        state = self.state
        top = state.top
        g = self._gold_of[top]

        head = state.buffer[0] if state.buffer else None
        if head is not None and head not in self._stacked and head not in self._terminals:
            # a node created by the previous step waits at the buffer head
            if top != state.root and self._done(top, g):
                return Transition(REDUCE)
            return Transition(SHIFT)

        decoration = self._decoration(top, g)
        if decoration is not None:
            return decoration
        pending = self._pending(g)
        edge = self._edge_with_second(g, pending)
        if edge is not None:
            return edge

        creation = self._incremental_creation(g)
        if creation is not None:
            return self._plan(creation)

        if top != state.root and self._done(top, g):
            return Transition(REDUCE)

        deeper = set(state.stack[:-2])
        if any(self.node_map[self._other(i, g)] in deeper for i in pending) and is_legal(state, Transition(SWAP)):
            return Transition(SWAP)
        if state.buffer:
            return Transition(SHIFT)
        if not self.pending_edges() and is_legal(state, Transition(FINISH)):
            return Transition(FINISH)
        raise OracleError("oracle stuck", [self._describe(i) for i in self.pending_edges()])

    def _incremental_creation(self, g: int) -> Optional[Tuple[str, str, int]]:
        parents, children = [], []
        for i in self._uncreated(g):
            edge = self.gold.edges[i]
            if edge.target == g:
                if edge.source in self._bottom_up and self._ready(edge.source):
                    parents.append((edge.label or '', edge.source, i))
            elif edge.target not in self._bottom_up and g in self._creators[edge.target]:
                children.append((edge.label or '', edge.target, i))
        if parents:
            label, _, i = min(parents)
            return NODE, label, i
        if children:
            label, _, i = min(children)
            return CHILD, label, i
        return None

    def _choose_exhaustive(self) -> Transition:
        state = self.state
        if state.buffer and state.buffer[0] not in self._stacked:
            return Transition(SHIFT)

        top = state.top
        g = self._gold_of[top]
        decoration = self._decoration(top, g)
        if decoration is not None:
            return decoration
        pending = self._pending(g)
        edge = self._edge_with_second(g, pending)
        if edge is not None:
            return edge

        if not self._uncreated(g):
            partners = {self.node_map[self._other(i, g)] for i in pending}
            if partners <= set(state.stack[:-1]):
                if partners:
                    return Transition(SWAP)
                if top != state.root:
                    return Transition(REDUCE)

        if state.buffer:
            return Transition(SHIFT)

        creation = self._creation_candidate(g)
        if creation is not None:
            return self._plan(creation)

        if is_legal(state, Transition(FINISH)):
            return Transition(FINISH)
        raise OracleError("oracle stuck", [self._describe(i) for i in self.pending_edges()])

    def _creation_candidate(self, g: int) -> Optional[Tuple[str, str, int]]:
        """Parents of the top come first, then children; smallest label, then oldest gold ref."""
        parents, children = [], []
        for i in self._uncreated(g):
            edge = self.gold.edges[i]
            if edge.target == g:
                parents.append((edge.label or '', edge.source, i))
            else:
                children.append((edge.label or '', edge.target, i))
        if parents:
            label, _, i = min(parents)
            return NODE, label, i
        if children:
            label, _, i = min(children)
            return CHILD, label, i
        return None

    def _matching_edge(self, t: Transition) -> Optional[int]:
        state = self.state
        g = self._gold_of[state.top]
        label = t.payload or None
        if t.kind in (NODE, CHILD):
            if self._planned is not None and self._planned[0] == t:
                return self._planned[1]
            return self._creation_candidate_with(g, t.kind, label)
        second = self._gold_of[state.second]
        source, target = (g, second) if t.kind == LEFT_EDGE else (second, g)
        for i in self._pending(g):
            edge = self.gold.edges[i]
            if (edge.source, edge.target, edge.label) == (source, target, label):
                return i
        return None

    def _creation_candidate_with(self, g: int, kind: str, label: Optional[str]) -> Optional[int]:
        options = []
        for i in self._uncreated(g):
            edge = self.gold.edges[i]
            if edge.label != label:
                continue
            if kind == NODE and edge.target == g:
                options.append((edge.source, i))
            elif kind == CHILD and edge.source == g:
                options.append((edge.target, i))
        return min(options)[1] if options else None

    # Stepping ------------------------------------------------------------- #

    def apply(self, t: Transition):
        """Advance the parser state by a gold transition and update the bookkeeping."""
        edge_index = None
        if t.kind in (NODE, CHILD, LEFT_EDGE, RIGHT_EDGE):
            edge_index = self._matching_edge(t)
            if edge_index is None:
                raise OracleError(f"{t.kind} does not add a gold edge", str(t))
        shifted = self.state.buffer[0] if t.kind == SHIFT and self.state.buffer else None

        self.state = apply(self.state, t)
        self._planned = None

        if shifted is not None:
            self._stacked.add(shifted)
        if edge_index is not None:
            self._created[edge_index] = True
            self._last_edge = edge_index
            if t.kind in (NODE, CHILD):
                new_ref = self.state.nodes[-1]
                gold_ref = self._other(edge_index, self._gold_of[self.state.top])
                self.node_map[gold_ref] = new_ref
                self._gold_of[new_ref] = gold_ref

    def sequence(self) -> List[Transition]:
        limit = 20 * (len(self.gold.nodes) + len(self.gold.edges)) ** 2 + 100
        transitions = []
        while not self.state.terminal:
            if len(transitions) > limit:
                raise OracleError("oracle exceeded its step limit", len(transitions))
            t = self.next_gold()[0]
            self.apply(t)
            transitions.append(t)
        logger.debug(f"graph {self.gold.meta.get('id')}: {len(transitions)} gold transitions ({self.strategy})")
        return transitions

    def states(self) -> Iterable[Tuple[ParserState, Transition]]:
        """(state, gold transition) pairs along the gold path, for training."""
        while not self.state.terminal:
            t = self.next_gold()[0]
            yield self.state, t
            self.apply(t)

    def _describe(self, i: int) -> str:
        edge = self.gold.edges[i]
        return f"{edge.source}-{edge.label}->{edge.target}"


def derive(gold: IGraph, rows: Optional[Sequence[TokenRow]] = None) -> Oracle:
    """Run the strategies in order and return the first oracle that reaches Finish."""
    for strategy in STRATEGIES:
        oracle = Oracle(gold, rows, strategy)
        try:
            oracle.sequence()
        except (OracleError, IllegalTransition) as e:
            if strategy == STRATEGIES[-1]:
                raise
            logger.debug(f"graph {gold.meta.get('id')}: {strategy} strategy failed ({e}), trying the next one")
            continue
        return oracle
    raise OracleError("no oracle strategy configured")


def gold_sequence(gold: IGraph, rows: Optional[Sequence[TokenRow]] = None) -> List[Transition]:
    return list(derive(gold, rows).state.history)


def replay(rows: Sequence[TokenRow], seq: Iterable[Transition], meta: Optional[dict] = None) -> IGraph:
    """Apply a sequence from the initial state; the first illegal transition aborts with its position."""
    state = initial_state(list(range(1, len(rows) + 1)))
    for k, t in enumerate(seq):
        legality = is_legal(state, t)
        if not legality:
            raise IllegalTransition(legality.reason, k, t)
        state = apply(state, t)
    if not state.terminal:
        raise IllegalTransition("sequence ended before Finish", len(state.history))
    return extract_igraph(state, meta)


def verify(gold: IGraph, rows: Sequence[TokenRow]) -> bool:
    """Replay the gold sequence and compare it with the gold graph up to node renaming."""
    oracle = derive(gold, rows)
    replayed = replay(rows, oracle.state.history, gold.meta)
    return igraph_signature(gold, oracle.node_map.get) == igraph_signature(replayed)
