"""
Framework profiles and transition masking.

The shipped structural defaults follow the public MRP framework descriptions;
override them with an INI file, see PROFILE_TEMPLATE.
"""
import configparser
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Optional, Set

from .errors import UnknownFrameworkError
from .irep import ANCHOR, TOP, IGraph
from .logger import get_logger
from .transitions import (
    ATTRIBUTE, CHILD, FINISH, LABEL, LEFT_EDGE, NODE, PROPERTY, REDUCE, RIGHT_EDGE, SHIFT, SWAP,
    ParserState, Transition, is_legal, pair_payload,
)

logger = get_logger('constraints')

Mask = Dict[str, Set[Optional[str]]]


@dataclass(frozen=True)
class FrameworkProfile:
    framework: str
    allows_node_labels: bool = True
    allows_node_properties: bool = True
    allows_edge_attributes: bool = False
    allows_anchors: bool = True
    allows_multigraph: bool = False
    max_tops: Optional[int] = 1
    required_node_labels: bool = False
    node_labels: FrozenSet[str] = frozenset()
    properties: FrozenSet[str] = frozenset()
    attributes: FrozenSet[str] = frozenset()
    edge_labels: FrozenSet[str] = frozenset()
    source: str = 'external'

    def __post_init__(self):
        if self.required_node_labels and not self.allows_node_labels:
            raise ValueError(f"profile {self.framework}: required node labels need allowed node labels")

    def with_vocabulary(self, node_labels: Iterable[str] = (), properties: Iterable[str] = (),
                        attributes: Iterable[str] = (), edge_labels: Iterable[str] = ()) -> 'FrameworkProfile':
        """Return a copy whose vocabularies are extended by the given payloads."""
        return replace(
            self,
            node_labels=self.node_labels | frozenset(node_labels),
            properties=self.properties | frozenset(properties),
            attributes=self.attributes | frozenset(attributes),
            edge_labels=self.edge_labels | frozenset(edge_labels),
        )

    def structure(self) -> Dict[str, object]:
        """The structural flags, without vocabularies."""
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name in STRUCTURAL_FIELDS}

    def to_json(self) -> Dict[str, object]:
        data = self.structure()
        data.update({
            'framework': self.framework,
            'source': self.source,
            'node_labels': sorted(self.node_labels),
            'properties': sorted(self.properties),
            'attributes': sorted(self.attributes),
            'edge_labels': sorted(self.edge_labels),
        })
        return data

    @classmethod
    def from_json(cls, data: Dict[str, object]) -> 'FrameworkProfile':
        kwargs = dict(data)
        for key in ('node_labels', 'properties', 'attributes', 'edge_labels'):
            kwargs[key] = frozenset(kwargs.get(key) or ())
        return cls(**kwargs)


STRUCTURAL_FIELDS = (
    'allows_node_labels', 'allows_node_properties', 'allows_edge_attributes', 'allows_anchors',
    'allows_multigraph', 'max_tops', 'required_node_labels',
)

DEFAULT_PROFILES: Dict[str, FrameworkProfile] = {
    'ucca': FrameworkProfile('ucca', allows_node_labels=False, allows_node_properties=False,
                             allows_edge_attributes=True),
    'ptg': FrameworkProfile('ptg', required_node_labels=True, allows_edge_attributes=True,
                            allows_multigraph=True, max_tops=2),
    'amr': FrameworkProfile('amr', required_node_labels=True),
    'drg': FrameworkProfile('drg', required_node_labels=True, allows_node_properties=False, allows_anchors=False),
    'eds': FrameworkProfile('eds', required_node_labels=True),
    'dm': FrameworkProfile('dm', required_node_labels=True),
    'psd': FrameworkProfile('psd', required_node_labels=True, max_tops=2),
}

PROFILE_TEMPLATE = """# Framework profile overrides, one section per framework tag.
# Keys not given keep the shipped default. A new tag needs 'base' naming the profile to start from.
#
# [ptg]
# allows_multigraph = true
# max_tops = 2
#
# [my-framework]
# base = eds
# allows_node_properties = false
# max_tops = none
"""


def profile_for(tag: str) -> FrameworkProfile:
    key = (tag or '').lower()
    if key not in DEFAULT_PROFILES:
        raise UnknownFrameworkError(tag)
    return DEFAULT_PROFILES[key]


def load_profiles(path) -> Dict[str, FrameworkProfile]:
    """Shipped defaults updated from an INI override file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Profile file '{path}' not found.")
    parser = configparser.ConfigParser()
    parser.read(path, encoding='utf-8')

    profiles = dict(DEFAULT_PROFILES)
    for section in parser.sections():
        tag = section.lower()
        if tag in profiles:
            base = profiles[tag]
        elif parser.has_option(section, 'base'):
            base = profile_for(parser.get(section, 'base'))
        else:
            raise UnknownFrameworkError(section)
        changes: Dict[str, object] = {'framework': tag, 'source': str(path)}
        for key in parser.options(section):
            if key == 'base':
                continue
            if key not in STRUCTURAL_FIELDS:
                raise ValueError(f"[{section}] unknown profile key '{key}'")
            if key == 'max_tops':
                raw = parser.get(section, key).strip().lower()
                changes[key] = None if raw in ('none', '') else int(raw)
            else:
                changes[key] = parser.getboolean(section, key)
        profiles[tag] = replace(base, **changes)
        logger.debug(f"profile {tag} overridden from {path}")
    return profiles


def resolve_profile(tag: str, override_path=None) -> FrameworkProfile:
    if override_path:
        profiles = load_profiles(override_path)
        key = (tag or '').lower()
        if key not in profiles:
            raise UnknownFrameworkError(tag)
        return profiles[key]
    return profile_for(tag)


def collect_vocabulary(igraphs: Iterable[IGraph]) -> Dict[str, Set[str]]:
    """Payload strings seen in gold intermediate graphs."""
    vocab: Dict[str, Set[str]] = {'node_labels': set(), 'properties': set(), 'attributes': set(), 'edge_labels': set()}
    for igraph in igraphs:
        for node in igraph.semantic_nodes():
            if node.label is not None:
                vocab['node_labels'].add(node.label)
            vocab['properties'].update(pair_payload(k, v) for k, v in node.properties.items())
        for edge in igraph.semantic_edges():
            vocab['edge_labels'].add(edge.label or '')
            vocab['attributes'].update(pair_payload(k, v) for k, v in edge.attributes.items())
    return vocab


# --------------------------------------------------------------------------- #
# Masking
# --------------------------------------------------------------------------- #

def _is_virtual(state: ParserState, ref: int) -> bool:
    return ref == state.root or ref in state.terminals


def _top_count(state: ParserState) -> int:
    return sum(1 for e in state.edges if e.label == TOP)


def _tops_left(state: ParserState, profile: FrameworkProfile) -> bool:
    return profile.max_tops is None or _top_count(state) < profile.max_tops


def _edge_payloads(state: ParserState, profile: FrameworkProfile, source: int, target: Optional[int]) -> Set[str]:
    """Admissible edge labels for source -> target; target None stands for a node about to be created."""
    if source == state.root:
        if target is not None and (target in state.terminals
                                   or any(e.source == source and e.target == target for e in state.edges)):
            return set()
        return {TOP} if _tops_left(state, profile) else set()
    if target is not None and target in state.terminals:
        if not profile.allows_anchors or _is_virtual(state, source):
            return set()
        if any(e.source == source and e.target == target and e.label == ANCHOR for e in state.edges):
            return set()
        return {ANCHOR}
    if source in state.terminals or target == state.root:
        return set()
    labels = set(profile.edge_labels) - {TOP, ANCHOR}
    if target is not None and not profile.allows_multigraph:
        labels -= {e.label or '' for e in state.edges if e.source == source and e.target == target}
    return labels


def transition_mask(state: ParserState, profile: FrameworkProfile) -> Mask:
    """Legal transitions the profile permits, as kind -> payloads (None for payload-free kinds)."""
    mask: Mask = {}
    if state.terminal:
        return mask

    def offer(kind: str, payloads: Iterable[Optional[str]]):
        allowed = {p for p in payloads if is_legal(state, Transition(kind, p))}
        if allowed:
            mask[kind] = allowed

    offer(SHIFT, [None])
    offer(SWAP, [None])
    offer(FINISH, [None])

    top = state.top
    if top is not None:
        labeled_ok = not (profile.required_node_labels and not _is_virtual(state, top) and top not in state.labels)
        if labeled_ok:
            offer(REDUCE, [None])

        if not _is_virtual(state, top):
            if profile.allows_node_labels and top not in state.labels:
                offer(LABEL, profile.node_labels)
            if profile.allows_node_properties:
                current = state.properties.get(top, {})
                offer(PROPERTY, [p for p in profile.properties if p.partition('=')[0] not in current])

        if top in state.terminals:
            if profile.allows_anchors:
                offer(NODE, [ANCHOR])
        elif top != state.root:
            offer(NODE, _edge_payloads(state, profile, top, None) - {TOP, ANCHOR})
        offer(CHILD, _edge_payloads(state, profile, top, None) - {ANCHOR})

        second = state.second
        if second is not None:
            offer(LEFT_EDGE, _edge_payloads(state, profile, top, second))
            offer(RIGHT_EDGE, _edge_payloads(state, profile, second, top))

    edge = state.latest_edge
    if edge is not None and profile.allows_edge_attributes and edge.label not in (TOP, ANCHOR):
        current = dict(edge.attributes)
        offer(ATTRIBUTE, [p for p in profile.attributes if p.partition('=')[0] not in current])
    return mask


def recovery_mask(state: ParserState) -> Mask:
    """Fallback when the profile leaves nothing: Reduce, else Shift, else Finish."""
    for kind in (REDUCE, SHIFT, FINISH):
        if is_legal(state, Transition(kind)):
            return {kind: {None}}
    return {}


def allowed_transitions(state: ParserState, profile: FrameworkProfile) -> Mask:
    mask = transition_mask(state, profile)
    return mask or recovery_mask(state)


def bounded_mask(state: ParserState, profile: FrameworkProfile, max_nodes: Optional[int] = None) -> Mask:
    """Parse-time mask: at most max_nodes semantic nodes, and no edge repeats its endpoints and label."""
    mask = dict(transition_mask(state, profile))
    if max_nodes is not None and len(state.nodes) - len(state.terminals) - 1 >= max_nodes:
        mask.pop(NODE, None)
        mask.pop(CHILD, None)
    for kind, (source, target) in ((LEFT_EDGE, (state.top, state.second)), (RIGHT_EDGE, (state.second, state.top))):
        if kind not in mask:
            continue
        payloads = mask[kind] - {e.label or '' for e in state.edges if e.source == source and e.target == target}
        if payloads:
            mask[kind] = payloads
        else:
            del mask[kind]
    return mask or recovery_mask(state)


def mask_transitions(mask: Mask) -> Set[Transition]:
    return {Transition(kind, payload) for kind, payloads in mask.items() for payload in payloads}


FLAVORS = {'dm': 0, 'psd': 0, 'eds': 1, 'ptg': 1, 'ucca': 1, 'amr': 2, 'drg': 2}


def flavor_for(tag: str) -> int:
    return FLAVORS.get((tag or '').lower(), 1)
