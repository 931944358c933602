import pytest

from tupa_mrp.constraints import (
    DEFAULT_PROFILES, PROFILE_TEMPLATE, FrameworkProfile, allowed_transitions, bounded_mask, collect_vocabulary,
    flavor_for, load_profiles, mask_transitions, profile_for, recovery_mask, resolve_profile, transition_mask,
)
from tupa_mrp.errors import UnknownFrameworkError
from tupa_mrp.graph import Edge, Graph, Node
from tupa_mrp.irep import ANCHOR, TOP, to_intermediate
from tupa_mrp.oracle import Oracle, derive
from tupa_mrp.synthetic import FRAMEWORKS
from tupa_mrp.transitions import (
    CHILD, FINISH, LABEL, LEFT_EDGE, NODE, PROPERTY, REDUCE, SHIFT, SWAP, Transition, apply_all, initial_state,
    is_legal,
)


def test_every_framework_has_a_profile():
    assert set(DEFAULT_PROFILES) == set(FRAMEWORKS)
    assert profile_for('PTG').allows_multigraph
    assert not profile_for('ucca').allows_node_labels
    assert not profile_for('drg').allows_anchors


def test_unknown_framework():
    with pytest.raises(UnknownFrameworkError):
        profile_for('sdp')


def test_required_labels_need_allowed_labels():
    with pytest.raises(ValueError):
        FrameworkProfile('x', allows_node_labels=False, required_node_labels=True)


def test_profile_json_roundtrip():
    profile = profile_for('ptg').with_vocabulary(node_labels=['a'], edge_labels=['ACT'])
    assert FrameworkProfile.from_json(profile.to_json()) == profile


def test_load_profiles_overrides_and_extends(tmp_path):
    path = tmp_path / 'profiles.ini'
    path.write_text(
        "[ptg]\nallows_multigraph = false\n\n[mine]\nbase = eds\nallows_node_properties = false\nmax_tops = none\n",
        encoding='utf-8',
    )
    profiles = load_profiles(path)
    assert not profiles['ptg'].allows_multigraph
    assert profiles['ptg'].source == str(path)
    assert profiles['mine'].max_tops is None
    assert not profiles['mine'].allows_node_properties
    assert profiles['mine'].required_node_labels
    assert resolve_profile('mine', path) == profiles['mine']


def test_load_profiles_rejects_unknown_keys(tmp_path):
    path = tmp_path / 'profiles.ini'
    path.write_text("[ptg]\nallows_everything = true\n", encoding='utf-8')
    with pytest.raises(ValueError):
        load_profiles(path)


def test_load_profiles_needs_base_for_new_tags(tmp_path):
    path = tmp_path / 'profiles.ini'
    path.write_text("[mine]\nmax_tops = 3\n", encoding='utf-8')
    with pytest.raises(UnknownFrameworkError):
        load_profiles(path)


def test_template_is_all_comments():
    assert all(line.startswith('#') for line in PROFILE_TEMPLATE.strip().splitlines())


def test_flavors():
    assert [flavor_for(f) for f in ('dm', 'psd', 'eds', 'ptg', 'ucca', 'amr', 'drg')] == [0, 0, 1, 1, 1, 2, 2]


def test_collect_vocabulary(ptg_graph, ptg_rows):
    vocab = collect_vocabulary([to_intermediate(ptg_graph, ptg_rows)])
    assert '<l>' in vocab['node_labels']
    assert 'sempos=n.denot' in vocab['properties']
    assert vocab['edge_labels'] == {'RSTR', 'RHEM', 'ACT'}


def test_ucca_never_offers_labels():
    profile = profile_for('ucca').with_vocabulary(node_labels=['x'], edge_labels=['A'])
    state = apply_all(initial_state([1]), [Transition(SHIFT), Transition(NODE, ANCHOR), Transition(SHIFT)])
    mask = transition_mask(state, profile)
    assert LABEL not in mask
    assert PROPERTY not in mask


def test_required_labels_block_reduce_of_unlabeled_nodes():
    profile = profile_for('amr').with_vocabulary(node_labels=['x'], edge_labels=['A'])
    state = apply_all(initial_state([1]), [Transition(SHIFT), Transition(NODE, ANCHOR), Transition(SHIFT)])
    assert REDUCE not in transition_mask(state, profile)
    labeled = apply_all(state, [Transition(LABEL, 'x')])
    assert REDUCE in transition_mask(labeled, profile)


def test_drg_forbids_anchor_nodes():
    profile = profile_for('drg').with_vocabulary(edge_labels=['in'])
    state = apply_all(initial_state([1]), [Transition(SHIFT)])
    assert NODE not in transition_mask(state, profile)


def test_max_tops_limits_child_from_root():
    profile = profile_for('amr').with_vocabulary(edge_labels=['A'])
    state = initial_state([1])
    assert transition_mask(state, profile)[CHILD] == {TOP}
    state = apply_all(state, [Transition(CHILD, TOP)])
    assert CHILD not in transition_mask(state, profile)


def test_mask_is_subset_of_legal(corpora):
    for framework in FRAMEWORKS:
        graph, rows = corpora[framework][0]
        profile = profile_for(framework)
        igraph = to_intermediate(graph, rows, profile)
        vocab = collect_vocabulary([igraph])
        profile = profile.with_vocabulary(**vocab)
        strategy = derive(igraph, rows).strategy
        for state, gold in Oracle(igraph, rows, strategy).states():
            offered = mask_transitions(transition_mask(state, profile))
            assert all(is_legal(state, t) for t in offered)
            assert gold in offered, (framework, graph.id, str(gold))


def test_swap_offered_where_oracle_swaps(fox_rows):
    rows = fox_rows[:2]
    graph = Graph(id='crossing', framework='ucca', input='The fox', tops=[1],
                  nodes=[Node(0, None, {}, [rows[0].anchor]), Node(1, None, {}, [rows[1].anchor])],
                  edges=[Edge(1, 0, 'A')])
    profile = profile_for('ucca').with_vocabulary(edge_labels=['A'])
    igraph = to_intermediate(graph, rows, profile)
    swaps = [state for state, gold in Oracle(igraph, rows).states() if gold.kind == SWAP]
    assert swaps
    assert all(SWAP in transition_mask(state, profile) for state in swaps)


def test_recovery_prefers_reduce_then_shift_then_finish():
    state = initial_state([1])
    assert recovery_mask(state) == {SHIFT: {None}}
    state = apply_all(state, [Transition(SHIFT)])
    assert recovery_mask(state) == {REDUCE: {None}}
    state = apply_all(state, [Transition(REDUCE)])
    assert recovery_mask(state) == {FINISH: {None}}


def test_allowed_transitions_never_empty_before_finish():
    profile = FrameworkProfile('bare', allows_node_labels=False, allows_node_properties=False, allows_anchors=False)
    state = initial_state([1, 2])
    while not state.terminal:
        mask = allowed_transitions(state, profile)
        assert mask
        kind = sorted(mask)[0]
        state = apply_all(state, [Transition(kind, sorted(mask[kind], key=str)[0])])


def test_parallel_edges_only_in_multigraph_frameworks():
    state = apply_all(initial_state([1]), [
        Transition(CHILD, TOP), Transition(SHIFT), Transition(NODE, 'A'), Transition(SHIFT),
    ])
    assert [(e.source, e.target, e.label) for e in state.edges[1:]] == [(3, 2, 'A')]
    ptg = profile_for('ptg').with_vocabulary(edge_labels=['A', 'B'])
    dm = profile_for('dm').with_vocabulary(edge_labels=['A', 'B'])
    assert transition_mask(state, ptg)[LEFT_EDGE] == {'A', 'B'}
    assert transition_mask(state, dm)[LEFT_EDGE] == {'B'}
    assert bounded_mask(state, ptg)[LEFT_EDGE] == {'B'}


def test_bounded_mask_stops_creation_at_the_limit():
    profile = profile_for('amr').with_vocabulary(edge_labels=['A'])
    state = apply_all(initial_state([1]), [Transition(CHILD, TOP), Transition(SHIFT)])
    assert CHILD in bounded_mask(state, profile, max_nodes=2)
    limited = bounded_mask(state, profile, max_nodes=1)
    assert CHILD not in limited and NODE not in limited
