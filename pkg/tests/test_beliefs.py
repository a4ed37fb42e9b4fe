from collections import defaultdict
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from infodesign.beliefs import (
    MemoizationUnsound,
    TreeTooLarge,
    belief_key,
    build_tree,
    check_assumption2,
    child_distribution,
    initial_nodes,
)
from infodesign.congestion import CongestionParams, generate_congestion
from infodesign.instances import dominated_target, hidden_action, random_problem, with_belief_overrides
from infodesign.model import KeyedMap, Variant
from infodesign.solver import node_lp


def test_belief_key_absorbs_float_noise():
    b = np.array([0.1, 0.2, 0.7])
    assert belief_key(b) == belief_key(b + 1e-15)
    assert belief_key(b) != belief_key(np.array([0.1, 0.25, 0.65]))
    assert len(belief_key(b)) == 16


def test_dominated_instance_tree_by_hand():
    tree = build_tree(dominated_target())
    (root,) = tree.levels[0]
    np.testing.assert_allclose(root.belief.ravel(), [0.5, 0.5])
    assert [nd.node_key for nd in tree.levels[1]] == ["0/0", "0/1"]
    np.testing.assert_allclose(tree.levels[1][0].belief.ravel(), [1.0, 0.0])
    np.testing.assert_allclose(tree.levels[1][1].belief.ravel(), [0.0, 1.0])
    assert root.child_probs == {0: 0.5, 1: 0.5}


@pytest.mark.parametrize("p1,rho", [(0.5, 0.9), (0.3, 0.75)])
def test_congestion_beliefs_closed_form(p1, rho):
    spec = generate_congestion(CongestionParams(k=3, t=3, p1=p1, rho=rho))
    tree = build_tree(spec)
    P = np.array([[rho, 1 - rho], [1 - rho, rho]])
    (root,) = tree.levels[0]
    # the designer reads the state, so belief(x, p0) is diagonal
    np.testing.assert_allclose(root.belief[:, :, 0, 0, 0], np.diag([p1, 1 - p1]), atol=1e-12)
    for t in (1, 2):
        for nd in tree.levels[t]:
            prev_x = nd.path[-1] // 2 ** 3
            np.testing.assert_allclose(np.diagonal(nd.belief[:, :, 0, 0, 0]), P[prev_x], atol=1e-12)


def test_congestion_classes_and_multiplicity():
    spec = generate_congestion(CongestionParams())
    memo = build_tree(spec, memoize=True)
    assert [len(lv) for lv in memo.levels] == [1, 2]
    assert [nd.multiplicity for nd in memo.levels[1]] == [1024, 1024]
    full = build_tree(spec, memoize=False)
    assert [len(lv) for lv in full.levels] == [1, 2048]


def test_child_probabilities_sum_to_one():
    spec = random_problem(np.random.default_rng(3), "MultiAgent", horizon=2)
    for nd in initial_nodes(spec):
        pz, joint = child_distribution(spec, 0, nd.belief)
        assert pz.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(joint.sum(axis=1), pz, atol=1e-15)


def test_locate_walks_the_dag():
    spec = generate_congestion(CongestionParams(k=2, t=3))
    memo = build_tree(spec, memoize=True)
    full = build_tree(spec, memoize=False)
    for t, level in enumerate(full.levels):
        for nd in level:
            idx = memo.locate(nd.path)
            assert memo.levels[t][idx[-1]].belief_key == nd.belief_key


def test_memo_unsound_for_node_keyed_targets():
    spec = random_problem(np.random.default_rng(0), "JointMessageAction", horizon=2)
    km = spec.targets[0][0]
    node_keyed = replace(spec, targets=((KeyedMap(km.table, "node"), spec.targets[0][1]),))
    with pytest.raises(MemoizationUnsound, match="h1_1"):
        build_tree(node_keyed, memoize=True)
    build_tree(node_keyed, memoize=False)


def test_tree_size_limit():
    spec = generate_congestion(CongestionParams(k=6, t=3))
    with pytest.raises(TreeTooLarge):
        build_tree(spec, max_nodes=100)


def test_threads_do_not_change_the_tree():
    spec = random_problem(np.random.default_rng(8), "MultiAgent", horizon=3)
    for memoize in (False, True):
        a = build_tree(spec, memoize=memoize, threads=1)
        b = build_tree(spec, memoize=memoize, threads=4)
        assert [[(n.node_key, n.belief_key, n.multiplicity) for n in lv] for lv in a.levels] == \
               [[(n.node_key, n.belief_key, n.multiplicity) for n in lv] for lv in b.levels]


def test_coalesced_nodes_assemble_identical_programs():
    rng = np.random.default_rng(6)
    for variant in Variant:
        spec = with_belief_overrides(random_problem(rng, variant, horizon=2), rng)
        tree = build_tree(spec, memoize=False)
        groups = defaultdict(list)
        for nd in tree.levels[-1]:
            groups[nd.belief_key].append(nd)
        shared = [g for g in groups.values() if len(g) > 1]
        assert shared
        for g in shared:
            images = {node_lp(spec, nd).lp.to_bytes() for nd in g}
            assert len(images) == 1


def test_assumption2_passes_on_safe_instances():
    for variant in Variant:
        spec = random_problem(np.random.default_rng(2), variant, horizon=3)
        rep = check_assumption2(spec)
        assert rep.passes and rep.max_deviation <= 1e-9 and not rep.truncated
    rep = check_assumption2(generate_congestion(CongestionParams(k=3, t=3)))
    assert rep.passes


def test_assumption2_flags_hidden_action():
    rep = check_assumption2(hidden_action())
    assert not rep.passes
    assert rep.max_deviation > 1e-6
    assert rep.worst_node == "0/0"
    assert rep.to_dict() == check_assumption2(hidden_action()).to_dict()


@given(seed=st.integers(0, 2**32 - 1), variant=st.sampled_from(list(Variant)))
def test_tree_invariants(seed, variant):
    spec = random_problem(np.random.default_rng(seed), variant, horizon=2)
    full = build_tree(spec, memoize=False)
    memo = build_tree(spec, memoize=True)
    for t, level in enumerate(full.levels):
        for nd in level:
            assert np.all(nd.belief >= 0)
            assert nd.belief.sum() == pytest.approx(1.0, abs=1e-12)
            if nd.child_probs:
                assert sum(nd.child_probs.values()) == pytest.approx(1.0, abs=1e-12)
        assert sum(nd.multiplicity for nd in memo.levels[t]) == len(level)
        assert len({nd.belief_key for nd in level}) == len(memo.levels[t])
