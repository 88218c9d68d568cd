import numpy as np
import pytest

from conftest import make_tree
from treecommentary.counterfactual import (
    ConstraintSet,
    explain_counterfactual,
    find_closest_cf_sibling,
    lowest_common_ancestor,
    satisfies,
)
from treecommentary.errors import DesiredEqualsFactual, InvalidConfig, NoCounterfactual
from treecommentary.scene import EGO_LANE, EGO_PLAN, TL, EgoAction
from treecommentary.trees import Comparator, leaf_entropy, reduce_ensemble

H_PLAN = ConstraintSet.from_names(["EgoPlan"])
V_MOVE = np.array([0, 0, 0, 19, 1])     # green light, plan move -> leaf 2 of the blocked-sibling tree


class TestBlockedSibling:
    def test_constrained_sibling_moves_up_a_level(self, blocked_sibling_tree):
        assert find_closest_cf_sibling(blocked_sibling_tree, V_MOVE, EgoAction.MOVE, H_PLAN) == 6

    def test_unconstrained_takes_nearest_sibling(self, blocked_sibling_tree):
        assert find_closest_cf_sibling(blocked_sibling_tree, V_MOVE, EgoAction.MOVE) == 3

    def test_explanation(self, blocked_sibling_tree):
        cf = explain_counterfactual(blocked_sibling_tree, V_MOVE, constraints=H_PLAN)
        assert cf.target_action is EgoAction.STOP and cf.pivot_node == 0 and cf.leaf_id == 6
        assert [(c.feature_index, c.lower_bound, c.upper_bound) for c in cf.conditions] == [
            (TL, 19.5, np.inf), (EGO_LANE, 0.5, np.inf)]
        assert cf.text == ("If ego must stop, the following should be happening: the traffic light "
                           "is not green on ego's lane; there is an agent on ego's lane")
        assert cf.entropy == 0.0

    def test_everything_constrained(self, blocked_sibling_tree):
        with pytest.raises(NoCounterfactual):
            find_closest_cf_sibling(blocked_sibling_tree, V_MOVE, EgoAction.MOVE,
                                    ConstraintSet.from_names(["EgoPlan", "TL"]))

    def test_desired(self, blocked_sibling_tree):
        assert find_closest_cf_sibling(blocked_sibling_tree, V_MOVE, EgoAction.MOVE, desired=EgoAction.STOP) == 6
        with pytest.raises(NoCounterfactual):
            explain_counterfactual(blocked_sibling_tree, V_MOVE, desired=EgoAction.RIGHT_LANE_CHANGE,
                                   constraints=H_PLAN)
        with pytest.raises(DesiredEqualsFactual):
            explain_counterfactual(blocked_sibling_tree, V_MOVE, desired=EgoAction.MOVE)

    def test_lca(self, blocked_sibling_tree):
        n_a, path = lowest_common_ancestor(blocked_sibling_tree, V_MOVE, 2, 6)
        assert n_a == 0
        assert [(s.node_id, s.feature_index, s.comparator) for s in path] == [
            (0, TL, Comparator.LE), (4, EGO_LANE, Comparator.GT)]
        n_a, path = lowest_common_ancestor(blocked_sibling_tree, V_MOVE, 2, 3)
        assert n_a == 1 and [s.feature_index for s in path] == [EGO_PLAN]
        assert lowest_common_ancestor(blocked_sibling_tree, V_MOVE, 2, 2) == (2, [])


def test_depth_one_tree():
    t = make_tree([3, -1, -1], [19.5, np.nan, np.nan], [1, -1, -1], [2, -1, -1],
                  [[2, 2, 0, 0], [0, 2, 0, 0], [2, 0, 0, 0]])
    assert find_closest_cf_sibling(t, V_MOVE, EgoAction.MOVE) == 2
    n_a, path = lowest_common_ancestor(t, V_MOVE, 1, 2)
    assert n_a == 0 and len(path) == 1


def test_shallower_leaf_beats_support():
    # root TL: left move leaf 1; right EgoLane -> (IncomLane -> stop 9 | move 1) | stop 2 at depth 2
    t = make_tree([3, -1, 0, 1, -1, -1, -1], [19.5, np.nan, 0.5, 0.5, np.nan, np.nan, np.nan],
                  [1, -1, 3, 4, -1, -1, -1], [2, -1, 6, 5, -1, -1, -1],
                  [[11, 5, 0, 0], [0, 4, 0, 0], [11, 1, 0, 0], [9, 1, 0, 0], [9, 0, 0, 0],
                   [0, 1, 0, 0], [2, 0, 0, 0]])
    assert find_closest_cf_sibling(t, V_MOVE, EgoAction.MOVE) == 6


@pytest.mark.parametrize("supports,expected", [((2, 5), 4), ((5, 2), 3), ((5, 5), 3)])
def test_support_then_node_id(supports, expected):
    a, b = supports
    t = make_tree([3, -1, 0, -1, -1], [19.5, np.nan, 0.5, np.nan, np.nan], [1, -1, 3, -1, -1],
                  [2, -1, 4, -1, -1], [[a + b, 4, 0, 0], [0, 4, 0, 0], [a + b, 0, 0, 0], [a, 0, 0, 0], [b, 0, 0, 0]])
    assert find_closest_cf_sibling(t, V_MOVE, EgoAction.MOVE) == expected


def _independent_best_pivot_depth(tree, x, constraints, factual):
    """Exhaustive leaf scan: deepest LCA over all admissible leaves."""
    fact = int(tree.apply(x.reshape(1, -1))[0])
    fact_chain = tree.ancestors(fact)
    best = None
    for leaf in tree.leaves():
        leaf = int(leaf)
        if int(tree.value[leaf].argmax()) == factual:
            continue
        chain = tree.ancestors(leaf)
        k = 0
        while k < min(len(chain), len(fact_chain)) and chain[k] == fact_chain[k]:
            k += 1
        pivot_depth = k - 1
        if int(tree.feature[chain[pivot_depth]]) in constraints:
            continue
        # below the pivot, constrained splits must agree with x
        blocked = False
        for n, child in zip(chain[pivot_depth + 1:-1], chain[pivot_depth + 2:]):
            f = int(tree.feature[n])
            if f in constraints:
                own = tree.left[n] if x[f] <= tree.threshold[n] else tree.right[n]
                blocked |= int(own) != child
        if blocked:
            continue
        best = pivot_depth if best is None else max(best, pivot_depth)
    return best


@pytest.mark.parametrize("constraints", [ConstraintSet(), H_PLAN, ConstraintSet({TL, EGO_PLAN})])
def test_minimal_ancestry_and_validity(forest, synthetic_split, grid, constraints):
    _, test = synthetic_split
    for x in test.X[::25]:
        tree = reduce_ensemble(forest, x)
        factual = int(tree.value[tree.apply(x.reshape(1, -1))[0]].argmax())
        expected = _independent_best_pivot_depth(tree, x, constraints, factual)
        try:
            cf = explain_counterfactual(forest, x, constraints=constraints)
        except NoCounterfactual:
            assert expected is None
            continue
        assert tree.depth(cf.pivot_node) == expected
        mentioned = {c.feature_index for c in cf.conditions}
        assert not mentioned & constraints.immutable_features
        keep = np.ones(len(grid), dtype=bool)
        for f in set(range(5)) - mentioned:
            keep &= grid[:, f] == x[f]
        region = grid[keep]
        region = region[[satisfies(r, cf.conditions) for r in region]]
        assert len(region)
        pred = tree.value[tree.apply(region)].argmax(axis=1)
        assert (pred == int(cf.target_action)).all()
        assert cf.target_action is not cf.factual_action


def test_deterministic(small_forest, small_split):
    _, test = small_split
    a = [explain_counterfactual(small_forest, x, constraints=H_PLAN).to_dict() for x in test.X[:10]]
    b = [explain_counterfactual(small_forest, x, constraints=H_PLAN).to_dict() for x in test.X[:10]]
    assert a == b


def test_entropy_is_factual_leafs(small_forest, small_split):
    _, test = small_split
    for x in test.X[:10]:
        tree = reduce_ensemble(small_forest, x)
        cf = explain_counterfactual(small_forest, x)
        assert cf.entropy == leaf_entropy(tree, x)


def test_constraint_set_names():
    assert ConstraintSet.from_names(["EgoPlan", " TL", ""]).names == ["TL", "EgoPlan"]
    with pytest.raises(InvalidConfig):
        ConstraintSet.from_names(["Speed"])
    with pytest.raises(InvalidConfig):
        ConstraintSet({7})
    assert EGO_PLAN in H_PLAN and TL not in H_PLAN


def test_constrained_split_inside_sibling_follows_input():
    # red light stops; under the green branch EgoPlan picks move or rlc
    t = make_tree([3, 4, -1, -1, -1], [19.5, 1.5, np.nan, np.nan, np.nan], [1, 2, -1, -1, -1],
                  [4, 3, -1, -1, -1], [[5, 3, 9, 0], [0, 3, 9, 0], [0, 3, 0, 0], [0, 0, 9, 0], [5, 0, 0, 0]])
    v = np.array([0, 0, 0, 21, 1])
    assert find_closest_cf_sibling(t, v, EgoAction.STOP) == 3            # support wins
    assert find_closest_cf_sibling(t, v, EgoAction.STOP, H_PLAN) == 2    # only the input's plan branch
    cf = explain_counterfactual(t, v, constraints=H_PLAN)
    assert cf.target_action is EgoAction.MOVE
    assert [(c.feature_index, c.upper_bound) for c in cf.conditions] == [(TL, 19.5)]
    v_rlc = np.array([0, 0, 0, 21, 2])
    assert explain_counterfactual(t, v_rlc, constraints=H_PLAN).target_action is EgoAction.RIGHT_LANE_CHANGE


@pytest.mark.parametrize("constraints", [ConstraintSet(), H_PLAN])
def test_full_scope_conditions_alone_fix_the_leaf(forest, synthetic_split, grid, constraints):
    _, test = synthetic_split
    for x in test.X[::40]:
        cf = explain_counterfactual(forest, x, constraints=constraints, scope="full")
        pivot = explain_counterfactual(forest, x, constraints=constraints)
        assert cf.leaf_id == pivot.leaf_id and cf.target_action is pivot.target_action
        keep = np.ones(len(grid), dtype=bool)
        for c in cf.conditions:
            col = grid[:, c.feature_index]
            keep &= (col > c.lower_bound) & (col <= c.upper_bound)
        for h in constraints.immutable_features:
            keep &= grid[:, h] == x[h]
        tree = reduce_ensemble(forest, x)
        assert (tree.apply(grid[keep]) == cf.leaf_id).all()


def test_unknown_scope(blocked_sibling_tree):
    with pytest.raises(InvalidConfig):
        explain_counterfactual(blocked_sibling_tree, V_MOVE, scope="local")
