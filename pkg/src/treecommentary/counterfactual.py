"""Counterfactual explanations: what would make the model act differently.

The search climbs from the input's leaf towards the root. At each ancestor
it looks for a leaf predicting another action in the subtree the input did
not enter, skipping ancestors that split on a constrained feature and never
descending through nodes that do. The returned conditions are the merged
splits from the pivot ancestor down to the chosen leaf.

Conditions describe a change to the input: features they do not mention are
meant to stay at the input's values. With ``scope="full"`` the splits above
the pivot are included too, so the conditions alone pin down the leaf.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .decoder import decode_counterfactual, default_phrasebook
from .errors import DesiredEqualsFactual, InvalidConfig, NoCounterfactual
from .factual import Cause, as_input, merge_inequalities, model_codebook
from .scene import FEATURE_NAMES, Codebook, EgoAction
from .trees import Comparator, DecisionTree, PathStep, counts_entropy, predict, reduce_ensemble


@dataclass(frozen=True)
class ConstraintSet:
    """Features a counterfactual may not ask to change."""

    immutable_features: frozenset = frozenset()

    def __post_init__(self):
        feats = frozenset(int(f) for f in self.immutable_features)
        bad = [f for f in feats if not 0 <= f < len(FEATURE_NAMES)]
        if bad:
            raise InvalidConfig(f"constraint feature indices out of range: {sorted(bad)}")
        object.__setattr__(self, "immutable_features", feats)

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "ConstraintSet":
        idx = []
        for name in names:
            name = name.strip()
            if not name:
                continue
            if name not in FEATURE_NAMES:
                raise InvalidConfig(f"unknown feature {name!r}; expected one of {', '.join(FEATURE_NAMES)}")
            idx.append(FEATURE_NAMES.index(name))
        return cls(frozenset(idx))

    def __contains__(self, feature: int) -> bool:
        return int(feature) in self.immutable_features

    @property
    def names(self) -> list[str]:
        return [FEATURE_NAMES[f] for f in sorted(self.immutable_features)]


def _leaf_class(tree: DecisionTree, leaf: int) -> int:
    return int(np.argmax(tree.value[leaf]))


def _admissible_leaves(tree: DecisionTree, root: int, constraints: ConstraintSet, x):
    """Leaves under ``root`` reachable with constrained features held at ``x``."""
    out, stack = [], [int(root)]
    while stack:
        node = stack.pop()
        if tree.is_leaf(node):
            out.append(node)
            continue
        f = int(tree.feature[node])
        if f in constraints:
            go_left = x[f] <= tree.threshold[node]
            stack.append(int(tree.left[node] if go_left else tree.right[node]))
        else:
            stack.extend((int(tree.right[node]), int(tree.left[node])))
    return out


def find_closest_cf_sibling(tree: DecisionTree, v, factual, constraints: Optional[ConstraintSet] = None,
                            desired=None) -> int:
    """Leaf id of the closest admissible leaf predicting a different action.

    Closest means the lowest pivot ancestor, then the shallowest leaf, then
    the most training samples, then the lowest node id.

    Args:
        tree: Classification tree.
        v: Input codes.
        factual: Action to move away from.
        constraints: Features that must not change.
        desired: If given, only leaves predicting this action qualify.

    Raises:
        NoCounterfactual: No admissible leaf exists.
    """
    constraints = constraints or ConstraintSet()
    x = as_input(v)
    factual = int(factual)
    leaf = int(tree.apply(x.reshape(1, -1))[0])
    chain = tree.ancestors(leaf)
    for k in range(len(chain) - 2, -1, -1):
        pivot, child = chain[k], chain[k + 1]
        if int(tree.feature[pivot]) in constraints:
            continue
        sibling = int(tree.right[pivot] if tree.left[pivot] == child else tree.left[pivot])
        candidates = []
        for c in _admissible_leaves(tree, sibling, constraints, x):
            cls = _leaf_class(tree, c)
            if cls == factual or (desired is not None and cls != int(desired)):
                continue
            candidates.append((tree.depth(c), -int(tree.n_samples[c]), c))
        if candidates:
            return min(candidates)[2]
    target = f" predicting {EgoAction(int(desired)).token}" if desired is not None else ""
    held = f" with {', '.join(constraints.names)} held fixed" if constraints.immutable_features else ""
    raise NoCounterfactual(f"no admissible counterfactual leaf{target}{held}")


def lowest_common_ancestor(tree: DecisionTree, v, factual_leaf: int, cf_leaf: int):
    """Deepest shared ancestor and the steps from it to ``cf_leaf``.

    The first step records the input's own branch at the ancestor (the one
    a counterfactual must negate); later steps lead down to ``cf_leaf``.
    Identical leaves give ``(leaf, [])``.
    """
    a, b = tree.ancestors(factual_leaf), tree.ancestors(cf_leaf)
    depth = 0
    while depth < min(len(a), len(b)) and a[depth] == b[depth]:
        depth += 1
    n_a = a[depth - 1]
    if factual_leaf == cf_leaf:
        return n_a, []
    x = as_input(v)
    f, thr = int(tree.feature[n_a]), float(tree.threshold[n_a])
    own = PathStep(n_a, f, Comparator.LE if x[f] <= thr else Comparator.GT, thr)
    return n_a, [own] + [tree.step_to(n) for n in b[depth + 1:]]


@dataclass(frozen=True)
class CounterfactualExplanation:
    target_action: EgoAction
    conditions: tuple
    pivot_node: int
    entropy: float
    text: str
    factual_action: Optional[EgoAction] = None
    leaf_id: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "target_action": self.target_action.token,
            "conditions": [c.to_dict() for c in self.conditions],
            "pivot_node": int(self.pivot_node),
            "leaf": self.leaf_id,
            "entropy": round(float(self.entropy), 12),
            "text": self.text,
        }


def _tighten(tree: DecisionTree, n_a: int, causes: list[Cause]) -> list[Cause]:
    """Intersect each cause with root-to-pivot splits on the same feature."""
    lo = {c.feature_index: c.lower_bound for c in causes}
    hi = {c.feature_index: c.upper_bound for c in causes}
    for node in tree.ancestors(n_a)[1:]:
        s = tree.step_to(node)
        if s.feature_index in lo:
            if s.comparator is Comparator.LE:
                hi[s.feature_index] = min(hi[s.feature_index], s.threshold)
            else:
                lo[s.feature_index] = max(lo[s.feature_index], s.threshold)
    return [Cause(c.feature_index, lo[c.feature_index], hi[c.feature_index]) for c in causes]


SCOPES = ("pivot", "full")


def explain_counterfactual(model, v, *, factual=None, desired=None,
                           constraints: Optional[ConstraintSet] = None, phrasebook=None,
                           codebook: Optional[Codebook] = None,
                           scope: str = "pivot") -> CounterfactualExplanation:
    """Closest tree-structural counterfactual for ``v``.

    Args:
        model: Classification forest or tree; a forest is first reduced to
            its explaining tree.
        v: FeatureVector or length-5 code array.
        factual: The action being contrasted; defaults to the prediction.
        desired: Optional target action.
        constraints: Features that must not change.
        scope: ``"pivot"`` keeps the splits from the pivot down; ``"full"``
            also keeps the root-to-pivot splits on unconstrained features.

    Raises:
        DesiredEqualsFactual: ``desired`` equals the factual action.
        NoCounterfactual: No admissible leaf exists.
    """
    if model.task != "classification":
        raise InvalidConfig("counterfactual explanations need a classification model")
    if scope not in SCOPES:
        raise InvalidConfig(f"scope must be one of {SCOPES}, got {scope!r}")
    x = as_input(v)
    codebook = codebook or model_codebook(model)
    constraints = constraints or ConstraintSet()
    factual = EgoAction(int(predict(model, x) if factual is None else factual))
    if desired is not None:
        desired = EgoAction(int(desired))
        if desired is factual:
            raise DesiredEqualsFactual(f"desired action {desired.token} is already the prediction")
    tree = reduce_ensemble(model, x)
    fact_leaf = int(tree.apply(x.reshape(1, -1))[0])
    cf_leaf = find_closest_cf_sibling(tree, x, factual, constraints, desired)
    n_a, cfpath = lowest_common_ancestor(tree, x, fact_leaf, cf_leaf)
    steps = [cfpath[0].negated()] + [s for s in cfpath[1:] if s.feature_index not in constraints]
    if scope == "full":
        prefix = [tree.step_to(n) for n in tree.ancestors(n_a)[1:]]
        steps = [s for s in prefix if s.feature_index not in constraints] + steps
        conditions = merge_inequalities(steps)
    else:
        conditions = _tighten(tree, n_a, merge_inequalities(steps))
    target = EgoAction(_leaf_class(tree, cf_leaf))
    text = decode_counterfactual(target, conditions, phrasebook or default_phrasebook(), codebook)
    return CounterfactualExplanation(target, tuple(conditions), int(n_a),
                                     counts_entropy(tree.value[fact_leaf]), text, factual, cf_leaf)


def satisfies(x, conditions) -> bool:
    """True when ``x`` lies inside every condition interval."""
    return all(c.lower_bound < x[c.feature_index] <= c.upper_bound for c in conditions)


__all__ = ["SCOPES", "ConstraintSet", "CounterfactualExplanation", "find_closest_cf_sibling",
           "lowest_common_ancestor", "explain_counterfactual", "satisfies"]
