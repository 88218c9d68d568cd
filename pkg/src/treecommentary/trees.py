"""CART decision trees and random forests with inspectable structure.

Trees are stored as flat node arrays (node 0 is the root, children numbered in
depth-first order). The split convention is ``x[feature] <= threshold`` goes
left; thresholds sit at midpoints between adjacent observed values.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyDataset, FormatError, NotRegression
from .scene import CLASS_NAMES, FEATURE_NAMES, EgoAction

MODEL_FORMAT = "treecommentary-model"
MODEL_VERSION = 1
LEAF = -1


class Comparator(enum.Enum):
    LE = "<="
    GT = ">"

    def negate(self) -> "Comparator":
        return Comparator.GT if self is Comparator.LE else Comparator.LE


@dataclass(frozen=True)
class TreeNode:
    node_id: int
    feature_index: Optional[int]
    threshold: Optional[float]
    left_child: Optional[int]
    right_child: Optional[int]
    class_counts: tuple

    @property
    def is_leaf(self) -> bool:
        return self.feature_index is None


@dataclass(frozen=True)
class PathStep:
    node_id: int
    feature_index: int
    comparator: Comparator
    threshold: float

    def holds(self, x) -> bool:
        value = x[self.feature_index]
        return value <= self.threshold if self.comparator is Comparator.LE else value > self.threshold

    def negated(self) -> "PathStep":
        return PathStep(self.node_id, self.feature_index, self.comparator.negate(), self.threshold)

    def __str__(self):
        return f"{FEATURE_NAMES[self.feature_index]} {self.comparator.value} {self.threshold:g}"


@dataclass(frozen=True)
class DecisionPath:
    steps: tuple
    leaf_id: int
    predicted: object

    def features(self) -> list[int]:
        return [s.feature_index for s in self.steps]


class DecisionTree:
    """Binary tree over flat arrays.

    ``value`` holds per-node class counts (shape ``(n_nodes, n_classes)``) for
    classifiers, or the mean target (shape ``(n_nodes,)``) for regressors.
    """

    def __init__(self, feature, threshold, left, right, value, task="classification",
                 feature_names=FEATURE_NAMES, class_names=CLASS_NAMES, n_samples=None):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.task = task
        if task == "classification":
            self.value = np.asarray(value, dtype=np.int64).reshape(len(self.feature), -1)
            self.n_samples = self.value.sum(axis=1)
        else:
            self.value = np.asarray(value, dtype=float).reshape(-1)
            self.n_samples = (np.ones(len(self.feature), dtype=np.int64) if n_samples is None
                              else np.asarray(n_samples, dtype=np.int64))
        self.feature_names = tuple(feature_names)
        self.class_names = tuple(class_names)
        self.root_id = 0
        self._parent = None
        self._boxes = None

    # -- structure ------------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def class_counts(self) -> np.ndarray:
        return self.value

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] == LEAF

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature == LEAF)

    def node(self, i: int) -> TreeNode:
        leaf = self.is_leaf(i)
        counts = tuple(int(c) for c in self.value[i]) if self.task == "classification" else ()
        return TreeNode(int(i), None if leaf else int(self.feature[i]),
                        None if leaf else float(self.threshold[i]),
                        None if leaf else int(self.left[i]),
                        None if leaf else int(self.right[i]), counts)

    @property
    def nodes(self) -> list[TreeNode]:
        return [self.node(i) for i in range(self.n_nodes)]

    @property
    def parent(self) -> np.ndarray:
        if self._parent is None:
            parent = np.full(self.n_nodes, -1, dtype=np.int64)
            inner = np.flatnonzero(self.feature != LEAF)
            parent[self.left[inner]] = inner
            parent[self.right[inner]] = inner
            self._parent = parent
        return self._parent

    def depth(self, node: int) -> int:
        d = 0
        while node != self.root_id:
            node = self.parent[node]
            d += 1
        return d

    def ancestors(self, node: int) -> list[int]:
        """Nodes from the root down to ``node`` inclusive."""
        chain = [int(node)]
        while chain[-1] != self.root_id:
            chain.append(int(self.parent[chain[-1]]))
        return chain[::-1]

    def step_to(self, child: int) -> PathStep:
        """The split condition satisfied when moving from a parent into ``child``."""
        p = int(self.parent[child])
        comp = Comparator.LE if self.left[p] == child else Comparator.GT
        return PathStep(p, int(self.feature[p]), comp, float(self.threshold[p]))

    def leaf_boxes(self):
        """Per-leaf half-open boxes ``lower < x <= upper`` (arrays n_leaves x n_features)."""
        if self._boxes is None:
            n_feat = len(self.feature_names)
            lo = np.full((self.n_nodes, n_feat), -np.inf)
            hi = np.full((self.n_nodes, n_feat), np.inf)
            order = [self.root_id]
            for node in order:
                if self.is_leaf(node):
                    continue
                f, thr = self.feature[node], self.threshold[node]
                l, r = self.left[node], self.right[node]
                lo[l], hi[l] = lo[node], hi[node]
                lo[r], hi[r] = lo[node], hi[node]
                hi[l, f] = min(hi[l, f], thr)
                lo[r, f] = max(lo[r, f], thr)
                order.extend((int(l), int(r)))
            leaves = self.leaves()
            self._boxes = (leaves, lo[leaves], hi[leaves])
        return self._boxes

    # -- evaluation -----------------------------------------------------
    def apply(self, X) -> np.ndarray:
        """Leaf id reached by each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = self.feature[node]
            inner = f != LEAF
            if not inner.any():
                return node
            go_left = X[rows, np.where(inner, f, 0)] <= self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(inner, nxt, node)

    def leaf_output(self, target: Optional[int] = None) -> np.ndarray:
        """Per-node model output: class frequency of ``target`` or regression value."""
        if self.task == "regression":
            return self.value
        counts = self.value.astype(float)
        totals = counts.sum(axis=1)
        totals[totals == 0] = 1.0
        if target is None:
            return counts / totals[:, None]
        return counts[:, target] / totals


@dataclass(eq=False)
class RandomForest:
    trees: list
    training_meta: dict = field(default_factory=dict)
    task: str = "classification"
    background: Optional[np.ndarray] = None
    codebook: Optional[dict] = None

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def feature_names(self):
        return self.trees[0].feature_names

    @property
    def class_names(self):
        return self.trees[0].class_names


def is_ensemble(model) -> bool:
    return isinstance(model, RandomForest)


def is_classification(model) -> bool:
    return model.task == "classification"


# --------------------------------------------------------------------------
# induction

def _gini_split(ranks, vals, y, n_cls, min_leaf):
    """Best (impurity, threshold) for one rank-encoded feature, or None."""
    counts = np.bincount(ranks * n_cls + y, minlength=len(vals) * n_cls)
    counts = counts.reshape(len(vals), n_cls)
    present = counts.sum(axis=1) > 0
    if present.sum() < 2:
        return None
    counts = counts[present]
    vals = vals[present]
    left = np.cumsum(counts, axis=0)[:-1]
    right = counts.sum(axis=0) - left
    nl = left.sum(axis=1)
    nr = right.sum(axis=1)
    ok = (nl >= min_leaf) & (nr >= min_leaf)
    if not ok.any():
        return None
    gl = nl - (left ** 2).sum(axis=1) / np.maximum(nl, 1)
    gr = nr - (right ** 2).sum(axis=1) / np.maximum(nr, 1)
    score = np.where(ok, gl + gr, np.inf)
    k = int(np.argmin(score))
    return score[k], (vals[k] + vals[k + 1]) / 2.0


def _sse_split(x, y, min_leaf):
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    cut = np.flatnonzero(xs[1:] != xs[:-1])
    if len(cut) == 0:
        return None
    cs, cs2 = np.cumsum(ys), np.cumsum(ys ** 2)
    n = len(ys)
    nl = cut + 1
    nr = n - nl
    ok = (nl >= min_leaf) & (nr >= min_leaf)
    if not ok.any():
        return None
    sl, sr = cs[cut], cs[-1] - cs[cut]
    sse = (cs2[cut] - sl ** 2 / nl) + ((cs2[-1] - cs2[cut]) - sr ** 2 / nr)
    score = np.where(ok, sse, np.inf)
    k = int(np.argmin(score))
    return score[k], (xs[cut[k]] + xs[cut[k] + 1]) / 2.0


class _Builder:
    def __init__(self, X, y, task, max_depth, min_samples_leaf, features_per_split, rng,
                 n_classes):
        self.X, self.y, self.task = X, y, task
        self.max_depth = max_depth
        self.min_leaf = max(1, int(min_samples_leaf))
        self.k = features_per_split
        self.rng = rng
        self.n_classes = n_classes
        if task == "classification":
            # per-feature rank encoding makes node histograms a single bincount
            self.uniq, self.ranks = [], []
            for f in range(X.shape[1]):
                u, r = np.unique(X[:, f], return_inverse=True)
                self.uniq.append(u)
                self.ranks.append(r.reshape(-1))
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []
        self.n_samples = []

    def _impure(self, idx):
        if self.task == "classification":
            return len(np.unique(self.y[idx])) > 1
        return np.ptp(self.y[idx]) > 0

    def build(self, idx, depth):
        node = len(self.feature)
        self.feature.append(LEAF)
        self.threshold.append(np.nan)
        self.left.append(LEAF)
        self.right.append(LEAF)
        if self.task == "classification":
            self.value.append(np.bincount(self.y[idx], minlength=self.n_classes))
        else:
            self.value.append(float(self.y[idx].mean()))
        self.n_samples.append(len(idx))
        if ((self.max_depth is not None and depth >= self.max_depth)
                or len(idx) < 2 * self.min_leaf or not self._impure(idx)):
            return node
        n_feat = self.X.shape[1]
        if self.k is None or self.k >= n_feat:
            feats = np.arange(n_feat)
        else:
            feats = self.rng.choice(n_feat, size=self.k, replace=False)
        best = None
        for f in feats:
            if self.task == "classification":
                res = _gini_split(self.ranks[f][idx], self.uniq[f], self.y[idx],
                                  self.n_classes, self.min_leaf)
            else:
                res = _sse_split(self.X[idx, f], self.y[idx], self.min_leaf)
            if res is not None and (best is None or res[0] < best[0] - 1e-12):
                best = (res[0], int(f), float(res[1]))
        if best is None:
            return node
        _, f, thr = best
        go_left = self.X[idx, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self.build(idx[go_left], depth + 1)
        self.right[node] = self.build(idx[~go_left], depth + 1)
        return node

    def tree(self):
        return DecisionTree(self.feature, self.threshold, self.left, self.right, self.value,
                            self.task, n_samples=self.n_samples)


def _resolve_k(features_per_split, n_features):
    if features_per_split in (None, "all"):
        return None
    if features_per_split == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    return int(features_per_split)


def fit_tree(X, y, *, max_depth=None, min_samples_leaf=1, features_per_split=None, seed=0,
             task="classification", n_classes=len(CLASS_NAMES), rng=None) -> DecisionTree:
    """Grow a CART tree (Gini for classification, squared error for regression)."""
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise EmptyDataset("cannot fit a tree on an empty dataset")
    y = np.asarray(y, dtype=np.int64 if task == "classification" else float)
    rng = rng if rng is not None else np.random.default_rng(seed)
    k = _resolve_k(features_per_split, X.shape[1])
    b = _Builder(X, y, task, max_depth, min_samples_leaf, k, rng, n_classes)
    b.build(np.arange(len(X)), 0)
    return b.tree()


def fit_forest(X, y, *, n_trees=100, max_depth=None, min_samples_leaf=1,
               features_per_split=3, bootstrap=True, seed=0,
               task="classification", background_cap=256) -> RandomForest:
    """Fit ``n_trees`` trees, each on its own bootstrap sample.

    Tree ``i`` draws its randomness from ``default_rng([seed, i])`` so results
    do not depend on fitting order.
    """
    X = np.asarray(X)
    if len(X) == 0:
        raise EmptyDataset("cannot fit a forest on an empty dataset")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    trees = []
    for i in range(n_trees):
        rng = np.random.default_rng([seed, i])
        idx = rng.integers(0, len(X), len(X)) if bootstrap else np.arange(len(X))
        trees.append(fit_tree(X[idx], np.asarray(y)[idx], max_depth=max_depth,
                              min_samples_leaf=min_samples_leaf,
                              features_per_split=features_per_split, task=task, rng=rng))
    meta = {"seed": seed, "max_depth": max_depth, "min_samples_leaf": min_samples_leaf,
            "features_per_split": features_per_split, "bootstrap": bootstrap,
            "n_trees": n_trees}
    from .importance import make_background
    background = make_background(X, cap=background_cap, seed=seed)
    return RandomForest(trees, meta, task, background)


# --------------------------------------------------------------------------
# prediction

def _trees(model):
    return model.trees if is_ensemble(model) else [model]


def predict_proba(model, X) -> np.ndarray:
    """Class probabilities; a forest averages per-tree leaf frequencies."""
    X = np.asarray(X)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    probs = np.mean([t.leaf_output()[t.apply(X2)] for t in _trees(model)], axis=0)
    return probs[0] if single else probs


def _tree_predict(tree, X2):
    if tree.task == "regression":
        return tree.value[tree.apply(X2)]
    return np.argmax(tree.value[tree.apply(X2)], axis=1)


def predict(model, X):
    """Predicted class (EgoAction for a single row, int array for a matrix).

    A forest takes the majority vote of its trees, ties to the lowest class
    index; a regression forest averages.
    """
    X = np.asarray(X)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if model.task == "regression":
        out = np.mean([_tree_predict(t, X2) for t in _trees(model)], axis=0)
        return float(out[0]) if single else out
    votes = np.stack([_tree_predict(t, X2) for t in _trees(model)], axis=1)
    n_cls = len(_trees(model)[0].class_names)
    tally = np.stack([(votes == c).sum(axis=1) for c in range(n_cls)], axis=1)
    out = np.argmax(tally, axis=1)
    return EgoAction(int(out[0])) if single else out


def decision_path(tree: DecisionTree, x) -> DecisionPath:
    x = np.asarray(x, dtype=float).reshape(-1)
    node, steps = tree.root_id, []
    while not tree.is_leaf(node):
        f, thr = int(tree.feature[node]), float(tree.threshold[node])
        if x[f] <= thr:
            steps.append(PathStep(node, f, Comparator.LE, thr))
            node = int(tree.left[node])
        else:
            steps.append(PathStep(node, f, Comparator.GT, thr))
            node = int(tree.right[node])
    pred = (float(tree.value[node]) if tree.task == "regression"
            else EgoAction(int(np.argmax(tree.value[node]))))
    return DecisionPath(tuple(steps), node, pred)


def leaf_entropy(tree: DecisionTree, x) -> float:
    """Shannon entropy (bits) of the training class counts at the reached leaf."""
    leaf = int(tree.apply(np.asarray(x).reshape(1, -1))[0])
    return counts_entropy(tree.value[leaf])


def counts_entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(max(0.0, -(p * np.log2(p)).sum()))


# --------------------------------------------------------------------------
# ensemble reduction

def obtain_mode_trees(forest: RandomForest, x) -> list[DecisionTree]:
    """Trees whose own prediction equals the forest's majority vote."""
    majority = int(predict(forest, x))
    x2 = np.asarray(x).reshape(1, -1)
    return [t for t in forest.trees if int(_tree_predict(t, x2)[0]) == majority]


def obtain_tree_by_factoring_paths(mode_trees: Sequence[DecisionTree],
                                   paths: Sequence[DecisionPath]) -> DecisionTree:
    """Pick the tree whose path uses the most frequently recurring features.

    Each feature's frequency counts its occurrences over all steps of all
    paths; a tree scores the sum over the distinct features on its path. Ties
    go to the shorter path, then to the earlier tree.
    """
    if not mode_trees:
        raise ValueError("no trees to choose from")
    freq = np.zeros(len(mode_trees[0].feature_names), dtype=np.int64)
    for p in paths:
        for f in p.features():
            freq[f] += 1
    best, best_key = 0, None
    for i, p in enumerate(paths):
        score = int(sum(freq[f] for f in set(p.features())))
        key = (-score, len(p.steps), i)
        if best_key is None or key < best_key:
            best, best_key = i, key
    return mode_trees[best]


def obtain_median_tree(forest: RandomForest, x) -> DecisionTree:
    """Regression forests only: the tree predicting closest to the median."""
    if forest.task != "regression":
        raise NotRegression("obtain_median_tree needs a regression forest")
    x2 = np.asarray(x).reshape(1, -1)
    preds = np.array([_tree_predict(t, x2)[0] for t in forest.trees])
    return forest.trees[int(np.argmin(np.abs(preds - np.median(preds))))]


def reduce_ensemble(model, x) -> DecisionTree:
    """Collapse a forest to the single tree used for explanation."""
    if not is_ensemble(model):
        return model
    if is_classification(model):
        mode = obtain_mode_trees(model, x)
        return obtain_tree_by_factoring_paths(mode, [decision_path(t, x) for t in mode])
    return obtain_median_tree(model, x)


# --------------------------------------------------------------------------
# validation, cross-validation

def check_tree(tree: DecisionTree) -> None:
    """Raise FormatError unless the arrays form one consistent rooted tree."""
    n = tree.n_nodes
    if n == 0:
        raise FormatError("tree has no nodes")
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    while stack:
        i = stack.pop()
        if not 0 <= i < n or seen[i]:
            raise FormatError(f"node {i} is out of range or reached twice")
        seen[i] = True
        if tree.feature[i] == LEAF:
            if tree.left[i] != LEAF or tree.right[i] != LEAF:
                raise FormatError(f"leaf {i} has children")
            continue
        if not 0 <= tree.feature[i] < len(tree.feature_names):
            raise FormatError(f"node {i} splits on unknown feature {tree.feature[i]}")
        if not np.isfinite(tree.threshold[i]):
            raise FormatError(f"node {i} has no finite threshold")
        l, r = int(tree.left[i]), int(tree.right[i])
        if tree.task == "classification" and not np.array_equal(
                tree.value[i], tree.value[l] + tree.value[r]):
            raise FormatError(f"node {i} class counts differ from its children's sum")
        stack.extend([r, l])
    if not seen.all():
        raise FormatError("tree has unreachable nodes")


def kfold_indices(n: int, n_folds: int = 10, seed: int = 0):
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, n_folds)]


def accuracy(model, X, y) -> float:
    return float(np.mean(predict(model, np.asarray(X)) == np.asarray(y)))


def cross_validate(X, y, *, grid=None, n_folds=10, seed=0, **forest_params):
    """Grid search over (max_depth, min_samples_leaf) with k-fold CV.

    Returns ``(best_params, results)`` where each result records the candidate
    params, per-fold accuracies and their mean. The first candidate with the
    highest mean wins.
    """
    X, y = np.asarray(X), np.asarray(y)
    grid = grid or [{"max_depth": forest_params.pop("max_depth", None),
                     "min_samples_leaf": forest_params.pop("min_samples_leaf", 1)}]
    folds = kfold_indices(len(X), n_folds, seed)
    results = []
    for params in grid:
        scores = []
        for k, test_idx in enumerate(folds):
            train_mask = np.ones(len(X), dtype=bool)
            train_mask[test_idx] = False
            m = fit_forest(X[train_mask], y[train_mask], seed=seed, background_cap=1,
                           **forest_params, **params)
            scores.append(accuracy(m, X[test_idx], y[test_idx]))
        results.append({"params": dict(params), "fold_accuracy": scores,
                        "mean_accuracy": float(np.mean(scores))})
    best = max(range(len(results)), key=lambda i: (results[i]["mean_accuracy"], -i))
    return results[best]["params"], results


# --------------------------------------------------------------------------
# serialization

def _tree_to_dict(t: DecisionTree) -> dict:
    d = {"feature": t.feature.tolist(),
         "threshold": [None if np.isnan(v) else float(v) for v in t.threshold],
         "left": t.left.tolist(), "right": t.right.tolist()}
    if t.task == "classification":
        d["class_counts"] = t.value.tolist()
    else:
        d["value"] = t.value.tolist()
        d["n_samples"] = t.n_samples.tolist()
    return d


def _tree_from_dict(d: dict, task, feature_names, class_names) -> DecisionTree:
    thr = [np.nan if v is None else v for v in d["threshold"]]
    if task == "classification":
        t = DecisionTree(d["feature"], thr, d["left"], d["right"], d["class_counts"], task,
                         feature_names, class_names)
    else:
        t = DecisionTree(d["feature"], thr, d["left"], d["right"], d["value"], task,
                         feature_names, class_names, d.get("n_samples"))
    lengths = {len(t.feature), len(t.threshold), len(t.left), len(t.right), len(t.value)}
    if len(lengths) != 1:
        raise FormatError("tree node arrays differ in length")
    check_tree(t)
    return t


def model_to_dict(model) -> dict:
    forest = is_ensemble(model)
    trees = _trees(model)
    d = {"format": MODEL_FORMAT, "version": MODEL_VERSION,
         "kind": "forest" if forest else "tree", "task": model.task,
         "feature_names": list(trees[0].feature_names),
         "class_names": list(trees[0].class_names),
         "trees": [_tree_to_dict(t) for t in trees]}
    if forest:
        d["training_meta"] = model.training_meta
        d["background"] = None if model.background is None else model.background.tolist()
        d["codebook"] = model.codebook
    return d


def model_from_dict(d: dict):
    if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
        raise FormatError(f"not a {MODEL_FORMAT} file")
    if d.get("version") != MODEL_VERSION:
        raise FormatError(f"model file version {d.get('version')!r} is not supported "
                          f"(this build reads version {MODEL_VERSION})")
    try:
        task = d["task"]
        trees = [_tree_from_dict(t, task, d["feature_names"], d["class_names"])
                 for t in d["trees"]]
        if d["kind"] == "tree":
            if len(trees) != 1:
                raise FormatError("a tree model holds exactly one tree")
            return trees[0]
        bg = d.get("background")
        return RandomForest(trees, d.get("training_meta", {}), task,
                            None if bg is None else np.asarray(bg, dtype=np.int64),
                            d.get("codebook"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed model file: {exc!r}") from None


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True) + "\n",
                          encoding="utf-8")


def load_model(path):
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(d)


def render_tree(tree: DecisionTree) -> str:
    """Indented listing: one line per node, conditions on internal nodes."""
    lines = []

    def walk(node, depth, prefix):
        pad = "  " * depth
        if tree.is_leaf(node):
            if tree.task == "classification":
                counts = tree.value[node]
                cls = tree.class_names[int(np.argmax(counts))]
                lines.append(f"{pad}{prefix}leaf #{node}: {cls} counts={counts.tolist()} "
                             f"S={counts_entropy(counts):.3f}")
            else:
                lines.append(f"{pad}{prefix}leaf #{node}: value={tree.value[node]:g}")
            return
        name = tree.feature_names[tree.feature[node]]
        lines.append(f"{pad}{prefix}#{node} {name} <= {tree.threshold[node]:g}")
        walk(int(tree.left[node]), depth + 1, "yes: ")
        walk(int(tree.right[node]), depth + 1, "no:  ")

    walk(tree.root_id, 0, "")
    return "\n".join(lines)
