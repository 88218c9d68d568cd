"""Contextual importance as interventional Shapley values.

Both estimators share one value function: ``v(S)`` is the mean model output
for the target class over background rows, with the features in ``S`` taken
from the explained input and the remaining features from the background row.

``shap_bruteforce`` enumerates all feature subsets and applies the Shapley
weights directly. ``shap_treepath`` never evaluates the model on hybrids;
for each (leaf, background row) pair it reads off which features must come
from the input (set A) and which from the background row (set B) for the
hybrid to land in that leaf, and adds that leaf's closed-form Shapley share.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, factorial
from typing import Optional

import numpy as np

from .errors import EmptyBackground
from .trees import is_ensemble, predict, predict_proba

METHODS = ("treepath", "bruteforce")


@dataclass(frozen=True)
class CIResult:
    per_feature: np.ndarray
    base_value: float
    target_class: object

    @property
    def output(self) -> float:
        """Model output on the explained input (efficiency identity)."""
        return float(self.base_value + self.per_feature.sum())


def make_background(X, cap: int = 256, seed: int = 0) -> np.ndarray:
    """Deterministic subsample of at most ``cap`` rows, original order kept."""
    X = np.asarray(X, dtype=np.int64)
    if len(X) <= cap:
        return X.copy()
    idx = np.sort(np.random.default_rng([seed, 0x5BD1]).choice(len(X), cap, replace=False))
    return X[idx]


def _resolve(model, x, target, background):
    x = np.asarray(x, dtype=np.int64).reshape(-1)
    if background is None:
        background = getattr(model, "background", None)
    if background is None or len(background) == 0:
        raise EmptyBackground("a nonempty background dataset is required")
    background = np.atleast_2d(np.asarray(background, dtype=np.int64))
    if model.task == "regression":
        target = None
    elif target is None:
        target = int(predict(model, x))
    return x, int(target) if target is not None else None, background


def _output(model, X, target):
    if target is None:
        return np.asarray(predict(model, X), dtype=float)
    return predict_proba(model, X)[:, target]


def value_function(model, x, subset, background=None, target=None) -> float:
    """Mean target-class output over hybrids taking ``subset`` features from ``x``."""
    x, target, background = _resolve(model, x, target, background)
    hybrid = background.copy()
    cols = sorted(subset)
    hybrid[:, cols] = x[cols]
    return float(_output(model, hybrid, target).mean())


def shap_bruteforce(model, x, target=None, background=None) -> CIResult:
    """Shapley values by enumerating all 2^n feature subsets."""
    x, target, background = _resolve(model, x, target, background)
    n = len(x)
    values = {}
    for size in range(n + 1):
        for subset in combinations(range(n), size):
            hybrid = background.copy()
            hybrid[:, list(subset)] = x[list(subset)]
            values[frozenset(subset)] = float(_output(model, hybrid, target).mean())
    phi = np.zeros(n)
    for i in range(n):
        others = [j for j in range(n) if j != i]
        total = 0.0
        for size in range(n):
            w = 1.0 / (n * comb(n - 1, size))
            for subset in combinations(others, size):
                s = frozenset(subset)
                total += w * (values[s | {i}] - values[s])
        phi[i] = total
    return CIResult(phi, values[frozenset()], _target_label(target))


def _share_tables(n):
    # in_a[a, b]: Shapley weight of a feature in A; in_b[a, b]: weight (negated) for B
    in_a = np.zeros((n + 1, n + 1))
    in_b = np.zeros((n + 1, n + 1))
    for a in range(n + 1):
        for b in range(n + 1 - a):
            if a:
                in_a[a, b] = factorial(a - 1) * factorial(b) / factorial(a + b)
            if b:
                in_b[a, b] = factorial(a) * factorial(b - 1) / factorial(a + b)
    return in_a, in_b


def _membership_histogram(tree, background):
    """Per leaf, how many background rows fall inside it per feature bitmask."""
    cache = tree.__dict__.setdefault("_shap_cache", {})
    key = (background.shape, background.tobytes())
    hit = cache.get("hist")
    if hit is not None and hit[0] == key:
        return hit[1]
    leaves, lo, hi = tree.leaf_boxes()
    n = lo.shape[1]
    bg = background[:, None, :]
    masks = (((bg > lo) & (bg <= hi)) * (1 << np.arange(n))).sum(axis=2)   # (R, L)
    flat = (np.arange(len(leaves)) << n)[None, :] + masks
    hist = np.bincount(flat.ravel(), minlength=len(leaves) << n).astype(float)
    hist = hist.reshape(len(leaves), 1 << n)
    cache["hist"] = (key, hist)
    return hist


def _tree_shap(tree, x, target, background):
    leaves, lo, hi = tree.leaf_boxes()
    out = tree.leaf_output(target)[leaves]
    n = lo.shape[1]
    full = (1 << n) - 1
    hist = _membership_histogram(tree, background) / len(background)   # (L, 2^n)
    bits = 1 << np.arange(n)
    bmask = np.arange(1 << n)[None, :]                          # (1, 2^n)
    xmask = (((x > lo) & (x <= hi)) * bits).sum(axis=1)[:, None]  # (L, 1)
    alive = (xmask | bmask) == full
    need_x = xmask & ~bmask & full
    need_b = ~xmask & bmask & full
    a = _POPCOUNT[need_x]
    b = _POPCOUNT[need_b]
    in_a, in_b = _share_tables(n)
    wa = np.where(alive, in_a[a, b], 0.0) * hist * out[:, None]
    wb = np.where(alive, in_b[a, b], 0.0) * hist * out[:, None]
    phi = np.zeros(n)
    for f in range(n):
        phi[f] = (wa * ((need_x & bits[f]) > 0)).sum() - (wb * ((need_b & bits[f]) > 0)).sum()
    # background rows lying wholly inside a leaf give f(b), hence the base value
    return phi, float((out * hist[:, full]).sum())


_POPCOUNT = np.array([bin(i).count("1") for i in range(1 << 10)])


def shap_treepath(model, x, target=None, background=None) -> CIResult:
    """Shapley values from per-leaf path sets; a forest averages its trees."""
    x, target, background = _resolve(model, x, target, background)
    trees = model.trees if is_ensemble(model) else [model]
    phis, bases = zip(*(_tree_shap(t, x, target, background) for t in trees))
    return CIResult(np.mean(phis, axis=0), float(np.mean(bases)), _target_label(target))


def _target_label(target):
    from .scene import EgoAction
    return None if target is None else EgoAction(target)


def obtain_ci(model, x, background=None, method: str = "treepath",
              target: Optional[int] = None) -> CIResult:
    """CI for the model's predicted class on ``x`` (majority vote for forests)."""
    if method == "treepath":
        return shap_treepath(model, x, target, background)
    if method == "bruteforce":
        return shap_bruteforce(model, x, target, background)
    raise ValueError(f"unknown CI method {method!r}; expected one of {METHODS}")
