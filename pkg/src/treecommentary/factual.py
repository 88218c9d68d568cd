"""Factual explanations: why the model predicted what it did.

The forest is collapsed to one explaining tree, the input's path through it
is merged into one interval per feature (a *cause*), and causes are kept
when their contextual importance is close enough to the strongest one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .decoder import decode_factual, default_phrasebook
from .errors import ContradictoryPath, InvalidConfig
from .importance import CIResult, obtain_ci
from .scene import FEATURE_NAMES, Codebook, EgoAction, FeatureVector, default_codebook
from .trees import Comparator, DecisionPath, PathStep, decision_path, leaf_entropy, predict, reduce_ensemble

DEFAULT_THRESHOLD = 50.0


@dataclass(frozen=True)
class Cause:
    """Merged condition ``lower_bound < x[feature_index] <= upper_bound``."""

    feature_index: int
    lower_bound: float = -math.inf
    upper_bound: float = math.inf
    ci: Optional[float] = None

    @property
    def feature(self) -> str:
        return FEATURE_NAMES[self.feature_index]

    def contains(self, value) -> bool:
        return self.lower_bound < value <= self.upper_bound

    def with_ci(self, ci: Optional[float]) -> "Cause":
        return replace(self, ci=None if ci is None else float(ci))

    def interval(self) -> str:
        lo = "-inf" if self.lower_bound == -math.inf else f"{self.lower_bound:g}"
        hi = "inf" if self.upper_bound == math.inf else f"{self.upper_bound:g}"
        return f"({lo}, {hi}]"

    def __str__(self):
        parts = []
        if self.lower_bound != -math.inf:
            parts.append(f"{self.feature} > {self.lower_bound:g}")
        if self.upper_bound != math.inf:
            parts.append(f"{self.feature} <= {self.upper_bound:g}")
        return " and ".join(parts)

    def to_dict(self) -> dict:
        return {"feature": self.feature, "interval": self.interval(),
                "lower": _finite_or_none(self.lower_bound),
                "upper": _finite_or_none(self.upper_bound),
                "ci": self.ci}


def _finite_or_none(v):
    return None if math.isinf(v) else float(v)


def merge_inequalities(path) -> list[Cause]:
    """One cause per feature in order of first appearance on the path.

    Args:
        path: A DecisionPath or any iterable of PathStep.

    Raises:
        ContradictoryPath: A feature's merged interval is empty.
    """
    steps: Iterable[PathStep] = path.steps if isinstance(path, DecisionPath) else path
    lo: dict[int, float] = {}
    hi: dict[int, float] = {}
    order: list[int] = []
    for s in steps:
        f = s.feature_index
        if f not in lo:
            order.append(f)
            lo[f], hi[f] = -math.inf, math.inf
        if s.comparator is Comparator.LE:
            hi[f] = min(hi[f], s.threshold)
        else:
            lo[f] = max(lo[f], s.threshold)
    for f in order:
        if lo[f] >= hi[f]:
            raise ContradictoryPath(f"{FEATURE_NAMES[f]}: lower bound {lo[f]:g} is not below "
                                    f"upper bound {hi[f]:g}")
    return [Cause(f, lo[f], hi[f]) for f in order]


def _ci_values(ci) -> np.ndarray:
    return np.asarray(ci.per_feature if isinstance(ci, CIResult) else ci, dtype=float)


def attach_ci(ci, causes: Sequence[Cause]) -> list[Cause]:
    values = _ci_values(ci)
    return [c.with_ci(values[c.feature_index]) for c in causes]


def obtain_relevant_causes(ci, causes: Sequence[Cause],
                           threshold: float = DEFAULT_THRESHOLD) -> list[Cause]:
    """Causes whose CI is within ``threshold`` percent of the largest.

    A cause is kept when its CI is positive and ``(max - ci) / max * 100`` is
    strictly below ``threshold``. If no CI is positive, only the largest is
    returned. Path order is preserved.

    Args:
        ci: CIResult or per-feature array.
        causes: Merged causes of the explaining path.
    """
    causes = attach_ci(ci, causes)
    if not causes:
        return []
    top = max(range(len(causes)), key=lambda i: (causes[i].ci, -i))
    c_max = causes[top].ci
    if c_max <= 0:
        return [causes[top]]
    return [c for i, c in enumerate(causes)
            if i == top or (c.ci > 0 and (c_max - c.ci) / c_max * 100.0 < threshold)]


@dataclass(frozen=True)
class FactualExplanation:
    action: EgoAction
    selected_causes: tuple
    full_path: DecisionPath
    entropy: float
    text: str
    causes: tuple = ()
    ci: Optional[CIResult] = field(default=None, compare=False)
    low_confidence: bool = False

    def to_dict(self) -> dict:
        return {
            "action": self.action.token,
            "causes": [c.to_dict() for c in self.selected_causes],
            "path": [str(s) for s in self.full_path.steps],
            "leaf": int(self.full_path.leaf_id),
            "entropy": round(float(self.entropy), 12),
            "low_confidence": self.low_confidence,
            "text": self.text,
        }


def as_input(v) -> np.ndarray:
    if isinstance(v, FeatureVector):
        return v.as_array()
    return np.asarray(v, dtype=np.int64).reshape(-1)


def model_codebook(model) -> Codebook:
    book = getattr(model, "codebook", None)
    if isinstance(book, Codebook):
        return book
    return Codebook.from_dict(book) if book else default_codebook()


def explain_factual(model, v, *, phrasebook=None, codebook: Optional[Codebook] = None,
                    background=None, ci_method: str = "treepath",
                    threshold: float = DEFAULT_THRESHOLD) -> FactualExplanation:
    """Explain the model's prediction for ``v``.

    CI comes from the full model; the path and entropy come from the reduced
    explaining tree.

    Args:
        model: Classification forest or tree.
        v: FeatureVector or length-5 code array.
        phrasebook: Defaults to the shipped phrasebook.
        background: Rows for the CI value function; defaults to the
            model's stored background.
    """
    if model.task != "classification":
        raise InvalidConfig("factual explanations need a classification model")
    x = as_input(v)
    codebook = codebook or model_codebook(model)
    ci = obtain_ci(model, x, background=background, method=ci_method)
    action = EgoAction(int(predict(model, x)))
    tree = reduce_ensemble(model, x)
    path = decision_path(tree, x)
    causes = attach_ci(ci, merge_inequalities(path))
    selected = obtain_relevant_causes(ci, causes, threshold)
    low = bool(causes) and all(c.ci <= 0 for c in causes)
    text = decode_factual(action, selected, phrasebook or default_phrasebook(), codebook)
    return FactualExplanation(action, tuple(selected), path, leaf_entropy(tree, x), text,
                              tuple(causes), ci, low)
