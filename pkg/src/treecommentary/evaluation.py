"""Scoring factual commentary against reference texts, stratified by entropy."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyDataset
from .factual import explain_factual
from .metrics import bleu4, rouge_w, tokenize
from .scene import CLASS_NAMES, Dataset
from .trees import predict

CELLS = ("bleu4_low_S", "bleu4_high_S", "rougew_low_S", "rougew_high_S")


def _summary(values) -> dict:
    if len(values) == 0:
        return {"min": None, "max": None, "median": None}
    v = np.asarray(values, dtype=float)
    return {"min": float(v.min()), "max": float(v.max()), "median": float(np.median(v))}


def _mean(values):
    return float(np.mean(values)) if len(values) else None


@dataclass
class EvalReport:
    per_class: dict
    entropy_median: float
    accuracy: float
    confusion: np.ndarray
    entropy_summary: dict
    per_class_entropy: dict = field(default_factory=dict)
    n_rows: int = 0
    missing_references: int = 0
    overall: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _clean({
            "per_class": self.per_class,
            "entropy_median": self.entropy_median,
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "entropy_summary": self.entropy_summary,
            "per_class_entropy": self.per_class_entropy,
            "n_rows": self.n_rows,
            "missing_references": self.missing_references,
            "overall": self.overall,
        })

    def to_json(self) -> str:
        """Deterministic JSON; floats rounded to 12 significant digits."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def render_table(self) -> str:
        """Plain-text table: BLEU-4 and ROUGE-W by low/high entropy per class."""
        m = self.entropy_median
        head = ["Class", f"BLEU-4 S<={m:.2f}", f"BLEU-4 S>{m:.2f}",
                f"ROUGE-W S<={m:.2f}", f"ROUGE-W S>{m:.2f}"]
        rows = [[name] + [_fmt(self.per_class[name][c]) for c in CELLS] for name in CLASS_NAMES]
        rows.append(["all"] + [_fmt(self.overall.get(c)) for c in CELLS])
        widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
        lines = ["  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                           for i, (cell, w) in enumerate(zip(r, widths))) for r in [head] + rows]
        lines.insert(1, "-" * len(lines[0]))
        s = self.entropy_summary
        lines.append("")
        lines.append(f"Min(S)={_fmt(s['min'])}  Max(S)={_fmt(s['max'])}  Median(S)={_fmt(s['median'])}")
        lines.append(f"accuracy={self.accuracy:.4f}  rows={self.n_rows}  "
                     f"missing references={self.missing_references}")
        lines.append("")
        lines.append("confusion (rows true, columns predicted)")
        lines.append("      " + " ".join(f"{n:>6}" for n in CLASS_NAMES))
        for name, row in zip(CLASS_NAMES, self.confusion):
            lines.append(f"{name:<6}" + " ".join(f"{int(v):>6}" for v in row))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.4f}"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def evaluate(model, test: Dataset, *, phrasebook=None, codebook=None, background=None,
             ci_method: str = "treepath", explanations: Optional[list] = None) -> EvalReport:
    """Explain every test row and score the text against its reference.

    Rows are grouped by their true action. Entropy buckets split at the
    median entropy of all test rows, ties in the low bucket. Rows without a
    reference text are counted and left out of the similarity cells.

    Args:
        model: Trained classifier.
        test: Rows with reference texts in ``test.texts``.
        explanations: Precomputed factual explanations, one per row.
    """
    if len(test) == 0:
        raise EmptyDataset("evaluation needs at least one test row")
    n_cls = len(CLASS_NAMES)
    y = np.asarray(test.y, dtype=np.int64)
    pred = np.asarray(predict(model, test.X), dtype=np.int64)
    confusion = np.zeros((n_cls, n_cls), dtype=np.int64)
    np.add.at(confusion, (y, pred), 1)
    if explanations is None:
        explanations = [explain_factual(model, x, phrasebook=phrasebook, codebook=codebook,
                                        background=background, ci_method=ci_method)
                        for x in test.X]
    entropy = np.array([e.entropy for e in explanations])
    median = float(np.median(entropy))
    cells = {name: {c: [] for c in CELLS} for name in CLASS_NAMES}
    missing = 0
    for i, exp in enumerate(explanations):
        ref = test.texts[i] if test.texts is not None else None
        if not ref or not tokenize(ref):
            missing += 1
            continue
        cand, ref_tok = tokenize(exp.text), tokenize(ref)
        bucket = "low_S" if entropy[i] <= median else "high_S"
        row = cells[CLASS_NAMES[y[i]]]
        row[f"bleu4_{bucket}"].append(bleu4(cand, [ref_tok]))
        row[f"rougew_{bucket}"].append(rouge_w(cand, ref_tok))
    per_class, overall_lists = {}, {c: [] for c in CELLS}
    for name in CLASS_NAMES:
        per_class[name] = {c: _mean(cells[name][c]) for c in CELLS}
        per_class[name]["n_low_S"] = len(cells[name]["bleu4_low_S"])
        per_class[name]["n_high_S"] = len(cells[name]["bleu4_high_S"])
        for c in CELLS:
            overall_lists[c].extend(cells[name][c])
    overall = {c: _mean(v) for c, v in overall_lists.items()}
    per_class_entropy = {name: _summary(entropy[y == k]) for k, name in enumerate(CLASS_NAMES)}
    acc = float(np.trace(confusion) / confusion.sum())
    return EvalReport(per_class, median, acc, confusion, _summary(entropy), per_class_entropy,
                      len(test), missing, overall)
