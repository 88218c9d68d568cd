"""One check per acceptance criterion; each prints a PASS/FAIL line."""
import itertools
import json
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import feature_grid, record_acceptance
from test_decoder import COUNTERFACTUAL_GOLDEN, FACTUAL_GOLDEN
from test_importance import random_case
from treecommentary.cli import main
from treecommentary.counterfactual import ConstraintSet, explain_counterfactual, find_closest_cf_sibling
from treecommentary.decoder import decode_counterfactual, decode_factual
from treecommentary.factual import merge_inequalities, obtain_relevant_causes, Cause
from treecommentary.importance import shap_bruteforce, shap_treepath, value_function
from treecommentary.metrics import bleu4, rouge_w
from treecommentary.scene import CLASS_NAMES, EGO_PLAN, EgoAction, default_codebook, encode_frames, split_dataset
from treecommentary.synthetic import SyntheticConfig, generate_synthetic
from treecommentary.trees import (
    Comparator,
    PathStep,
    RandomForest,
    accuracy,
    counts_entropy,
    fit_forest,
    leaf_entropy,
    predict,
    predict_proba,
    reduce_ensemble,
)

CODEBOOK = default_codebook()
H_PLAN = ConstraintSet.from_names(["EgoPlan"])


def _split(noise):
    ds = encode_frames(generate_synthetic(SyntheticConfig(size=2755, noise=noise), seed=0), CODEBOOK)
    return split_dataset(ds, 0.2, seed=0)


@pytest.fixture(scope="module")
def trained():
    out = {}
    for noise in (0.0, 0.15):
        start = time.perf_counter()
        train, test = _split(noise)
        model = fit_forest(train.X, train.y, n_trees=100, seed=0)
        out[noise] = (model, test, accuracy(model, test.X, test.y), time.perf_counter() - start)
    return out


@pytest.fixture(scope="module")
def explained(trained):
    """Reduced tree and counterfactuals for every noiseless test row."""
    model, test, _, _ = trained[0.0]
    rows = []
    for x in test.X:
        tree = reduce_ensemble(model, x)
        factual = predict(model, x)
        cf = {key: explain_counterfactual(tree, x, factual=factual, constraints=h, scope=scope)
              for key, h, scope in (("none", ConstraintSet(), "pivot"), ("plan", H_PLAN, "pivot"),
                                    ("none_full", ConstraintSet(), "full"),
                                    ("plan_full", H_PLAN, "full"))}
        rows.append((x, tree, cf))
    return rows


def test_ac1_accuracy(trained):
    _, _, clean, t0 = trained[0.0]
    _, _, noisy, t1 = trained[0.15]
    ok = clean >= 0.95 and 0.70 <= noisy <= 0.90 and t0 + t1 < 30
    record_acceptance("AC1", "forest accuracy on synthetic data", ok,
                      f"noiseless {clean:.4f} (>= 0.95), 15% noise {noisy:.4f} (in [0.70, 0.90]), "
                      f"{t0 + t1:.1f}s (< 30s)")
    assert ok


def test_ac2_merge():
    path = [PathStep(0, 0, Comparator.LE, 50.0), PathStep(1, 0, Comparator.LE, 10.0)]
    causes = merge_inequalities(path)
    ok = [(c.feature_index, c.lower_bound, c.upper_bound) for c in causes] == [(0, -np.inf, 10.0)]
    record_acceptance("AC2", "merged inequalities", ok, f"{{F1 <= 50, F1 <= 10}} -> {causes[0]}")
    assert ok


def _used_features(model):
    trees = model.trees if isinstance(model, RandomForest) else [model]
    return set(int(f) for t in trees for f in t.feature if f >= 0)


def test_ac3_shap_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    n_cases, worst, eff, sym_pairs, sym_bad, dummy_bad = 120, 0.0, 0.0, 0, 0, 0
    for _ in range(n_cases):
        model, x, bg = random_case(rng)
        a = shap_treepath(model, x, background=bg)
        b = shap_bruteforce(model, x, background=bg)
        worst = max(worst, float(np.abs(a.per_feature - b.per_feature).max()))
        target = int(a.target_class)
        fx = predict_proba(model, x)[target]
        eff = max(eff, abs(a.output - fx), abs(b.output - fx))
        v = {s: value_function(model, x, set(s), background=bg, target=target)
             for r in range(6) for s in itertools.combinations(range(5), r)}
        for i, j in itertools.combinations(range(5), 2):
            rest = [f for f in range(5) if f not in (i, j)]
            subsets = [s for r in range(4) for s in itertools.combinations(rest, r)]
            if all(abs(v[tuple(sorted(s + (i,)))] - v[tuple(sorted(s + (j,)))]) < 1e-12 for s in subsets):
                sym_pairs += 1
                sym_bad += abs(a.per_feature[i] - a.per_feature[j]) > 1e-9
        unused = set(range(5)) - _used_features(model)
        dummy_bad += sum(a.per_feature[f] != 0 or b.per_feature[f] != 0 for f in unused)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and eff <= 1e-9 and sym_bad == 0 and dummy_bad == 0 and elapsed < 60
    record_acceptance("AC3", "interventional SHAP routes agree", ok,
                      f"{n_cases} cases, max |treepath - bruteforce| {worst:.1e}, efficiency gap {eff:.1e}, "
                      f"symmetric pairs {sym_pairs} with {sym_bad} violations, dummy violations {dummy_bad}, "
                      f"{elapsed:.1f}s (< 60s)")
    assert ok


def test_ac4_cause_selection():
    causes = [Cause(0, -np.inf, 0.5), Cause(3, 19.5, np.inf), Cause(4, 1.5, np.inf)]
    ci = np.array([0.8, 0, 0, 0.5, 0.1])
    picked = [c.feature_index for c in obtain_relevant_causes(ci, causes)]
    boundary = [c.feature_index for c in obtain_relevant_causes(np.array([0.6, 0, 0, 0.3, 0]), causes[:2])]
    ok = picked == [0, 3] and boundary == [0]
    record_acceptance("AC4", "cause selection threshold", ok,
                      f"CIs {{0.8, 0.5, 0.1}} keep features {picked}; 0.3 vs 0.6 keeps {boundary}")
    assert ok


def _entropy_summary(s, y):
    parts = []
    for k, name in enumerate(CLASS_NAMES):
        vals = s[y == k]
        parts.append(f"{name} {vals.min():.2f}/{vals.max():.2f}/{np.median(vals):.2f}")
    return "; ".join(parts)


def test_ac5_entropy(trained, explained):
    _, test, _, _ = trained[0.0]
    noisy_model, noisy_test, _, _ = trained[0.15]
    pure, uniform, skew = counts_entropy([4, 0, 0, 0]), counts_entropy([2, 2, 0, 0]), counts_entropy([3, 1, 0, 0])
    clean = np.array([leaf_entropy(tree, x) for x, tree, _ in explained])
    noisy = np.array([leaf_entropy(reduce_ensemble(noisy_model, x), x) for x in noisy_test.X])
    both = np.concatenate([clean, noisy])
    ok = (pure == 0 and abs(uniform - 1) < 1e-12 and abs(skew - 0.8113) <= 1e-4
          and both.min() >= 0 and both.max() <= 2)
    record_acceptance("AC5", "leaf entropy", ok,
                      f"pure {pure:.4f}, uniform pair {uniform:.4f}, [3,1,0,0] {skew:.4f}; observed range "
                      f"[{both.min():.3f}, {both.max():.3f}]; min/max/median by class, noiseless: "
                      f"{_entropy_summary(clean, test.y)}; 15% noise: {_entropy_summary(noisy, noisy_test.y)}")
    assert ok


def _region(grid, x, conditions, held):
    keep = np.ones(len(grid), dtype=bool)
    for c in conditions:
        col = grid[:, c.feature_index]
        keep &= (col > c.lower_bound) & (col <= c.upper_bound)
    for f in held:
        keep &= grid[:, f] == x[f]
    return grid[keep]


def test_ac6_counterfactual_validity(explained):
    grid = feature_grid()
    counts = {}
    for key, h in (("none", set()), ("plan", {EGO_PLAN})):
        valid = 0
        for x, tree, cf in explained:
            c = cf[key]
            held = (set(range(5)) - {k.feature_index for k in c.conditions}) | h
            region = _region(grid, x, c.conditions, held)
            pred = tree.value[tree.apply(region)].argmax(axis=1)
            valid += len(region) > 0 and bool((pred == int(c.target_action)).all())
        full_valid = 0
        for x, tree, cf in explained:
            c = cf[key + "_full"]
            region = _region(grid, x, c.conditions, h)
            full_valid += bool((tree.value[tree.apply(region)].argmax(axis=1) == int(c.target_action)).all())
        counts[key] = (valid, full_valid)
    n = len(explained)
    ok = all(v == n and f == n for v, f in counts.values())
    record_acceptance("AC6", "counterfactual validity over the feature grid", ok,
                      f"{n} frames; H={{}}: {counts['none'][0]}/{n} valid, full-scope {counts['none'][1]}/{n}; "
                      f"H={{EgoPlan}}: {counts['plan'][0]}/{n}, full-scope {counts['plan'][1]}/{n}")
    assert ok


def test_ac7_constraint_respect(explained):
    violations = sum(any(c.feature_index == EGO_PLAN for c in cf[key].conditions)
                     for _, _, cf in explained for key in ("plan", "plan_full"))
    ok = violations == 0
    record_acceptance("AC7", "constraint respect with H={EgoPlan}", ok,
                      f"{len(explained)} frames, {violations} conditions mention EgoPlan")
    assert ok


def test_ac8_blocked_sibling(blocked_sibling_tree):
    v = np.array([0, 0, 0, 19, 1])
    constrained = find_closest_cf_sibling(blocked_sibling_tree, v, EgoAction.MOVE, H_PLAN)
    free = find_closest_cf_sibling(blocked_sibling_tree, v, EgoAction.MOVE)
    ok = constrained == 6 and free == 3
    record_acceptance("AC8", "constrained sibling moves a level up", ok,
                      f"unconstrained leaf {free} (nearest sibling), with EgoPlan fixed leaf {constrained}")
    assert ok


def test_ac9_golden_texts():
    fact = sum(decode_factual(a, c) == t for a, c, t in FACTUAL_GOLDEN)
    cf = sum(decode_counterfactual(a, c) == t for a, c, t in COUNTERFACTUAL_GOLDEN)
    ok = fact == len(FACTUAL_GOLDEN) == 4 and cf == len(COUNTERFACTUAL_GOLDEN) == 4
    record_acceptance("AC9", "golden explanation texts", ok, f"factual {fact}/4, counterfactual {cf}/4 verbatim")
    assert ok


def test_ac10_metric_oracles():
    oracle = json.loads((Path(__file__).parent / "data" / "metric_oracle.json").read_text())
    db = dr = 0.0
    for p in oracle["pairs"]:
        c, r = p["candidate"].split(), p["reference"].split()
        db = max(db, abs(bleu4(c, [r]) - p["bleu4"]))
        dr = max(dr, abs(rouge_w(c, r, oracle["alpha"]) - p["rouge_w"]))
    s = "so ego stops at the red light".split()
    other = "a b c d e".split()
    ident = (bleu4(s, [s]), rouge_w(s, s))
    disj = (bleu4(other, [s]), rouge_w(other, s))
    ok = (len(oracle["pairs"]) == 20 and db <= 1e-6 and dr <= 1e-6 and ident == (1.0, 1.0)
          and disj[0] <= 1e-6 and disj[1] == 0)
    record_acceptance("AC10", "metric oracles", ok,
                      f"20 pairs, max BLEU-4 gap {db:.1e}, max ROUGE-W gap {dr:.1e}; identical {ident}, "
                      f"disjoint ({disj[0]:.1e}, {disj[1]})")
    assert ok


def _pipeline(d: Path):
    steps = [
        ["generate-data", "--size", "600", "--seed", "11", "--out", d / "data.csv"],
        ["train", "--data", d / "data.csv", "--out", d / "model.json", "--report", d / "cv.json",
         "--folds", "3", "--n-trees", "10", "--seed", "11"],
        ["evaluate", "--model", d / "model.json", "--data", d / "data.csv", "--out", d / "eval.json"],
    ]
    import io
    codes = [main([str(a) for a in s], out=io.StringIO()) for s in steps]
    return codes, [(d / n).read_bytes() for n in ("data.csv", "model.json", "cv.json", "eval.json")]


def test_ac11_end_to_end_determinism(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    codes_a, files_a = _pipeline(tmp_path / "a")
    codes_b, files_b = _pipeline(tmp_path / "b")
    same = [x == y for x, y in zip(files_a, files_b)]
    report = json.loads(files_a[3])
    populated = all(v["n_low_S"] + v["n_high_S"] > 0 for v in report["per_class"].values())
    ok = codes_a == codes_b == [0, 0, 0] and all(same) and populated
    record_acceptance("AC11", "end-to-end determinism", ok,
                      f"exit codes {codes_a}/{codes_b}; byte-identical data, model, CV report, "
                      f"eval report: {same}; all classes populated: {populated}")
    assert ok
