"""Command-line entry point: ``treecommentary <command> [options]``.

Exit codes: 0 success (a missing counterfactual is a result, not a failure),
1 runtime error, 2 usage error.

``--config FILE`` names a JSON object whose keys are command names, each
mapping option names (as spelled in ``--help``, dashes or underscores) to
default values. Unknown commands or options are rejected.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .counterfactual import SCOPES, ConstraintSet, explain_counterfactual
from .decoder import PHRASEBOOK_ENV, resolve_phrasebook
from .errors import DesiredEqualsFactual, InvalidConfig, NoCounterfactual, TreeCommentaryError
from .evaluation import evaluate
from .factual import explain_factual, model_codebook
from .importance import METHODS
from .scene import (
    CLASS_NAMES,
    FEATURE_NAMES,
    AgentAction,
    AgentClass,
    EgoAction,
    default_codebook,
    load_dataset,
    split_dataset,
    write_frames,
)
from .synthetic import DEFAULT_CLASS_COUNTS, SyntheticConfig, generate_synthetic
from .trees import (
    RandomForest,
    counts_entropy,
    cross_validate,
    fit_forest,
    accuracy,
    is_ensemble,
    load_model,
    render_tree,
    save_model,
)


class UsageError(Exception):
    pass


def _optional_int(text):
    return None if text.lower() in ("none", "null") else int(text)


def _action(text):
    try:
        return EgoAction.from_token(text)
    except (KeyError, ValueError):
        raise argparse.ArgumentTypeError(f"unknown action {text!r}; use one of {', '.join(CLASS_NAMES)}")


def _build_parser():
    p = argparse.ArgumentParser(prog="treecommentary",
                                description="Tree-based driving action prediction with commentary.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="JSON file of per-command option defaults")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-data", help="write a seeded synthetic dataset CSV")
    g.add_argument("--out", required=True)
    g.add_argument("--size", type=int, default=2755)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise", type=float, default=0.0, help="fraction of rows with a mismatched scene")
    g.add_argument("--class-counts", default=",".join(map(str, DEFAULT_CLASS_COUNTS)),
                   help="stop,move,rlc,llc weights (normalised)")

    t = sub.add_parser("train", help="cross-validate and fit a forest")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True, help="model JSON path")
    t.add_argument("--report", help="write the CV report as JSON")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--test-fraction", type=float, default=0.2)
    t.add_argument("--folds", type=int, default=10)
    t.add_argument("--n-trees", type=int, default=100)
    t.add_argument("--max-depth", type=_optional_int, nargs="+", default=[None],
                   help="one value, or several to grid-search ('none' = unlimited)")
    t.add_argument("--min-samples-leaf", type=int, nargs="+", default=[1])
    t.add_argument("--features-per-split", type=int, default=3)
    t.add_argument("--no-bootstrap", action="store_true")

    e = sub.add_parser("explain", help="factual and counterfactual explanations")
    e.add_argument("--model", required=True)
    e.add_argument("--data", help="dataset CSV for --row / --all")
    e.add_argument("--row", type=int, help="0-based data row index")
    e.add_argument("--all", action="store_true", help="explain every row of --data")
    for lane in ("ego-lane", "incom-lane", "outgo-lane"):
        e.add_argument(f"--{lane}", default="none", help="Class:Action of the dominant agent, or none")
    e.add_argument("--tl", default="none", help="Green, Amber, Red or none")
    e.add_argument("--plan", type=_action, default=None)
    e.add_argument("--constraints", default="", help="comma-separated immutable features")
    e.add_argument("--desired", type=_action, default=None)
    e.add_argument("--cf-scope", choices=SCOPES, default="pivot",
                   help="pivot: splits from the pivot down; full: include splits above it")
    e.add_argument("--ci-method", choices=METHODS, default="treepath")
    e.add_argument("--phrasebook", help=f"phrasebook path (default ${PHRASEBOOK_ENV} or shipped)")
    e.add_argument("--format", choices=("text", "json"), default="text")

    v = sub.add_parser("evaluate", help="score explanations on the held-out split")
    v.add_argument("--model", required=True)
    v.add_argument("--data", required=True)
    v.add_argument("--out", help="write the report as JSON")
    v.add_argument("--table", help="write the text table")
    v.add_argument("--test-fraction", type=float, help="default: the value used in training")
    v.add_argument("--seed", type=int, help="split seed; default: the training seed")
    v.add_argument("--ci-method", choices=METHODS, default="treepath")
    v.add_argument("--phrasebook")

    i = sub.add_parser("inspect", help="print tree structure and statistics")
    i.add_argument("--model", required=True)
    i.add_argument("--tree", type=int, help="only this tree index")
    return p


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}")
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object keyed by command name")
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices
    for command, options in cfg.items():
        if command not in subs:
            raise UsageError(f"config: unknown command {command!r}")
        if not isinstance(options, dict):
            raise UsageError(f"config: {command} must map to an object")
        actions = {a.dest: a for a in subs[command]._actions if a.dest != "help"}
        for key, value in options.items():
            dest = key.replace("-", "_")
            if dest not in actions:
                raise UsageError(f"config: unknown option {key!r} for {command}")
            act = actions[dest]
            if act.type is not None and isinstance(value, str):
                value = act.type(value)
            if act.nargs == "+" and not isinstance(value, list):
                value = [value]
            act.default = value
            act.required = False


# -- commands ---------------------------------------------------------------

def cmd_generate_data(args, out):
    weights = np.array([float(w) for w in args.class_counts.split(",")])
    if weights.sum() <= 0:
        raise InvalidConfig("class counts must have a positive sum")
    config = SyntheticConfig(size=args.size, class_proportions=tuple(weights / weights.sum()),
                             noise=args.noise)
    frames = generate_synthetic(config, seed=args.seed)
    write_frames(args.out, frames)
    counts = np.bincount([int(f.ego_action) for f in frames], minlength=len(EgoAction))
    print(f"wrote {len(frames)} frames to {args.out}", file=out)
    for name, c in zip(CLASS_NAMES, counts):
        print(f"  {name:<5} {c}", file=out)


def cmd_train(args, out):
    codebook = default_codebook()
    data = load_dataset(args.data, codebook)
    train, test = split_dataset(data, args.test_fraction, args.seed)
    if args.folds < 2 or args.folds > len(train):
        raise InvalidConfig(f"folds must lie in [2, {len(train)}], got {args.folds}")
    grid = [{"max_depth": d, "min_samples_leaf": m}
            for d, m in itertools.product(args.max_depth, args.min_samples_leaf)]
    forest_params = dict(n_trees=args.n_trees, features_per_split=args.features_per_split,
                         bootstrap=not args.no_bootstrap)
    best, results = cross_validate(train.X, train.y, grid=grid, n_folds=args.folds,
                                   seed=args.seed, **forest_params)
    for res in results:
        print(f"params {json.dumps(res['params'], sort_keys=True)}", file=out)
        for k, a in enumerate(res["fold_accuracy"]):
            print(f"  fold {k + 1:>2}: accuracy {a:.4f}", file=out)
        print(f"  mean accuracy {res['mean_accuracy']:.4f}", file=out)
    model = fit_forest(train.X, train.y, seed=args.seed, **forest_params, **best)
    test_acc = accuracy(model, test.X, test.y) if len(test) else None
    model.training_meta.update({"test_fraction": args.test_fraction, "split_seed": args.seed,
                                "cv_folds": args.folds, "n_train": len(train), "n_test": len(test)})
    model.codebook = codebook.to_dict()
    save_model(model, args.out)
    print(f"best params {json.dumps(best, sort_keys=True)}", file=out)
    if test_acc is not None:
        print(f"held-out accuracy {test_acc:.4f} on {len(test)} rows", file=out)
    print(f"saved model to {args.out}", file=out)
    if args.report:
        report = {"cv": results, "best_params": best, "test_accuracy": test_acc}
        Path(args.report).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n",
                                     encoding="utf-8")


def _inline_vector(args, codebook):
    codes = []
    for name in ("ego_lane", "incom_lane", "outgo_lane"):
        text = getattr(args, name).strip()
        if text.lower() in ("", "none"):
            codes.append(0)
            continue
        try:
            cls, act = text.split(":")
            pair = (AgentClass(cls), AgentAction(act))
        except ValueError:
            raise UsageError(f"--{name.replace('_', '-')}: expected Class:Action, got {text!r}")
        if pair[0] is AgentClass.TRAFFIC_LIGHT:
            raise UsageError("traffic lights go in --tl")
        codes.append(codebook.code(pair))
    tl = args.tl.strip()
    if tl.lower() in ("", "none"):
        codes.append(0)
    else:
        state = tl.split(":")[-1]
        try:
            codes.append(codebook.code((AgentClass.TRAFFIC_LIGHT, AgentAction(state))))
        except ValueError:
            raise UsageError(f"--tl: expected Green, Amber, Red or none, got {tl!r}")
    codes.append(int(args.plan if args.plan is not None else EgoAction.MOVE))
    return np.array(codes, dtype=np.int64)


def _explain_one(model, x, args, phrasebook, constraints, codebook):
    fact = explain_factual(model, x, phrasebook=phrasebook, codebook=codebook,
                           ci_method=args.ci_method)
    try:
        cf = explain_counterfactual(model, x, factual=fact.action, desired=args.desired,
                                    constraints=constraints, phrasebook=phrasebook,
                                    codebook=codebook, scope=args.cf_scope)
        cf_record = {"status": "ok", **cf.to_dict()}
    except NoCounterfactual as exc:
        cf, cf_record = None, {"status": "none", "reason": str(exc)}
    return fact, cf, cf_record


def cmd_explain(args, out):
    model = load_model(args.model)
    codebook = model_codebook(model)
    phrasebook = resolve_phrasebook(args.phrasebook)
    constraints = ConstraintSet.from_names(args.constraints.split(","))
    if args.all or args.row is not None:
        if not args.data:
            raise UsageError("--row and --all need --data")
        data = load_dataset(args.data, codebook)
        if args.all:
            rows = list(range(len(data)))
        elif not 0 <= args.row < len(data):
            raise IndexError(f"row {args.row} out of range for {len(data)} rows")
        else:
            rows = [args.row]
        inputs = [(int(data.frame_ids[r]), data.X[r]) for r in rows]
    else:
        inputs = [(None, _inline_vector(args, codebook))]
    for frame_id, x in inputs:
        fact, cf, cf_record = _explain_one(model, x, args, phrasebook, constraints, codebook)
        features = dict(zip(FEATURE_NAMES, (int(c) for c in x)))
        if args.format == "json":
            base = {"frame_id": frame_id, "features": features}
            print(json.dumps({"type": "factual", **base, **fact.to_dict()}, sort_keys=True), file=out)
            print(json.dumps({"type": "counterfactual", **base, **cf_record}, sort_keys=True), file=out)
            continue
        head = f"frame {frame_id}" if frame_id is not None else "input"
        print(f"{head}: {features}", file=out)
        print(f"Action: {fact.action.token}", file=out)
        flag = " [low confidence]" if fact.low_confidence else ""
        print(f"Factual Explanation: {fact.text} (S={fact.entropy:.2f}){flag}", file=out)
        if cf is None:
            print(f"Counterfactual Explanation: none ({cf_record['reason']})", file=out)
        else:
            print(f"Counterfactual Explanation: {cf.text} (S={cf.entropy:.2f})", file=out)


def cmd_evaluate(args, out):
    model = load_model(args.model)
    codebook = model_codebook(model)
    data = load_dataset(args.data, codebook)
    meta = model.training_meta if is_ensemble(model) else {}
    fraction = args.test_fraction if args.test_fraction is not None else meta.get("test_fraction", 0.2)
    seed = args.seed if args.seed is not None else meta.get("split_seed", 0)
    _, test = split_dataset(data, fraction, seed)
    report = evaluate(model, test, phrasebook=resolve_phrasebook(args.phrasebook),
                      codebook=codebook, ci_method=args.ci_method)
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
    table = report.render_table()
    if args.table:
        Path(args.table).write_text(table, encoding="utf-8")
    print(table, end="", file=out)


def cmd_inspect(args, out):
    model = load_model(args.model)
    trees = model.trees if isinstance(model, RandomForest) else [model]
    if args.tree is not None:
        if not 0 <= args.tree < len(trees):
            raise IndexError(f"tree {args.tree} out of range; model has {len(trees)} tree(s)")
        chosen = [(args.tree, trees[args.tree])]
    else:
        chosen = list(enumerate(trees))
    freq = np.zeros(len(FEATURE_NAMES), dtype=np.int64)
    for k, tree in chosen:
        inner = tree.feature[tree.feature >= 0]
        freq += np.bincount(inner, minlength=len(FEATURE_NAMES))
        ent = [counts_entropy(tree.value[leaf]) for leaf in tree.leaves()] if tree.task == "classification" else []
        print(f"tree {k}: {tree.n_nodes} nodes, {len(tree.leaves())} leaves", file=out)
        print(render_tree(tree), file=out)
        if ent:
            print(f"  leaf entropy min={min(ent):.3f} max={max(ent):.3f} "
                  f"median={float(np.median(ent)):.3f}", file=out)
    print("split frequency: " + ", ".join(f"{n}={c}" for n, c in zip(FEATURE_NAMES, freq)), file=out)


COMMANDS = {"generate-data": cmd_generate_data, "train": cmd_train, "explain": cmd_explain,
            "evaluate": cmd_evaluate, "inspect": cmd_inspect}


def main(argv=None, out=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    out = out or sys.stdout
    parser = _build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"treecommentary: usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"treecommentary: usage error: {exc}", file=sys.stderr)
        return 2
    except DesiredEqualsFactual as exc:
        print(f"treecommentary: {exc}", file=sys.stderr)
        return 1
    except (TreeCommentaryError, OSError, IndexError, ValueError) as exc:
        print(f"treecommentary: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
