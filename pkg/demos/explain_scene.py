"""Train a forest on synthetic scenes and explain a red-light stop.

Run with ``python3 demos/explain_scene.py``.
"""
import numpy as np

from treecommentary import (
    ConstraintSet,
    EgoAction,
    SyntheticConfig,
    default_codebook,
    explain_counterfactual,
    explain_factual,
    fit_forest,
    generate_synthetic,
)
from treecommentary.scene import AgentAction, AgentClass, encode_frames, split_dataset

codebook = default_codebook()
data = encode_frames(generate_synthetic(SyntheticConfig(), seed=0), codebook)
train, test = split_dataset(data, 0.2, seed=0)
forest = fit_forest(train.X, train.y, n_trees=50, seed=0)

# stopped vehicle ahead, red light, plan is to keep moving
x = np.array([
    codebook.code((AgentClass.VEHICLE, AgentAction.STOPPED)), 0, 0,
    codebook.code((AgentClass.TRAFFIC_LIGHT, AgentAction.RED)), int(EgoAction.MOVE),
])

fact = explain_factual(forest, x)
print("Action:", fact.action.token)
print("Factual Explanation:", fact.text, f"(S={fact.entropy:.2f})")
for cause in fact.causes:
    print(f"  {cause.feature:<10} {cause.interval():<14} CI={cause.ci:+.3f}")

keep_plan = ConstraintSet.from_names(["EgoPlan"])
cf = explain_counterfactual(forest, x, desired=EgoAction.MOVE, constraints=keep_plan)
print("Counterfactual Explanation:", cf.text, f"(S={cf.entropy:.2f})")
for cond in cf.conditions:
    print(f"  {cond.feature:<10} {cond.interval()}")
