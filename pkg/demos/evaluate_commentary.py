"""Score generated commentary against reference texts on a noisy split.

Run with ``python3 demos/evaluate_commentary.py``.
"""
from treecommentary import SyntheticConfig, default_codebook, evaluate, fit_forest, generate_synthetic
from treecommentary.scene import encode_frames, split_dataset

codebook = default_codebook()
frames = generate_synthetic(SyntheticConfig(size=1200, noise=0.15), seed=3)
train, test = split_dataset(encode_frames(frames, codebook), 0.2, seed=3)
forest = fit_forest(train.X, train.y, n_trees=30, seed=3)

report = evaluate(forest, test)
print(report.render_table())
