import itertools

import numpy as np
import pytest

from treecommentary.scene import default_codebook, encode_frames, split_dataset
from treecommentary.synthetic import SyntheticConfig, generate_synthetic
from treecommentary.trees import DecisionTree, fit_forest

CODEBOOK = default_codebook()


def feature_grid(codebook=CODEBOOK):
    """Every point of the ordinal feature grid (19 * 19 * 19 * 4 * 4 rows)."""
    return np.array(list(itertools.product(*codebook.feature_domains())), dtype=np.int64)


def make_tree(feature, threshold, left, right, counts):
    return DecisionTree(feature, threshold, left, right, counts)


@pytest.fixture(scope="session")
def codebook():
    return CODEBOOK


@pytest.fixture(scope="session")
def grid():
    return feature_grid()


@pytest.fixture(scope="session")
def synthetic_split():
    ds = encode_frames(generate_synthetic(SyntheticConfig(), seed=0), CODEBOOK)
    return split_dataset(ds, 0.2, seed=0)


@pytest.fixture(scope="session")
def forest(synthetic_split):
    train, _ = synthetic_split
    return fit_forest(train.X, train.y, n_trees=30, seed=0)


@pytest.fixture(scope="session")
def small_split():
    ds = encode_frames(generate_synthetic(SyntheticConfig(size=400, noise=0.2), seed=3), CODEBOOK)
    return split_dataset(ds, 0.25, seed=1)


@pytest.fixture(scope="session")
def small_forest(small_split):
    train, _ = small_split
    return fit_forest(train.X, train.y, n_trees=8, max_depth=6, seed=2)


@pytest.fixture
def blocked_sibling_tree():
    """Root splits on TL; its EgoPlan child holds the factual move leaf beside an rlc leaf.

    Node ids: 0 TL <= 19.5, 1 EgoPlan <= 1.5, 2 move leaf,
    3 rlc leaf, 4 EgoLane <= 0.5, 5 move leaf, 6 stop leaf (rightmost).
    """
    feature = [3, 4, -1, -1, 0, -1, -1]
    threshold = [19.5, 1.5, np.nan, np.nan, 0.5, np.nan, np.nan]
    left = [1, 2, -1, -1, 5, -1, -1]
    right = [4, 3, -1, -1, 6, -1, -1]
    counts = [[6, 8, 4, 0], [0, 5, 4, 0], [0, 5, 0, 0], [0, 0, 4, 0],
              [6, 3, 0, 0], [0, 3, 0, 0], [6, 0, 0, 0]]
    return make_tree(feature, threshold, left, right, counts)


ACCEPTANCE: list[str] = []


def record_acceptance(key: str, title: str, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] {key} {title}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1][2:])):
            terminalreporter.write_line(line)
