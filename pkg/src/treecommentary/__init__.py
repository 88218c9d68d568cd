"""Tree-model driving action prediction with factual and counterfactual commentary."""

__version__ = "0.1.0"

from .counterfactual import ConstraintSet, CounterfactualExplanation, explain_counterfactual
from .decoder import Phrasebook, decode_counterfactual, decode_factual, default_phrasebook
from .evaluation import EvalReport, evaluate
from .factual import Cause, FactualExplanation, explain_factual, merge_inequalities, obtain_relevant_causes
from .importance import obtain_ci, shap_bruteforce, shap_treepath
from .metrics import bleu4, rouge_w, tokenize
from .scene import Codebook, Dataset, EgoAction, FeatureVector, default_codebook, load_dataset, split_dataset
from .synthetic import SyntheticConfig, generate_synthetic
from .trees import DecisionTree, RandomForest, fit_forest, fit_tree, load_model, predict, save_model

__all__ = [
    "Cause", "Codebook", "ConstraintSet", "CounterfactualExplanation", "Dataset", "DecisionTree",
    "EgoAction", "EvalReport", "FactualExplanation", "FeatureVector", "Phrasebook", "RandomForest",
    "SyntheticConfig", "bleu4", "decode_counterfactual", "decode_factual", "default_codebook",
    "default_phrasebook", "evaluate", "explain_counterfactual", "explain_factual", "fit_forest",
    "fit_tree", "generate_synthetic", "load_dataset", "load_model", "merge_inequalities",
    "obtain_ci", "obtain_relevant_causes", "predict", "rouge_w", "save_model", "shap_bruteforce",
    "shap_treepath", "split_dataset", "tokenize",
]
