"""AI-generated text detection toolkit.

Pipeline: corpus loading/splitting -> deterministic preprocessing ->
count / TF-IDF / stylometric / dense features -> gradient-boosted trees or a
linear SVM -> confusion-matrix metrics, with versioned model persistence and
a CLI. Label 0 is human-written, label 1 is AI-generated.
"""

from .corpus import (
    Corpus,
    Document,
    GeneratorParams,
    SplitSpec,
    generate_synthetic_corpus,
    load_corpus,
    save_corpus,
    stratified_split,
)
from .errors import AitdError, CorpusError, FeatureError, ModelFormatError, TrainingError
from .features import (
    FeatureSpec,
    StyloVector,
    Vocabulary,
    extract_stylo,
    fit_vocabulary,
    load_dense_features,
    term_frequency_report,
    transform_counts,
    transform_tfidf,
)
from .gbdt import GbdtModel, GbdtParams, predict_label_gbdt, predict_proba_gbdt, train_gbdt
from .kernels import BACKEND, NUMBA_ACTIVE
from .metrics import ConfusionMatrix, EvalReport, compare_models, confusion, report
from .model_store import load_model, save_model
from .preprocess import PreprocessConfig, TokenSequence, normalize, remove_stopwords, tokenize
from .sparse import SparseMatrix
from .svm import SvmModel, SvmParams, decision_function, predict_label_svm, train_svm

__version__ = "0.1.0"

__all__ = [
    "AitdError",
    "BACKEND",
    "ConfusionMatrix",
    "Corpus",
    "CorpusError",
    "Document",
    "EvalReport",
    "FeatureError",
    "FeatureSpec",
    "GbdtModel",
    "GbdtParams",
    "GeneratorParams",
    "ModelFormatError",
    "NUMBA_ACTIVE",
    "PreprocessConfig",
    "SparseMatrix",
    "SplitSpec",
    "StyloVector",
    "SvmModel",
    "SvmParams",
    "TokenSequence",
    "TrainingError",
    "Vocabulary",
    "compare_models",
    "confusion",
    "decision_function",
    "extract_stylo",
    "fit_vocabulary",
    "generate_synthetic_corpus",
    "load_corpus",
    "load_dense_features",
    "load_model",
    "normalize",
    "predict_label_gbdt",
    "predict_label_svm",
    "predict_proba_gbdt",
    "remove_stopwords",
    "report",
    "save_corpus",
    "save_model",
    "stratified_split",
    "term_frequency_report",
    "tokenize",
    "train_gbdt",
    "train_svm",
    "transform_counts",
    "transform_tfidf",
]
