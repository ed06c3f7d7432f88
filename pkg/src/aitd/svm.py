"""Linear SVM trained by Pegasos-style stochastic subgradient descent.

Objective on labels y in {-1,+1} (0 maps to -1, 1 to +1):

    f(w, b) = (lam/2) * ||w||^2 + (1/n) * sum_i max(0, 1 - y_i (w.x_i + b))

One pass applies, per sampled row at global step t, the subgradient step
w <- (1 - 1/t) w + [margin violated] (1/(lam t)) y x, followed by projection
onto the ball of radius 1/sqrt(lam), where the optimum is guaranteed to lie.
The bias is an unregularized intercept moved by its hinge subgradient with
step 1/t. Visit order is a seeded splitmix64 shuffle per epoch, and the
returned weights/bias are the averages of the post-update iterates, so
training is fully deterministic given (X, y, hyperparams, seed).

Standardization: when a model is fitted with designated standardized columns
(the stylometric block, or every column for dense embeddings), training sees
(x - mean)/std for those columns and the stats are stored in the model;
decision_function applies them by folding into the weights, which is exact
because the transform is affine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import FeatureError, TrainingError
from .features import FeatureSpec, Vocabulary
from .preprocess import PreprocessConfig
from .prng import SplitMix64
from .sparse import SparseMatrix


@dataclass(frozen=True)
class SvmParams:
    lambda_reg: float = 1e-4
    epochs: int = 20

    def __post_init__(self):
        if not self.lambda_reg > 0:
            raise TrainingError("lambda_reg must be > 0")
        if self.epochs < 1:
            raise TrainingError("epochs must be >= 1")


@dataclass
class SvmModel:
    params: SvmParams
    weights: np.ndarray  # float64, one per feature column (standardized space)
    bias: float
    std_cols: np.ndarray  # int64 column indices that are standardized
    std_mean: np.ndarray  # float64 aligned with std_cols
    std_std: np.ndarray  # float64 aligned with std_cols, degenerate columns get 1.0
    seed: int = 0
    vocabulary: Vocabulary | None = None
    feature_spec: FeatureSpec | None = None
    preprocess_config: PreprocessConfig | None = None
    stopwords: tuple = ()
    metadata: dict = field(default_factory=dict)

    model_kind = "svm"

    @property
    def n_features(self) -> int:
        return int(self.weights.shape[0])


def _ensure_matrix(X) -> SparseMatrix:
    if isinstance(X, SparseMatrix):
        return X
    return SparseMatrix.from_dense(np.asarray(X, dtype=np.float64))


def standardization_stats(X: SparseMatrix, cols: np.ndarray):
    """Per-column mean and population std over the given columns; columns
    with zero variance get std 1.0 so standardizing them is a pure shift."""
    dense = X.to_dense()[:, cols] if cols.size else np.zeros((X.n_rows, 0))
    mean = dense.mean(axis=0) if X.n_rows else np.zeros(cols.size)
    std = dense.std(axis=0) if X.n_rows else np.ones(cols.size)
    std = np.where(std > 0.0, std, 1.0)
    return mean.astype(np.float64), std.astype(np.float64)


def standardize_matrix(X: SparseMatrix, cols, mean, std) -> SparseMatrix:
    """Materialize (x - mean)/std for the designated columns (explicit entries
    for every row, since an implicit zero standardizes to -mean/std)."""
    cols = np.asarray(cols, dtype=np.int64)
    if cols.size == 0:
        return X
    col_stat = {int(c): (float(m), float(s)) for c, m, s in zip(cols, mean, std)}
    rows = []
    for r in range(X.n_rows):
        sl = slice(X.indptr[r], X.indptr[r + 1])
        entries = dict(zip(X.indices[sl].tolist(), X.values[sl].tolist()))
        for c, (m, s) in col_stat.items():
            entries[c] = (entries.get(c, 0.0) - m) / s
        rows.append(sorted(entries.items()))
    return SparseMatrix.from_rows(rows, n_cols=X.n_cols)


def train_svm(
    X,
    y,
    params: SvmParams = SvmParams(),
    seed: int = 0,
    standardize_cols=None,
) -> SvmModel:
    X = _ensure_matrix(X)
    y = np.asarray(y)
    if y.shape != (X.n_rows,):
        raise TrainingError(f"expected {X.n_rows} labels, got shape {y.shape}")
    if X.n_rows < 2:
        raise TrainingError("training needs at least 2 rows")
    if not np.all(np.isin(y, (0, 1))):
        raise TrainingError("labels must be 0 or 1")
    if y.min() == y.max():
        raise TrainingError("training labels contain a single class")
    if not np.all(np.isfinite(X.values)):
        raise TrainingError("feature matrix contains non-finite values")

    std_cols = np.asarray(
        [] if standardize_cols is None else standardize_cols, dtype=np.int64
    )
    std_mean, std_std = standardization_stats(X, std_cols)
    X_train = standardize_matrix(X, std_cols, std_mean, std_std)

    y_signed = np.where(y == 1, 1.0, -1.0)
    rng = SplitMix64(seed)
    order = np.empty(params.epochs * X.n_rows, dtype=np.int64)
    for e in range(params.epochs):
        idx = list(range(X.n_rows))
        rng.shuffle(idx)
        order[e * X.n_rows : (e + 1) * X.n_rows] = idx

    w = np.zeros(X.n_cols, dtype=np.float64)
    w_sum = np.zeros(X.n_cols, dtype=np.float64)
    _, b_sum = kernels.pegasos(
        X_train.indptr,
        X_train.indices,
        X_train.values,
        y_signed,
        order,
        params.lambda_reg,
        w,
        w_sum,
    )
    n_steps = order.shape[0]
    return SvmModel(
        params=params,
        weights=w_sum / n_steps,
        bias=float(b_sum / n_steps),
        std_cols=std_cols,
        std_mean=std_mean,
        std_std=std_std,
        seed=seed,
    )


def _folded_weights(model: SvmModel):
    """Fold the stored standardization into (w_eff, b_eff) so the decision on
    raw features equals w . x_std + b exactly (affine transform)."""
    w_eff = model.weights.copy()
    b_eff = model.bias
    for c, m, s in zip(model.std_cols, model.std_mean, model.std_std):
        w_eff[c] = model.weights[c] / s
        b_eff -= model.weights[c] * m / s
    return w_eff, b_eff


def decision_function(model: SvmModel, X) -> np.ndarray:
    """w . x + b per row, with stored standardization applied first."""
    X = _ensure_matrix(X)
    if X.n_cols != model.n_features:
        raise FeatureError(
            f"feature dimension mismatch: matrix has {X.n_cols} columns, "
            f"model expects {model.n_features}"
        )
    w_eff, b_eff = _folded_weights(model)
    out = np.empty(X.n_rows, dtype=np.float64)
    kernels.csr_row_dots(X.indptr, X.indices, X.values, w_eff, out)
    return out + b_eff


def predict_label_svm(model: SvmModel, X, threshold: float = 0.0) -> np.ndarray:
    """Label 1 iff the decision value >= threshold (the boundary belongs to
    class 1)."""
    return (decision_function(model, X) >= threshold).astype(np.int64)


def svm_objective(weights: np.ndarray, bias: float, X, y, lambda_reg: float) -> float:
    """Regularized hinge objective f(w, b); the zero model scores exactly 1.0."""
    X = _ensure_matrix(X)
    y_signed = np.where(np.asarray(y) == 1, 1.0, -1.0)
    margins = np.empty(X.n_rows, dtype=np.float64)
    kernels.csr_row_dots(X.indptr, X.indices, X.values, np.asarray(weights, float), margins)
    hinge = np.maximum(0.0, 1.0 - y_signed * (margins + bias))
    return float(0.5 * lambda_reg * np.dot(weights, weights) + np.mean(hinge))


def top_weight_features(model: SvmModel, k: int = 20) -> list[tuple[int, float]]:
    """(column, weight) pairs sorted by |weight| descending, column ascending."""
    order = sorted(range(model.n_features), key=lambda j: (-abs(model.weights[j]), j))
    return [(j, float(model.weights[j])) for j in order[:k]]
