"""Second-order gradient-boosted trees for binary classification.

Logistic loss with L2-penalized leaf weights. Each round fits one tree to the
gradient/hessian statistics g_i = sigma(score_i) - y_i, h_i = sigma(1-sigma),
using exact greedy split search: candidate thresholds at midpoints of
consecutive distinct sorted feature values,

    gain = 0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)) - gamma,

tie-break lowest feature index then lowest threshold, leaf weight
-G/(H+lam), rows routed left when value <= threshold. Sparse columns are
scanned over their nonzeros with the implicit zeros bucketed once, which is
exactly equivalent to densifying. If the root finds no positive-gain split
the round still emits the single-leaf Newton step, so every round makes
progress. No row or column subsampling: training is a pure function of
(X, y, hyperparams), and the seed is recorded for provenance only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import FeatureError, TrainingError
from .features import FeatureSpec, Vocabulary
from .preprocess import PreprocessConfig
from .sparse import SparseMatrix


@dataclass(frozen=True)
class GbdtParams:
    """Training hyperparameters. min_child_hessian rejects any split whose
    left or right hessian sum falls below it (both children must carry that
    much curvature)."""

    n_rounds: int = 100
    max_depth: int = 3
    learning_rate: float = 0.3
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_hessian: float = 1e-3

    def __post_init__(self):
        if self.n_rounds < 0:
            raise TrainingError("n_rounds must be >= 0")
        if self.max_depth < 1:
            raise TrainingError("max_depth must be >= 1")
        if not self.learning_rate > 0:
            raise TrainingError("learning_rate must be > 0")
        if self.reg_lambda < 0 or self.gamma < 0 or self.min_child_hessian < 0:
            raise TrainingError("reg_lambda, gamma and min_child_hessian must be >= 0")


@dataclass
class GbdtModel:
    params: GbdtParams
    base_score: float
    n_features: int
    node_feature: np.ndarray  # int64; -1 marks a leaf
    node_threshold: np.ndarray  # float64
    node_left: np.ndarray  # int64; -1 for leaves
    node_right: np.ndarray  # int64
    node_weight: np.ndarray  # float64; Newton leaf weights, 0.0 on internals
    node_gain: np.ndarray  # float64; split gain, 0.0 on leaves
    tree_roots: np.ndarray  # int64, one entry per completed round
    train_logloss: list[float]  # index 0 is the pre-boosting base loss
    seed: int = 0
    vocabulary: Vocabulary | None = None
    feature_spec: FeatureSpec | None = None
    preprocess_config: PreprocessConfig | None = None
    stopwords: tuple = ()
    metadata: dict = field(default_factory=dict)

    model_kind = "gbdt"

    @property
    def n_trees(self) -> int:
        return int(self.tree_roots.shape[0])


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _logloss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, 1e-15, 1.0 - 1e-15)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _ensure_matrix(X) -> SparseMatrix:
    if isinstance(X, SparseMatrix):
        return X
    return SparseMatrix.from_dense(np.asarray(X, dtype=np.float64))


def _check_labels(y, n_rows: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n_rows,):
        raise TrainingError(f"expected {n_rows} labels, got shape {y.shape}")
    if n_rows < 2:
        raise TrainingError("training needs at least 2 rows")
    if not np.all(np.isin(y, (0, 1))):
        raise TrainingError("labels must be 0 or 1")
    y = y.astype(np.float64)
    if y.min() == y.max():
        raise TrainingError("training labels contain a single class")
    return y


class _TreeBuilder:
    def __init__(self, X: SparseMatrix, params: GbdtParams):
        self.params = params
        self.col_indptr, self.col_rows, self.col_vals = X.to_columnar()
        n = X.n_rows
        self.in_node = np.zeros(n, dtype=np.bool_)
        self.buf_val = np.empty(n, dtype=np.float64)
        self.buf_g = np.empty(n, dtype=np.float64)
        self.buf_h = np.empty(n, dtype=np.float64)
        self.val_of = np.zeros(n, dtype=np.float64)
        self.left_buf = np.empty(n, dtype=np.int64)
        self.right_buf = np.empty(n, dtype=np.int64)
        self.node_feature: list[int] = []
        self.node_threshold: list[float] = []
        self.node_left: list[int] = []
        self.node_right: list[int] = []
        self.node_weight: list[float] = []
        self.node_gain: list[float] = []

    def _add_node(self, feat, thr, weight, gain) -> int:
        self.node_feature.append(feat)
        self.node_threshold.append(thr)
        self.node_left.append(-1)
        self.node_right.append(-1)
        self.node_weight.append(weight)
        self.node_gain.append(gain)
        return len(self.node_feature) - 1

    def grow(self, rows: np.ndarray, depth: int, g, h, scores) -> int:
        p = self.params
        g_node = float(np.sum(g[rows]))
        h_node = float(np.sum(h[rows]))
        weight = -g_node / (h_node + p.reg_lambda)
        if depth < p.max_depth and rows.shape[0] >= 2:
            feat, thr, gain = kernels.gbdt_best_split(
                self.col_indptr,
                self.col_rows,
                self.col_vals,
                rows,
                g,
                h,
                g_node,
                h_node,
                p.reg_lambda,
                p.gamma,
                p.min_child_hessian,
                self.in_node,
                self.buf_val,
                self.buf_g,
                self.buf_h,
            )
            if feat >= 0:
                nl, nr = kernels.gbdt_partition(
                    self.col_rows,
                    self.col_vals,
                    self.col_indptr[feat],
                    self.col_indptr[feat + 1],
                    rows,
                    thr,
                    self.val_of,
                    self.left_buf,
                    self.right_buf,
                )
                left_rows = self.left_buf[:nl].copy()
                right_rows = self.right_buf[:nr].copy()
                # Recompute the winning gain from fixed-order child sums so the
                # stored value does not depend on the kernel backend's
                # summation order (the kernel's gain decided the argmax only).
                gl = float(np.sum(g[left_rows]))
                hl = float(np.sum(h[left_rows]))
                gr = g_node - gl
                hr = h_node - hl
                lam = p.reg_lambda
                gain = (
                    0.5
                    * (
                        gl * gl / (hl + lam)
                        + gr * gr / (hr + lam)
                        - g_node * g_node / (h_node + lam)
                    )
                    - p.gamma
                )
                node = self._add_node(int(feat), float(thr), 0.0, float(gain))
                self.node_left[node] = self.grow(left_rows, depth + 1, g, h, scores)
                self.node_right[node] = self.grow(right_rows, depth + 1, g, h, scores)
                return node
        scores[rows] += p.learning_rate * weight
        return self._add_node(-1, 0.0, weight, 0.0)


def train_gbdt(X, y, params: GbdtParams = GbdtParams(), seed: int = 0) -> GbdtModel:
    X = _ensure_matrix(X)
    y = _check_labels(y, X.n_rows)
    if not np.all(np.isfinite(X.values)):
        raise TrainingError("feature matrix contains non-finite values")
    p_bar = float(np.mean(y))
    base_score = float(np.log(p_bar / (1.0 - p_bar)))
    scores = np.full(X.n_rows, base_score, dtype=np.float64)
    builder = _TreeBuilder(X, params)
    roots = []
    losses = [_logloss(y, _sigmoid(scores))]
    all_rows = np.arange(X.n_rows, dtype=np.int64)
    for _ in range(params.n_rounds):
        prob = _sigmoid(scores)
        g = prob - y
        h = prob * (1.0 - prob)
        roots.append(builder.grow(all_rows, 0, g, h, scores))
        losses.append(_logloss(y, _sigmoid(scores)))
    return GbdtModel(
        params=params,
        base_score=base_score,
        n_features=X.n_cols,
        node_feature=np.asarray(builder.node_feature, dtype=np.int64),
        node_threshold=np.asarray(builder.node_threshold, dtype=np.float64),
        node_left=np.asarray(builder.node_left, dtype=np.int64),
        node_right=np.asarray(builder.node_right, dtype=np.int64),
        node_weight=np.asarray(builder.node_weight, dtype=np.float64),
        node_gain=np.asarray(builder.node_gain, dtype=np.float64),
        tree_roots=np.asarray(roots, dtype=np.int64),
        train_logloss=losses,
        seed=seed,
    )


def predict_raw_gbdt(model: GbdtModel, X) -> np.ndarray:
    """Raw additive scores base + lr * sum(tree outputs), before the sigmoid."""
    X = _ensure_matrix(X)
    if X.n_cols != model.n_features:
        raise FeatureError(
            f"feature dimension mismatch: matrix has {X.n_cols} columns, "
            f"model expects {model.n_features}"
        )
    out = np.empty(X.n_rows, dtype=np.float64)
    kernels.gbdt_predict_raw(
        X.indptr,
        X.indices,
        X.values,
        model.node_feature,
        model.node_threshold,
        model.node_left,
        model.node_right,
        model.node_weight,
        model.tree_roots,
        model.base_score,
        model.params.learning_rate,
        model.n_features,
        out,
    )
    return out


def predict_proba_gbdt(model: GbdtModel, X) -> np.ndarray:
    """Per-row probability of class 1, clamped into the open interval (0, 1)."""
    p = _sigmoid(predict_raw_gbdt(model, X))
    return np.clip(p, 1e-15, 1.0 - 1e-15)


def predict_label_gbdt(model: GbdtModel, X, threshold: float = 0.5) -> np.ndarray:
    """Label 1 iff probability >= threshold."""
    return (predict_proba_gbdt(model, X) >= threshold).astype(np.int64)


def feature_gain_totals(model: GbdtModel) -> np.ndarray:
    """Total split gain accumulated per feature, for inspection."""
    totals = np.zeros(model.n_features, dtype=np.float64)
    internal = model.node_feature >= 0
    np.add.at(totals, model.node_feature[internal], model.node_gain[internal])
    return totals
