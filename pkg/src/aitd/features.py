"""Feature extraction: vocabulary fitting, count/TF-IDF matrices, stylometric
vectors, externally supplied dense embeddings, and term-frequency reports.

Column layout rules:
  - vocabulary columns are the lexicographically sorted terms;
  - combined kinds (counts+stylo, tfidf+stylo) append the 8 stylometric
    columns after the vocabulary columns;
  - TF-IDF uses tf = raw count and idf(t) = ln((1+N)/(1+df_t)) + 1, then each
    nonzero row is L2-normalized (so idf >= 1 always and a term present in
    every fitted document gets idf exactly 1).
"""

from __future__ import annotations

import json
import math
import os
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import kernels
from .corpus import Corpus, Document
from .errors import FeatureError
from .preprocess import PreprocessConfig, TokenSequence, normalize, preprocess_text, tokenize
from .sparse import SparseMatrix, hstack

KINDS = ("counts", "tfidf", "stylo", "counts+stylo", "tfidf+stylo", "dense")

STYLO_FIELDS = (
    "avg_word_len",
    "avg_sentence_len",
    "type_token_ratio",
    "hapax_ratio",
    "stopword_ratio",
    "punct_per_token",
    "digit_token_ratio",
    "uppercase_char_ratio",
)


@dataclass(frozen=True)
class FeatureSpec:
    kind: str = "counts"
    min_df: int = 1
    max_vocab: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FeatureError(f"unknown feature kind {self.kind!r}, expected one of {KINDS}")
        if self.min_df < 1:
            raise FeatureError(f"min_df must be >= 1, got {self.min_df}")
        if self.max_vocab is not None and self.max_vocab < 1:
            raise FeatureError(f"max_vocab must be >= 1, got {self.max_vocab}")

    @property
    def uses_vocab(self) -> bool:
        return self.kind in ("counts", "tfidf", "counts+stylo", "tfidf+stylo")

    @property
    def uses_stylo(self) -> bool:
        return self.kind in ("stylo", "counts+stylo", "tfidf+stylo")

    @property
    def uses_tfidf(self) -> bool:
        return self.kind in ("tfidf", "tfidf+stylo")


@dataclass
class Vocabulary:
    terms: list[str]
    doc_freq: np.ndarray  # int64, aligned with terms
    n_docs_fitted: int

    def __post_init__(self):
        self.term_to_index = {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)


def fit_vocabulary(token_seqs: list[TokenSequence], spec: FeatureSpec) -> Vocabulary:
    """All terms with document frequency >= min_df; when max_vocab caps the
    size, survivors are chosen by (doc_freq descending, term ascending) and
    the kept set is re-sorted lexicographically."""
    if not token_seqs:
        raise FeatureError("cannot fit a vocabulary on an empty corpus")
    df: Counter = Counter()
    for seq in token_seqs:
        df.update(set(seq.tokens))
    kept = [(t, c) for t, c in df.items() if c >= spec.min_df]
    if not kept:
        raise FeatureError(
            f"vocabulary is empty after filtering at min_df={spec.min_df}; lower min_df"
        )
    if spec.max_vocab is not None and len(kept) > spec.max_vocab:
        kept.sort(key=lambda tc: (-tc[1], tc[0]))
        kept = kept[: spec.max_vocab]
    kept.sort(key=lambda tc: tc[0])
    return Vocabulary(
        terms=[t for t, _ in kept],
        doc_freq=np.asarray([c for _, c in kept], dtype=np.int64),
        n_docs_fitted=len(token_seqs),
    )


def transform_counts(token_seqs: list[TokenSequence], vocab: Vocabulary) -> SparseMatrix:
    """Cell (d, t) = occurrences of term t in document d; out-of-vocabulary
    tokens are ignored and empty/all-OOV documents produce all-zero rows."""
    t2i = vocab.term_to_index
    rows = []
    for seq in token_seqs:
        counts: Counter = Counter()
        for tok in seq.tokens:
            idx = t2i.get(tok)
            if idx is not None:
                counts[idx] += 1
        rows.append(sorted((c, float(v)) for c, v in counts.items()))
    return SparseMatrix.from_rows(rows, n_cols=len(vocab))


def idf_vector(vocab: Vocabulary) -> np.ndarray:
    n = vocab.n_docs_fitted
    return np.log((1.0 + n) / (1.0 + vocab.doc_freq.astype(np.float64))) + 1.0


def transform_tfidf(counts: SparseMatrix, vocab: Vocabulary) -> SparseMatrix:
    if counts.n_cols != len(vocab):
        raise FeatureError(
            f"count matrix has {counts.n_cols} columns but the vocabulary has {len(vocab)} terms"
        )
    out = counts.copy()
    out.values *= idf_vector(vocab)[out.indices]
    kernels.csr_l2_normalize(out.indptr, out.values)
    return out


# ---------------------------------------------------------------------------
# Stylometric features
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StyloVector:
    avg_word_len: float
    avg_sentence_len: float
    type_token_ratio: float
    hapax_ratio: float
    stopword_ratio: float
    punct_per_token: float
    digit_token_ratio: float
    uppercase_char_ratio: float

    def to_array(self) -> np.ndarray:
        return np.asarray([getattr(self, f) for f in STYLO_FIELDS], dtype=np.float64)


def _is_word_token(tok: str) -> bool:
    # Punctuation-run tokens contain no letters or digits by construction.
    return any(c.isalnum() for c in tok)


def extract_stylo(doc: Document, seq: TokenSequence, stopwords: frozenset | set) -> StyloVector:
    """8 style measurements for one document. ``seq`` must come from the
    document's normalized text tokenized with punctuation tokens retained.
    Empty documents get the all-zero vector; a nonempty document without
    terminal punctuation counts as one sentence."""
    word_tokens = [t for t in seq.tokens if _is_word_token(t)]
    n_tokens = len(seq.tokens)
    n_words = len(word_tokens)
    if n_tokens == 0:
        return StyloVector(*([0.0] * len(STYLO_FIELDS)))

    bounds = seq.sentence_boundaries
    n_sent = len(bounds) + (1 if n_tokens > (bounds[-1] if bounds else 0) else 0)

    if n_words:
        avg_word_len = sum(len(t) for t in word_tokens) / n_words
        counts = Counter(word_tokens)
        type_token_ratio = len(counts) / n_words
        hapax_ratio = sum(1 for c in counts.values() if c == 1) / n_words
        stopword_ratio = sum(1 for t in word_tokens if t in stopwords) / n_words
        digit_token_ratio = sum(1 for t in word_tokens if t.isdigit()) / n_words
        avg_sentence_len = n_words / n_sent
    else:
        avg_word_len = type_token_ratio = hapax_ratio = 0.0
        stopword_ratio = digit_token_ratio = avg_sentence_len = 0.0

    punct_per_token = (n_tokens - n_words) / n_tokens

    letters = [c for c in doc.text if c.isalpha()]
    uppercase_char_ratio = (
        sum(1 for c in letters if c.isupper()) / len(letters) if letters else 0.0
    )
    return StyloVector(
        avg_word_len=avg_word_len,
        avg_sentence_len=avg_sentence_len,
        type_token_ratio=type_token_ratio,
        hapax_ratio=hapax_ratio,
        stopword_ratio=stopword_ratio,
        punct_per_token=punct_per_token,
        digit_token_ratio=digit_token_ratio,
        uppercase_char_ratio=uppercase_char_ratio,
    )


def stylo_matrix(corpus: Corpus, config: PreprocessConfig, stopwords: frozenset | set) -> SparseMatrix:
    """Stylometric rows for a whole corpus. Re-tokenizes each document with
    punctuation tokens retained, as the extractor requires."""
    punct_cfg = PreprocessConfig(
        lowercase=config.lowercase,
        strip_punct_tokens=False,
        stopword_list=config.stopword_list,
    )
    rows = []
    for doc in corpus:
        seq = tokenize(normalize(doc.text, punct_cfg), punct_cfg, doc_id=doc.id)
        vec = extract_stylo(doc, seq, stopwords).to_array()
        rows.append([(j, float(v)) for j, v in enumerate(vec)])
    return SparseMatrix.from_rows(rows, n_cols=len(STYLO_FIELDS))


# ---------------------------------------------------------------------------
# Dense embeddings (integration boundary for out-of-scope encoders)
# ---------------------------------------------------------------------------

_DENSE_KEYS = {"id", "vec", "label"}


def load_dense_features(path: str):
    """JSONL rows ``{"id": str, "vec": [floats], "label": 0|1 optional}``.
    Returns (matrix, ids, labels) with labels None unless every row carries
    one. All vectors must share one length and contain only finite values."""
    if not os.path.exists(path):
        raise FeatureError(f"dense feature file not found: {path}")
    ids: list[str] = []
    vecs: list[list[float]] = []
    labels: list[int] = []
    n_labeled = 0
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FeatureError(f"line {line_no}: invalid JSON ({exc.msg})")
            if not isinstance(obj, dict) or set(obj) - _DENSE_KEYS:
                raise FeatureError(f"line {line_no}: expected keys id, vec, optional label")
            if not isinstance(obj.get("id"), str):
                raise FeatureError(f"line {line_no}: 'id' must be a string")
            vec = obj.get("vec")
            if not isinstance(vec, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in vec
            ):
                raise FeatureError(f"line {line_no}: 'vec' must be a list of numbers")
            if not all(math.isfinite(float(v)) for v in vec):
                raise FeatureError(f"line {line_no}: non-finite value in 'vec'")
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise FeatureError(
                    f"line {line_no}: vector length {len(vec)} differs from {dim}"
                )
            label = obj.get("label")
            if label is not None:
                if isinstance(label, bool) or label not in (0, 1):
                    raise FeatureError(f"line {line_no}: label must be 0 or 1")
                labels.append(label)
                n_labeled += 1
            ids.append(obj["id"])
            vecs.append([float(v) for v in vec])
    if n_labeled not in (0, len(ids)):
        raise FeatureError("dense feature file mixes labeled and unlabeled rows")
    matrix = np.asarray(vecs, dtype=np.float64).reshape(len(ids), dim or 0)
    return matrix, ids, (labels if n_labeled and n_labeled == len(ids) else None)


# ---------------------------------------------------------------------------
# Corpus-level assembly
# ---------------------------------------------------------------------------


def featurize_corpus(
    corpus: Corpus,
    config: PreprocessConfig,
    stopwords: frozenset | set,
    vocab: Vocabulary | None,
    spec: FeatureSpec,
) -> SparseMatrix:
    """Build the feature matrix for a corpus against an already fitted
    vocabulary (None for the stylo-only kind)."""
    if spec.kind == "dense":
        raise FeatureError("dense features come from a file, not from corpus text")
    blocks = []
    if spec.uses_vocab:
        if vocab is None:
            raise FeatureError(f"feature kind {spec.kind!r} needs a fitted vocabulary")
        seqs = [preprocess_text(doc.text, config, doc_id=doc.id) for doc in corpus]
        mat = transform_counts(seqs, vocab)
        if spec.uses_tfidf:
            mat = transform_tfidf(mat, vocab)
        blocks.append(mat)
    if spec.uses_stylo:
        blocks.append(stylo_matrix(corpus, config, stopwords))
    out = blocks[0]
    for extra in blocks[1:]:
        out = hstack(out, extra)
    return out


def fit_featurizer(
    corpus: Corpus,
    config: PreprocessConfig,
    stopwords: frozenset | set,
    spec: FeatureSpec,
):
    """Fit the vocabulary (when the kind uses one) on the given corpus and
    return (vocab_or_None, feature matrix)."""
    vocab = None
    if spec.uses_vocab:
        seqs = [preprocess_text(doc.text, config, doc_id=doc.id) for doc in corpus]
        vocab = fit_vocabulary(seqs, spec)
    return vocab, featurize_corpus(corpus, config, stopwords, vocab, spec)


def feature_names(vocab: Vocabulary | None, spec: FeatureSpec, n_dense: int = 0) -> list[str]:
    """Column names in matrix order, for model inspection."""
    if spec.kind == "dense":
        return [f"dense_{i:04d}" for i in range(n_dense)]
    names: list[str] = []
    if spec.uses_vocab and vocab is not None:
        names.extend(vocab.terms)
    if spec.uses_stylo:
        names.extend(STYLO_FIELDS)
    return names


# ---------------------------------------------------------------------------
# Term-frequency report
# ---------------------------------------------------------------------------


def term_frequency_report(
    corpus: Corpus, config: PreprocessConfig, top_k: int
) -> dict:
    """Top-k terms by total occurrence count (ties broken lexicographically),
    overall and per label, as the JSON-ready dict
    {"overall": [[term, count], ...], "by_label": {"0": [...], "1": [...]}}."""
    if top_k < 1:
        raise FeatureError(f"top_k must be >= 1, got {top_k}")
    overall: Counter = Counter()
    per_label: dict[int, Counter] = {0: Counter(), 1: Counter()}
    for doc in corpus:
        seq = preprocess_text(doc.text, config, doc_id=doc.id)
        overall.update(seq.tokens)
        if doc.label is not None:
            per_label[doc.label].update(seq.tokens)

    def top(counter: Counter) -> list[list]:
        ranked = sorted(counter.items(), key=lambda tc: (-tc[1], tc[0]))
        return [[t, c] for t, c in ranked[:top_k]]

    return {
        "overall": top(overall),
        "by_label": {"0": top(per_label[0]), "1": top(per_label[1])},
    }
