import json
import math

import numpy as np
import pytest

from aitd.corpus import Corpus, Document
from aitd.errors import FeatureError
from aitd.features import (
    STYLO_FIELDS,
    FeatureSpec,
    extract_stylo,
    featurize_corpus,
    fit_featurizer,
    fit_vocabulary,
    idf_vector,
    load_dense_features,
    term_frequency_report,
    transform_counts,
    transform_tfidf,
)
from aitd.preprocess import PreprocessConfig, TokenSequence, normalize, tokenize
from aitd.prng import SplitMix64

from _oracles import dense_counts, doc_frequencies, tfidf_rows


def seqs(*docs):
    return [TokenSequence(doc_id=str(i), tokens=list(toks), sentence_boundaries=[])
            for i, toks in enumerate(docs)]


def random_token_docs(seed, n_docs, vocab=("a", "b", "c", "d", "e", "f"), max_len=12):
    rng = SplitMix64(seed)
    docs = []
    for _ in range(n_docs):
        length = rng.next_below(max_len + 1)
        docs.append([vocab[rng.next_below(len(vocab))] for _ in range(length)])
    return docs


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------


def test_fit_vocabulary_examples():
    vocab = fit_vocabulary(seqs(["a", "a", "b"], ["b", "c"]), FeatureSpec(min_df=1))
    assert vocab.terms == ["a", "b", "c"]
    assert dict(zip(vocab.terms, vocab.doc_freq.tolist())) == {"a": 1, "b": 2, "c": 1}
    assert vocab.n_docs_fitted == 2

    vocab2 = fit_vocabulary(seqs(["a", "a", "b"], ["b", "c"]), FeatureSpec(min_df=2))
    assert vocab2.terms == ["b"]


def test_fit_vocabulary_empty_after_filter():
    with pytest.raises(FeatureError, match="min_df"):
        fit_vocabulary(seqs(["a"], ["b"]), FeatureSpec(min_df=3))


def test_fit_vocabulary_doc_freq_matches_brute_force_scan():
    for seed in range(50):
        docs = random_token_docs(seed, n_docs=8)
        if not any(docs):
            continue
        vocab = fit_vocabulary(seqs(*docs), FeatureSpec())
        expected = doc_frequencies(docs)
        assert dict(zip(vocab.terms, vocab.doc_freq.tolist())) == expected
        assert vocab.terms == sorted(expected)


def test_fit_vocabulary_max_vocab_truncation_rule():
    # doc freqs: a:3, b:2, c:2, d:1 -> cap 2 keeps a then b (df desc, term asc)
    docs = seqs(["a", "b", "c"], ["a", "b"], ["a", "c", "d"])
    vocab = fit_vocabulary(docs, FeatureSpec(max_vocab=2))
    assert vocab.terms == ["a", "b"]
    # kept set is re-sorted lexicographically even when df order differs
    docs2 = seqs(["z"], ["z"], ["a", "z"])
    vocab2 = fit_vocabulary(docs2, FeatureSpec(max_vocab=2))
    assert vocab2.terms == ["a", "z"]


def test_feature_spec_validation():
    with pytest.raises(FeatureError):
        FeatureSpec(kind="bigrams")
    with pytest.raises(FeatureError):
        FeatureSpec(min_df=0)
    with pytest.raises(FeatureError):
        FeatureSpec(max_vocab=0)


# ---------------------------------------------------------------------------
# Count transform
# ---------------------------------------------------------------------------


def test_transform_counts_example():
    token_docs = [["ai", "text", "ai"], ["human", "text"]]
    vocab = fit_vocabulary(seqs(*token_docs), FeatureSpec())
    mat = transform_counts(seqs(*token_docs), vocab)
    assert vocab.terms == ["ai", "human", "text"]
    assert np.array_equal(mat.to_dense(), [[2.0, 0.0, 1.0], [0.0, 1.0, 1.0]])


def test_transform_counts_empty_and_oov_rows():
    vocab = fit_vocabulary(seqs(["a", "b"]), FeatureSpec())
    mat = transform_counts(seqs([], ["zzz"], ["a"]), vocab)
    dense = mat.to_dense()
    assert np.array_equal(dense[0], [0.0, 0.0])
    assert np.array_equal(dense[1], [0.0, 0.0])
    assert np.array_equal(dense[2], [1.0, 0.0])


def test_transform_counts_matches_dense_recount_oracle():
    for seed in range(100):
        docs = random_token_docs(seed + 1000, n_docs=6)
        if not any(docs):
            continue
        vocab = fit_vocabulary(seqs(*docs), FeatureSpec())
        mat = transform_counts(seqs(*docs), vocab)
        assert np.array_equal(mat.to_dense(), dense_counts(docs, vocab.terms))


def test_transform_counts_row_sums_equal_in_vocab_token_counts():
    for seed in range(30):
        docs = random_token_docs(seed + 2000, n_docs=5)
        if not any(docs):
            continue
        try:
            vocab = fit_vocabulary(seqs(*docs), FeatureSpec(min_df=2))
        except FeatureError:
            continue
        mat = transform_counts(seqs(*docs), vocab)
        in_vocab = set(vocab.terms)
        expected = [sum(1 for t in d if t in in_vocab) for d in docs]
        assert mat.row_sums().tolist() == expected


def test_permuting_documents_permutes_rows():
    docs = random_token_docs(77, n_docs=6)
    vocab = fit_vocabulary(seqs(*docs), FeatureSpec())
    base = transform_counts(seqs(*docs), vocab).to_dense()
    perm = [3, 0, 5, 1, 4, 2]
    permuted = transform_counts(seqs(*[docs[i] for i in perm]), vocab).to_dense()
    assert np.array_equal(permuted, base[perm])


# ---------------------------------------------------------------------------
# TF-IDF
# ---------------------------------------------------------------------------


def test_tfidf_hand_example():
    token_docs = [["ai", "text", "ai"], ["human", "text"]]
    vocab = fit_vocabulary(seqs(*token_docs), FeatureSpec())
    idf = idf_vector(vocab)
    assert idf[vocab.term_to_index["text"]] == 1.0
    assert abs(idf[vocab.term_to_index["ai"]] - (math.log(3 / 2) + 1)) < 1e-12
    counts = transform_counts(seqs(*token_docs), vocab)
    tfidf = transform_tfidf(counts, vocab).to_dense()
    assert np.allclose(tfidf[0], [0.9422, 0.0, 0.3352], atol=5e-5)
    norms = np.linalg.norm(tfidf, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-9)


def test_tfidf_matches_reference_formula_on_random_corpora():
    for seed in range(40):
        docs = random_token_docs(seed + 3000, n_docs=7)
        if not any(docs):
            continue
        vocab = fit_vocabulary(seqs(*docs), FeatureSpec())
        counts = transform_counts(seqs(*docs), vocab)
        ours = transform_tfidf(counts, vocab).to_dense()
        expected = tfidf_rows(dense_counts(docs, vocab.terms), vocab.doc_freq, len(docs))
        assert np.allclose(ours, expected, atol=1e-12)


def test_tfidf_matches_sklearn_variant():
    sklearn = pytest.importorskip("sklearn.feature_extraction.text")
    docs = random_token_docs(123, n_docs=9)
    docs = [d or ["pad"] for d in docs]
    vocab = fit_vocabulary(seqs(*docs), FeatureSpec())
    counts = transform_counts(seqs(*docs), vocab)
    ours = transform_tfidf(counts, vocab).to_dense()
    tfidf = sklearn.TfidfTransformer(norm="l2", smooth_idf=True, sublinear_tf=False)
    theirs = tfidf.fit_transform(dense_counts(docs, vocab.terms)).toarray()
    assert np.allclose(ours, theirs, atol=1e-12)


def test_tfidf_properties():
    docs = random_token_docs(55, n_docs=8)
    docs = [d or ["pad"] for d in docs]
    vocab = fit_vocabulary(seqs(*docs), FeatureSpec())
    idf = idf_vector(vocab)
    assert np.all(idf >= 1.0)
    order = np.argsort(vocab.doc_freq)
    assert np.all(np.diff(idf[order]) <= 1e-15)  # nonincreasing in doc_freq
    counts = transform_counts(seqs(*docs, []), vocab)
    tfidf = transform_tfidf(counts, vocab)
    dense = tfidf.to_dense()
    assert np.all(dense[-1] == 0.0)  # zero row stays zero
    with pytest.raises(FeatureError):
        transform_tfidf(transform_counts(seqs(["a"]), vocab), fit_vocabulary(seqs(["q"]), FeatureSpec()))


# ---------------------------------------------------------------------------
# Stylometric features
# ---------------------------------------------------------------------------


def punct_seq(text, doc_id="d"):
    cfg = PreprocessConfig(strip_punct_tokens=False)
    return tokenize(normalize(text, cfg), cfg, doc_id=doc_id)


def test_stylo_hand_example():
    doc = Document("d", "The cat sat.")
    vec = extract_stylo(doc, punct_seq(doc.text), stopwords=frozenset({"the"}))
    assert vec.avg_word_len == 3.0
    assert vec.avg_sentence_len == 3.0
    assert abs(vec.stopword_ratio - 1 / 3) < 1e-12
    assert vec.type_token_ratio == 1.0
    assert vec.hapax_ratio == 1.0
    assert vec.punct_per_token == 0.25
    assert vec.digit_token_ratio == 0.0
    # raw text has letters T,h,e,c,a,t,s,a,t -> 1 uppercase of 9
    assert abs(vec.uppercase_char_ratio - 1 / 9) < 1e-12


def test_stylo_empty_and_single_token():
    doc = Document("d", "")
    assert extract_stylo(doc, punct_seq(""), frozenset()).to_array().tolist() == [0.0] * 8
    vec = extract_stylo(Document("d", "aaaa"), punct_seq("aaaa"), frozenset())
    assert vec.type_token_ratio == 1.0
    assert vec.hapax_ratio == 1.0
    assert vec.avg_sentence_len == 1.0


def test_stylo_ranges_and_sentences():
    text = "Numbers 42 here. YELLING!! ok 7"
    vec = extract_stylo(Document("d", text), punct_seq(text), frozenset({"here"}))
    arr = vec.to_array()
    ratios = dict(zip(STYLO_FIELDS, arr))
    for f in ("type_token_ratio", "hapax_ratio", "stopword_ratio", "punct_per_token",
              "digit_token_ratio", "uppercase_char_ratio"):
        assert 0.0 <= ratios[f] <= 1.0
    # words: numbers,42,here,yelling,ok,7 over 3 sentences
    assert vec.avg_sentence_len == 2.0
    assert abs(vec.digit_token_ratio - 2 / 6) < 1e-12


def test_featurize_combined_appends_stylo_columns():
    corpus = Corpus([Document("a", "ai text here.", 1), Document("b", "human words!", 0)])
    config = PreprocessConfig()
    vocab, X = fit_featurizer(corpus, config, frozenset(), FeatureSpec(kind="counts+stylo"))
    assert X.n_cols == len(vocab) + len(STYLO_FIELDS)
    counts_only = featurize_corpus(corpus, config, frozenset(), vocab, FeatureSpec(kind="counts"))
    assert np.array_equal(X.to_dense()[:, : len(vocab)], counts_only.to_dense())
    stylo_block = X.to_dense()[:, len(vocab):]
    assert stylo_block.shape == (2, 8)
    assert np.all(stylo_block[:, 0] > 0)  # avg word length positive for nonempty docs


# ---------------------------------------------------------------------------
# Dense features
# ---------------------------------------------------------------------------


def test_load_dense_features(tmp_path):
    p = tmp_path / "emb.jsonl"
    p.write_text(
        '{"id":"a","vec":[1.0,2,3,4],"label":0}\n{"id":"b","vec":[5,6,7,8],"label":1}\n',
        encoding="utf-8",
    )
    matrix, ids, labels = load_dense_features(str(p))
    assert matrix.shape == (2, 4)
    assert ids == ["a", "b"]
    assert labels == [0, 1]


def test_load_dense_errors(tmp_path):
    ragged = tmp_path / "ragged.jsonl"
    ragged.write_text('{"id":"a","vec":[1,2,3,4]}\n{"id":"b","vec":[1,2,3,4,5]}\n')
    with pytest.raises(FeatureError, match="line 2"):
        load_dense_features(str(ragged))
    nonfinite = tmp_path / "nan.jsonl"
    nonfinite.write_text('{"id":"a","vec":[1e999,2]}\n')
    with pytest.raises(FeatureError, match="non-finite"):
        load_dense_features(str(nonfinite))
    mixed = tmp_path / "mixed.jsonl"
    mixed.write_text('{"id":"a","vec":[1],"label":0}\n{"id":"b","vec":[2]}\n')
    with pytest.raises(FeatureError, match="mixes"):
        load_dense_features(str(mixed))
    with pytest.raises(FeatureError, match="not found"):
        load_dense_features(str(tmp_path / "missing.jsonl"))


# ---------------------------------------------------------------------------
# Term-frequency report
# ---------------------------------------------------------------------------


def test_term_frequency_report_example():
    corpus = Corpus([Document("x", "a a b", 0), Document("y", "b c", 1)])
    table = term_frequency_report(corpus, PreprocessConfig(), top_k=2)
    assert table["overall"] == [["a", 2], ["b", 2]]
    assert table["by_label"]["0"] == [["a", 2], ["b", 1]]
    assert table["by_label"]["1"] == [["b", 1], ["c", 1]]


def test_term_frequency_report_clamps_and_counts():
    corpus = Corpus([Document("x", "a a b", 0), Document("y", "b c", 1)])
    table = term_frequency_report(corpus, PreprocessConfig(), top_k=100)
    assert table["overall"] == [["a", 2], ["b", 2], ["c", 1]]
    json.dumps(table)  # JSON-serializable


def test_term_frequency_report_matches_brute_force():
    rng = SplitMix64(31)
    docs = []
    for i in range(12):
        toks = random_token_docs(100 + i, n_docs=1)[0]
        docs.append(Document(f"d{i}", " ".join(toks), int(rng.next_below(2))))
    corpus = Corpus(docs)
    table = term_frequency_report(corpus, PreprocessConfig(), top_k=3)
    counts = {}
    for d in docs:
        for t in d.text.split():
            counts[t] = counts.get(t, 0) + 1
    expected = sorted(counts.items(), key=lambda tc: (-tc[1], tc[0]))[:3]
    assert table["overall"] == [[t, c] for t, c in expected]
    with pytest.raises(FeatureError):
        term_frequency_report(corpus, PreprocessConfig(), top_k=0)
