"""Deterministic text normalization, tokenization, stopwords, stemming.

Every operation here is a pure function of (text, config); the whole pipeline
is safe to run on many documents in parallel with results collected in input
order. Defaults: lowercase on, punctuation tokens stripped, stopword removal
and stemming off.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, replace
from importlib import resources

from . import porter

_SENTENCE_CHARS = frozenset(".!?")


@dataclass(frozen=True)
class PreprocessConfig:
    lowercase: bool = True
    strip_punct_tokens: bool = True
    remove_stopwords: bool = False
    stem: bool = False
    stopword_list: frozenset = frozenset()


@dataclass
class TokenSequence:
    doc_id: str
    tokens: list[str]
    sentence_boundaries: list[int]


def normalize(text: str, config: PreprocessConfig = PreprocessConfig()) -> str:
    """NFC normalization, whitespace runs collapsed to single spaces, ends
    stripped, then non-locale lowercasing when the config asks for it.
    Idempotent."""
    text = unicodedata.normalize("NFC", text)
    text = " ".join(text.split())
    if config.lowercase:
        text = text.lower()
    return text


def _is_letter(ch: str) -> bool:
    return unicodedata.category(ch).startswith("L")


def _is_word_char(ch: str) -> bool:
    return _is_letter(ch) or unicodedata.category(ch) == "Nd"


def tokenize(text: str, config: PreprocessConfig = PreprocessConfig(), doc_id: str = "") -> TokenSequence:
    """Scan normalized text into word tokens (runs of Unicode letters/decimal
    digits, ASCII apostrophes allowed between letters) and punctuation-run
    tokens. Punctuation runs become single tokens when strip_punct_tokens is
    off and are dropped when on; a run containing '.', '!' or '?' ends a
    sentence. Boundaries are indices into the surviving token list and only
    nonempty sentences are recorded."""
    tokens: list[str] = []
    boundaries: list[int] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if _is_word_char(ch):
            j = i
            while j < n:
                c = text[j]
                if _is_word_char(c):
                    j += 1
                elif (
                    c == "'"
                    and _is_letter(text[j - 1])
                    and j + 1 < n
                    and _is_letter(text[j + 1])
                ):
                    j += 1
                else:
                    break
            tokens.append(text[i:j])
            i = j
        else:
            j = i
            while j < n and not text[j].isspace() and not _is_word_char(text[j]):
                j += 1
            run = text[i:j]
            if not config.strip_punct_tokens:
                tokens.append(run)
            if any(c in _SENTENCE_CHARS for c in run):
                last = boundaries[-1] if boundaries else 0
                if len(tokens) > last:
                    boundaries.append(len(tokens))
            i = j
    return TokenSequence(doc_id=doc_id, tokens=tokens, sentence_boundaries=boundaries)


def remove_stopwords(seq: TokenSequence, stopwords: frozenset | set) -> TokenSequence:
    """Drop stopword tokens and re-index sentence boundaries onto the
    survivors; boundaries of sentences emptied by removal collapse away."""
    kept: list[str] = []
    kept_prefix = [0]
    for tok in seq.tokens:
        if tok not in stopwords:
            kept.append(tok)
        kept_prefix.append(len(kept))
    boundaries: list[int] = []
    for b in seq.sentence_boundaries:
        nb = kept_prefix[b]
        if nb > (boundaries[-1] if boundaries else 0):
            boundaries.append(nb)
    return TokenSequence(doc_id=seq.doc_id, tokens=kept, sentence_boundaries=boundaries)


def stem_sequence(seq: TokenSequence) -> TokenSequence:
    """Porter-stem each purely alphabetic ASCII token; anything else (digits,
    apostrophes, punctuation runs, non-ASCII) passes through unchanged."""
    tokens = [
        porter.stem(tok) if tok.isascii() and tok.isalpha() else tok for tok in seq.tokens
    ]
    return TokenSequence(
        doc_id=seq.doc_id, tokens=tokens, sentence_boundaries=list(seq.sentence_boundaries)
    )


def preprocess_text(text: str, config: PreprocessConfig, doc_id: str = "") -> TokenSequence:
    """Full pipeline: normalize, tokenize, then optional stopword removal and
    stemming per the config."""
    seq = tokenize(normalize(text, config), config, doc_id=doc_id)
    if config.remove_stopwords:
        seq = remove_stopwords(seq, config.stopword_list)
    if config.stem:
        seq = stem_sequence(seq)
    return seq


def normalize_stopwords(words, config: PreprocessConfig) -> frozenset:
    """Normalize stopword entries under the same config they will filter."""
    out = set()
    for w in words:
        w = normalize(w, config)
        if w:
            out.add(w)
    return frozenset(out)


def parse_stopword_file(content: str, config: PreprocessConfig) -> frozenset:
    """One token per line, UTF-8, '#' comment lines and blank lines ignored."""
    words = []
    for line in content.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line)
    return normalize_stopwords(words, config)


def load_stopword_file(path: str, config: PreprocessConfig) -> frozenset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_stopword_file(fh.read(), config)


def default_stopword_text() -> str:
    """Raw contents of the pinned English stopword list shipped as data."""
    return resources.files("aitd").joinpath("data/stopwords_en.txt").read_text("utf-8")


def default_stopwords(config: PreprocessConfig) -> frozenset:
    return parse_stopword_file(default_stopword_text(), config)


def with_stopwords(config: PreprocessConfig, words) -> PreprocessConfig:
    return replace(config, stopword_list=normalize_stopwords(words, config))
