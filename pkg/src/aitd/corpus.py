"""Labeled text corpora: loading, saving, validation, synthesis, splitting.

File formats (pinned):
  - CSV: UTF-8, comma separated, double-quote quoting with doubled-quote
    escaping, header ``id,text,label`` (the label column may be omitted or
    left empty for unlabeled inputs), "\\n" line terminator on write.
  - JSONL: one object per line with keys ``id`` (string), ``text`` (string)
    and optional ``label`` (integer 0 or 1, or null).

Label 0 is human-written text, label 1 is AI-generated.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field

from .errors import CorpusError
from .prng import SplitMix64

FORMATS = ("csv", "jsonl")

_CSV_HEADER = ["id", "text", "label"]


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    label: int | None = None


@dataclass
class Corpus:
    documents: list[Document] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for doc in self.documents:
            if not doc.id:
                raise CorpusError("document id must be nonempty")
            if doc.id in seen:
                raise CorpusError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)
            if doc.label is not None and doc.label not in (0, 1):
                raise CorpusError(f"document {doc.id!r} has label {doc.label!r}, expected 0 or 1")

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @property
    def label_counts(self) -> dict[int, int]:
        counts = {0: 0, 1: 0}
        for doc in self.documents:
            if doc.label is not None:
                counts[doc.label] += 1
        return counts

    def labels(self) -> list[int]:
        """Labels in document order; raises if any document is unlabeled."""
        out = []
        for doc in self.documents:
            if doc.label is None:
                raise CorpusError(f"document {doc.id!r} is unlabeled")
            out.append(doc.label)
        return out


def _parse_label(raw, where: str):
    if raw is None or raw == "":
        return None
    if isinstance(raw, bool):
        raise CorpusError(f"{where}: label must be an integer 0 or 1")
    if isinstance(raw, str):
        if raw not in ("0", "1"):
            raise CorpusError(f"{where}: label {raw!r} outside {{0, 1}}")
        return int(raw)
    if isinstance(raw, int):
        if raw not in (0, 1):
            raise CorpusError(f"{where}: label {raw!r} outside {{0, 1}}")
        return raw
    raise CorpusError(f"{where}: label {raw!r} outside {{0, 1}}")


def _load_csv(fh) -> list[Document]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise CorpusError("line 1: missing CSV header 'id,text,label'")
    if header not in (_CSV_HEADER, _CSV_HEADER[:2]):
        raise CorpusError(f"line 1: expected header 'id,text,label', got {','.join(header)!r}")
    docs = []
    for row in reader:
        line = reader.line_num
        if len(row) != len(header):
            raise CorpusError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        label = _parse_label(row[2] if len(row) == 3 else None, f"line {line}")
        docs.append(Document(id=row[0], text=row[1], label=label))
    return docs


_JSONL_KEYS = {"id", "text", "label"}


def _load_jsonl(fh) -> list[Document]:
    docs = []
    for line_no, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {line_no}: invalid JSON ({exc.msg})")
        if not isinstance(obj, dict):
            raise CorpusError(f"line {line_no}: expected a JSON object")
        extra = set(obj) - _JSONL_KEYS
        if extra:
            raise CorpusError(f"line {line_no}: unknown keys {sorted(extra)}")
        if not isinstance(obj.get("id"), str) or not isinstance(obj.get("text"), str):
            raise CorpusError(f"line {line_no}: 'id' and 'text' must be strings")
        label = _parse_label(obj.get("label"), f"line {line_no}")
        docs.append(Document(id=obj["id"], text=obj["text"], label=label))
    return docs


def load_corpus(path: str, fmt: str) -> Corpus:
    if fmt not in FORMATS:
        raise CorpusError(f"unknown corpus format {fmt!r}")
    if not os.path.exists(path):
        raise CorpusError(f"corpus file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        docs = _load_csv(fh) if fmt == "csv" else _load_jsonl(fh)
    return Corpus(docs)


def save_corpus(corpus: Corpus, path: str, fmt: str) -> None:
    if fmt not in FORMATS:
        raise CorpusError(f"unknown corpus format {fmt!r}")
    buf = io.StringIO()
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_HEADER)
        for doc in corpus:
            writer.writerow([doc.id, doc.text, "" if doc.label is None else doc.label])
    else:
        for doc in corpus:
            obj = {"id": doc.id, "text": doc.text}
            if doc.label is not None:
                obj["label"] = doc.label
            buf.write(json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":")))
            buf.write("\n")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def corpus_fingerprint(corpus: Corpus) -> str:
    """sha256 over (id NUL text NUL label RS) per document, in order."""
    hasher = hashlib.sha256()
    for doc in corpus:
        hasher.update(doc.id.encode("utf-8"))
        hasher.update(b"\x00")
        hasher.update(doc.text.encode("utf-8"))
        hasher.update(b"\x00")
        hasher.update(b"-" if doc.label is None else str(doc.label).encode())
        hasher.update(b"\x1e")
    return hasher.hexdigest()


# ---------------------------------------------------------------------------
# Stratified splitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise CorpusError(
                f"test_fraction must be strictly between 0 and 1, got {self.test_fraction}"
            )
        if not 0 <= self.seed < 2**64:
            raise CorpusError("seed must be an unsigned 64-bit integer")


def stratified_split(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Split per class: test takes floor(class_count * test_fraction) documents
    chosen by seeded shuffle within the class; the remainder stays in train.
    Both outputs preserve the original corpus order."""
    by_class: dict[int, list[int]] = {0: [], 1: []}
    for i, doc in enumerate(corpus):
        if doc.label is None:
            raise CorpusError(f"cannot split: document {doc.id!r} is unlabeled")
        by_class[doc.label].append(i)
    for cls in (0, 1):
        if not by_class[cls]:
            raise CorpusError(f"cannot split: class {cls} has no documents")
    rng = SplitMix64(spec.seed)
    test_idx: set[int] = set()
    for cls in (0, 1):
        idx = list(by_class[cls])
        k = math.floor(len(idx) * spec.test_fraction)
        if len(idx) - k == 0:
            raise CorpusError(f"split would leave class {cls} with 0 training documents")
        rng.shuffle(idx)
        test_idx.update(idx[:k])
    train = Corpus([d for i, d in enumerate(corpus) if i not in test_idx])
    test = Corpus([d for i, d in enumerate(corpus) if i in test_idx])
    return train, test


# ---------------------------------------------------------------------------
# Synthetic corpus generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorParams:
    """Two token-unigram distributions over a shared Zipf vocabulary.

    Each token is drawn from the shared pool with probability ``overlap`` and
    from the class's private marker pool otherwise; class 1's markers are the
    designated AI-marker subset. overlap=0 makes the class vocabularies
    disjoint and the classes trivially separable.
    """

    vocab_size: int = 100
    markers_per_class: int = 8
    doc_len_min: int = 30
    doc_len_max: int = 60
    overlap: float = 0.92

    def __post_init__(self):
        if self.vocab_size < 1 or self.markers_per_class < 1:
            raise CorpusError("vocab_size and markers_per_class must be >= 1")
        if not 1 <= self.doc_len_min <= self.doc_len_max:
            raise CorpusError("document length range must satisfy 1 <= min <= max")
        if not 0.0 <= self.overlap <= 1.0:
            raise CorpusError(f"overlap must be in [0, 1], got {self.overlap}")


MARKER_PREFIXES = {0: "humark", 1: "aimark"}


def generate_synthetic_corpus(
    n_per_class: int, seed: int, params: GeneratorParams | None = None
) -> Corpus:
    """Deterministic labeled corpus: n_per_class documents per class, class-0
    block first. One splitmix64 stream drives every draw, consumed in a fixed
    order (per document: length, then per token: pool choice, then the token),
    so identical arguments always yield identical corpora."""
    if n_per_class < 1:
        raise CorpusError(f"n_per_class must be >= 1, got {n_per_class}")
    params = params or GeneratorParams()
    shared = [f"w{i:03d}" for i in range(params.vocab_size)]
    markers = {
        cls: [f"{MARKER_PREFIXES[cls]}{i:02d}" for i in range(params.markers_per_class)]
        for cls in (0, 1)
    }
    # Zipf weights over the shared pool, identical for both classes.
    weights = [1.0 / (i + 1) for i in range(params.vocab_size)]
    total = sum(weights)
    cumulative = []
    acc = 0.0
    for wgt in weights:
        acc += wgt / total
        cumulative.append(acc)
    cumulative[-1] = 1.0

    def shared_draw(u: float) -> str:
        lo, hi = 0, len(cumulative) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if u < cumulative[mid]:
                hi = mid
            else:
                lo = mid + 1
        return shared[lo]

    rng = SplitMix64(seed)
    span = params.doc_len_max - params.doc_len_min + 1
    docs = []
    for cls in (0, 1):
        for i in range(n_per_class):
            length = params.doc_len_min + rng.next_below(span)
            tokens = []
            for _ in range(length):
                if rng.next_float() < params.overlap:
                    tokens.append(shared_draw(rng.next_float()))
                else:
                    tokens.append(markers[cls][rng.next_below(params.markers_per_class)])
            docs.append(Document(id=f"doc-{cls}-{i:05d}", text=" ".join(tokens), label=cls))
    return Corpus(docs)
