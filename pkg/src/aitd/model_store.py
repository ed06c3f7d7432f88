"""Versioned, canonical, single-file model serialization.

Layout (all integers little-endian):

    offset 0   magic bytes "AITD"
    offset 4   u32 format version (currently 1)
    offset 8   u64 header length H
    offset 16  H bytes of canonical UTF-8 JSON (sorted keys, "," ":"
               separators, non-ASCII kept raw, floats as shortest
               round-trippable decimals)
    ...        u64 binary block length B
    ...        B bytes: the numeric arrays named by the header's "arrays"
               manifest, concatenated in manifest order as little-endian
               float64 ("f8") or int64 ("i8")
    last 4     u32 crc32 of every preceding byte

The header carries everything predict needs: model kind, preprocessing
config, stopword list, feature spec, vocabulary terms, hyperparameters, seed,
rng name and training metadata. Identical models serialize to identical
bytes; files are written atomically (temp file + rename).
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib

import numpy as np

from .errors import ModelFormatError
from .features import FeatureSpec, Vocabulary
from .gbdt import GbdtModel, GbdtParams
from .preprocess import PreprocessConfig
from .prng import GENERATOR_NAME
from .svm import SvmModel, SvmParams

MAGIC = b"AITD"
FORMAT_VERSION = 1

_DTYPES = {"f8": np.dtype("<f8"), "i8": np.dtype("<i8")}


def _canonical_json(obj) -> bytes:
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    ).encode("utf-8")


def _gbdt_arrays(model: GbdtModel) -> list[tuple[str, str, np.ndarray]]:
    arrays = []
    if model.vocabulary is not None:
        arrays.append(("doc_freq", "i8", model.vocabulary.doc_freq))
    arrays.extend(
        [
            ("node_feature", "i8", model.node_feature),
            ("node_threshold", "f8", model.node_threshold),
            ("node_left", "i8", model.node_left),
            ("node_right", "i8", model.node_right),
            ("node_weight", "f8", model.node_weight),
            ("node_gain", "f8", model.node_gain),
            ("tree_roots", "i8", model.tree_roots),
        ]
    )
    return arrays


def _svm_arrays(model: SvmModel) -> list[tuple[str, str, np.ndarray]]:
    arrays = []
    if model.vocabulary is not None:
        arrays.append(("doc_freq", "i8", model.vocabulary.doc_freq))
    arrays.extend(
        [
            ("weights", "f8", model.weights),
            ("std_cols", "i8", model.std_cols),
            ("std_mean", "f8", model.std_mean),
            ("std_std", "f8", model.std_std),
        ]
    )
    return arrays


def _common_header(model) -> dict:
    pc = model.preprocess_config
    return {
        "model_kind": model.model_kind,
        "rng": GENERATOR_NAME,
        "seed": model.seed,
        "preprocess": None
        if pc is None
        else {
            "lowercase": pc.lowercase,
            "strip_punct_tokens": pc.strip_punct_tokens,
            "remove_stopwords": pc.remove_stopwords,
            "stem": pc.stem,
        },
        "stopwords": sorted(model.stopwords),
        "feature_spec": None
        if model.feature_spec is None
        else {
            "kind": model.feature_spec.kind,
            "min_df": model.feature_spec.min_df,
            "max_vocab": model.feature_spec.max_vocab,
        },
        "vocabulary": None
        if model.vocabulary is None
        else {
            "terms": list(model.vocabulary.terms),
            "n_docs_fitted": model.vocabulary.n_docs_fitted,
        },
        "metadata": dict(model.metadata),
    }


def model_to_bytes(model) -> bytes:
    if isinstance(model, GbdtModel):
        arrays = _gbdt_arrays(model)
        header = _common_header(model)
        header["hyperparams"] = {
            "n_rounds": model.params.n_rounds,
            "max_depth": model.params.max_depth,
            "learning_rate": model.params.learning_rate,
            "reg_lambda": model.params.reg_lambda,
            "gamma": model.params.gamma,
            "min_child_hessian": model.params.min_child_hessian,
        }
        header["gbdt"] = {
            "base_score": model.base_score,
            "n_features": model.n_features,
            "train_logloss": list(model.train_logloss),
        }
    elif isinstance(model, SvmModel):
        arrays = _svm_arrays(model)
        header = _common_header(model)
        header["hyperparams"] = {
            "lambda_reg": model.params.lambda_reg,
            "epochs": model.params.epochs,
        }
        header["svm"] = {"bias": model.bias, "n_features": model.n_features}
    else:
        raise ModelFormatError(f"cannot serialize object of type {type(model).__name__}")

    header["arrays"] = [
        {"name": name, "dtype": code, "len": int(arr.shape[0])} for name, code, arr in arrays
    ]
    blob = b"".join(
        np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes() for _, code, arr in arrays
    )
    header_bytes = _canonical_json(header)
    body = (
        MAGIC
        + struct.pack("<I", FORMAT_VERSION)
        + struct.pack("<Q", len(header_bytes))
        + header_bytes
        + struct.pack("<Q", len(blob))
        + blob
    )
    return body + struct.pack("<I", zlib.crc32(body))


def save_model(model, path: str) -> None:
    data = model_to_bytes(model)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".aitd-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise ModelFormatError(f"could not write model to {path}: {exc}")


def _parse_header(data: bytes) -> tuple[dict, bytes]:
    if len(data) < 16:
        raise ModelFormatError("truncated model file: shorter than the fixed prologue")
    if data[:4] != MAGIC:
        raise ModelFormatError(f"bad magic: expected {MAGIC!r}, found {data[:4]!r}")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported version: file is v{version}, this build reads v{FORMAT_VERSION}"
        )
    (header_len,) = struct.unpack_from("<Q", data, 8)
    header_end = 16 + header_len
    if len(data) < header_end + 8:
        raise ModelFormatError("truncated model file: header extends past end of file")
    (blob_len,) = struct.unpack_from("<Q", data, header_end)
    blob_end = header_end + 8 + blob_len
    if len(data) != blob_end + 4:
        raise ModelFormatError("truncated model file: payload length mismatch")
    (stored_crc,) = struct.unpack_from("<I", data, blob_end)
    actual_crc = zlib.crc32(data[:blob_end])
    if stored_crc != actual_crc:
        raise ModelFormatError(
            f"checksum mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}"
        )
    try:
        header = json.loads(data[16:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"corrupt header: {exc}")
    if not isinstance(header, dict):
        raise ModelFormatError("corrupt header: not a JSON object")
    return header, data[header_end + 8 : blob_end]


def _read_arrays(header: dict, blob: bytes) -> dict[str, np.ndarray]:
    out = {}
    offset = 0
    for entry in header.get("arrays", []):
        dtype = _DTYPES.get(entry.get("dtype"))
        if dtype is None:
            raise ModelFormatError(f"corrupt header: unknown dtype {entry.get('dtype')!r}")
        n = int(entry["len"])
        nbytes = n * dtype.itemsize
        if offset + nbytes > len(blob):
            raise ModelFormatError("truncated model file: array data past end of block")
        out[entry["name"]] = np.frombuffer(blob, dtype=dtype, count=n, offset=offset).copy()
        offset += nbytes
    if offset != len(blob):
        raise ModelFormatError("corrupt header: binary block larger than its manifest")
    return out


def _load_common(header: dict, arrays: dict):
    pc_raw = header.get("preprocess")
    stopwords = tuple(header.get("stopwords", []))
    preprocess_config = None
    if pc_raw is not None:
        preprocess_config = PreprocessConfig(
            lowercase=pc_raw["lowercase"],
            strip_punct_tokens=pc_raw["strip_punct_tokens"],
            remove_stopwords=pc_raw["remove_stopwords"],
            stem=pc_raw["stem"],
            stopword_list=frozenset(stopwords),
        )
    fs_raw = header.get("feature_spec")
    feature_spec = None
    if fs_raw is not None:
        feature_spec = FeatureSpec(
            kind=fs_raw["kind"], min_df=fs_raw["min_df"], max_vocab=fs_raw["max_vocab"]
        )
    vocab_raw = header.get("vocabulary")
    vocabulary = None
    if vocab_raw is not None:
        vocabulary = Vocabulary(
            terms=list(vocab_raw["terms"]),
            doc_freq=arrays.get("doc_freq", np.zeros(0, dtype=np.int64)),
            n_docs_fitted=vocab_raw["n_docs_fitted"],
        )
    return preprocess_config, stopwords, feature_spec, vocabulary


def load_model(path: str):
    if not os.path.exists(path):
        raise ModelFormatError(f"model file not found: {path}")
    with open(path, "rb") as fh:
        data = fh.read()
    return model_from_bytes(data)


def model_from_bytes(data: bytes):
    header, blob = _parse_header(data)
    arrays = _read_arrays(header, blob)
    preprocess_config, stopwords, feature_spec, vocabulary = _load_common(header, arrays)
    kind = header.get("model_kind")
    try:
        if kind == "gbdt":
            hp = header["hyperparams"]
            return GbdtModel(
                params=GbdtParams(
                    n_rounds=hp["n_rounds"],
                    max_depth=hp["max_depth"],
                    learning_rate=hp["learning_rate"],
                    reg_lambda=hp["reg_lambda"],
                    gamma=hp["gamma"],
                    min_child_hessian=hp["min_child_hessian"],
                ),
                base_score=header["gbdt"]["base_score"],
                n_features=header["gbdt"]["n_features"],
                node_feature=arrays["node_feature"],
                node_threshold=arrays["node_threshold"],
                node_left=arrays["node_left"],
                node_right=arrays["node_right"],
                node_weight=arrays["node_weight"],
                node_gain=arrays["node_gain"],
                tree_roots=arrays["tree_roots"],
                train_logloss=list(header["gbdt"]["train_logloss"]),
                seed=header["seed"],
                vocabulary=vocabulary,
                feature_spec=feature_spec,
                preprocess_config=preprocess_config,
                stopwords=stopwords,
                metadata=dict(header.get("metadata", {})),
            )
        if kind == "svm":
            hp = header["hyperparams"]
            return SvmModel(
                params=SvmParams(lambda_reg=hp["lambda_reg"], epochs=hp["epochs"]),
                weights=arrays["weights"],
                bias=header["svm"]["bias"],
                std_cols=arrays["std_cols"],
                std_mean=arrays["std_mean"],
                std_std=arrays["std_std"],
                seed=header["seed"],
                vocabulary=vocabulary,
                feature_spec=feature_spec,
                preprocess_config=preprocess_config,
                stopwords=stopwords,
                metadata=dict(header.get("metadata", {})),
            )
    except KeyError as exc:
        raise ModelFormatError(f"corrupt header: missing field {exc}")
    raise ModelFormatError(f"corrupt header: unknown model kind {kind!r}")
