"""Command-line entry point: split / train / predict / evaluate / termfreq / inspect.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Every command funnels all randomness through its --seed flag and produces
byte-identical output files given identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import replace

import numpy as np

from . import features, gbdt, metrics, svm
from .corpus import (
    FORMATS,
    GeneratorParams,
    SplitSpec,
    corpus_fingerprint,
    generate_synthetic_corpus,
    load_corpus,
    save_corpus,
    stratified_split,
)
from .errors import AitdError
from .features import STYLO_FIELDS, FeatureSpec
from .model_store import load_model, save_model
from .preprocess import PreprocessConfig, default_stopword_text, parse_stopword_file
from .sparse import SparseMatrix


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("must be strictly between 0 and 1")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _write_json(path: str, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def build_parser() -> _Parser:
    parser = _Parser(prog="aitd", description="AI-generated text detection toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add_command(name, help_text):
        return sub.add_parser(
            name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter
        )

    p = add_command("split", "stratified train/test split")
    p.add_argument("--input", required=True, help="labeled corpus file")
    p.add_argument("--format", default="csv", choices=FORMATS, help="corpus format")
    p.add_argument("--test-fraction", type=_fraction, default=0.5,
                   help="per-class test share in (0,1)")
    p.add_argument("--seed", type=_seed, default=0, help="shuffle seed")
    p.add_argument("--out-train", required=True, help="training corpus output path")
    p.add_argument("--out-test", required=True, help="test corpus output path")
    p.add_argument("--manifest", default=None,
                   help="manifest path (default: <out-train>.manifest.json)")
    p.set_defaults(func=cmd_split)

    p = add_command("generate", "emit a deterministic synthetic corpus")
    p.add_argument("--n-per-class", type=_positive_int, required=True,
                   help="documents per class")
    p.add_argument("--seed", type=_seed, default=0, help="generator seed")
    p.add_argument("--overlap", type=float, default=GeneratorParams.overlap,
                   help="shared-pool probability in [0,1]; 0 = disjoint class vocabularies")
    p.add_argument("--output", required=True, help="corpus output path")
    p.add_argument("--format", default="csv", choices=FORMATS, help="corpus format")
    p.set_defaults(func=cmd_generate)

    p = add_command("train", "fit a classifier and save the model")
    p.add_argument("--input", default=None, help="labeled corpus file")
    p.add_argument("--format", default="csv", choices=FORMATS, help="corpus format")
    p.add_argument("--algo", required=True, choices=("gbdt", "svm"),
                   help="classifier to fit")
    p.add_argument("--features", default="counts", choices=features.KINDS,
                   dest="feature_kind", help="feature kind")
    p.add_argument("--model", required=True, help="output model path")
    p.add_argument("--seed", type=_seed, default=0, help="training seed")
    p.add_argument("--min-df", type=_positive_int, default=1,
                   help="minimum document frequency for vocabulary terms")
    p.add_argument("--max-vocab", type=_positive_int, default=None,
                   help="vocabulary size cap")
    p.add_argument("--remove-stopwords", action="store_true",
                   help="drop stopwords during preprocessing")
    p.add_argument("--stem", action="store_true", help="apply the Porter stemmer")
    p.add_argument("--stopword-file", default=None,
                   help="one token per line; default: the packaged English list")
    p.add_argument("--dense-input", default=None,
                   help="precomputed embeddings JSONL (required for --features dense)")
    p.add_argument("--rounds", type=_nonneg_int, default=gbdt.GbdtParams.n_rounds,
                   help="gbdt boosting rounds")
    p.add_argument("--max-depth", type=_positive_int, default=gbdt.GbdtParams.max_depth,
                   help="gbdt tree depth limit")
    p.add_argument("--learning-rate", type=float, default=gbdt.GbdtParams.learning_rate,
                   help="gbdt shrinkage")
    p.add_argument("--reg-lambda", type=float, default=gbdt.GbdtParams.reg_lambda,
                   help="gbdt L2 penalty on leaf weights")
    p.add_argument("--gamma", type=float, default=gbdt.GbdtParams.gamma,
                   help="gbdt per-split penalty")
    p.add_argument("--min-child-hessian", type=float,
                   default=gbdt.GbdtParams.min_child_hessian,
                   help="gbdt minimum hessian sum per child")
    p.add_argument("--svm-lambda", type=float, default=svm.SvmParams.lambda_reg,
                   help="svm L2 regularization strength")
    p.add_argument("--epochs", type=_positive_int, default=svm.SvmParams.epochs,
                   help="svm training epochs")
    p.set_defaults(func=cmd_train)

    p = add_command("predict", "score documents with a saved model")
    p.add_argument("--model", required=True, help="saved model path")
    p.add_argument("--input", required=True,
                   help="corpus file, or embeddings JSONL for dense models")
    p.add_argument("--format", default="csv", choices=FORMATS, help="corpus format")
    p.add_argument("--output", required=True, help="predictions JSONL")
    p.add_argument("--threshold", type=float, default=None,
                   help="label cut (default: 0.5 gbdt probability, 0.0 svm decision)")
    p.set_defaults(func=cmd_predict)

    p = add_command("evaluate", "score a labeled corpus and report metrics")
    p.add_argument("--model", required=True, help="saved model path")
    p.add_argument("--input", required=True, help="labeled corpus file")
    p.add_argument("--format", default="csv", choices=FORMATS, help="corpus format")
    p.add_argument("--report", required=True, help="report JSON output path")
    p.set_defaults(func=cmd_evaluate)

    p = add_command("termfreq", "ranked term-frequency table")
    p.add_argument("--input", required=True, help="corpus file")
    p.add_argument("--format", default="csv", choices=FORMATS, help="corpus format")
    p.add_argument("--top", type=_positive_int, default=20, help="terms per table")
    p.add_argument("--out", default="-", help="output path (default stdout)")
    p.add_argument("--out-format", default="json", choices=("json", "csv"),
                   help="report encoding")
    p.set_defaults(func=cmd_termfreq)

    p = add_command("inspect", "print a saved model's contents")
    p.add_argument("--model", required=True, help="saved model path")
    p.set_defaults(func=cmd_inspect)

    return parser


def cmd_split(args) -> int:
    corpus = load_corpus(args.input, args.format)
    train, test = stratified_split(corpus, SplitSpec(args.test_fraction, args.seed))
    save_corpus(train, args.out_train, args.format)
    save_corpus(test, args.out_test, args.format)
    manifest = {
        "seed": args.seed,
        "test_fraction": args.test_fraction,
        "format": args.format,
        "counts": {
            "train": {str(k): v for k, v in train.label_counts.items()},
            "test": {str(k): v for k, v in test.label_counts.items()},
        },
    }
    _write_json(args.manifest or f"{args.out_train}.manifest.json", manifest)
    print(f"split {len(corpus)} documents into {len(train)} train / {len(test)} test")
    return 0


def cmd_generate(args) -> int:
    params = replace(GeneratorParams(), overlap=args.overlap)
    corpus = generate_synthetic_corpus(args.n_per_class, args.seed, params)
    save_corpus(corpus, args.output, args.format)
    print(f"generated {len(corpus)} documents ({args.n_per_class} per class)")
    return 0


def _build_config(args) -> tuple[PreprocessConfig, frozenset, str]:
    config = PreprocessConfig(
        remove_stopwords=args.remove_stopwords,
        stem=args.stem,
    )
    if args.stopword_file:
        with open(args.stopword_file, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = default_stopword_text()
    stopwords = parse_stopword_file(text, config)
    config = replace(config, stopword_list=stopwords)
    return config, stopwords, hashlib.sha256(text.encode("utf-8")).hexdigest()


def _stylo_columns(spec: FeatureSpec, n_cols: int) -> list[int]:
    if spec.kind == "dense":
        return list(range(n_cols))
    if spec.uses_stylo:
        return list(range(n_cols - len(STYLO_FIELDS), n_cols))
    return []


def cmd_train(args) -> int:
    started = time.perf_counter()
    config, stopwords, stopword_hash = _build_config(args)
    spec = FeatureSpec(kind=args.feature_kind, min_df=args.min_df, max_vocab=args.max_vocab)

    if spec.kind == "dense":
        if not args.dense_input:
            raise _UsageError(
                "--features dense requires --dense-input pointing at precomputed "
                "embeddings (JSONL rows {\"id\", \"vec\", optional \"label\"})"
            )
        matrix, ids, labels = features.load_dense_features(args.dense_input)
        if labels is None:
            if not args.input:
                raise _UsageError(
                    "the dense embeddings carry no labels; provide --input with a "
                    "labeled corpus to join on id"
                )
            corpus = load_corpus(args.input, args.format)
            label_by_id = {d.id: d.label for d in corpus}
            missing = [i for i in ids if label_by_id.get(i) is None]
            if missing:
                raise AitdError(f"no label for embedding id {missing[0]!r}")
            labels = [label_by_id[i] for i in ids]
        with open(args.dense_input, "rb") as fh:
            fingerprint = hashlib.sha256(fh.read()).hexdigest()
        X = SparseMatrix.from_dense(matrix)
        vocab = None
        y = np.asarray(labels)
    else:
        if not args.input:
            raise _UsageError("--input is required for text feature kinds")
        corpus = load_corpus(args.input, args.format)
        y = np.asarray(corpus.labels())
        vocab, X = features.fit_featurizer(corpus, config, stopwords, spec)
        fingerprint = corpus_fingerprint(corpus)

    if args.algo == "gbdt":
        params = gbdt.GbdtParams(
            n_rounds=args.rounds,
            max_depth=args.max_depth,
            learning_rate=args.learning_rate,
            reg_lambda=args.reg_lambda,
            gamma=args.gamma,
            min_child_hessian=args.min_child_hessian,
        )
        model = gbdt.train_gbdt(X, y, params, seed=args.seed)
        train_pred = gbdt.predict_label_gbdt(model, X)
        effort = f"rounds={model.n_trees}"
    else:
        params = svm.SvmParams(lambda_reg=args.svm_lambda, epochs=args.epochs)
        model = svm.train_svm(
            X, y, params, seed=args.seed, standardize_cols=_stylo_columns(spec, X.n_cols)
        )
        train_pred = svm.predict_label_svm(model, X)
        effort = f"epochs={params.epochs}"

    model.vocabulary = vocab
    model.feature_spec = spec
    model.preprocess_config = config
    model.stopwords = tuple(sorted(stopwords))
    model.metadata = {
        "corpus_fingerprint": fingerprint,
        "stopword_list_sha256": stopword_hash,
    }
    save_model(model, args.model)
    accuracy = float(np.mean(train_pred == y))
    elapsed = time.perf_counter() - started
    print(
        f"trained {args.algo} features={spec.kind} {effort} "
        f"train_accuracy={accuracy:.4f} time={elapsed:.2f}s -> {args.model}"
    )
    return 0


def _featurize_for_model(model, args):
    """Returns (ids, labels_or_None, feature matrix) for a saved model."""
    if model.feature_spec is not None and model.feature_spec.kind == "dense":
        matrix, ids, labels = features.load_dense_features(args.input)
        return ids, labels, SparseMatrix.from_dense(matrix)
    corpus = load_corpus(args.input, args.format)
    X = features.featurize_corpus(
        corpus,
        model.preprocess_config or PreprocessConfig(),
        frozenset(model.stopwords),
        model.vocabulary,
        model.feature_spec or FeatureSpec(),
    )
    labels = [d.label for d in corpus]
    return [d.id for d in corpus], (None if any(l is None for l in labels) else labels), X


def _score(model, X, threshold):
    if model.model_kind == "gbdt":
        scores = gbdt.predict_proba_gbdt(model, X)
        default_threshold = 0.5
        kind = "probability"
    else:
        scores = svm.decision_function(model, X)
        default_threshold = 0.0
        kind = "decision"
    threshold = default_threshold if threshold is None else threshold
    labels = (scores >= threshold).astype(np.int64)
    return scores, labels, threshold, kind


def cmd_predict(args) -> int:
    model = load_model(args.model)
    ids, _, X = _featurize_for_model(model, args)
    scores, labels, threshold, kind = _score(model, X, args.threshold)
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        header = {"model_kind": model.model_kind, "score_kind": kind, "threshold": threshold}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for doc_id, score, label in zip(ids, scores, labels):
            row = {"id": doc_id, "score": float(score), "label": int(label)}
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    print(f"wrote {len(ids)} predictions to {args.output}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    ids, labels, X = _featurize_for_model(model, args)
    if labels is None or not ids:
        raise AitdError("evaluate needs a fully labeled, nonempty input")
    _, predicted, _, _ = _score(model, X, None)
    rep = metrics.report(metrics.confusion(labels, list(predicted)))
    _write_json(args.report, metrics.report_to_dict(rep))
    print(metrics.format_report_table(model.model_kind, rep))
    return 0


def cmd_termfreq(args) -> int:
    corpus = load_corpus(args.input, args.format)
    table = features.term_frequency_report(corpus, PreprocessConfig(), args.top)
    if args.out_format == "json":
        _write_json(args.out, table)
    else:
        lines = ["scope,term,count"]
        for scope, rows in [("overall", table["overall"]),
                            ("0", table["by_label"]["0"]),
                            ("1", table["by_label"]["1"])]:
            lines.extend(f"{scope},{term},{count}" for term, count in rows)
        text = "\n".join(lines) + "\n"
        if args.out == "-":
            sys.stdout.write(text)
        else:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    return 0


def cmd_inspect(args) -> int:
    model = load_model(args.model)
    spec = model.feature_spec
    print(f"model_kind: {model.model_kind}")
    print(f"feature_spec: {spec.kind if spec else None}"
          + (f" (min_df={spec.min_df}, max_vocab={spec.max_vocab})" if spec else ""))
    print(f"vocabulary_size: {len(model.vocabulary) if model.vocabulary else 0}")
    print(f"n_features: {model.n_features}")
    print(f"seed: {model.seed}")
    if model.model_kind == "gbdt":
        p = model.params
        print(
            f"hyperparams: n_rounds={p.n_rounds} max_depth={p.max_depth} "
            f"learning_rate={p.learning_rate} reg_lambda={p.reg_lambda} "
            f"gamma={p.gamma} min_child_hessian={p.min_child_hessian}"
        )
    else:
        print(f"hyperparams: lambda_reg={model.params.lambda_reg} epochs={model.params.epochs}")
    for key in sorted(model.metadata):
        print(f"metadata.{key}: {model.metadata[key]}")
    names = features.feature_names(
        model.vocabulary, spec or FeatureSpec(), n_dense=model.n_features
    )
    if model.model_kind == "gbdt":
        totals = gbdt.feature_gain_totals(model)
        ranked = sorted(range(model.n_features), key=lambda j: (-totals[j], j))
        print("top_features_by_gain:")
        for j in ranked[: min(20, model.n_features)]:
            print(f"  {names[j] if j < len(names) else j}: {totals[j]:.6f}")
    else:
        print("top_features_by_weight:")
        for j, wgt in svm.top_weight_features(model, k=20):
            print(f"  {names[j] if j < len(names) else j}: {wgt:.6f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args) or 0
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except AitdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
