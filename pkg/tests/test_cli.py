import json
import subprocess
import sys

import numpy as np
import pytest

from aitd import cli, features
from aitd.corpus import generate_synthetic_corpus, save_corpus
from aitd.features import FeatureSpec, Vocabulary
from aitd.model_store import load_model, save_model
from aitd.preprocess import PreprocessConfig
from aitd.svm import SvmModel, SvmParams


def run(args):
    return cli.main(args)


@pytest.fixture()
def synth_csv(tmp_path):
    corpus = generate_synthetic_corpus(40, seed=9)
    path = tmp_path / "corpus.csv"
    save_corpus(corpus, str(path), "csv")
    return str(path)


# ---------------------------------------------------------------------------
# split
# ---------------------------------------------------------------------------


def test_split_writes_files_and_manifest(tmp_path, synth_csv, capsys):
    out_train = str(tmp_path / "train.csv")
    out_test = str(tmp_path / "test.csv")
    code = run(
        ["split", "--input", synth_csv, "--test-fraction", "0.5", "--seed", "7",
         "--out-train", out_train, "--out-test", out_test]
    )
    assert code == 0
    manifest = json.loads(open(out_train + ".manifest.json").read())
    assert manifest["seed"] == 7
    assert manifest["test_fraction"] == 0.5
    assert manifest["counts"]["test"] == {"0": 20, "1": 20}
    assert manifest["counts"]["train"] == {"0": 20, "1": 20}


def test_split_deterministic_bytes(tmp_path, synth_csv):
    outs = []
    for tag in ("a", "b"):
        ot, os_ = str(tmp_path / f"train{tag}.csv"), str(tmp_path / f"test{tag}.csv")
        assert run(["split", "--input", synth_csv, "--seed", "3",
                    "--out-train", ot, "--out-test", os_]) == 0
        outs.append((open(ot, "rb").read(), open(os_, "rb").read()))
    assert outs[0] == outs[1]


def test_split_bad_fraction_is_usage_error(tmp_path, synth_csv, capsys):
    code = run(["split", "--input", synth_csv, "--test-fraction", "1.5",
                "--out-train", str(tmp_path / "a"), "--out-test", str(tmp_path / "b")])
    assert code == 1
    assert "between 0 and 1" in capsys.readouterr().err


def test_split_missing_input_is_data_error(tmp_path, capsys):
    code = run(["split", "--input", str(tmp_path / "nope.csv"),
                "--out-train", str(tmp_path / "a"), "--out-test", str(tmp_path / "b")])
    assert code == 2


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def test_train_gbdt_counts(tmp_path, synth_csv, capsys):
    model_path = str(tmp_path / "m.aitd")
    code = run(["train", "--input", synth_csv, "--algo", "gbdt",
                "--features", "counts", "--rounds", "30", "--model", model_path])
    assert code == 0
    out = capsys.readouterr().out
    assert "train_accuracy=" in out and "rounds=30" in out
    model = load_model(model_path)
    assert model.model_kind == "gbdt"
    acc = float(out.split("train_accuracy=")[1].split()[0])
    assert acc >= 0.99


def test_train_svm_tfidf(tmp_path, synth_csv, capsys):
    model_path = str(tmp_path / "svm.aitd")
    code = run(["train", "--input", synth_csv, "--algo", "svm",
                "--features", "tfidf", "--model", model_path])
    assert code == 0
    out = capsys.readouterr().out
    acc = float(out.split("train_accuracy=")[1].split()[0])
    assert acc >= 0.99
    model = load_model(model_path)
    assert model.model_kind == "svm"
    assert model.metadata["corpus_fingerprint"]
    assert model.metadata["stopword_list_sha256"]


def test_train_dense_without_file_is_usage_error(tmp_path, synth_csv, capsys):
    code = run(["train", "--input", synth_csv, "--algo", "svm",
                "--features", "dense", "--model", str(tmp_path / "m.aitd")])
    assert code == 1
    assert "dense-input" in capsys.readouterr().err


def test_train_single_class_is_data_error(tmp_path, capsys):
    path = tmp_path / "single.csv"
    path.write_text("id,text,label\na,alpha beta,1\nb,beta gamma,1\n")
    code = run(["train", "--input", str(path), "--algo", "gbdt",
                "--model", str(tmp_path / "m.aitd")])
    assert code == 2
    assert "single class" in capsys.readouterr().err


def test_train_unknown_flag_is_usage_error(tmp_path, synth_csv):
    assert run(["train", "--input", synth_csv, "--algo", "gbdt",
                "--model", str(tmp_path / "m"), "--bogus"]) == 1


def test_train_stylo_features_round_trip(tmp_path, capsys):
    # stylometric-only training: build a corpus separable by punctuation habits
    rows = ["id,text,label"]
    for i in range(20):
        rows.append(f"h{i},plain words without any marks at all,0")
        rows.append(f'a{i},"short. bursts!! everywhere?! yes!! {i}. wow!!",1')
    path = tmp_path / "stylo.csv"
    path.write_text("\n".join(rows) + "\n")
    model = str(tmp_path / "m.aitd")
    code = run(["train", "--input", str(path), "--algo", "gbdt", "--features", "stylo",
                "--rounds", "20", "--model", model])
    assert code == 0
    acc = float(capsys.readouterr().out.split("train_accuracy=")[1].split()[0])
    assert acc == 1.0
    report = str(tmp_path / "r.json")
    assert run(["evaluate", "--model", model, "--input", str(path),
                "--report", report]) == 0
    assert json.loads(open(report).read())["accuracy"] == 1.0


def test_train_svm_combined_features_standardizes_stylo_block(tmp_path, synth_csv):
    model_path = str(tmp_path / "m.aitd")
    assert run(["train", "--input", synth_csv, "--algo", "svm",
                "--features", "tfidf+stylo", "--model", model_path]) == 0
    model = load_model(model_path)
    n = model.n_features
    assert model.std_cols.tolist() == list(range(n - 8, n))
    assert np.all(model.std_std > 0)
    report = str(tmp_path / "r.json")
    assert run(["evaluate", "--model", model_path, "--input", synth_csv,
                "--report", report]) == 0
    # style columns carry no class signal in the synthetic corpus, so the
    # combined model trails plain tfidf; the wiring is what matters here
    assert json.loads(open(report).read())["accuracy"] >= 0.85


def test_train_gbdt_on_dense_embeddings(tmp_path):
    rng = np.random.default_rng(3)
    lines = []
    for i in range(40):
        label = i % 2
        vec = rng.normal(size=3) + (3.0 if label else -3.0)
        lines.append(json.dumps({"id": f"e{i}", "vec": vec.tolist(), "label": label}))
    dense_path = tmp_path / "emb.jsonl"
    dense_path.write_text("\n".join(lines) + "\n")
    model = str(tmp_path / "m.aitd")
    assert run(["train", "--algo", "gbdt", "--features", "dense",
                "--dense-input", str(dense_path), "--rounds", "15",
                "--model", model]) == 0
    preds = str(tmp_path / "p.jsonl")
    assert run(["predict", "--model", model, "--input", str(dense_path),
                "--output", preds]) == 0
    rows = [json.loads(l) for l in open(preds).read().splitlines()[1:]]
    assert all(r["label"] == i % 2 for i, r in enumerate(rows))


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------


@pytest.fixture()
def trained_gbdt(tmp_path, synth_csv):
    model_path = str(tmp_path / "g.aitd")
    assert run(["train", "--input", synth_csv, "--algo", "gbdt",
                "--rounds", "20", "--model", model_path]) == 0
    return model_path


def test_predict_writes_header_and_rows(tmp_path, synth_csv, trained_gbdt):
    out = str(tmp_path / "preds.jsonl")
    assert run(["predict", "--model", trained_gbdt, "--input", synth_csv,
                "--output", out]) == 0
    lines = open(out).read().splitlines()
    header = json.loads(lines[0])
    assert header == {"model_kind": "gbdt", "score_kind": "probability", "threshold": 0.5}
    assert len(lines) == 1 + 80
    first = json.loads(lines[1])
    assert set(first) == {"id", "score", "label"}
    assert first["label"] in (0, 1)
    assert 0.0 < first["score"] < 1.0
    for line in lines[1:]:
        row = json.loads(line)
        assert row["label"] == (1 if row["score"] >= 0.5 else 0)


def test_predict_empty_input_header_only(tmp_path, trained_gbdt):
    empty = tmp_path / "empty.csv"
    empty.write_text("id,text,label\n")
    out = str(tmp_path / "preds.jsonl")
    assert run(["predict", "--model", trained_gbdt, "--input", str(empty),
                "--output", out]) == 0
    lines = open(out).read().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["score_kind"] == "probability"


def test_predict_unlabeled_input_ok(tmp_path, trained_gbdt):
    unlabeled = tmp_path / "u.csv"
    unlabeled.write_text('id,text\nq1,w003 w001 aimark01 aimark02\nq2,humark01 w001 humark03\n')
    out = str(tmp_path / "preds.jsonl")
    assert run(["predict", "--model", trained_gbdt, "--input", str(unlabeled),
                "--output", out]) == 0
    rows = [json.loads(l) for l in open(out).read().splitlines()[1:]]
    assert [r["id"] for r in rows] == ["q1", "q2"]
    assert rows[0]["label"] == 1 and rows[1]["label"] == 0


def test_predict_svm_threshold_override(tmp_path, synth_csv):
    model_path = str(tmp_path / "s.aitd")
    assert run(["train", "--input", synth_csv, "--algo", "svm",
                "--model", model_path]) == 0
    out = str(tmp_path / "p.jsonl")
    assert run(["predict", "--model", model_path, "--input", synth_csv,
                "--output", out, "--threshold=-1e9"]) == 0
    lines = open(out).read().splitlines()
    assert json.loads(lines[0])["score_kind"] == "decision"
    assert all(json.loads(l)["label"] == 1 for l in lines[1:])


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def make_stub_model(tmp_path, tn=246, fp=54, fn=40, tp=260):
    """A handcrafted linear model and corpus that reproduce exact confusion
    counts end-to-end: token 'aisig' scores +1 (class 1), 'husig' -1."""
    vocab = Vocabulary(terms=["aisig", "husig"], doc_freq=np.array([1, 1], dtype=np.int64),
                       n_docs_fitted=2)
    model = SvmModel(
        params=SvmParams(),
        weights=np.array([1.0, -1.0]),
        bias=0.0,
        std_cols=np.zeros(0, dtype=np.int64),
        std_mean=np.zeros(0),
        std_std=np.zeros(0),
        vocabulary=vocab,
        feature_spec=FeatureSpec(kind="counts"),
        preprocess_config=PreprocessConfig(),
        stopwords=(),
    )
    model_path = str(tmp_path / "stub.aitd")
    save_model(model, model_path)
    rows = ["id,text,label"]
    counter = 0
    for count, text, label in ((tn, "husig", 0), (fp, "aisig", 0),
                               (fn, "husig", 1), (tp, "aisig", 1)):
        for _ in range(count):
            rows.append(f"d{counter},{text},{label}")
            counter += 1
    corpus_path = tmp_path / "eval.csv"
    corpus_path.write_text("\n".join(rows) + "\n")
    return model_path, str(corpus_path)


def test_evaluate_stub_reproduces_reference_confusion_row(tmp_path, capsys):
    model_path, corpus_path = make_stub_model(tmp_path)
    report_path = str(tmp_path / "report.json")
    assert run(["evaluate", "--model", model_path, "--input", corpus_path,
                "--report", report_path]) == 0
    table = capsys.readouterr().out
    lines = [l for l in table.splitlines() if l.strip()]
    assert "0.86" in lines[1] and "0.82" in lines[1] and "0.84" in lines[1]
    assert "0.83" in lines[2] and "0.87" in lines[2] and "0.85" in lines[2]
    report = json.loads(open(report_path).read())
    assert report["confusion"] == {"tn": 246, "fp": 54, "fn": 40, "tp": 260}
    assert abs(report["accuracy"] - 0.84333) < 1e-4
    assert set(report) == {"confusion", "classes", "accuracy", "macro"}
    assert set(report["classes"]["0"]) == {"precision", "recall", "f1", "support"}


def test_evaluate_perfect_stub_all_ones(tmp_path, capsys):
    model_path, corpus_path = make_stub_model(tmp_path, tn=5, fp=0, fn=0, tp=5)
    report_path = str(tmp_path / "r.json")
    assert run(["evaluate", "--model", model_path, "--input", corpus_path,
                "--report", report_path]) == 0
    out = capsys.readouterr().out
    assert out.count("1.00") >= 7
    assert json.loads(open(report_path).read())["accuracy"] == 1.0


def test_evaluate_unlabeled_is_data_error(tmp_path, trained_gbdt, capsys):
    path = tmp_path / "u.csv"
    path.write_text("id,text,label\na,w000 w001,\nb,w002,1\n")
    assert run(["evaluate", "--model", trained_gbdt, "--input", str(path),
                "--report", str(tmp_path / "r.json")]) == 2


# ---------------------------------------------------------------------------
# termfreq
# ---------------------------------------------------------------------------


def test_termfreq_file_output(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text('id,text,label\nx,a a b,0\ny,b c,1\n')
    out = str(tmp_path / "tf.json")
    assert run(["termfreq", "--input", str(path), "--top", "2", "--out", out]) == 0
    table = json.loads(open(out).read())
    assert table["overall"] == [["a", 2], ["b", 2]]
    assert table["by_label"]["1"] == [["b", 1], ["c", 1]]


def test_termfreq_top_zero_usage_error(tmp_path, synth_csv):
    assert run(["termfreq", "--input", synth_csv, "--top", "0"]) == 1


def test_termfreq_csv_output(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text('id,text,label\nx,a a b,0\ny,b c,1\n')
    out = str(tmp_path / "tf.csv")
    assert run(["termfreq", "--input", str(path), "--top", "2",
                "--out", out, "--out-format", "csv"]) == 0
    lines = open(out).read().splitlines()
    assert lines[0] == "scope,term,count"
    assert "overall,a,2" in lines and "1,b,1" in lines


def test_termfreq_deterministic(tmp_path, synth_csv):
    a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    assert run(["termfreq", "--input", synth_csv, "--out", a]) == 0
    assert run(["termfreq", "--input", synth_csv, "--out", b]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()


# ---------------------------------------------------------------------------
# inspect
# ---------------------------------------------------------------------------


def test_inspect_gbdt_surfaces_marker_features(tmp_path, synth_csv, trained_gbdt, capsys):
    before = open(trained_gbdt, "rb").read()
    assert run(["inspect", "--model", trained_gbdt]) == 0
    out = capsys.readouterr().out
    assert "model_kind: gbdt" in out
    gain_section = out.split("top_features_by_gain:")[1]
    assert "aimark" in gain_section or "humark" in gain_section
    assert open(trained_gbdt, "rb").read() == before  # read-only


def test_inspect_svm_weight_list_clamped(tmp_path, synth_csv, capsys):
    model_path = str(tmp_path / "s.aitd")
    assert run(["train", "--input", synth_csv, "--algo", "svm",
                "--model", model_path]) == 0
    capsys.readouterr()
    assert run(["inspect", "--model", model_path]) == 0
    out = capsys.readouterr().out
    model = load_model(model_path)
    listed = out.split("top_features_by_weight:")[1].strip().splitlines()
    assert len(listed) == min(20, model.n_features)


def test_inspect_unreadable_model_is_data_error(tmp_path):
    bad = tmp_path / "bad.aitd"
    bad.write_bytes(b"XXXXgarbage")
    assert run(["inspect", "--model", str(bad)]) == 2


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------


def test_full_pipeline_determinism_end_to_end(tmp_path, synth_csv):
    """split -> train -> predict -> evaluate twice: all artifacts byte-identical."""
    artifacts = []
    for tag in ("r1", "r2"):
        d = tmp_path / tag
        d.mkdir()
        tr, te = str(d / "train.csv"), str(d / "test.csv")
        model = str(d / "model.aitd")
        preds = str(d / "preds.jsonl")
        report = str(d / "report.json")
        assert run(["split", "--input", synth_csv, "--seed", "11",
                    "--out-train", tr, "--out-test", te]) == 0
        assert run(["train", "--input", tr, "--algo", "gbdt", "--rounds", "15",
                    "--seed", "11", "--model", model]) == 0
        assert run(["predict", "--model", model, "--input", te, "--output", preds]) == 0
        assert run(["evaluate", "--model", model, "--input", te,
                    "--report", report]) == 0
        artifacts.append(tuple(open(p, "rb").read() for p in (tr, te, model, preds, report)))
    assert artifacts[0] == artifacts[1]


def test_fitting_touches_training_documents_only(tmp_path, synth_csv, monkeypatch):
    """Vocabulary fitting must see train ids only; evaluation must not refit."""
    tr, te = str(tmp_path / "train.csv"), str(tmp_path / "test.csv")
    assert run(["split", "--input", synth_csv, "--seed", "2",
                "--out-train", tr, "--out-test", te]) == 0
    train_ids = {json_line.split(",")[0] for json_line in open(tr).read().splitlines()[1:]}
    test_ids = {json_line.split(",")[0] for json_line in open(te).read().splitlines()[1:]}

    seen = []
    real_fit = features.fit_vocabulary

    def spy(token_seqs, spec):
        seen.extend(s.doc_id for s in token_seqs)
        return real_fit(token_seqs, spec)

    monkeypatch.setattr(features, "fit_vocabulary", spy)
    model = str(tmp_path / "m.aitd")
    assert run(["train", "--input", tr, "--algo", "gbdt", "--rounds", "5",
                "--model", model]) == 0
    assert set(seen) == train_ids
    assert set(seen).isdisjoint(test_ids)

    fits_after_training = len(seen)
    assert run(["evaluate", "--model", model, "--input", te,
                "--report", str(tmp_path / "r.json")]) == 0
    assert len(seen) == fits_after_training  # no refitting on test data


def test_dense_pipeline_end_to_end(tmp_path):
    """Linearly separable embeddings through train/predict/evaluate."""
    rng = np.random.default_rng(0)
    lines = []
    for i in range(60):
        label = i % 2
        vec = rng.normal(size=4) + (4.0 if label else -4.0)
        lines.append(json.dumps({"id": f"e{i}", "vec": vec.tolist(), "label": label}))
    dense_path = tmp_path / "emb.jsonl"
    dense_path.write_text("\n".join(lines) + "\n")
    model = str(tmp_path / "m.aitd")
    assert run(["train", "--algo", "svm", "--features", "dense",
                "--dense-input", str(dense_path), "--model", model,
                "--svm-lambda", "0.001", "--epochs", "30"]) == 0
    report = str(tmp_path / "r.json")
    assert run(["evaluate", "--model", model, "--input", str(dense_path),
                "--report", report]) == 0
    assert json.loads(open(report).read())["accuracy"] == 1.0


def test_unknown_command_and_bare_invocation(capsys):
    assert run(["frobnicate"]) == 1
    assert run([]) == 1
    assert run(["--help"]) == 0


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "aitd.cli", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "split" in proc.stdout and "termfreq" in proc.stdout
