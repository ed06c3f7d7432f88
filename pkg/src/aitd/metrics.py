"""Confusion matrix and the per-class precision/recall/F1/accuracy report.

Class 1 (AI-generated) is the positive class. Any 0/0 metric is defined as
0.0 so reports stay total-ordered and JSON-clean. Report JSON keeps full
double precision; the rendered table rounds to 2 decimals.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import AitdError


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    def __post_init__(self):
        for name in ("tn", "fp", "fn", "tp"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise AitdError(f"confusion count {name} must be a nonnegative integer")

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise AitdError(f"label lengths differ: {len(y_true)} vs {len(y_pred)}")
    if not y_true:
        raise AitdError("cannot compute a confusion matrix on zero labels")
    tn = fp = fn = tp = 0
    for t, p in zip(y_true, y_pred):
        if t not in (0, 1) or p not in (0, 1):
            raise AitdError(f"labels must be 0 or 1, got true={t!r} pred={p!r}")
        if t == 1:
            if p == 1:
                tp += 1
            else:
                fn += 1
        else:
            if p == 1:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tn=tn, fp=fp, fn=fn, tp=tp)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def _f1(precision: float, recall: float) -> float:
    s = precision + recall
    return 2.0 * precision * recall / s if s else 0.0


@dataclass(frozen=True)
class EvalReport:
    cm: ConfusionMatrix
    precision_0: float
    recall_0: float
    f1_0: float
    precision_1: float
    recall_1: float
    f1_1: float
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float

    @property
    def support_0(self) -> int:
        return self.cm.tn + self.cm.fp

    @property
    def support_1(self) -> int:
        return self.cm.tp + self.cm.fn


def report(cm: ConfusionMatrix) -> EvalReport:
    if cm.total < 1:
        raise AitdError("confusion matrix total must be >= 1")
    precision_1 = _ratio(cm.tp, cm.tp + cm.fp)
    recall_1 = _ratio(cm.tp, cm.tp + cm.fn)
    precision_0 = _ratio(cm.tn, cm.tn + cm.fn)
    recall_0 = _ratio(cm.tn, cm.tn + cm.fp)
    f1_0 = _f1(precision_0, recall_0)
    f1_1 = _f1(precision_1, recall_1)
    return EvalReport(
        cm=cm,
        precision_0=precision_0,
        recall_0=recall_0,
        f1_0=f1_0,
        precision_1=precision_1,
        recall_1=recall_1,
        f1_1=f1_1,
        accuracy=(cm.tp + cm.tn) / cm.total,
        macro_precision=(precision_0 + precision_1) / 2.0,
        macro_recall=(recall_0 + recall_1) / 2.0,
        macro_f1=(f1_0 + f1_1) / 2.0,
    )


def report_to_dict(rep: EvalReport) -> dict:
    """The report JSON schema."""
    return {
        "confusion": {"tn": rep.cm.tn, "fp": rep.cm.fp, "fn": rep.cm.fn, "tp": rep.cm.tp},
        "classes": {
            "0": {
                "precision": rep.precision_0,
                "recall": rep.recall_0,
                "f1": rep.f1_0,
                "support": rep.support_0,
            },
            "1": {
                "precision": rep.precision_1,
                "recall": rep.recall_1,
                "f1": rep.f1_1,
                "support": rep.support_1,
            },
        },
        "accuracy": rep.accuracy,
        "macro": {
            "precision": rep.macro_precision,
            "recall": rep.macro_recall,
            "f1": rep.macro_f1,
        },
    }


def compare_models(reports: dict) -> list[dict]:
    """Rank named reports (EvalReport or bare accuracy float) by accuracy
    descending, ties broken by name ascending."""
    if not reports:
        raise AitdError("compare_models needs at least one report")
    rows = []
    for name, rep in reports.items():
        acc = rep.accuracy if isinstance(rep, EvalReport) else float(rep)
        rows.append({"name": name, "accuracy": acc})
    rows.sort(key=lambda r: (-r["accuracy"], r["name"]))
    return rows


def format_report_table(name: str, rep: EvalReport) -> str:
    """Two-decimal per-class results grid: one row per class with
    precision/recall/F1, accuracy in the last column of the first row."""
    header = f"{'Algorithm Name':<18}{'Class':<7}{'Precision':<11}{'Recall':<8}{'F1 Score':<10}{'Accuracy':<8}"
    row0 = (
        f"{name:<18}{'0':<7}{rep.precision_0:<11.2f}{rep.recall_0:<8.2f}"
        f"{rep.f1_0:<10.2f}{rep.accuracy:<8.2f}"
    )
    row1 = f"{'':<18}{'1':<7}{rep.precision_1:<11.2f}{rep.recall_1:<8.2f}{rep.f1_1:<10.2f}"
    return "\n".join([header, row0, row1])
