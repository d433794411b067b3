"""Classifier evaluation: accuracy, macro F1, cross-entropy, robustness.

Predictions arrive as JSONL files, one file per test variant. Metrics
treat the binary task symmetrically: per-class precision, recall, and
F1 use the 0/0 -> 0 convention so every quantity is total, and macro F1
averages over both classes whether or not they appear.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

from harmsynth.errors import PredictionFormatError

__all__ = [
    "Prediction",
    "PredictionSet",
    "ClassMetrics",
    "MetricsReport",
    "load_predictions",
    "accuracy",
    "per_class_metrics",
    "macro_f1",
    "mean_cross_entropy",
    "robustness_variance",
    "evaluate_predictions",
]

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class Prediction:
    id: str
    y_true: int
    y_pred: int
    p1: float | None = None

    def __post_init__(self):
        if self.y_true not in (0, 1):
            raise PredictionFormatError(f"y_true must be 0 or 1, got {self.y_true!r}")
        if self.y_pred not in (0, 1):
            raise PredictionFormatError(f"y_pred must be 0 or 1, got {self.y_pred!r}")
        if self.p1 is not None and not 0.0 <= self.p1 <= 1.0:
            raise PredictionFormatError(f"p1 must be in [0, 1], got {self.p1!r}")


@dataclass(frozen=True)
class PredictionSet:
    """One variant's predictions over the test set."""

    items: tuple[Prediction, ...]
    variant_tag: str = ""

    def __post_init__(self):
        if not self.items:
            raise PredictionFormatError("prediction set is empty")
        seen = set()
        for item in self.items:
            if item.id in seen:
                raise PredictionFormatError(f"duplicate prediction id: {item.id!r}")
            seen.add(item.id)


def _as_binary(value, field: str, line: int):
    if isinstance(value, bool) or not isinstance(value, int):
        raise PredictionFormatError(f"line {line}: {field} must be an integer 0 or 1")
    return value


def load_predictions(path, variant_tag: str | None = None) -> PredictionSet:
    """Read one prediction file.

    Rows may carry a `variant` field; all rows that do must agree, and
    an explicit ``variant_tag`` argument overrides it. With neither, the
    file path stem names the variant.
    """
    items = []
    seen_variant = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PredictionFormatError(
                    f"line {line_no}: invalid JSON: {exc}"
                ) from exc
            if not isinstance(row, dict):
                raise PredictionFormatError(f"line {line_no}: row is not an object")
            for key in ("id", "y_true", "y_pred"):
                if key not in row:
                    raise PredictionFormatError(f"line {line_no}: missing {key}")
            p1 = row.get("p1")
            if p1 is not None and not isinstance(p1, (int, float)):
                raise PredictionFormatError(f"line {line_no}: p1 must be a number")
            try:
                items.append(
                    Prediction(
                        id=str(row["id"]),
                        y_true=_as_binary(row["y_true"], "y_true", line_no),
                        y_pred=_as_binary(row["y_pred"], "y_pred", line_no),
                        p1=float(p1) if p1 is not None else None,
                    )
                )
            except PredictionFormatError as exc:
                raise PredictionFormatError(f"{path}: {exc}") from exc
            row_variant = row.get("variant")
            if row_variant is not None:
                if seen_variant is not None and row_variant != seen_variant:
                    raise PredictionFormatError(
                        f"line {line_no}: conflicting variant tags "
                        f"{seen_variant!r} and {row_variant!r}"
                    )
                seen_variant = row_variant
    if not items:
        raise PredictionFormatError(f"{path}: no predictions")
    tag = variant_tag or seen_variant or Path(path).stem
    try:
        return PredictionSet(items=tuple(items), variant_tag=str(tag))
    except PredictionFormatError as exc:
        raise PredictionFormatError(f"{path}: {exc}") from exc


def accuracy(preds: PredictionSet) -> float:
    hits = sum(1 for p in preds.items if p.y_pred == p.y_true)
    return hits / len(preds.items)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


def per_class_metrics(preds: PredictionSet) -> dict[int, ClassMetrics]:
    out = {}
    for cls in (0, 1):
        tp = sum(1 for p in preds.items if p.y_pred == cls and p.y_true == cls)
        fp = sum(1 for p in preds.items if p.y_pred == cls and p.y_true != cls)
        fn = sum(1 for p in preds.items if p.y_pred != cls and p.y_true == cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        out[cls] = ClassMetrics(precision=precision, recall=recall, f1=f1)
    return out


def macro_f1(preds: PredictionSet) -> float:
    per_class = per_class_metrics(preds)
    return (per_class[0].f1 + per_class[1].f1) / 2.0


def mean_cross_entropy(preds: PredictionSet) -> float:
    """Mean negative log likelihood of the true labels.

    Probabilities are clipped away from 0 and 1 so a hard 0/1 output
    costs a large finite penalty instead of infinity.
    """
    total = 0.0
    for p in preds.items:
        if p.p1 is None:
            raise PredictionFormatError(
                f"prediction {p.id!r} has no p1; cross-entropy needs probabilities"
            )
        prob = min(1.0 - PROB_FLOOR, max(PROB_FLOOR, p.p1))
        total += -math.log(prob) if p.y_true == 1 else -math.log(1.0 - prob)
    return total / len(preds.items)


def robustness_variance(variant_preds: list[PredictionSet]) -> float:
    """Population variance of per-variant mean cross-entropy.

    Low variance across perturbed test variants means the classifier's
    confidence profile survives the perturbations.
    """
    if len(variant_preds) < 2:
        raise PredictionFormatError(
            f"robustness needs at least 2 variants, got {len(variant_preds)}"
        )
    means = [mean_cross_entropy(v) for v in variant_preds]
    center = sum(means) / len(means)
    return sum((m - center) ** 2 for m in means) / len(means)


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    per_class: dict[int, ClassMetrics]
    macro_f1: float
    mean_loss: float | None = None

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class": {
                str(cls): {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                }
                for cls, m in self.per_class.items()
            },
            "macro_f1": self.macro_f1,
            "mean_loss": self.mean_loss,
        }


def evaluate_predictions(preds: PredictionSet) -> MetricsReport:
    has_probs = all(p.p1 is not None for p in preds.items)
    return MetricsReport(
        accuracy=accuracy(preds),
        per_class=per_class_metrics(preds),
        macro_f1=macro_f1(preds),
        mean_loss=mean_cross_entropy(preds) if has_probs else None,
    )
