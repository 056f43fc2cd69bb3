"""Word-level normalization metrics.

All corpus figures are micro averages: counts are summed over sentences first.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence

from .exceptions import LengthMismatch


@dataclass
class EvalCounts:
    need_norm: int = 0
    pred_need_norm: int = 0
    tp_need_norm: int = 0
    need_no_norm: int = 0
    tp_need_no_norm: int = 0
    n_token: int = 0
    tp_token: int = 0

    def __add__(self, other: "EvalCounts") -> "EvalCounts":
        return EvalCounts(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def to_dict(self) -> dict:
        return asdict(self)


def count_sentence(source_words: Sequence[str], target_words: Sequence[str],
                   predicted_words: Sequence[str]) -> EvalCounts:
    if not len(source_words) == len(target_words) == len(predicted_words):
        raise LengthMismatch(
            f"source/target/predicted lengths {len(source_words)}/"
            f"{len(target_words)}/{len(predicted_words)}"
        )
    c = EvalCounts(n_token=len(source_words))
    for src, tgt, pred in zip(source_words, target_words, predicted_words):
        if pred != src:
            c.pred_need_norm += 1
        if pred == tgt:
            c.tp_token += 1
        if src != tgt:
            c.need_norm += 1
            c.tp_need_norm += pred == tgt
        else:
            c.need_no_norm += 1
            c.tp_need_no_norm += pred == src
    return c


def aggregate(counts: Iterable[EvalCounts]) -> EvalCounts:
    total = EvalCounts()
    for c in counts:
        total = total + c
    return total


def precision_recall_f1(counts: EvalCounts) -> tuple[float, float, float]:
    if counts.pred_need_norm == 0:
        precision = 1.0 if counts.need_norm == 0 else 0.0
    else:
        precision = counts.tp_need_norm / counts.pred_need_norm
    recall = counts.tp_need_norm / counts.need_norm if counts.need_norm else 1.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def integrity(counts: EvalCounts) -> float:
    if counts.need_no_norm == 0:
        return 1.0
    return counts.tp_need_no_norm / counts.need_no_norm


def sentence_accuracy(counts: EvalCounts | Iterable[EvalCounts]) -> float:
    """Micro-averaged token accuracy; empty sentences contribute nothing."""
    total = counts if isinstance(counts, EvalCounts) else aggregate(counts)
    return total.tp_token / total.n_token if total.n_token else 0.0


def evaluate(sources: Sequence[Sequence[str]], targets: Sequence[Sequence[str]],
             predictions: Sequence[Sequence[str]]) -> dict:
    """Full report: the five ratios plus the raw counts."""
    if not len(sources) == len(targets) == len(predictions):
        raise LengthMismatch("corpus sizes differ")
    total = aggregate(count_sentence(s, t, p) for s, t, p in zip(sources, targets, predictions))
    return report_from_counts(total)


def report_from_counts(total: EvalCounts) -> dict:
    precision, recall, f1 = precision_recall_f1(total)
    return {
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "integrity": integrity(total),
        "accuracy": sentence_accuracy(total),
        "counts": total.to_dict(),
    }
