"""Span-level scoring of predicted links against gold annotations."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

from .model import NONE_LABEL, LabeledSpan, Question, spans_overlap


@dataclass(frozen=True)
class EvalCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "EvalCounts") -> "EvalCounts":
        return EvalCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @property
    def n_gold(self) -> int:
        return self.tp + self.fn

    @property
    def n_predicted(self) -> int:
        return self.tp + self.fp


def round_half_up(value: float, places: int = 1) -> float:
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class Metrics:
    """Precision, recall and F1 as unrounded percentages."""

    precision: float
    recall: float
    f1: float

    def rounded(self, places: int = 1) -> "Metrics":
        return Metrics(
            round_half_up(self.precision, places),
            round_half_up(self.recall, places),
            round_half_up(self.f1, places),
        )


def _keys(spans: Iterable[LabeledSpan], case_sensitive: bool) -> Counter:
    keys = Counter()
    for s in spans:
        label = s.target.render()
        keys[(s.start_char, s.end_char, label if case_sensitive else label.lower())] += 1
    return keys


def evaluate(predicted: Iterable[LabeledSpan], gold: Iterable[LabeledSpan], case_sensitive: bool = True) -> EvalCounts:
    """One-to-one multiset matching on (start, end, rendered target)."""
    pred = _keys(predicted, case_sensitive)
    ref = _keys(gold, case_sensitive)
    tp = sum((pred & ref).values())
    return EvalCounts(tp, sum(pred.values()) - tp, sum(ref.values()) - tp)


def evaluate_corpus(predicted: Sequence[Sequence[LabeledSpan]], gold: Sequence[Sequence[LabeledSpan]], case_sensitive: bool = True) -> EvalCounts:
    """Micro-averaged counts: per-question counts summed over the corpus."""
    if len(predicted) != len(gold):
        raise ValueError(f"{len(predicted)} predicted questions vs {len(gold)} gold questions")
    total = EvalCounts()
    for p, g in zip(predicted, gold):
        total += evaluate(p, g, case_sensitive)
    return total


def metrics_from_counts(counts: EvalCounts) -> Metrics:
    if min(counts.tp, counts.fp, counts.fn) < 0:
        raise ValueError(f"negative counts: {counts}")
    p = 100.0 * counts.tp / counts.n_predicted if counts.n_predicted else 0.0
    r = 100.0 * counts.tp / counts.n_gold if counts.n_gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return Metrics(p, r, f1)


def project_tokens(question: Question, spans: Iterable[LabeledSpan], kind_level: bool = False) -> list[str]:
    """Per-token labels: the covering span's target string, else ``NONE``.

    With ``kind_level`` the label is only ``table`` or ``column``.
    """
    spans = list(spans)
    clashes = spans_overlap(spans)
    if clashes:
        a, b = clashes[0]
        raise ValueError(f"overlapping spans {a.key} and {b.key}")
    labels = [NONE_LABEL] * len(question.tokens)
    for s in spans:
        label = s.target.kind.value if kind_level else s.target.render()
        for i in question.tokens_within(s.start_char, s.end_char):
            labels[i] = label
    return labels


def format_report(rows: Sequence[tuple[str, EvalCounts]], em: dict | None = None) -> str:
    """Aligned text table with the schema-linking columns: F1, Pre., Rec., #FP, #FN, #TP."""
    header = ["system", "EM", "F1", "Pre.", "Rec.", "#FP", "#FN", "#TP"]
    if not em:
        header.remove("EM")
    body = []
    for name, counts in rows:
        m = metrics_from_counts(counts).rounded()
        cells = [name]
        if em:
            cells.append("" if em.get(name) is None else f"{em[name]:.1f}")
        cells += [f"{m.f1:.1f}", f"{m.precision:.1f}", f"{m.recall:.1f}",
                  str(counts.fp), str(counts.fn), str(counts.tp)]
        body.append(cells)
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = []
    for row in [header] + body:
        first = row[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join([first] + rest).rstrip())
    return "\n".join(lines) + "\n"
