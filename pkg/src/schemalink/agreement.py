"""Inter-annotator agreement: Cohen's kappa on either-annotated tokens, and pairwise F1."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .evaluator import evaluate_corpus, metrics_from_counts, project_tokens
from .model import NONE_LABEL, LabeledSpan, Question

Z_95 = 1.96


class UndefinedKappaError(ValueError):
    pass


@dataclass(frozen=True)
class AgreementReport:
    kappa: float
    ci95_low: float
    ci95_high: float
    p_value: float
    observed_agreement: float
    expected_agreement: float
    n_tokens_considered: int
    pairwise_f1: float
    confusion: Counter = field(default_factory=Counter, compare=False)

    def format(self, top: int = 10) -> str:
        lines = [
            f"kappa        {self.kappa:.3f}",
            f"95% CI       {self.ci95_low:.3f} - {self.ci95_high:.3f}  (normal approximation)",
            f"p-value      {self.p_value:.3g}  (one-sided, H0: kappa = 0)",
            f"p_o          {self.observed_agreement:.4f}",
            f"p_e          {self.expected_agreement:.4f}",
            f"tokens       {self.n_tokens_considered}",
            f"pairwise F1  {self.pairwise_f1:.1f}",
        ]
        agree = sum(c for (a, b), c in self.confusion.items() if a == b)
        lines.append(f"agreeing tokens {agree}, disagreeing tokens {self.n_tokens_considered - agree}")
        disagreements = [(pair, c) for pair, c in self.confusion.most_common() if pair[0] != pair[1]]
        if disagreements:
            lines.append("most frequent disagreements (A -> B):")
            for (a, b), c in disagreements[:top]:
                lines.append(f"  {c:5d}  {a} -> {b}")
        return "\n".join(lines) + "\n"


def _token_pairs(questions, annotations_a, annotations_b, kind_level):
    if not len(questions) == len(annotations_a) == len(annotations_b):
        raise ValueError("annotation sets must cover the same questions")
    pairs = []
    for q, a, b in zip(questions, annotations_a, annotations_b):
        la = project_tokens(q, a, kind_level)
        lb = project_tokens(q, b, kind_level)
        pairs.extend((x, y) for x, y in zip(la, lb) if x != NONE_LABEL or y != NONE_LABEL)
    return pairs


def kappa_from_pairs(pairs: Sequence[tuple[str, str]]) -> tuple[float, float, float, float, float, float]:
    """(kappa, p_o, p_e, se, ci_half_width, p_value) for paired categorical labels.

    Large-sample formulas: SE = sqrt(p_o(1-p_o)) / ((1-p_e) sqrt(n)), null SE =
    sqrt(p_e / (n (1-p_e))). When p_e = 1 both raters used one category and
    agree everywhere; kappa is taken as 1 and the p-value is NaN.
    """
    n = len(pairs)
    if n == 0:
        raise UndefinedKappaError("no token carries a label from either annotator")
    p_o = sum(a == b for a, b in pairs) / n
    ma = Counter(a for a, _ in pairs)
    mb = Counter(b for _, b in pairs)
    p_e = sum(ma[c] * mb[c] for c in ma) / (n * n)
    if p_e >= 1.0:
        return 1.0, p_o, p_e, 0.0, 0.0, math.nan
    kappa = (p_o - p_e) / (1 - p_e)
    se = math.sqrt(p_o * (1 - p_o)) / ((1 - p_e) * math.sqrt(n))
    se0 = math.sqrt(p_e / (n * (1 - p_e)))
    p_value = 0.5 * math.erfc(kappa / se0 / math.sqrt(2)) if se0 > 0 else (0.0 if kappa > 0 else 1.0)
    return kappa, p_o, p_e, se, Z_95 * se, p_value


def cohen_kappa(questions: Sequence[Question], annotations_a: Sequence[Sequence[LabeledSpan]], annotations_b: Sequence[Sequence[LabeledSpan]], kind_level: bool = False) -> AgreementReport:
    """Agreement between two annotators, counting only tokens either one labeled.

    Categories are full target strings plus NONE, or just table/column/NONE
    with ``kind_level``.
    """
    pairs = _token_pairs(questions, annotations_a, annotations_b, kind_level)
    kappa, p_o, p_e, _, half, p_value = kappa_from_pairs(pairs)
    return AgreementReport(
        kappa=kappa,
        ci95_low=kappa - half,
        ci95_high=kappa + half,
        p_value=p_value,
        observed_agreement=p_o,
        expected_agreement=p_e,
        n_tokens_considered=len(pairs),
        pairwise_f1=pairwise_f1(annotations_a, annotations_b),
        confusion=Counter(pairs),
    )


def pairwise_f1(annotations_a: Sequence[Sequence[LabeledSpan]], annotations_b: Sequence[Sequence[LabeledSpan]]) -> float:
    """Span-level F1 (percent) of B scored against A as gold."""
    return metrics_from_counts(evaluate_corpus(annotations_b, annotations_a)).f1
