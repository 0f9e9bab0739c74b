"""Label statistics, Pearson correlation and the database-disjoint split."""

from __future__ import annotations

import math
import random
from collections import Counter, OrderedDict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .model import AnnotatedExample, TargetKind

KINDS = ("Total", "Table", "Column")
STRATA = ("all", "l=1", "l>=2")
EXACT_SPLIT_MAX_DBS = 30


class CorrelationError(ValueError):
    pass


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class StratumStats:
    n_labels: int
    max_per_sentence: int
    min_per_sentence: int
    avg_per_sentence: float
    std_per_sentence: float


@dataclass(frozen=True)
class LabelStats:
    n_sentences: int
    rows: "OrderedDict[tuple[str, str], StratumStats]"

    def __getitem__(self, key: tuple[str, str]) -> StratumStats:
        return self.rows[key]

    @staticmethod
    def row_name(kind: str, stratum: str) -> str:
        if stratum == "all":
            return kind
        return f"{kind} ({stratum.replace('>=', '≥')})"

    def format(self) -> str:
        header = ["", "#LABEL", "MAX", "MIN", "AVG", "STD"]
        body = []
        for (kind, stratum), s in self.rows.items():
            name = self.row_name(kind, stratum)
            if kind != "Total":
                name = "  " + name
            body.append([name, f"{s.n_labels:,}", str(s.max_per_sentence), str(s.min_per_sentence),
                         f"{s.avg_per_sentence:.2f}", f"{s.std_per_sentence:.3f}"])
        widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
        lines = [
            "  ".join([r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]).rstrip()
            for r in [header] + body
        ]
        lines.append(f"sentences: {self.n_sentences}")
        return "\n".join(lines) + "\n"

    def csv_rows(self) -> list[list[str]]:
        out = [["row", "n_labels", "max", "min", "avg", "std"]]
        for (kind, stratum), s in self.rows.items():
            out.append([self.row_name(kind, stratum), str(s.n_labels), str(s.max_per_sentence),
                        str(s.min_per_sentence), f"{s.avg_per_sentence:.4f}", f"{s.std_per_sentence:.4f}"])
        return out


def dataset_stats(examples: Sequence[AnnotatedExample]) -> LabelStats:
    """Per-sentence label counts in nine strata: {Total, Table, Column} x {all, l=1, l>=2}.

    STD is the population standard deviation of the per-sentence counts.
    """
    per_sentence = []
    for ex in examples:
        c = Counter()
        for span in ex.gold_spans:
            kind = "Table" if span.target.kind is TargetKind.TABLE else "Column"
            length = "l=1" if span.token_length == 1 else "l>=2"
            for k in ("Total", kind):
                for s in ("all", length):
                    c[(k, s)] += 1
        per_sentence.append(c)

    rows = OrderedDict()
    for stratum in STRATA:
        for kind in KINDS:
            counts = np.array([c[(kind, stratum)] for c in per_sentence], dtype=float)
            if counts.size == 0:
                rows[(kind, stratum)] = StratumStats(0, 0, 0, 0.0, 0.0)
                continue
            rows[(kind, stratum)] = StratumStats(
                n_labels=int(counts.sum()),
                max_per_sentence=int(counts.max()),
                min_per_sentence=int(counts.min()),
                avg_per_sentence=float(counts.mean()),
                std_per_sentence=float(counts.std(ddof=0)),
            )
    return LabelStats(len(per_sentence), rows)


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p_value: float
    n: int

    def format(self, x_name: str = "x", y_name: str = "y") -> str:
        return (f"pearson r({x_name}, {y_name}) = {self.r:.3f}  "
                f"p = {self.p_value:.3g} (two-sided t-test, df = {self.n - 2})  n = {self.n}\n")


def pearson(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Sample Pearson r with a two-sided p-value from the t distribution (n-2 df)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise CorrelationError(f"series lengths differ: {x.size} vs {y.size}")
    n = x.size
    if n < 3:
        raise CorrelationError(f"need at least 3 points, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise CorrelationError("correlation undefined for a constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return CorrelationResult(r, 0.0, n)
    t = r * math.sqrt(n - 2) / math.sqrt(1 - r * r)
    p = 2 * stats.t.sf(abs(t), n - 2)
    return CorrelationResult(r, float(p), n)


def _exact_subset(sizes: list[int], target: int) -> list[int]:
    """Indices of a subset with sum closest to ``target`` (ties: the smaller sum)."""
    total = sum(sizes)
    # reach[s] = (item index, previous sum) for the first way sum s was reached
    reach = {0: None}
    for i, size in enumerate(sizes):
        for s in sorted(reach, reverse=True):
            if s + size not in reach and s + size <= total:
                reach[s + size] = (i, s)
    best = min(reach, key=lambda s: (abs(s - target), s))
    chosen = []
    while reach[best] is not None:
        i, prev = reach[best]
        chosen.append(i)
        best = prev
    return sorted(chosen)


def _greedy_subset(sizes: list[int]) -> list[int]:
    left, right = 0, 0
    chosen = []
    for i in sorted(range(len(sizes)), key=lambda i: -sizes[i]):
        if left <= right:
            left += sizes[i]
            chosen.append(i)
        else:
            right += sizes[i]
    return sorted(chosen)


def split_no_db_overlap(examples: Sequence[AnnotatedExample], seed: int = 0) -> tuple[list[AnnotatedExample], list[AnnotatedExample]]:
    """Partition examples by database into two sides of as-equal-as-possible size.

    Exact subset-sum over per-database counts for up to 30 databases, greedy
    largest-first beyond that. The seed fixes the database order the search
    sees, which decides among equally balanced partitions. The first side is the
    one whose size does not exceed half (or is closest to it).
    """
    if any(ex.db_id is None for ex in examples):
        raise SplitError("every example needs a db_id")
    counts = Counter(ex.db_id for ex in examples)
    if len(counts) < 2:
        raise SplitError(f"need at least 2 databases, got {len(counts)}")
    db_ids = sorted(counts)
    random.Random(seed).shuffle(db_ids)
    sizes = [counts[d] for d in db_ids]
    if len(db_ids) <= EXACT_SPLIT_MAX_DBS:
        chosen = _exact_subset(sizes, sum(sizes) // 2)
    else:
        chosen = _greedy_subset(sizes)
    first = {db_ids[i] for i in chosen}
    dev = [ex for ex in examples if ex.db_id in first]
    test = [ex for ex in examples if ex.db_id not in first]
    return dev, test
