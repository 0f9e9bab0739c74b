"""Diagnostics for annotation files checked against schemas and questions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .dataio import QuestionRecord, _QuestionIndex, read_annotation_records, record_fields
from .model import LabelError, Schema, TargetKind, parse_target, tokenize

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    record: int
    severity: str
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.record}: {self.severity}: {self.code}: {self.message}"


def _check_target(label: str, target, schema: Schema) -> list[tuple[str, str, str]]:
    out = []
    table = schema.table(target.table_name)
    if table is None:
        folded = [t for t in schema.tables if t.original_name.lower() == target.table_name.lower()]
        if folded:
            out.append((WARNING, "case-mismatch",
                        f"{label!r}: table matches {folded[0].original_name!r} only case-insensitively"))
            table = folded[0]
        else:
            out.append((ERROR, "unknown-table", f"{label!r}: no table {target.table_name!r} in {schema.db_id!r}"))
            return out
    if target.kind is TargetKind.COLUMN and table.column(target.column_name) is None:
        folded = [c for c in table.columns if c.original_name.lower() == target.column_name.lower()]
        if folded:
            out.append((WARNING, "case-mismatch",
                        f"{label!r}: column matches {folded[0].original_name!r} only case-insensitively"))
        else:
            out.append((ERROR, "unknown-column",
                        f"{label!r}: table {table.original_name!r} has no column {target.column_name!r}"))
    return out


def lint_annotations(path, schemas: Mapping[str, Schema], questions: Optional[Sequence[QuestionRecord]] = None) -> list[Diagnostic]:
    """Check every record of an annotation file and collect diagnostics.

    Unlike the loader this never stops at the first problem.
    """
    index = _QuestionIndex(questions) if questions is not None else None
    diags: list[Diagnostic] = []

    def emit(recno, severity, code, message):
        diags.append(Diagnostic(recno, severity, code, message))

    for recno, rec in read_annotation_records(path):
        try:
            text, triples, db_id = record_fields(rec)
        except (KeyError, TypeError) as exc:
            emit(recno, ERROR, "bad-record", str(exc))
            continue
        if not text.isascii():
            emit(recno, WARNING, "non-ascii", "question contains non-ASCII characters; offsets assume code points")
        question = tokenize(text)

        if index is not None:
            try:
                db_id = index.find(text, db_id).db_id
            except LookupError as exc:
                emit(recno, ERROR, "unaligned", str(exc))
        schema = schemas.get(db_id) if db_id is not None else None
        if db_id is not None and schema is None:
            emit(recno, ERROR, "unknown-db", f"db_id {db_id!r} not in schema catalog")
        elif db_id is None:
            emit(recno, WARNING, "no-db", "cannot resolve db_id; schema checks skipped")

        ranges = []
        for triple in triples:
            try:
                start, end, label = triple
            except (TypeError, ValueError):
                emit(recno, ERROR, "bad-label", f"expected [start, end, label], got {triple!r}")
                continue
            if not (isinstance(start, int) and isinstance(end, int)):
                emit(recno, ERROR, "bad-offsets", f"non-integer offsets in {triple!r}")
                continue
            if end <= start:
                emit(recno, ERROR, "inverted-span", f"{triple!r}: end <= start")
                continue
            if start < 0 or end > len(text):
                emit(recno, ERROR, "out-of-bounds", f"{triple!r}: question has length {len(text)}")
                continue
            if not question.tokens_within(start, end):
                emit(recno, ERROR, "no-token", f"{triple!r}: span covers no whole token")
            elif any(t.start_char < start < t.end_char or t.start_char < end < t.end_char for t in question.tokens):
                emit(recno, WARNING, "token-boundary", f"{triple!r}: span boundary splits a token")
            ranges.append((start, end, triple))
            try:
                target = parse_target(label) if isinstance(label, str) else None
            except LabelError as exc:
                target = None
                emit(recno, ERROR, "bad-label", str(exc))
            else:
                if target is None:
                    emit(recno, ERROR, "bad-label", f"label is not a string: {label!r}")
            if target is not None and schema is not None:
                for severity, code, message in _check_target(label, target, schema):
                    emit(recno, severity, code, message)

        ranges.sort(key=lambda r: (r[0], r[1]))
        for i, (s1, e1, t1) in enumerate(ranges):
            for s2, e2, t2 in ranges[i + 1:]:
                if s2 >= e1:
                    break
                emit(recno, ERROR, "overlap", f"{t1!r} overlaps {t2!r}")
    return diags
