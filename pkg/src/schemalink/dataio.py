"""Readers and writers for schema catalogs, questions, annotations and results tables."""

from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .model import (
    AnnotatedExample,
    Column,
    LabelError,
    LabeledSpan,
    Schema,
    SchemaError,
    Table,
    ValueType,
    make_span,
    parse_target,
    tokenize,
)

logger = logging.getLogger(__name__)

RESULTS_HEADER = ("system", "em", "f1", "precision", "recall", "fp", "fn", "tp")


class DataError(ValueError):
    """A corpus file could not be loaded. ``record`` is the 1-based record/line number."""

    def __init__(self, message: str, path=None, record: Optional[int] = None):
        self.path = path
        self.record = record
        where = ""
        if path is not None:
            where = f"{path}"
            if record is not None:
                where += f":{record}"
            where += ": "
        super().__init__(where + message)


@dataclass(frozen=True)
class QuestionRecord:
    question: str
    db_id: str
    query: Optional[str] = None


@dataclass
class Corpus:
    schemas: dict[str, Schema]
    examples: list[AnnotatedExample] = field(default_factory=list)

    def __post_init__(self):
        for i, ex in enumerate(self.examples):
            if ex.db_id not in self.schemas:
                raise DataError(f"example {i} references unknown db_id {ex.db_id!r}")


# --- schema catalog -------------------------------------------------------------

def _schema_from_record(rec: dict) -> Schema:
    db_id = rec["db_id"]
    tnames_orig = rec["table_names_original"]
    tnames = rec.get("table_names") or tnames_orig
    cols_orig = rec["column_names_original"]
    cols = rec.get("column_names") or cols_orig
    ctypes = rec.get("column_types") or ["text"] * len(cols_orig)
    if len(tnames) != len(tnames_orig):
        raise KeyError("table_names and table_names_original differ in length")
    if not len(cols) == len(cols_orig) == len(ctypes):
        raise KeyError("column_names, column_names_original and column_types differ in length")

    per_table: list[list[Column]] = [[] for _ in tnames_orig]
    for (t_idx, name), (_, natural), ctype in zip(cols_orig, cols, ctypes):
        if t_idx == -1:
            continue  # the "*" pseudo-column
        if not 0 <= t_idx < len(tnames_orig):
            raise SchemaError(
                f"column {name!r} references table index {t_idx} "
                f"but db has {len(tnames_orig)} tables"
            )
        per_table[t_idx].append(Column(name, natural, ValueType.parse(ctype)))
    tables = [
        Table(orig, natural, tuple(columns))
        for orig, natural, columns in zip(tnames_orig, tnames, per_table)
    ]
    return Schema(db_id, tuple(tables))


def load_schemas(path) -> dict[str, Schema]:
    """Load a Spider-layout ``tables.json`` into ``{db_id: Schema}`` (file order kept)."""
    path = Path(path)
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc}", path) from exc
    if not isinstance(records, list):
        raise DataError("schema catalog must be a JSON array", path)
    schemas: dict[str, Schema] = {}
    for i, rec in enumerate(records, 1):
        db_id = rec.get("db_id") if isinstance(rec, dict) else None
        label = f"db {db_id!r}" if db_id else "record"
        try:
            schema = _schema_from_record(rec)
        except KeyError as exc:
            raise DataError(f"{label}: missing or inconsistent field {exc}", path, i) from exc
        except (SchemaError, TypeError, ValueError) as exc:
            raise DataError(f"{label}: {exc}", path, i) from exc
        if schema.db_id in schemas:
            raise DataError(f"duplicate db_id {schema.db_id!r}", path, i)
        schemas[schema.db_id] = schema
    return schemas


# --- questions ------------------------------------------------------------------

def load_questions(path) -> list[QuestionRecord]:
    """Load a Spider-layout ``dev.json`` (question, db_id, query). SQL is kept verbatim."""
    path = Path(path)
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc}", path) from exc
    out = []
    for i, rec in enumerate(records, 1):
        try:
            out.append(QuestionRecord(rec["question"], rec["db_id"], rec.get("query")))
        except (KeyError, TypeError) as exc:
            raise DataError(f"missing field {exc}", path, i) from exc
    return out


# --- annotations / predictions --------------------------------------------------

def read_annotation_records(path) -> list[tuple[int, dict]]:
    """Raw ``(record_number, object)`` pairs from a JSON-lines or JSON-array file.

    Blank lines are skipped. Record numbers are line numbers for JSON lines and
    1-based array positions for a JSON array.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        try:
            items = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON: {exc}", path) from exc
        return list(enumerate(items, 1))
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append((lineno, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON: {exc}", path, lineno) from exc
    return records


def record_fields(rec: dict) -> tuple[str, list, Optional[str]]:
    """Extract (question, label triples, db_id) accepting the known key variants.

    The question may sit under ``question`` or ``text`` (Doccano export), the
    triples under ``labels`` or ``label``.
    """
    if not isinstance(rec, dict):
        raise TypeError("record is not an object")
    for key in ("question", "text"):
        if key in rec:
            question = rec[key]
            break
    else:
        raise KeyError("question")
    for key in ("labels", "label"):
        if key in rec:
            labels = rec[key]
            break
    else:
        raise KeyError("labels")
    if not isinstance(question, str):
        raise TypeError("question is not a string")
    if not isinstance(labels, list):
        raise TypeError("labels is not a list")
    return question, labels, rec.get("db_id")


class _QuestionIndex:
    def __init__(self, questions: Sequence[QuestionRecord]):
        self.by_text: dict[str, list[QuestionRecord]] = defaultdict(list)
        for q in questions:
            self.by_text[q.question].append(q)

    def find(self, text: str, db_id: Optional[str]) -> QuestionRecord:
        hits = self.by_text.get(text, [])
        if db_id is not None:
            hits = [q for q in hits if q.db_id == db_id]
        if not hits:
            raise LookupError(f"question not found in questions file: {text!r}")
        if len({q.db_id for q in hits}) > 1:
            raise LookupError(
                f"question {text!r} is ambiguous across databases "
                f"{sorted({q.db_id for q in hits})}; add a db_id field"
            )
        return hits[0]


def load_annotations(path, questions: Optional[Sequence[QuestionRecord]] = None) -> list[AnnotatedExample]:
    """Load annotation (or prediction) records into AnnotatedExamples.

    When ``questions`` is given, each record is aligned to a question record by
    exact question string (narrowed by the record's ``db_id`` if present) to
    obtain db_id and gold SQL.
    """
    index = _QuestionIndex(questions) if questions is not None else None
    examples = []
    for recno, rec in read_annotation_records(path):
        try:
            text, triples, db_id = record_fields(rec)
        except (KeyError, TypeError) as exc:
            raise DataError(f"bad record: {exc}", path, recno) from exc
        question = tokenize(text)
        spans = []
        for triple in triples:
            try:
                start, end, label = triple
                if not (isinstance(start, int) and isinstance(end, int)):
                    raise ValueError(f"non-integer offsets in {triple!r}")
                if end <= start:
                    raise ValueError(f"span end {end} <= start {start}")
                spans.append(make_span(question, start, end, parse_target(label)))
            except (LabelError, ValueError, TypeError) as exc:
                raise DataError(f"label {triple!r}: {exc}", path, recno) from exc
        gold_sql = None
        if index is not None:
            try:
                qrec = index.find(text, db_id)
            except LookupError as exc:
                raise DataError(str(exc), path, recno) from exc
            db_id, gold_sql = qrec.db_id, qrec.query
        try:
            examples.append(AnnotatedExample(db_id, question, tuple(spans), gold_sql))
        except ValueError as exc:
            raise DataError(str(exc), path, recno) from exc
    return examples


def example_record(question_text: str, spans: Iterable[LabeledSpan], db_id: Optional[str] = None) -> dict:
    rec: dict = {
        "question": question_text,
        "labels": [[s.start_char, s.end_char, s.target.render()] for s in spans],
    }
    if db_id is not None:
        rec["db_id"] = db_id
    return rec


def dump_records(records: Iterable[dict]) -> str:
    return "".join(json.dumps(rec, ensure_ascii=False) + "\n" for rec in records)


def write_predictions(path, examples: Sequence[AnnotatedExample], predicted_spans: Optional[Sequence[Sequence[LabeledSpan]]] = None) -> Path:
    """Write one JSON line per example in the annotation-file layout.

    ``predicted_spans[i]`` holds the spans for ``examples[i]``; when omitted the
    examples' own gold spans are written. A ``db_id`` key is added only for
    examples that carry one.
    """
    if predicted_spans is None:
        predicted_spans = [ex.gold_spans for ex in examples]
    if len(predicted_spans) != len(examples):
        raise ValueError("predicted_spans must align with examples")
    path = Path(path)
    records = (
        example_record(ex.question.text, spans, ex.db_id)
        for ex, spans in zip(examples, predicted_spans)
    )
    path.write_text(dump_records(records), encoding="utf-8")
    return path


# --- results tables -------------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    system: str
    em: Optional[Decimal]
    f1: Decimal
    precision: Decimal
    recall: Decimal
    fp: int
    fn: int
    tp: int


@dataclass
class ResultsTable:
    rows: list[ResultRow] = field(default_factory=list)

    def column(self, name: str) -> list[float]:
        if name not in RESULTS_HEADER[1:]:
            raise KeyError(f"unknown column {name!r}; expected one of {RESULTS_HEADER[1:]}")
        values = [getattr(r, name) for r in self.rows]
        if any(v is None for v in values):
            raise ValueError(f"column {name!r} has missing values")
        return [float(v) for v in values]

    def filter(self, prefix: str) -> "ResultsTable":
        return ResultsTable([r for r in self.rows if r.system.startswith(prefix)])


def _parse_count(cell: str) -> int:
    value = int(cell.replace(",", "").strip())
    if value < 0:
        raise ValueError("negative count")
    return value


def _parse_percent(cell: str) -> Decimal:
    value = Decimal(cell.strip())
    if not value.is_finite() or not 0 <= value <= 100:
        raise ValueError("percentage outside [0, 100]")
    return value


def load_results_table(path) -> ResultsTable:
    """Read a results CSV (``system,em,f1,precision,recall,fp,fn,tp``).

    Percentages are kept as Decimal so the printed precision survives; an empty
    ``em`` cell is read as missing. Counts may carry thousands separators.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip().lower() for h in header) != RESULTS_HEADER:
            raise DataError(f"header must be {','.join(RESULTS_HEADER)}", path, 1)
        rows = []
        for lineno, cells in enumerate(reader, 2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(RESULTS_HEADER):
                raise DataError(f"expected {len(RESULTS_HEADER)} cells, got {len(cells)}", path, lineno)
            parsed: dict = {"system": cells[0].strip()}
            for name, cell in zip(RESULTS_HEADER[1:], cells[1:]):
                try:
                    if name == "em" and not cell.strip():
                        parsed[name] = None
                    elif name in ("fp", "fn", "tp"):
                        parsed[name] = _parse_count(cell)
                    else:
                        parsed[name] = _parse_percent(cell)
                except (InvalidOperation, ValueError) as exc:
                    raise DataError(f"column {name!r}: bad value {cell!r} ({exc})", path, lineno) from exc
            rows.append(ResultRow(**parsed))
    return ResultsTable(rows)


def write_results_table(path, rows: Iterable[ResultRow]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for r in rows:
            writer.writerow(["" if getattr(r, k) is None else str(getattr(r, k)) for k in RESULTS_HEADER])
    return path
