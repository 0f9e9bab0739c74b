"""Domain types shared across the package: schemas, questions, spans and link targets."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Optional

NONE_LABEL = "NONE"

# letter/digit runs, otherwise any single non-space character
_TOKEN_RE = re.compile(r"[^\W_]+|\S")
_CAMEL_RE = re.compile(r"(?<=[a-z])(?=[A-Z])")
_SPLIT_RE = re.compile(r"[_\s]+")


class SchemaError(ValueError):
    """Raised when a schema (or a schema name) is malformed."""


class LabelError(ValueError):
    """Raised for an unparsable link-target label."""


class ValueType(str, enum.Enum):
    TEXT = "text"
    NUMBER = "number"
    TIME = "time"
    BOOLEAN = "boolean"
    OTHER = "other"

    @classmethod
    def parse(cls, raw: str) -> "ValueType":
        try:
            return cls(raw.lower())
        except ValueError:
            return cls.OTHER


class TargetKind(str, enum.Enum):
    TABLE = "table"
    COLUMN = "column"


def normalize_name(raw: str) -> list[str]:
    """Split a schema identifier into lowercase words.

    Splits at underscores, whitespace and lower-to-upper camelCase boundaries,
    so ``"Record_Company"`` and ``"recordCompany"`` both give
    ``["record", "company"]``.
    """
    if not raw or not raw.strip("_ \t\n"):
        raise SchemaError(f"empty schema name: {raw!r}")
    pieces = []
    for chunk in _SPLIT_RE.split(raw):
        pieces.extend(_CAMEL_RE.split(chunk))
    return [p.lower() for p in pieces if p]


@dataclass(frozen=True)
class Column:
    original_name: str
    natural_name: str = ""
    value_type: ValueType = ValueType.TEXT

    def __post_init__(self):
        if not self.original_name:
            raise SchemaError("column original_name must be non-empty")
        if not self.natural_name:
            object.__setattr__(self, "natural_name", self.original_name)


@dataclass(frozen=True)
class Table:
    original_name: str
    natural_name: str = ""
    columns: tuple[Column, ...] = ()

    def __post_init__(self):
        if not self.original_name:
            raise SchemaError("table original_name must be non-empty")
        if not self.natural_name:
            object.__setattr__(self, "natural_name", self.original_name)
        object.__setattr__(self, "columns", tuple(self.columns))
        seen: dict[tuple[str, ...], str] = {}
        for col in self.columns:
            key = tuple(normalize_name(col.original_name))
            if key in seen:
                raise SchemaError(
                    f"table {self.original_name!r}: columns {seen[key]!r} and "
                    f"{col.original_name!r} collide after normalization"
                )
            seen[key] = col.original_name

    def column(self, name: str) -> Optional[Column]:
        for col in self.columns:
            if col.original_name == name:
                return col
        return None


@dataclass(frozen=True)
class Schema:
    db_id: str
    tables: tuple[Table, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tables", tuple(self.tables))
        seen: dict[tuple[str, ...], str] = {}
        for table in self.tables:
            key = tuple(normalize_name(table.original_name))
            if key in seen:
                raise SchemaError(
                    f"schema {self.db_id!r}: tables {seen[key]!r} and "
                    f"{table.original_name!r} collide after normalization"
                )
            seen[key] = table.original_name

    def table(self, name: str) -> Optional[Table]:
        for table in self.tables:
            if table.original_name == name:
                return table
        return None

    def targets(self) -> list["LinkTarget"]:
        """Every table and column of the schema as link targets, in schema order."""
        out = []
        for table in self.tables:
            out.append(LinkTarget.table(table.original_name))
            for col in table.columns:
                out.append(LinkTarget.column(table.original_name, col.original_name))
        return out

    def has_target(self, target: "LinkTarget") -> bool:
        table = self.table(target.table_name)
        if table is None:
            return False
        if target.kind is TargetKind.TABLE:
            return True
        return table.column(target.column_name) is not None


@dataclass(frozen=True)
class Token:
    surface: str
    start_char: int
    end_char: int
    normalized: str

    @property
    def is_word(self) -> bool:
        return self.surface[:1].isalnum()


@dataclass(frozen=True)
class Question:
    text: str
    tokens: tuple[Token, ...]

    def tokens_within(self, start: int, end: int) -> list[int]:
        """Indices of tokens lying fully inside ``[start, end)``."""
        return [
            i for i, tok in enumerate(self.tokens)
            if tok.start_char >= start and tok.end_char <= end
        ]


def tokenize(text: str) -> Question:
    tokens = tuple(
        Token(m.group(), m.start(), m.end(), m.group().lower())
        for m in _TOKEN_RE.finditer(text)
    )
    return Question(text, tokens)


@dataclass(frozen=True, order=True)
class LinkTarget:
    kind: TargetKind
    table_name: str
    column_name: Optional[str] = None

    def __post_init__(self):
        if (self.kind is TargetKind.COLUMN) != (self.column_name is not None):
            raise LabelError("column_name must be set iff kind is COLUMN")

    @classmethod
    def table(cls, name: str) -> "LinkTarget":
        return cls(TargetKind.TABLE, name)

    @classmethod
    def column(cls, table: str, column: str) -> "LinkTarget":
        return cls(TargetKind.COLUMN, table, column)

    def render(self) -> str:
        if self.kind is TargetKind.TABLE:
            return self.table_name
        return f"{self.table_name}.{self.column_name}"

    def __str__(self) -> str:
        return self.render()


def parse_target(label: str) -> LinkTarget:
    """Parse ``"Templates"`` or ``"airlines.Airline"`` into a LinkTarget."""
    if not label:
        raise LabelError("empty label")
    if label.startswith(".") or label.endswith("."):
        raise LabelError(f"malformed label: {label!r}")
    table, dot, column = label.partition(".")
    if not dot:
        return LinkTarget.table(label)
    return LinkTarget.column(table, column)


def render_target(target: LinkTarget) -> str:
    return target.render()


@dataclass(frozen=True, order=True)
class LabeledSpan:
    start_char: int
    end_char: int
    target: LinkTarget
    token_length: int = 1

    def __post_init__(self):
        if not 0 <= self.start_char < self.end_char:
            raise ValueError(f"bad span offsets [{self.start_char}, {self.end_char})")
        if self.token_length < 1:
            raise ValueError("token_length must be >= 1")

    @property
    def key(self) -> tuple[int, int, str]:
        return (self.start_char, self.end_char, self.target.render())

    def text(self, question: Question) -> str:
        return question.text[self.start_char:self.end_char]


def make_span(question: Question, start: int, end: int, target: LinkTarget) -> LabeledSpan:
    """Build a span over ``question``, validating bounds and counting covered tokens."""
    if not 0 <= start < end <= len(question.text):
        raise ValueError(
            f"span [{start}, {end}) out of bounds for question of length {len(question.text)}"
        )
    n = len(question.tokens_within(start, end))
    if n == 0:
        raise ValueError(f"span [{start}, {end}) covers no whole token")
    return LabeledSpan(start, end, target, n)


def spans_overlap(spans) -> list[tuple[LabeledSpan, LabeledSpan]]:
    """Pairs of spans whose character ranges intersect (identical ranges included)."""
    ordered = sorted(spans, key=lambda s: (s.start_char, s.end_char))
    clashes = []
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            if b.start_char >= a.end_char:
                break
            clashes.append((a, b))
    return clashes


@dataclass(frozen=True)
class AnnotatedExample:
    db_id: Optional[str]
    question: Question
    gold_spans: tuple[LabeledSpan, ...] = field(default_factory=tuple)
    gold_sql: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "gold_spans", tuple(self.gold_spans))
        clashes = spans_overlap(self.gold_spans)
        if clashes:
            a, b = clashes[0]
            raise ValueError(f"overlapping gold spans {a.key} and {b.key}")
