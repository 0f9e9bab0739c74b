"""Rule-based schema linking over question n-grams.

The scan enumerates word n-grams of length 1..max_ngram_len, longest first,
and classifies each as a table, a column or nothing. Exact name matches are
resolved in a first sweep and partial matches in a second sweep over the
tokens still free, so exact always outranks partial and switching partial
matching off can only remove links. Columns take priority over tables.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .model import LabeledSpan, LinkTarget, Question, Schema, Token, TargetKind, normalize_name

PRESETS = ("full", "a", "b", "c", "d", "e", "f", "g", "h")

# partial hits whose overlapping words are all function words are ignored
STOPWORDS = frozenset(
    "a an and are as at be by did do does for from had has have how i in is it its "
    "me my of on or that the their them there these they this those to was were "
    "what when where which who whom whose why with".split()
)


class ConfigError(ValueError):
    pass


class Mode(str, enum.Enum):
    RULE = "rule"
    RANDOM = "random"
    NONE = "none"


class Strategy(str, enum.Enum):
    SINGLE = "single"  # one target per phrase (IRNet-style)
    MULTI = "multi"    # every matching target (RAT-SQL-style)


class MatchKind(enum.IntEnum):
    # lower value ranks higher
    EXACT = 0
    PARTIAL = 1


@dataclass(frozen=True)
class LinkerConfig:
    use_unigrams: bool = True
    use_partial_match: bool = True
    use_columns: bool = True
    use_tables: bool = True
    only_unigrams: bool = False
    mode: Mode = Mode.RULE
    max_ngram_len: int = 6
    random_link_prob: float = 0.2
    seed: int = 0
    match_natural_names: bool = True
    match_original_names: bool = True
    # off by default: under longest-first scanning any window containing a
    # name would be linked before the name itself
    partial_name_in_phrase: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.only_unigrams and not self.use_unigrams:
            raise ConfigError("only_unigrams and use_unigrams=False are mutually exclusive")
        if self.max_ngram_len < 1:
            raise ConfigError("max_ngram_len must be >= 1")
        if not 0.0 <= self.random_link_prob <= 1.0:
            raise ConfigError(f"random_link_prob must lie in [0, 1], got {self.random_link_prob}")
        if not (self.match_natural_names or self.match_original_names):
            raise ConfigError("at least one of natural/original names must be matched")

    @classmethod
    def preset(cls, alias: str, **overrides) -> "LinkerConfig":
        """Configuration for an ablation alias (``full`` or ``a``..``h``)."""
        table = {
            "full": {},
            "a": {"use_unigrams": False},
            "b": {"use_unigrams": False, "use_partial_match": False},
            "c": {"use_columns": False},
            "d": {"use_tables": False},
            "e": {"only_unigrams": True},
            "f": {"only_unigrams": True, "use_partial_match": False},
            "g": {"mode": Mode.RANDOM},
            "h": {"mode": Mode.NONE},
        }
        if alias not in table:
            raise ConfigError(f"unknown config alias {alias!r}; expected one of {','.join(PRESETS)}")
        return cls(**{**table[alias], **overrides})


def singularize(word: str) -> str:
    """Crude plural stripping: ``countries``->``country``, ``classes``->``class``."""
    if len(word) <= 3 or not word.endswith("s") or word.endswith("ss"):
        return word
    if word.endswith("ies"):
        return word[:-3] + "y"
    if word.endswith(("ses", "xes", "zes", "ches", "shes")):
        return word[:-2]
    return word[:-1]


def _contains(haystack: tuple, needle: tuple) -> bool:
    n = len(needle)
    return any(haystack[i:i + n] == needle for i in range(len(haystack) - n + 1))


def _meaningful(words: tuple) -> bool:
    return any(w not in STOPWORDS for w in words)


@lru_cache(maxsize=65536)
def classify(ngram: tuple, name: tuple, partial: bool = True, name_in_phrase: bool = False) -> Optional[MatchKind]:
    """Match kind between a lowercased n-gram and a normalized schema name.

    Partial hits: equality after plural stripping (also with word boundaries
    removed, so "high schoolers" meets "highschooler"), and the phrase as a
    contiguous run inside the name. ``name_in_phrase`` also accepts the name
    as a run inside the phrase.
    """
    if ngram == name:
        return MatchKind.EXACT
    if not partial:
        return None
    s_ngram = tuple(singularize(w) for w in ngram)
    s_name = tuple(singularize(w) for w in name)
    if s_ngram == s_name or "".join(s_ngram) == "".join(s_name):
        return MatchKind.PARTIAL
    for phrase, target in ((ngram, name), (s_ngram, s_name)):
        if _contains(target, phrase) and _meaningful(phrase):
            return MatchKind.PARTIAL
        if name_in_phrase and _contains(phrase, target) and _meaningful(target):
            return MatchKind.PARTIAL
    return None


@dataclass(frozen=True)
class _Entry:
    target: LinkTarget
    names: tuple  # normalized name variants


@lru_cache(maxsize=1024)
def _schema_entries(schema: Schema, original: bool, natural: bool) -> tuple[tuple[_Entry, ...], tuple[_Entry, ...]]:
    def variants(obj) -> tuple:
        out = []
        if original:
            out.append(tuple(normalize_name(obj.original_name)))
        if natural:
            out.append(tuple(normalize_name(obj.natural_name)))
        return tuple(dict.fromkeys(out))

    columns, tables = [], []
    for table in schema.tables:
        tables.append(_Entry(LinkTarget.table(table.original_name), variants(table)))
        for col in table.columns:
            columns.append(_Entry(LinkTarget.column(table.original_name, col.original_name), variants(col)))
    return tuple(columns), tuple(tables)


def enumerate_ngrams(question: Question, max_len: int) -> list[tuple[int, int]]:
    """Token windows ``(i, j)`` (half-open) longest first, then left to right.

    Windows touching a punctuation token are dropped, so phrases never cross
    punctuation.
    """
    n = len(question.tokens)
    out = []
    for length in range(min(max_len, n), 0, -1):
        for i in range(n - length + 1):
            if all(tok.is_word for tok in question.tokens[i:i + length]):
                out.append((i, i + length))
    return out


def match_ngram(tokens: Sequence[Token], schema: Schema, config: LinkerConfig) -> list[tuple[LinkTarget, MatchKind]]:
    """Candidate targets for one n-gram after priority rules, best first.

    Exact candidates suppress partial ones; any column candidate suppresses
    table candidates. Survivors are ordered by how many name words the phrase
    leaves unmatched, then by schema order.
    """
    if not tokens:
        raise ValueError("empty n-gram")
    ngram = tuple(t.normalized for t in tokens)
    columns, tables = _schema_entries(schema, config.match_original_names, config.match_natural_names)
    groups = []
    if config.use_columns:
        groups.append(columns)
    if config.use_tables:
        groups.append(tables)

    scored = []
    for entries in groups:
        for entry in entries:
            hits = []
            for name in entry.names:
                kind = classify(ngram, name, config.use_partial_match, config.partial_name_in_phrase)
                if kind is not None:
                    hits.append((kind, abs(len(name) - len(ngram))))
            if hits:
                kind, slack = min(hits)
                scored.append((kind, slack, len(scored), entry.target))
    if not scored:
        return []
    best = min(kind for kind, *_ in scored)
    scored = [s for s in scored if s[0] == best]
    if any(s[3].kind is TargetKind.COLUMN for s in scored):
        scored = [s for s in scored if s[3].kind is TargetKind.COLUMN]
    # closer names first (fewer unmatched words), then schema order
    scored.sort(key=lambda s: (s[1], s[2]))
    return [(target, kind) for kind, _, _, target in scored]


def _window_allowed(length: int, config: LinkerConfig) -> bool:
    if config.only_unigrams and length > 1:
        return False
    if not config.use_unigrams and length == 1:
        return False
    return True


def link(question: Question, schema: Schema, config: LinkerConfig, strategy: Strategy = Strategy.SINGLE, index: int = 0) -> list[LabeledSpan]:
    """Link question phrases to schema elements.

    Returns spans sorted by start offset. Under the multi-target strategy a
    phrase with several surviving candidates yields one span per target, all
    on the same character range. ``index`` only seeds random mode.
    """
    strategy = Strategy(strategy)
    if config.mode is Mode.NONE:
        return []
    if config.mode is Mode.RANDOM:
        return random_link(question, schema, config, index=index)

    windows = [w for w in enumerate_ngrams(question, config.max_ngram_len) if _window_allowed(w[1] - w[0], config)]
    consumed = [False] * len(question.tokens)
    out: list[LabeledSpan] = []
    sweeps = [MatchKind.EXACT, MatchKind.PARTIAL] if config.use_partial_match else [MatchKind.EXACT]
    for sweep in sweeps:
        sweep_config = config if sweep is MatchKind.PARTIAL else replace(config, use_partial_match=False)
        for i, j in windows:
            if any(consumed[i:j]):
                continue
            tokens = question.tokens[i:j]
            candidates = match_ngram(tokens, schema, sweep_config)
            if not candidates:
                continue
            if strategy is Strategy.SINGLE:
                candidates = candidates[:1]
            start, end = tokens[0].start_char, tokens[-1].end_char
            n_tokens = len(question.tokens_within(start, end))
            out.extend(LabeledSpan(start, end, target, n_tokens) for target, _ in candidates)
            consumed[i:j] = [True] * (j - i)
    out.sort(key=lambda s: (s.start_char, s.end_char))
    return out


def random_link(question: Question, schema: Schema, config: LinkerConfig, index: int = 0) -> list[LabeledSpan]:
    """Link each word token independently with probability ``random_link_prob``
    to a uniformly chosen table or column.

    The stream is derived from ``(config.seed, index)`` so per-question results
    do not depend on processing order.
    """
    if not 0.0 <= config.random_link_prob <= 1.0:
        raise ConfigError(f"random_link_prob must lie in [0, 1], got {config.random_link_prob}")
    targets = schema.targets()
    if not targets:
        return []
    rng = np.random.default_rng([config.seed, index])
    out = []
    for tok in question.tokens:
        if not tok.is_word:
            continue
        # draw both numbers per token so the stream layout is fixed
        hit = rng.random() < config.random_link_prob
        choice = int(rng.integers(len(targets)))
        if hit:
            out.append(LabeledSpan(tok.start_char, tok.end_char, targets[choice], 1))
    return out
