"""Rule-based schema linking for text-to-SQL, with span-level evaluation,
annotator agreement and correlation analysis."""

__version__ = "0.1.0"

from .agreement import AgreementReport, cohen_kappa, pairwise_f1
from .analytics import CorrelationResult, LabelStats, dataset_stats, pearson, split_no_db_overlap
from .dataio import (
    Corpus,
    DataError,
    ResultsTable,
    load_annotations,
    load_questions,
    load_results_table,
    load_schemas,
    write_predictions,
)
from .evaluator import EvalCounts, Metrics, evaluate, evaluate_corpus, metrics_from_counts, project_tokens
from .linker import LinkerConfig, MatchKind, Strategy, enumerate_ngrams, link, match_ngram, random_link
from .model import (
    AnnotatedExample,
    Column,
    LabeledSpan,
    LinkTarget,
    Question,
    Schema,
    Table,
    Token,
    normalize_name,
    parse_target,
    render_target,
    tokenize,
)
