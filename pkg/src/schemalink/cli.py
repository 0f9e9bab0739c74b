"""Command-line interface: ``schemalink link|eval|agree|stats|corr|split|lint``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 lint failures.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from collections import defaultdict, deque
from decimal import Decimal
from importlib import resources
from pathlib import Path

from . import __version__
from .agreement import UndefinedKappaError, cohen_kappa
from .analytics import CorrelationError, SplitError, dataset_stats, pearson, split_no_db_overlap
from .dataio import (
    Corpus,
    DataError,
    QuestionRecord,
    ResultRow,
    dump_records,
    example_record,
    load_annotations,
    load_questions,
    load_results_table,
    load_schemas,
    read_annotation_records,
    record_fields,
    write_results_table,
)
from .evaluator import EvalCounts, evaluate, format_report, metrics_from_counts
from .linker import PRESETS, ConfigError, LinkerConfig, Strategy, link
from .lint import ERROR, lint_annotations
from .model import tokenize

logger = logging.getLogger("schemalink")

DATA_DIR_ENV = "SCHEMALINK_DATA_DIR"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_LINT = 0, 1, 2, 3
BUILTIN_TABLES = {"irnet": "irnet_results.csv", "ratsql": "ratsql_results.csv"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def resolve(path) -> Path:
    """Use ``path`` as given, else look it up under $SCHEMALINK_DATA_DIR."""
    p = Path(path)
    if not p.exists() and not p.is_absolute() and os.environ.get(DATA_DIR_ENV):
        candidate = Path(os.environ[DATA_DIR_ENV]) / p
        if candidate.exists():
            return candidate
    if not p.exists():
        raise DataError(f"no such file: {path}")
    return p


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def manifest(command: str, inputs: dict, config: str = "", seed=None, extra: dict | None = None) -> dict:
    out = {
        "command": command,
        "config": config,
        "inputs": {name: {"path": str(p), "sha256": _digest(p)} for name, p in inputs.items()},
        "seed": seed,
        "version": __version__,
    }
    if extra:
        out.update(extra)
    return out


def _write_manifest(path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_question_source(path: Path) -> list[QuestionRecord]:
    """Spider ``dev.json`` (a JSON array) or an annotation-layout file carrying db_id."""
    if path.read_text(encoding="utf-8").lstrip().startswith("["):
        try:
            return load_questions(path)
        except DataError:
            pass
    out = []
    for recno, rec in read_annotation_records(path):
        try:
            text, _, db_id = record_fields(rec)
        except (KeyError, TypeError) as exc:
            raise DataError(f"bad record: {exc}", path, recno) from exc
        if db_id is None:
            raise DataError("record has no db_id", path, recno)
        out.append(QuestionRecord(text, db_id))
    return out


def _align(gold, others, what="predictions"):
    """For each gold example, the matching example from ``others`` (by question, then db_id)."""
    pool = defaultdict(deque)
    for ex in others:
        pool[ex.question.text].append(ex)
    aligned, missing = [], []
    for g in gold:
        queue = pool.get(g.question.text, deque())
        hit = None
        for cand in list(queue):
            if g.db_id is None or cand.db_id is None or cand.db_id == g.db_id:
                hit = cand
                queue.remove(cand)
                break
        if hit is None:
            missing.append(g.question.text)
        aligned.append(hit)
    if missing:
        listing = "\n".join(f"  {q}" for q in missing[:20])
        more = f"\n  ... and {len(missing) - 20} more" if len(missing) > 20 else ""
        raise DataError(f"{len(missing)} gold question(s) have no matching {what}:\n{listing}{more}")
    leftover = sum(len(q) for q in pool.values())
    if leftover:
        logger.warning("%d %s record(s) have no gold counterpart and were ignored", leftover, what)
    return aligned


# --- commands -------------------------------------------------------------------

def cmd_link(args) -> int:
    tables_path, questions_path = resolve(args.tables), resolve(args.questions)
    schemas = load_schemas(tables_path)
    questions = _load_question_source(questions_path)
    config = LinkerConfig.preset(args.config, seed=args.seed, random_link_prob=args.prob)
    strategy = Strategy(args.strategy)

    records, n_links = [], 0
    for i, q in enumerate(questions):
        if q.db_id not in schemas:
            raise DataError(f"question {i + 1} references unknown db_id {q.db_id!r}", questions_path)
        spans = link(tokenize(q.question), schemas[q.db_id], config, strategy, index=i)
        n_links += len(spans)
        records.append(example_record(q.question, spans, q.db_id))

    out = Path(args.output)
    out.write_text(dump_records(records), encoding="utf-8")
    _write_manifest(args.manifest or f"{out}.manifest.json", manifest(
        "link", {"tables": tables_path, "questions": questions_path}, args.config, args.seed,
        {"strategy": strategy.value, "prob": args.prob}))
    print(f"questions processed: {len(questions)}")
    print(f"links emitted: {n_links}")
    return EXIT_OK


def cmd_eval(args) -> int:
    pred_path, gold_path = resolve(args.predictions), resolve(args.gold)
    gold = load_annotations(gold_path)
    pred = _align(gold, load_annotations(pred_path))
    counts = EvalCounts()
    for g, p in zip(gold, pred):
        counts += evaluate(p.gold_spans, g.gold_spans, case_sensitive=not args.ignore_case)

    m = metrics_from_counts(counts).rounded()
    em = None if args.em is None else Decimal(str(args.em))
    row = ResultRow(args.system, em, Decimal(f"{m.f1:.1f}"), Decimal(f"{m.precision:.1f}"),
                    Decimal(f"{m.recall:.1f}"), counts.fp, counts.fn, counts.tp)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["system", "em", "f1", "precision", "recall", "fp", "fn", "tp"])
        writer.writerow(["" if v is None else str(v) for v in
                         (row.system, row.em, row.f1, row.precision, row.recall, row.fp, row.fn, row.tp)])
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(format_report([(args.system, counts)], {args.system: args.em} if args.em is not None else None))
    if args.csv_out:
        write_results_table(args.csv_out, [row])
    if args.manifest:
        _write_manifest(args.manifest, manifest("eval", {"predictions": pred_path, "gold": gold_path}))
    return EXIT_OK


def cmd_agree(args) -> int:
    a_path, b_path = resolve(args.a), resolve(args.b)
    a = load_annotations(a_path)
    b = _align(a, load_annotations(b_path), what="annotator-B records")
    report = cohen_kappa([ex.question for ex in a], [ex.gold_spans for ex in a],
                         [ex.gold_spans for ex in b], kind_level=args.kind_level)
    if args.format == "csv":
        print("kappa,ci95_low,ci95_high,p_value,p_o,p_e,n_tokens,pairwise_f1")
        print(",".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in (
            report.kappa, report.ci95_low, report.ci95_high, report.p_value, report.observed_agreement,
            report.expected_agreement, report.n_tokens_considered, report.pairwise_f1)))
    else:
        sys.stdout.write(report.format())
    if args.manifest:
        _write_manifest(args.manifest, manifest("agree", {"a": a_path, "b": b_path},
                                                "kind" if args.kind_level else "target"))
    return EXIT_OK


def cmd_stats(args) -> int:
    path = resolve(args.annotations)
    st = dataset_stats(load_annotations(path))
    if args.format == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerows(st.csv_rows())
    else:
        sys.stdout.write(st.format())
    if args.manifest:
        _write_manifest(args.manifest, manifest("stats", {"annotations": path}))
    return EXIT_OK


def cmd_corr(args) -> int:
    if args.builtin:
        ref = resources.files("schemalink") / "data" / BUILTIN_TABLES[args.builtin]
        with resources.as_file(ref) as p:
            table = load_results_table(p)
            inputs = {"results": Path(p)}
            data = manifest("corr", inputs, extra={"x": args.x, "y": args.y})
    elif args.results:
        path = resolve(args.results)
        table = load_results_table(path)
        data = manifest("corr", {"results": path}, extra={"x": args.x, "y": args.y})
    else:
        raise UsageError("give a results CSV or --builtin irnet|ratsql")
    if args.system_prefix:
        table = table.filter(args.system_prefix)
    try:
        xs, ys = table.column(args.x), table.column(args.y)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    result = pearson(xs, ys)
    if args.format == "csv":
        print("x,y,r,p_value,n")
        print(f"{args.x},{args.y},{result.r:.6f},{result.p_value:.6g},{result.n}")
    else:
        sys.stdout.write(result.format(args.x, args.y))
    if args.manifest:
        _write_manifest(args.manifest, data)
    return EXIT_OK


def cmd_split(args) -> int:
    ann_path, tables_path = resolve(args.annotations), resolve(args.tables)
    questions_path = resolve(args.questions) if args.questions else None
    questions = load_questions(questions_path) if questions_path else None
    examples = load_annotations(ann_path, questions)
    corpus = Corpus(load_schemas(tables_path), examples)
    dev, test = split_no_db_overlap(corpus.examples, args.seed)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in (("dev", dev), ("test", test)):
        (out_dir / f"{name}.jsonl").write_text(
            dump_records(example_record(ex.question.text, ex.gold_spans, ex.db_id) for ex in part),
            encoding="utf-8")
    dev_dbs = sorted({ex.db_id for ex in dev})
    test_dbs = sorted({ex.db_id for ex in test})
    inputs = {"annotations": ann_path, "tables": tables_path}
    if questions_path:
        inputs["questions"] = questions_path
    _write_manifest(args.manifest or out_dir / "split.manifest.json", manifest(
        "split", inputs, seed=args.seed,
        extra={"dev_size": len(dev), "test_size": len(test), "dev_dbs": dev_dbs, "test_dbs": test_dbs}))
    print(f"dev:  {len(dev)} examples from {len(dev_dbs)} databases")
    print(f"test: {len(test)} examples from {len(test_dbs)} databases")
    print(f"imbalance: {abs(len(dev) - len(test))}")
    return EXIT_OK


def cmd_lint(args) -> int:
    ann_path, tables_path = resolve(args.annotations), resolve(args.tables)
    questions_path = resolve(args.questions) if args.questions else None
    questions = load_questions(questions_path) if questions_path else None
    diags = lint_annotations(ann_path, load_schemas(tables_path), questions)
    for d in diags:
        print(d)
    n_err = sum(d.severity == ERROR for d in diags)
    print(f"{n_err} error(s), {len(diags) - n_err} warning(s)")
    if args.manifest:
        inputs = {"annotations": ann_path, "tables": tables_path}
        if questions_path:
            inputs["questions"] = questions_path
        _write_manifest(args.manifest, manifest("lint", inputs))
    return EXIT_LINT if n_err else EXIT_OK


# --- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="schemalink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt=True):
        if fmt:
            p.add_argument("--format", choices=("text", "csv"), default="text")
        p.add_argument("--manifest", help="write a run manifest (JSON) to this path")

    p = sub.add_parser("link", help="link questions to schema elements")
    p.add_argument("--tables", required=True, help="Spider tables.json")
    p.add_argument("--questions", required=True, help="Spider dev.json or an annotation file with db_id")
    p.add_argument("--config", default="full", choices=PRESETS, metavar="ALIAS",
                   help=f"ablation preset: {','.join(PRESETS)}")
    p.add_argument("--strategy", choices=("single", "multi"), default="single")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prob", type=float, default=0.2, help="per-token link probability for config g")
    p.add_argument("-o", "--output", required=True)
    common(p, fmt=False)
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("eval", help="score predictions against gold annotations")
    p.add_argument("predictions")
    p.add_argument("gold")
    p.add_argument("--system", default="system", help="row label in the report")
    p.add_argument("--em", type=float, help="Spider EM to carry into the results row")
    p.add_argument("--csv-out", help="also write a results-table CSV")
    p.add_argument("--ignore-case", action="store_true", help="compare targets case-insensitively")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("agree", help="inter-annotator agreement")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--kind-level", action="store_true", help="compare table/column kinds only")
    common(p)
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("stats", help="per-sentence label statistics")
    p.add_argument("annotations")
    common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("corr", help="Pearson correlation between two results-table columns")
    p.add_argument("results", nargs="?")
    p.add_argument("--builtin", choices=sorted(BUILTIN_TABLES), help="use a bundled transcribed table")
    p.add_argument("--x", default="f1")
    p.add_argument("--y", default="em")
    p.add_argument("--system-prefix", help="only rows whose system label starts with this")
    common(p)
    p.set_defaults(func=cmd_corr)

    p = sub.add_parser("split", help="database-disjoint dev/test split")
    p.add_argument("annotations")
    p.add_argument("--tables", required=True)
    p.add_argument("--questions", help="Spider dev.json supplying db_id")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    common(p, fmt=False)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("lint", help="validate an annotation file")
    p.add_argument("annotations")
    p.add_argument("--tables", required=True)
    p.add_argument("--questions")
    common(p, fmt=False)
    p.set_defaults(func=cmd_lint)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"schemalink: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CorrelationError, SplitError, UndefinedKappaError, ValueError) as exc:
        print(f"schemalink: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"schemalink: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
