"""Command dispatch and configuration resolution for the blvrun tool.

Output stays plain text, one statement per line, with no ANSI color unless
asked for: the target users consume the terminal sequentially through a
screen reader. Configuration precedence is flag > environment > default.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import __version__
from .corpus import (
    CorpusError,
    corpus_stats,
    filter_types,
    load_records,
)
from .history import HistoryStore
from .metrics import (
    EmptyInputError,
    MissingGoldError,
    evaluate,
    write_report_csv,
)
from .model_client import DEFAULT_ENDPOINT, DEFAULT_TIMEOUT_MS, BackendConfig
from .runner import RunOptions, SpawnError, run_script
from .taxonomy import classify
from .traceback_parser import DEFAULT_LIBRARY_MARKERS

ENV_ENDPOINT = "BLVRUN_ENDPOINT"
ENV_MODEL = "BLVRUN_MODEL"
ENV_TIMEOUT_MS = "BLVRUN_TIMEOUT_MS"
ENV_INTERPRETER = "BLVRUN_INTERPRETER"
ENV_STATE_DIR = "BLVRUN_STATE_DIR"
ENV_OFFLINE = "BLVRUN_OFFLINE"

DEFAULT_MODEL_NAME = "codellama"
DEFAULT_PREV_COUNT = 3

_TRUTHY = ("1", "true", "yes", "on")

HELP_TEXT = """\
blvrun: run a Python script and get a concise summary of any traceback error.

usage:
  blvrun [flags] <script> [script args...]   run a script; summarize its error
  blvrun prev [-n N]                         reprint the first N sentences of
                                             the last summary (default 3)
  blvrun corpus stats <file> [--types a,b]   report statistics for a JSON-Lines
                                             error corpus
  blvrun eval --pairs <corpus.jsonl> --pred <pred.jsonl> --out <prefix>
                                             score predicted summaries against
                                             gold summaries (ROUGE-1, cosine)
  blvrun --help | --version

run flags:
  --raw                  also show the raw traceback (summary printed last)
  --offline              never contact the model backend; use the extractive
                         summarizer
  --interpreter NAME     interpreter to launch (default: python3)
  --endpoint URL         generation server endpoint
                         (default: http://127.0.0.1:11434)
  --model NAME           model name sent to the generation server
  --timeout-ms N         generation request deadline in milliseconds
  --library-markers CSV  path substrings that mark dependency frames
  --state-dir DIR        directory for the single-record summary history
  --color                allow colored framing lines (plain text by default)

environment variables (flags take precedence):
  BLVRUN_ENDPOINT, BLVRUN_MODEL, BLVRUN_TIMEOUT_MS, BLVRUN_INTERPRETER,
  BLVRUN_STATE_DIR, BLVRUN_OFFLINE

exit codes: the child's exit code for runs, 0 on success, 2 on usage errors,
127 when the interpreter or script cannot be launched.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in _TRUTHY


def _resolve(flag_value: str | None, env_name: str, default: str) -> str:
    if flag_value is not None:
        return flag_value
    env_value = os.environ.get(env_name)
    return env_value if env_value else default


def _resolve_timeout(flag_value: int | None) -> int:
    if flag_value is not None:
        return flag_value
    env_value = os.environ.get(ENV_TIMEOUT_MS)
    if not env_value:
        return DEFAULT_TIMEOUT_MS
    try:
        return int(env_value)
    except ValueError:
        raise UsageError(f"{ENV_TIMEOUT_MS} must be an integer, got {env_value!r}")


def _cmd_run(argv: list[str]) -> int:
    parser = _Parser(prog="blvrun", add_help=False)
    parser.add_argument("--raw", action="store_true")
    parser.add_argument("--offline", action="store_true")
    parser.add_argument("--interpreter")
    parser.add_argument("--endpoint")
    parser.add_argument("--model")
    parser.add_argument("--timeout-ms", type=int, dest="timeout_ms")
    parser.add_argument("--library-markers", dest="library_markers")
    parser.add_argument("--state-dir", dest="state_dir")
    parser.add_argument("--color", action="store_true")
    parser.add_argument("script")
    parser.add_argument("script_args", nargs=argparse.REMAINDER)
    args = parser.parse_args(argv)

    offline = args.offline or _env_flag(ENV_OFFLINE)
    try:
        config = BackendConfig(
            endpoint=_resolve(args.endpoint, ENV_ENDPOINT, DEFAULT_ENDPOINT),
            model_name=_resolve(args.model, ENV_MODEL, DEFAULT_MODEL_NAME),
            timeout_ms=_resolve_timeout(args.timeout_ms),
            enabled=not offline,
        )
    except ValueError as exc:
        raise UsageError(str(exc))

    markers = DEFAULT_LIBRARY_MARKERS
    if args.library_markers is not None:
        markers = tuple(m for m in args.library_markers.split(",") if m)

    options = RunOptions(
        raw=args.raw,
        interpreter=_resolve(args.interpreter, ENV_INTERPRETER, "python3"),
        offline=offline,
        library_markers=markers,
        state_dir=args.state_dir if args.state_dir is not None
        else os.environ.get(ENV_STATE_DIR) or None,
        color=args.color,
    )
    try:
        outcome = run_script(
            options.interpreter, args.script, args.script_args, config, options
        )
    except SpawnError as exc:
        print(f"blvrun: {exc}", file=sys.stderr)
        return 127
    return outcome.exit_code


def _cmd_prev(argv: list[str]) -> int:
    parser = _Parser(prog="blvrun prev")
    parser.add_argument("-n", type=int, default=DEFAULT_PREV_COUNT)
    parser.add_argument("--state-dir", dest="state_dir")
    args = parser.parse_args(argv)
    if args.n < 1:
        raise UsageError("-n must be at least 1")
    state_dir = args.state_dir if args.state_dir is not None \
        else os.environ.get(ENV_STATE_DIR) or None
    sentences = HistoryStore(state_dir).prev(args.n)
    if not sentences:
        print("no previous summary.")
        return 0
    for sentence in sentences:
        print(sentence)
    return 0


def _cmd_corpus(argv: list[str]) -> int:
    parser = _Parser(prog="blvrun corpus")
    parser.add_argument("action", choices=["stats"])
    parser.add_argument("path")
    parser.add_argument("--types")
    args = parser.parse_args(argv)
    try:
        result = load_records(args.path)
    except OSError as exc:
        raise UsageError(f"cannot read corpus: {exc}")
    except CorpusError as exc:
        print(f"blvrun: error: {exc}", file=sys.stderr)
        return 2
    if result.malformed:
        print(
            f"blvrun: skipped {result.malformed} malformed line(s) in {args.path}",
            file=sys.stderr,
        )
    records = result.records
    if args.types:
        wanted = [classify(t.strip()) for t in args.types.split(",") if t.strip()]
        records = filter_types(records, wanted)
    try:
        stats = corpus_stats(records)
    except CorpusError as exc:
        print(f"blvrun: error: {exc}", file=sys.stderr)
        return 2
    print(f"records: {stats.record_count}")
    print(f"median_sentences: {stats.median_sentences:g}")
    print(f"median_words: {stats.median_words:g}")
    writer = csv.writer(sys.stdout)
    writer.writerow(["error_type", "count"])
    ordered = sorted(stats.type_histogram.items(), key=lambda kv: (-kv[1], kv[0]))
    for error_type, count in ordered:
        writer.writerow([error_type, count])
    return 0


def _load_predictions(path: str) -> dict[str, str]:
    predictions: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError:
                raise UsageError(f"prediction file {path} has a malformed line")
            if (
                not isinstance(obj, dict)
                or not isinstance(obj.get("id"), str)
                or not isinstance(obj.get("summary"), str)
            ):
                raise UsageError(
                    f"prediction file {path} needs one {{id, summary}} object per line"
                )
            if obj["id"] in predictions:
                raise UsageError(f"prediction file {path} repeats id {obj['id']!r}")
            predictions[obj["id"]] = obj["summary"]
    return predictions


def _cmd_eval(argv: list[str]) -> int:
    parser = _Parser(prog="blvrun eval")
    parser.add_argument("--pairs", required=True)
    parser.add_argument("--pred", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        corpus_result = load_records(args.pairs)
        predictions = _load_predictions(args.pred)
    except OSError as exc:
        raise UsageError(f"cannot read input: {exc}")
    except CorpusError as exc:
        print(f"blvrun: error: {exc}", file=sys.stderr)
        return 2
    pairs = []
    for record in corpus_result.records:
        if record.gold_summary is None or not record.gold_summary.strip():
            continue
        if record.id not in predictions:
            raise UsageError(f"no prediction for record id {record.id!r}")
        pairs.append(
            (record.id, classify(record.error_type).label,
             predictions[record.id], record.gold_summary)
        )
    try:
        report = evaluate(pairs)
    except (EmptyInputError, MissingGoldError) as exc:
        print(f"blvrun: error: {exc}", file=sys.stderr)
        return 2
    write_report_csv(report, args.out)
    print(f"wrote {args.out}.pairs.csv and {args.out}.summary.csv")
    print(
        f"overall: pairs={report.overall.count} "
        f"mean_rouge_f={report.overall.mean_rouge_f:.6f} "
        f"mean_cosine={report.overall.mean_cosine:.6f}"
    )
    return 0


def dispatch(argv: list[str]) -> int:
    try:
        if not argv:
            raise UsageError("missing script or subcommand")
        head = argv[0]
        if head in ("-h", "--help"):
            print(HELP_TEXT, end="")
            return 0
        if head == "--version":
            print(f"blvrun {__version__}")
            return 0
        if head == "prev":
            return _cmd_prev(argv[1:])
        if head == "corpus":
            return _cmd_corpus(argv[1:])
        if head == "eval":
            return _cmd_eval(argv[1:])
        return _cmd_run(argv)
    except UsageError as exc:
        print(f"blvrun: error: {exc} (see 'blvrun --help')", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse -h inside a subcommand
        code = exc.code
        return code if isinstance(code, int) else 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
