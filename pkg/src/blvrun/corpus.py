"""Error-corpus ingestion, filtering, and headline statistics.

Corpus files are UTF-8 JSON-Lines, one record per line with the fields
id, traceback_text, error_type, gold_summary (optional), and split.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

from .history import split_sentences
from .metrics import tokenize
from .taxonomy import ErrorCategory, classify

VALID_SPLITS = ("train", "test")
TRACEBACK_KEYWORD = "Traceback"


class CorpusError(Exception):
    pass


class EmptyCorpusError(CorpusError):
    pass


class DuplicateIdError(CorpusError):
    def __init__(self, record_id: str) -> None:
        super().__init__(f"duplicate record id {record_id!r}")
        self.record_id = record_id


class EmptyInputError(ValueError):
    pass


@dataclass(frozen=True)
class ErrorRecord:
    id: str
    traceback_text: str
    error_type: str
    gold_summary: str | None
    split: str


@dataclass
class LoadResult:
    records: list[ErrorRecord]
    malformed: int


@dataclass
class CorpusStats:
    record_count: int
    median_sentences: float
    median_words: float
    type_histogram: dict[str, int]


def _record_from(obj: object) -> ErrorRecord | None:
    if not isinstance(obj, dict):
        return None
    record_id = obj.get("id")
    text = obj.get("traceback_text")
    error_type = obj.get("error_type")
    gold = obj.get("gold_summary")
    split = obj.get("split")
    if not isinstance(record_id, str) or not record_id:
        return None
    if not isinstance(text, str) or not text:
        return None
    if not isinstance(error_type, str) or not error_type:
        return None
    if gold is not None and not isinstance(gold, str):
        return None
    if split not in VALID_SPLITS:
        return None
    return ErrorRecord(record_id, text, error_type, gold, split)


def load_records(path: str) -> LoadResult:
    """Read a JSON-Lines corpus file, skipping (and counting) malformed lines.

    Raises DuplicateIdError on a repeated id and EmptyCorpusError when no
    well-formed record remains. I/O failures propagate as OSError.
    """
    records: list[ErrorRecord] = []
    seen: set[str] = set()
    malformed = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError:
                malformed += 1
                continue
            record = _record_from(obj)
            if record is None:
                malformed += 1
                continue
            if record.id in seen:
                raise DuplicateIdError(record.id)
            seen.add(record.id)
            records.append(record)
    if not records:
        raise EmptyCorpusError(f"no well-formed records in {path}")
    return LoadResult(records, malformed)


def filter_keyword(records: list[ErrorRecord]) -> list[ErrorRecord]:
    """Keep records whose text contains the literal traceback keyword."""
    return [r for r in records if TRACEBACK_KEYWORD in r.traceback_text]


def filter_types(
    records: list[ErrorRecord], categories: list[ErrorCategory]
) -> list[ErrorRecord]:
    wanted = set(categories)
    return [r for r in records if classify(r.error_type) in wanted]


def count_sentences(text: str) -> int:
    """Sentence count with hard newlines as additional boundaries.

    Traceback frame lines rarely end with punctuation, so each non-blank
    line contributes at least one sentence.
    """
    return sum(len(split_sentences(segment)) for segment in text.split("\n"))


def median(values: list[float]) -> float:
    """Middle of the sorted values; mean of the two middles for even length."""
    if not values:
        raise EmptyInputError("median of an empty list")
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2


def corpus_stats(records: list[ErrorRecord]) -> CorpusStats:
    if not records:
        raise EmptyCorpusError("cannot compute statistics on an empty corpus")
    sentence_counts = [count_sentences(r.traceback_text) for r in records]
    word_counts = [len(tokenize(r.traceback_text)) for r in records]
    histogram = Counter(r.error_type for r in records)
    return CorpusStats(
        record_count=len(records),
        median_sentences=median(sentence_counts),
        median_words=median(word_counts),
        type_histogram=dict(histogram),
    )
