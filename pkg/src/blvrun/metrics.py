"""ROUGE-1 and term-frequency cosine similarity, plus report aggregation.

ROUGE-1 uses clipped multiset unigram counts. Cosine works on raw term
frequencies: no idf weighting, no stopwords, no stemming, so identifier-heavy
traceback vocabulary survives intact and the scores are corpus-independent.
"""

from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass

_TOKEN_RE = re.compile(r"\w+")


class EmptyInputError(ValueError):
    pass


class MissingGoldError(ValueError):
    def __init__(self, pair_id: str) -> None:
        super().__init__(f"pair {pair_id!r} has an empty gold summary")
        self.pair_id = pair_id


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f: float


@dataclass(frozen=True)
class PairScore:
    id: str
    category: str
    rouge: RougeScore
    cosine: float


@dataclass(frozen=True)
class ScoreMean:
    mean_rouge_f: float
    mean_cosine: float
    count: int


@dataclass
class EvalReport:
    per_pair: list[PairScore]
    per_category: dict[str, ScoreMean]
    overall: ScoreMean


def tokenize(text: str) -> list[str]:
    """Lowercased maximal runs of letters, digits, and underscores."""
    return _TOKEN_RE.findall(text.lower())


def rouge1(pred: str, ref: str) -> RougeScore:
    """Unigram overlap with clipped counts, as precision/recall/f."""
    pred_tokens = tokenize(pred)
    ref_tokens = tokenize(ref)
    overlap = sum((Counter(pred_tokens) & Counter(ref_tokens)).values())
    precision = overlap / len(pred_tokens) if pred_tokens else 0.0
    recall = overlap / len(ref_tokens) if ref_tokens else 0.0
    if precision + recall == 0:
        f = 0.0
    else:
        f = 2 * precision * recall / (precision + recall)
    return RougeScore(precision, recall, f)


def cosine_tf(pred: str, ref: str) -> float:
    """Cosine of the angle between raw term-frequency vectors.

    Two empty texts score 1.0; exactly one empty scores 0.0.
    """
    pred_counts = Counter(tokenize(pred))
    ref_counts = Counter(tokenize(ref))
    if not pred_counts and not ref_counts:
        return 1.0
    if not pred_counts or not ref_counts:
        return 0.0
    dot = sum(count * ref_counts[token] for token, count in pred_counts.items())
    norm_pred = math.sqrt(sum(c * c for c in pred_counts.values()))
    norm_ref = math.sqrt(sum(c * c for c in ref_counts.values()))
    return dot / (norm_pred * norm_ref)


def _mean_of(scores: list[PairScore]) -> ScoreMean:
    return ScoreMean(
        mean_rouge_f=sum(s.rouge.f for s in scores) / len(scores),
        mean_cosine=sum(s.cosine for s in scores) / len(scores),
        count=len(scores),
    )


def evaluate(pairs: list[tuple[str, str, str, str]]) -> EvalReport:
    """Score (id, category, pred, gold) pairs and aggregate arithmetic means.

    Pairs are processed in id order so aggregation is deterministic. Raises
    EmptyInputError for an empty list and MissingGoldError when any gold
    summary is empty.
    """
    if not pairs:
        raise EmptyInputError("no pairs to evaluate")
    per_pair: list[PairScore] = []
    for pair_id, category, pred, gold in sorted(pairs, key=lambda p: p[0]):
        if not gold.strip():
            raise MissingGoldError(pair_id)
        per_pair.append(
            PairScore(pair_id, category, rouge1(pred, gold), cosine_tf(pred, gold))
        )
    by_category: dict[str, list[PairScore]] = {}
    for score in per_pair:
        by_category.setdefault(score.category, []).append(score)
    per_category = {cat: _mean_of(scores) for cat, scores in by_category.items()}
    return EvalReport(per_pair, per_category, _mean_of(per_pair))


def write_report_csv(report: EvalReport, path_prefix: str) -> None:
    """Write <prefix>.pairs.csv and <prefix>.summary.csv with 6-decimal scores."""
    with open(f"{path_prefix}.pairs.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "category", "rouge_p", "rouge_r", "rouge_f", "cosine"])
        for s in report.per_pair:
            writer.writerow(
                [
                    s.id,
                    s.category,
                    f"{s.rouge.precision:.6f}",
                    f"{s.rouge.recall:.6f}",
                    f"{s.rouge.f:.6f}",
                    f"{s.cosine:.6f}",
                ]
            )
    with open(f"{path_prefix}.summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["category", "count", "mean_rouge_f", "mean_cosine"])
        for category in sorted(report.per_category):
            mean = report.per_category[category]
            writer.writerow(
                [category, mean.count, f"{mean.mean_rouge_f:.6f}", f"{mean.mean_cosine:.6f}"]
            )
        writer.writerow(
            [
                "overall",
                report.overall.count,
                f"{report.overall.mean_rouge_f:.6f}",
                f"{report.overall.mean_cosine:.6f}",
            ]
        )
