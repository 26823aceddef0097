"""Acceptance suite: one test per product criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion lines.
Every tolerance and runtime bound is pinned here; nothing is deferred.
"""

from __future__ import annotations

import json
import math
import random
import sys
import time
from contextlib import contextmanager

import pytest

from blvrun.corpus import (
    ErrorRecord,
    corpus_stats,
    count_sentences,
    filter_keyword,
    filter_types,
)
from blvrun.history import HistoryStore, split_sentences
from blvrun.metrics import cosine_tf, evaluate, rouge1, tokenize
from blvrun.model_client import BackendConfig
from blvrun.runner import SUMMARY_HEADER_LINE, RunOptions, run_script
from blvrun.summarizer import extractive_summary
from blvrun.taxonomy import SUPPORTED_ERROR_TYPES, classify, supported_categories
from blvrun.traceback_parser import (
    chain_depth,
    deepest_user_frame,
    detect_traceback,
    parse_traceback,
)

from .mock_server import MockGenerationServer
from .oracles import cosine_reference, rouge1_reference

INTERP = sys.executable


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE: {name}: FAIL")
        raise
    print(f"ACCEPTANCE: {name}: PASS")


def offline_options(state_dir) -> RunOptions:
    return RunOptions(interpreter=INTERP, offline=True, state_dir=str(state_dir))


def test_metric_oracle_equivalence():
    with criterion("metric oracle equivalence (10,000 random pairs, 1e-9)"):
        start = time.perf_counter()
        rng = random.Random(0xB1F)
        alphabet = [f"tok{i}" for i in range(14)]
        for _ in range(10_000):
            a = [rng.choice(alphabet) for _ in range(rng.randrange(0, 51))]
            b = [rng.choice(alphabet) for _ in range(rng.randrange(0, 51))]
            text_a, text_b = " ".join(a), " ".join(b)
            got = rouge1(text_a, text_b)
            want_p, want_r, want_f = rouge1_reference(a, b)
            assert math.isclose(got.precision, want_p, rel_tol=0, abs_tol=1e-9)
            assert math.isclose(got.recall, want_r, rel_tol=0, abs_tol=1e-9)
            assert math.isclose(got.f, want_f, rel_tol=0, abs_tol=1e-9)
            assert math.isclose(
                cosine_tf(text_a, text_b), cosine_reference(a, b), rel_tol=0, abs_tol=1e-9
            )
        # Hand-derived cases.
        hand = rouge1("the cat sat on the mat", "the cat lay on the mat")
        assert hand.precision == 5 / 6
        assert hand.recall == 5 / 6
        assert abs(hand.f - 5 / 6) <= 1e-12
        assert abs(cosine_tf("a b", "a c") - 0.5) <= 1e-12
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"metric check took {elapsed:.1f}s"


def test_self_evaluation_fixed_point():
    with criterion("self-evaluation fixed point (23 pairs, all seven categories)"):
        rng = random.Random(23)
        vocab = ["key", "error", "missing", "line", "call", "value", "frame", "file"]
        pairs = []
        for i in range(23):
            category = SUPPORTED_ERROR_TYPES[i % 7]
            gold = " ".join(rng.choice(vocab) for _ in range(rng.randrange(4, 12)))
            pairs.append((f"case{i:02d}", category, gold, gold))
        assert {c for _, c, _, _ in pairs} == set(SUPPORTED_ERROR_TYPES)
        report = evaluate(pairs)
        assert report.overall.count == 23
        assert abs(report.overall.mean_rouge_f - 1.0) <= 1e-12
        assert abs(report.overall.mean_cosine - 1.0) <= 1e-12
        for mean in report.per_category.values():
            assert abs(mean.mean_rouge_f - 1.0) <= 1e-12
            assert abs(mean.mean_cosine - 1.0) <= 1e-12


def test_parser_fidelity(manifest, fixture_texts):
    with criterion("parser fidelity (100% of committed fixtures match manifest)"):
        start = time.perf_counter()
        traceback_fixtures = [
            e for e in manifest["fixtures"] if e["expected"].get("has_traceback")
        ]
        assert len(manifest["fixtures"]) >= 13
        for entry in traceback_fixtures:
            expected = entry["expected"]
            text = fixture_texts[entry["name"]]
            span = detect_traceback(text)
            assert span is not None, entry["name"]
            tb = parse_traceback(text, span)
            assert tb.exception_type == expected["exception_type"], entry["name"]
            assert tb.exception_message == expected["exception_message"], entry["name"]
            assert len(tb.frames) == expected["frame_count"], entry["name"]
            assert chain_depth(tb) == expected["chain_depth"], entry["name"]
            frame = deepest_user_frame(tb)
            want = expected["deepest_user_frame"]
            assert frame is not None, entry["name"]
            assert frame.file_path == want["file"], entry["name"]
            assert frame.line_number == want["line"], entry["name"]
            assert frame.function_name == want["function"], entry["name"]
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"parsing took {elapsed:.2f}s"


def test_keyword_gating(fixtures_dir, state_dir, capfd):
    with criterion("keyword gating (clean exit, bare keyword, header-less syntax error)"):
        config = BackendConfig(enabled=False)
        for name, expected_exit in (("clean_exit", 0), ("keyword_in_output", 0)):
            outcome = run_script(
                INTERP, fixtures_dir / f"{name}.py", [], config, offline_options(state_dir)
            )
            capfd.readouterr()
            assert outcome.exit_code == expected_exit, name
            assert outcome.had_traceback is False, name
            assert outcome.summary is None, name
        outcome = run_script(
            INTERP, fixtures_dir / "syntax_error.py", [], config, offline_options(state_dir)
        )
        out, err = capfd.readouterr()
        assert outcome.exit_code == 1
        assert outcome.had_traceback is False
        assert "SyntaxError: invalid syntax" in err
        assert SUMMARY_HEADER_LINE not in out


def test_end_to_end_with_mock_server(fixtures_dir, state_dir, capfd):
    with criterion("end-to-end with mock server (model path, then fallback)"):
        start = time.perf_counter()
        script = fixtures_dir / "zero_division.py"
        options = RunOptions(interpreter=INTERP, state_dir=str(state_dir))

        server = MockGenerationServer(response_text="The script divided by zero.")
        server.start()
        try:
            config = BackendConfig(
                endpoint=server.url, model_name="test-model", timeout_ms=2000
            )
            outcome = run_script(INTERP, script, [], config, options)
            out, _ = capfd.readouterr()
            assert outcome.exit_code == 1
            assert outcome.summary is not None
            assert outcome.summary.backend == "model"
            assert "The script divided by zero." in out
            record = HistoryStore(state_dir).load_last()
            assert record is not None and record.backend == "model"
        finally:
            server.stop()

        run_start = time.perf_counter()
        outcome = run_script(INTERP, script, [], config, options)
        run_elapsed = time.perf_counter() - run_start
        capfd.readouterr()
        assert outcome.exit_code == 1
        assert outcome.summary is not None
        assert outcome.summary.backend == "extractive"
        assert run_elapsed <= 2.0 + 1.0, f"fallback run took {run_elapsed:.1f}s"
        record = HistoryStore(state_dir).load_last()
        assert record is not None and record.backend == "extractive"
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"end-to-end criterion took {elapsed:.1f}s"


def test_compression_property(manifest, fixture_texts):
    with criterion("compression property (long fixtures summarize to <= 3 sentences)"):
        qualifying = 0
        for entry in manifest["fixtures"]:
            if not entry["expected"].get("has_traceback"):
                continue
            text = fixture_texts[entry["name"]]
            span = detect_traceback(text)
            span_text = text[span[0] : span[1]]
            if count_sentences(span_text) < 26:
                continue
            qualifying += 1
            tb = parse_traceback(text, span)
            summary = extractive_summary(tb)
            assert len(split_sentences(summary.text)) <= 3, entry["name"]
            assert len(tokenize(summary.text)) < len(tokenize(span_text)), entry["name"]
        assert qualifying >= 1, "no fixture reaches the 26-sentence threshold"


def test_prev_semantics(fixtures_dir, state_dir, capfd, monkeypatch):
    with criterion("prev semantics (min(n,k), prefix-monotone, tiny store)"):
        from blvrun.cli import dispatch

        monkeypatch.setenv("BLVRUN_STATE_DIR", str(state_dir))
        config = BackendConfig(enabled=False)
        options = offline_options(state_dir)
        script = fixtures_dir / "chained_implicit.py"

        outcome = run_script(INTERP, script, [], config, options)
        capfd.readouterr()
        sentences = split_sentences(outcome.summary.text)
        k = len(sentences)
        assert k == 3

        previous: list[str] = []
        for n in range(1, k + 3):
            assert dispatch(["prev", "-n", str(n)]) == 0
            lines = capfd.readouterr().out.splitlines()
            assert lines == sentences[: min(n, k)]
            assert lines[: len(previous)] == previous
            previous = lines

        for _ in range(100):
            run_script(INTERP, script, [], config, options)
            capfd.readouterr()
        store = HistoryStore(state_dir)
        assert store.path.stat().st_size < 4096
        assert [p.name for p in store.path.parent.iterdir()] == ["last.json"]


def test_corpus_statistics_oracle():
    with criterion("corpus statistics (101-record medians and filters vs oracles)"):
        rng = random.Random(101)
        error_types = list(SUPPORTED_ERROR_TYPES) + ["ZeroDivisionError", "OSError"]
        records = []
        for i in range(101):
            lines = [
                " ".join(f"w{rng.randrange(40)}" for _ in range(rng.randrange(1, 9)))
                for _ in range(rng.randrange(1, 50))
            ]
            body = "\n".join(lines)
            if rng.random() < 0.7:
                body = "Traceback (most recent call last):\n" + body
            records.append(
                ErrorRecord(
                    id=f"r{i:03d}",
                    traceback_text=body,
                    error_type=rng.choice(error_types),
                    gold_summary=None,
                    split="train" if rng.random() < 0.8 else "test",
                )
            )
        stats = corpus_stats(records)
        sentence_sorted = sorted(count_sentences(r.traceback_text) for r in records)
        word_sorted = sorted(len(tokenize(r.traceback_text)) for r in records)
        assert stats.median_sentences == sentence_sorted[50]
        assert stats.median_words == word_sorted[50]
        assert sum(stats.type_histogram.values()) == 101

        kept = filter_keyword(records)
        assert kept == [r for r in records if "Traceback" in r.traceback_text]
        wanted = supported_categories()
        typed = filter_types(records, wanted)
        assert typed == [r for r in records if classify(r.error_type) in wanted]
        assert filter_keyword(kept) == kept
        assert filter_types(typed, wanted) == typed


def test_no_deadlock_stress(tmp_path, state_dir, capfdbinary):
    with criterion("no-deadlock stress (10 MiB on each stream, fully drained)"):
        size = 10 * 1024 * 1024
        chunk = 64 * 1024
        script = tmp_path / "stress.py"
        script.write_text(
            "import sys\n"
            f"for _ in range({size // chunk}):\n"
            f"    sys.stdout.buffer.write(b'o' * {chunk})\n"
            f"    sys.stderr.buffer.write(b'e' * {chunk})\n"
        )
        start = time.perf_counter()
        outcome = run_script(
            INTERP, script, [], BackendConfig(enabled=False), offline_options(state_dir)
        )
        elapsed = time.perf_counter() - start
        out, _ = capfdbinary.readouterr()
        assert elapsed < 30.0, f"stress run took {elapsed:.1f}s"
        assert outcome.exit_code == 0
        assert len(out) == size
        assert outcome.stderr_bytes_total == size
        assert outcome.had_traceback is False
