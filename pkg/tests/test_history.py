from __future__ import annotations

import json
from datetime import timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from blvrun.history import (
    HistoryRecord,
    HistoryStore,
    StorageError,
    split_sentences,
    utc_now,
)


def record(text="KeyError: 'port'. Raised at app.py:3 in setting.") -> HistoryRecord:
    return HistoryRecord(
        timestamp=utc_now(),
        script="app.py",
        summary_text=text,
        backend="extractive",
        category="KeyError",
    )


class TestSplitSentences:
    def test_two_sentences(self):
        assert split_sentences("A. B.") == ["A.", "B."]

    def test_empty(self):
        assert split_sentences("") == []

    def test_dot_inside_filename_does_not_split(self):
        got = split_sentences("Err at x.py line 5. Fix foo().")
        assert got == ["Err at x.py line 5.", "Fix foo()."]

    def test_no_delimiter_yields_single_sentence(self):
        assert split_sentences("no punctuation here") == ["no punctuation here"]

    def test_question_and_exclamation(self):
        assert split_sentences("Really? Yes! Done.") == ["Really?", "Yes!", "Done."]

    def test_newline_counts_as_whitespace(self):
        assert split_sentences("First.\nSecond.") == ["First.", "Second."]

    def test_whitespace_only_segments_dropped(self):
        assert split_sentences("A.   ") == ["A."]

    @given(st.text(max_size=200))
    def test_pieces_are_stripped_and_nonempty(self, text):
        for piece in split_sentences(text):
            assert piece == piece.strip()
            assert piece


class TestStore:
    def test_fresh_store_loads_none(self, state_dir):
        assert HistoryStore(state_dir).load_last() is None

    def test_save_then_load(self, state_dir):
        store = HistoryStore(state_dir)
        rec = record()
        store.save_last(rec)
        loaded = store.load_last()
        assert loaded == rec
        assert loaded.timestamp.tzinfo is not None
        assert loaded.timestamp.utcoffset() == timezone.utc.utcoffset(None)

    def test_second_save_replaces_first(self, state_dir):
        store = HistoryStore(state_dir)
        store.save_last(record("First run."))
        store.save_last(record("Second run."))
        assert store.load_last().summary_text == "Second run."

    def test_store_is_one_json_object_with_five_fields(self, state_dir):
        store = HistoryStore(state_dir)
        store.save_last(record())
        data = json.loads(store.path.read_text(encoding="utf-8"))
        assert set(data) == {"timestamp", "script", "summary_text", "backend", "category"}

    def test_no_temp_files_left_behind(self, state_dir):
        store = HistoryStore(state_dir)
        for i in range(5):
            store.save_last(record(f"Run {i}."))
        assert [p.name for p in state_dir.iterdir()] == ["last.json"]

    def test_unwritable_location_raises_storage_error(self, tmp_path):
        blocker = tmp_path / "not-a-dir"
        blocker.write_text("file in the way")
        store = HistoryStore(blocker / "state")
        with pytest.raises(StorageError):
            store.save_last(record())

    def test_corrupt_store_reads_as_absent_with_warning(self, state_dir, capsys):
        store = HistoryStore(state_dir)
        store.save_last(record())
        store.path.write_text(store.path.read_text()[: 10])
        assert store.load_last() is None
        assert "blvrun:" in capsys.readouterr().err

    def test_wrong_shape_reads_as_absent(self, state_dir, capsys):
        store = HistoryStore(state_dir)
        state_dir.mkdir(parents=True, exist_ok=True)
        store.path.write_text(json.dumps({"unexpected": True}))
        assert store.load_last() is None
        assert "corrupt" in capsys.readouterr().err


class TestPrev:
    def test_first_two_of_three(self, state_dir):
        store = HistoryStore(state_dir)
        store.save_last(record("One. Two. Three."))
        assert store.prev(2) == ["One.", "Two."]

    def test_clamps_to_available(self, state_dir):
        store = HistoryStore(state_dir)
        store.save_last(record("One. Two. Three."))
        assert store.prev(10) == ["One.", "Two.", "Three."]

    def test_empty_store_gives_empty_list(self, state_dir):
        assert HistoryStore(state_dir).prev(3) == []

    def test_n_must_be_positive(self, state_dir):
        with pytest.raises(ValueError):
            HistoryStore(state_dir).prev(0)

    def test_prefix_monotone(self, state_dir):
        store = HistoryStore(state_dir)
        store.save_last(record("One. Two. Three. Four."))
        previous: list[str] = []
        for n in range(1, 7):
            current = store.prev(n)
            assert current[: len(previous)] == previous
            previous = current
