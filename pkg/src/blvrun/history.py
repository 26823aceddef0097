"""Single-record summary history: the store holds just the previous response."""

from __future__ import annotations

import json
import os
import re
import sys
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

STORE_FILENAME = "last.json"
STATE_DIR_ENV = "BLVRUN_STATE_DIR"

# Sentence boundary: '.', '!' or '?' followed by whitespace or end of text.
_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?])(?=\s|\Z)")


class StorageError(Exception):
    pass


@dataclass(frozen=True)
class HistoryRecord:
    timestamp: datetime
    script: str
    summary_text: str
    backend: str
    category: str


def split_sentences(text: str) -> list[str]:
    """Split on sentence punctuation followed by whitespace or end of text.

    Delimiters stay attached to their sentence; whitespace-only pieces are
    dropped; text without any delimiter comes back as a single sentence.
    """
    pieces = _SENTENCE_BOUNDARY.split(text)
    return [piece.strip() for piece in pieces if piece.strip()]


def _default_state_dir() -> Path:
    override = os.environ.get(STATE_DIR_ENV)
    if override:
        return Path(override)
    if sys.platform == "win32":
        base = Path(os.environ.get("LOCALAPPDATA", Path.home() / "AppData" / "Local"))
    else:
        base = Path(os.environ.get("XDG_STATE_HOME", Path.home() / ".local" / "state"))
    return base / "blvrun"


class HistoryStore:
    """Atomic one-record store under the user state directory.

    ``state_dir`` overrides the location (flag beats the BLVRUN_STATE_DIR
    environment variable, which beats the platform default).
    """

    def __init__(self, state_dir: str | Path | None = None) -> None:
        self._dir = Path(state_dir) if state_dir is not None else _default_state_dir()

    @property
    def path(self) -> Path:
        return self._dir / STORE_FILENAME

    def save_last(self, record: HistoryRecord) -> None:
        """Replace the stored record; the write is temp-file-and-rename atomic."""
        payload = {
            "timestamp": record.timestamp.isoformat(),
            "script": record.script,
            "summary_text": record.summary_text,
            "backend": record.backend,
            "category": record.category,
        }
        try:
            self._dir.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(prefix=".last-", suffix=".tmp", dir=self._dir)
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    json.dump(payload, fh, ensure_ascii=False)
                os.replace(tmp_name, self.path)
            except BaseException:
                try:
                    os.unlink(tmp_name)
                except OSError:
                    pass
                raise
        except OSError as exc:
            raise StorageError(f"cannot write history store at {self.path}: {exc}") from exc

    def load_last(self) -> HistoryRecord | None:
        """The sole stored record, or None. A corrupt file warns and reads as empty."""
        try:
            raw = self.path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        except OSError as exc:
            print(f"blvrun: history store unreadable: {exc}", file=sys.stderr)
            return None
        try:
            data = json.loads(raw)
            return HistoryRecord(
                timestamp=datetime.fromisoformat(data["timestamp"]),
                script=data["script"],
                summary_text=data["summary_text"],
                backend=data["backend"],
                category=data["category"],
            )
        except (ValueError, KeyError, TypeError):
            print(
                f"blvrun: history store at {self.path} is corrupt; ignoring it",
                file=sys.stderr,
            )
            return None

    def prev(self, n: int) -> list[str]:
        """The first min(n, k) sentences of the stored summary, in reading order."""
        if n < 1:
            raise ValueError("n must be >= 1")
        record = self.load_last()
        if record is None:
            return []
        sentences = split_sentences(record.summary_text)
        return sentences[:n]


def utc_now() -> datetime:
    return datetime.now(timezone.utc)
