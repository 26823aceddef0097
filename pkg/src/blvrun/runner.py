"""Child-process supervision: run the script, capture stderr, summarize.

The child's stdout is forwarded live and unmodified. Its stderr is drained
concurrently into a capped buffer; after exit, a detected traceback is
summarized (raw text suppressed unless --raw) while any other stderr content
is forwarded verbatim. Two drain threads guarantee progress regardless of
the child's write order, so neither pipe can fill up and deadlock.
"""

from __future__ import annotations

import os
import subprocess
import sys
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path

from .history import HistoryRecord, HistoryStore, StorageError, split_sentences, utc_now
from .model_client import BackendConfig
from .summarizer import Summary, summarize
from .traceback_parser import (
    DEFAULT_LIBRARY_MARKERS,
    CaptureBuffer,
    ParseError,
    detect_traceback,
    parse_traceback,
)

SUMMARY_HEADER_LINE = "── error summary ──"
SUMMARY_FOOTER_LINE = "─" * 20
TRUNCATION_NOTE = (
    "note: error output exceeded the 1 MiB capture limit; "
    "this summary covers the most recent part."
)

_CHUNK_SIZE = 65536
_COLOR_DIM = "\x1b[2m"
_COLOR_RESET = "\x1b[0m"


class SpawnError(Exception):
    """The interpreter or the script could not be launched."""


@dataclass
class RunOptions:
    raw: bool = False
    interpreter: str = "python3"
    offline: bool = False
    library_markers: tuple[str, ...] = DEFAULT_LIBRARY_MARKERS
    state_dir: str | None = None
    color: bool = False


@dataclass
class RunOutcome:
    exit_code: int
    had_traceback: bool
    summary: Summary | None
    stderr_tail: str
    wall_time_ms: float
    stderr_bytes_total: int = 0


def _pump_stdout(pipe, sink) -> None:
    while True:
        chunk = pipe.read1(_CHUNK_SIZE)
        if not chunk:
            break
        sink.write(chunk)
        sink.flush()
    pipe.close()


def _pump_stderr(pipe, buf: CaptureBuffer, tee) -> None:
    while True:
        chunk = pipe.read1(_CHUNK_SIZE)
        if not chunk:
            break
        buf.write(chunk)
        if tee is not None:
            tee.write(chunk)
            tee.flush()
    pipe.close()


def _print_summary(summary: Summary, color: bool) -> None:
    header, footer = SUMMARY_HEADER_LINE, SUMMARY_FOOTER_LINE
    if color:
        header = f"{_COLOR_DIM}{header}{_COLOR_RESET}"
        footer = f"{_COLOR_DIM}{footer}{_COLOR_RESET}"
    out = sys.stdout
    print(header, file=out)
    sentences = split_sentences(summary.text) or [summary.text]
    for sentence in sentences:
        print(sentence, file=out)
    if summary.truncated_input:
        print(TRUNCATION_NOTE, file=out)
    print(footer, file=out)
    out.flush()


def _save_outcome(summary: Summary, script: str, state_dir: str | None) -> None:
    record = HistoryRecord(
        timestamp=utc_now(),
        script=script,
        summary_text=summary.text,
        backend=summary.backend,
        category=summary.category.label,
    )
    try:
        HistoryStore(state_dir).save_last(record)
    except StorageError as exc:
        print(f"blvrun: could not save summary history: {exc}", file=sys.stderr)


def run_script(
    interpreter: str,
    script: str | Path,
    args: list[str],
    config: BackendConfig,
    options: RunOptions,
) -> RunOutcome:
    """Run ``interpreter script args...`` and summarize a terminating traceback.

    The tool's exit code mirrors the child's (deaths by signal map to the
    conventional 128+N). Raises SpawnError when the script is missing or the
    interpreter cannot be launched; everything else is absorbed into the
    outcome.
    """
    script_path = Path(script)
    if not script_path.is_file():
        raise SpawnError(f"script not found: {script}")
    if not os.access(script_path, os.R_OK):
        raise SpawnError(f"script not readable: {script}")

    start = time.perf_counter()
    try:
        proc = subprocess.Popen(
            [interpreter, str(script_path), *args],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
    except (FileNotFoundError, NotADirectoryError, PermissionError) as exc:
        raise SpawnError(f"cannot launch interpreter {interpreter!r}: {exc}") from exc

    buf = CaptureBuffer()
    out_sink = sys.stdout.buffer
    err_tee = sys.stderr.buffer if options.raw else None
    stdout_thread = threading.Thread(target=_pump_stdout, args=(proc.stdout, out_sink))
    stderr_thread = threading.Thread(target=_pump_stderr, args=(proc.stderr, buf, err_tee))
    stdout_thread.start()
    stderr_thread.start()
    proc.wait()
    stdout_thread.join()
    stderr_thread.join()
    wall_time_ms = (time.perf_counter() - start) * 1000.0

    exit_code = proc.returncode
    if exit_code < 0:
        exit_code = 128 - exit_code

    stripped = buf.stripped
    span = detect_traceback(stripped)
    tb = None
    if span is not None:
        try:
            tb = parse_traceback(stripped, span)
        except ParseError:
            span = None  # unrecognizable tail: treat as ordinary stderr

    summary: Summary | None = None
    if tb is not None and span is not None:
        if not options.raw:
            leftover = stripped[: span[0]] + stripped[span[1] :]
            if leftover.strip():
                sys.stderr.write(leftover)
                sys.stderr.flush()
        backend_config = replace(config, enabled=False) if options.offline else config
        summary = summarize(
            tb,
            stripped[span[0] : span[1]],
            backend_config,
            library_markers=options.library_markers,
            truncated_input=buf.truncated,
        )
        _print_summary(summary, options.color)
        _save_outcome(summary, str(script_path), options.state_dir)
    elif buf.total_bytes and not options.raw:
        if buf.truncated:
            print(
                "blvrun: error output exceeded the 1 MiB capture limit; "
                "showing the most recent part.",
                file=sys.stderr,
            )
        sys.stderr.write(buf.text)
        sys.stderr.flush()

    return RunOutcome(
        exit_code=exit_code,
        had_traceback=summary is not None,
        summary=summary,
        stderr_tail=buf.text,
        wall_time_ms=wall_time_ms,
        stderr_bytes_total=buf.total_bytes,
    )
