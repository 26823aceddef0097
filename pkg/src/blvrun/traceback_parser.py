"""Detect and parse Python traceback text into a structured form.

Everything here is a pure function over immutable text: the runner hands
over whatever the child process wrote to stderr, and this module finds the
last complete traceback block, splits it into stack frames, and follows
exception chains ("direct cause" / "during handling" links).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

TRACEBACK_HEADER = "Traceback (most recent call last):"

CAUSE_SEPARATOR = (
    "The above exception was the direct cause of the following exception:"
)
CONTEXT_SEPARATOR = (
    "During handling of the above exception, another exception occurred:"
)

CAUSE_EXPLICIT = "explicit_cause"
CAUSE_IMPLICIT = "implicit_context"

# Frame paths containing any of these substrings count as dependency code.
DEFAULT_LIBRARY_MARKERS = (
    "site-packages",
    "dist-packages",
    "/lib/python",
    "<frozen ",
)

# Capture is capped at 1 MiB, keeping the tail (tracebacks end the stream).
MAX_CAPTURE_BYTES = 1024 * 1024

# CSI (ESC [ ... final byte) and OSC (ESC ] ... BEL or ESC \) sequences.
_ANSI_RE = re.compile(
    r"\x1b\[[0-9:;<=>?]*[ -/]*[@-~]"
    r"|\x1b\][^\x07\x1b]*(?:\x07|\x1b\\)"
)

_FRAME_RE = re.compile(
    r'^\s+File "(?P<file>[^"]*)", line (?P<line>\d+)(?:, in (?P<func>.*))?$'
)
_ELISION_RE = re.compile(r"^\s*\[Previous line repeated (?P<count>\d+) more times?\]$")
# Caret/tilde anchor lines drawn under source echoes by newer interpreters.
_DECORATION_RE = re.compile(r"^\s*[\^~]+\s*$")
# Final "Type: message" line: a dotted identifier, optionally with ": ...".
_EXCEPTION_RE = re.compile(
    r"^[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*(?::.*)?$"
)


class ParseError(Exception):
    """No frame header and no exception line recognizable inside the span."""


@dataclass(frozen=True)
class SourceFrame:
    """One stack entry: where the interpreter was when the error passed through."""

    file_path: str
    line_number: int
    function_name: str
    source_line: str | None = None
    repeat_count: int = 1


@dataclass
class ParsedTraceback:
    """Structured traceback: frames plus the final exception, chained via cause.

    Frames are in source order (outermost call first, error site last).
    ``cause`` points at the earlier traceback block of a chained exception;
    ``cause_kind`` records which separator line linked them.
    """

    frames: list[SourceFrame] = field(default_factory=list)
    exception_type: str = ""
    exception_message: str = ""
    cause: ParsedTraceback | None = None
    cause_kind: str | None = None
    raw_span: tuple[int, int] = (0, 0)


class CaptureBuffer:
    """Accumulates a child's stderr bytes, keeping at most the final 1 MiB.

    Decoding replaces invalid sequences instead of failing; truncation is
    flagged rather than silent.
    """

    def __init__(self, limit: int = MAX_CAPTURE_BYTES) -> None:
        self._limit = limit
        self._chunks: list[bytes] = []
        self._kept = 0
        self.total_bytes = 0
        self._text: str | None = None
        self._stripped: str | None = None

    def write(self, chunk: bytes) -> None:
        self.total_bytes += len(chunk)
        self._chunks.append(chunk)
        self._kept += len(chunk)
        # Drop whole chunks from the front while the tail stays >= limit.
        while self._chunks and self._kept - len(self._chunks[0]) >= self._limit:
            self._kept -= len(self._chunks.pop(0))
        self._text = None
        self._stripped = None

    @property
    def truncated(self) -> bool:
        return self.total_bytes > self._limit

    @property
    def text(self) -> str:
        if self._text is None:
            raw = b"".join(self._chunks)[-self._limit :]
            self._text = raw.decode("utf-8", errors="replace")
        return self._text

    @property
    def stripped(self) -> str:
        if self._stripped is None:
            self._stripped = strip_ansi(self.text)
        return self._stripped


def strip_ansi(raw: str) -> str:
    """Remove CSI and OSC escape sequences, preserving all other characters."""
    return _ANSI_RE.sub("", raw)


@dataclass
class _Block:
    start: int  # offset of the header line
    end: int    # offset just past the final exception line (incl. newline)
    complete: bool
    frame_lines: list[str]
    exception_line: str | None


def _line_table(raw: str) -> list[tuple[int, str]]:
    """(start offset, content without line ending) for each line."""
    table = []
    pos = 0
    for line in raw.splitlines(keepends=True):
        table.append((pos, line.rstrip("\r\n")))
        pos += len(line)
    return table


def _scan_blocks(raw: str) -> list[_Block]:
    lines = _line_table(raw)
    n = len(lines)
    header_idx = [i for i, (_, content) in enumerate(lines) if content == TRACEBACK_HEADER]
    blocks: list[_Block] = []
    for k, h in enumerate(header_idx):
        bound = header_idx[k + 1] if k + 1 < len(header_idx) else n
        body: list[str] = []
        exception_line: str | None = None
        end = len(raw) if k + 1 == len(header_idx) else lines[bound][0]
        complete = False
        for i in range(h + 1, bound):
            start_off, content = lines[i]
            if _FRAME_RE.match(content) or _ELISION_RE.match(content):
                body.append(content)
                continue
            if content and content[0] in " \t":
                body.append(content)
                continue
            if not content.strip():
                # CPython never emits a blank line inside a block.
                break
            if _EXCEPTION_RE.match(content):
                exception_line = content
                nl = raw.find("\n", start_off)
                end = len(raw) if nl == -1 else nl + 1
                complete = True
            break
        blocks.append(_Block(lines[h][0], end, complete, body, exception_line))
    return blocks


def _separator_between(raw: str, prev_end: int, next_start: int) -> str | None:
    """The chain kind if the gap holds exactly one separator line, else None."""
    gap = [ln.strip() for ln in raw[prev_end:next_start].splitlines() if ln.strip()]
    if gap == [CAUSE_SEPARATOR]:
        return CAUSE_EXPLICIT
    if gap == [CONTEXT_SEPARATOR]:
        return CAUSE_IMPLICIT
    return None


def detect_traceback(raw: str) -> tuple[int, int] | None:
    """Locate the last complete traceback block (with its whole chain).

    Returns the (start, end) span covering the block's header through its
    final exception line, extended backward over any chained blocks linked
    by separator lines. Returns None when no header line occurs. A header
    whose tail is malformed yields a best-effort span ending at end of text.
    """
    blocks = _scan_blocks(raw)
    if not blocks:
        return None
    first = last = len(blocks) - 1
    while first > 0 and blocks[first - 1].complete and _separator_between(
        raw, blocks[first - 1].end, blocks[first].start
    ):
        first -= 1
    return (blocks[first].start, blocks[last].end)


def _split_exception_line(line: str) -> tuple[str, str]:
    if ": " in line:
        exc_type, _, message = line.partition(": ")
        return exc_type, message
    return line.rstrip(":"), ""


def _parse_block(block: _Block) -> tuple[list[SourceFrame], str, str]:
    frames: list[SourceFrame] = []
    pending_source = False
    for content in block.frame_lines:
        m = _FRAME_RE.match(content)
        if m:
            frames.append(
                SourceFrame(
                    file_path=m.group("file"),
                    line_number=int(m.group("line")),
                    function_name=m.group("func") or "<module>",
                )
            )
            pending_source = True
            continue
        m = _ELISION_RE.match(content)
        if m:
            if frames:
                frames[-1] = replace(frames[-1], repeat_count=int(m.group("count")) + 1)
            pending_source = False
            continue
        if _DECORATION_RE.match(content):
            continue
        if pending_source and frames:
            frames[-1] = replace(frames[-1], source_line=content.strip())
            pending_source = False
    if block.exception_line is not None:
        exc_type, message = _split_exception_line(block.exception_line)
    elif frames:
        exc_type, message = "UnknownError", ""
    else:
        raise ParseError("no stack frames and no exception line recognized")
    return frames, exc_type, message


def parse_traceback(raw: str, span: tuple[int, int]) -> ParsedTraceback:
    """Parse the traceback at ``span`` (as returned by detect_traceback).

    Chained blocks become linked ParsedTraceback values: the earlier block is
    stored as the ``cause`` of the later one, and the returned value is the
    final block of the chain. Raises ParseError when nothing inside the span
    is recognizable.
    """
    start, end = span
    sub = raw[start:end]
    blocks = _scan_blocks(sub)
    if not blocks:
        raise ParseError("span contains no traceback header")
    parsed: ParsedTraceback | None = None
    prev_block: _Block | None = None
    for block in blocks:
        frames, exc_type, message = _parse_block(block)
        kind = None
        if prev_block is not None:
            kind = _separator_between(sub, prev_block.end, block.start)
        parsed = ParsedTraceback(
            frames=frames,
            exception_type=exc_type,
            exception_message=message,
            cause=parsed,
            cause_kind=kind,
            raw_span=(start + block.start, start + block.end),
        )
        prev_block = block
    assert parsed is not None
    return parsed


def chain_depth(tb: ParsedTraceback) -> int:
    depth = 1
    while tb.cause is not None:
        depth += 1
        tb = tb.cause
    return depth


def innermost_link(tb: ParsedTraceback) -> ParsedTraceback:
    """The deepest cause of a chain: the exception that was raised first."""
    while tb.cause is not None:
        tb = tb.cause
    return tb


def deepest_user_frame(
    tb: ParsedTraceback,
    library_markers: tuple[str, ...] | list[str] = DEFAULT_LIBRARY_MARKERS,
) -> SourceFrame | None:
    """The last frame of the innermost chain link that is not dependency code.

    Returns None when every frame path contains a library marker.
    """
    link = innermost_link(tb)
    for frame in reversed(link.frames):
        if not any(marker in frame.file_path for marker in library_markers):
            return frame
    return None
