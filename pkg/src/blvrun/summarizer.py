"""Traceback summarization: model-backed when possible, extractive otherwise.

The extractive path is deterministic and always available; it is the
documented offline mode and the safety net behind every model failure, so
the caller is never left without a summary.
"""

from __future__ import annotations

import re
import sys
import time
from dataclasses import dataclass, replace

from .model_client import BackendConfig, ModelClientError, generate
from .taxonomy import ErrorCategory, classify
from .traceback_parser import (
    DEFAULT_LIBRARY_MARKERS,
    ParsedTraceback,
    deepest_user_frame,
    innermost_link,
)

PLACEHOLDER = "{traceback}"

DEFAULT_TEMPLATE_TEXT = (
    "Summarize the following traceback in at most 3 sentences. "
    "State the error type, the error message, and the most likely location "
    "in the user's code.\n\n" + PLACEHOLDER
)

# Traceback bodies above this are cut down before prompting: keep the header
# block and the tail, which carry the error line and the nearest frames.
PROMPT_BUDGET_CHARS = 4000
PROMPT_TAIL_CHARS = 3500

# Model replies above this are cut at a sentence boundary: the product
# promise is a concise summary.
MAX_MODEL_SUMMARY_CHARS = 1200

_SENTENCE_END_RE = re.compile(r"[.!?](?=\s)")
_FRAME_LINE_RE = re.compile(r'^\s+File "')


@dataclass(frozen=True)
class PromptTemplate:
    template: str = DEFAULT_TEMPLATE_TEXT

    def __post_init__(self) -> None:
        if self.template.count(PLACEHOLDER) != 1:
            raise ValueError(f"template must contain {PLACEHOLDER} exactly once")

    def render(self, body: str) -> str:
        prefix, _, suffix = self.template.partition(PLACEHOLDER)
        return prefix + body + suffix


@dataclass(frozen=True)
class Summary:
    text: str
    backend: str  # "model" | "extractive"
    latency_ms: float
    category: ErrorCategory
    truncated_input: bool = False


def build_prompt(tb_text: str, template: PromptTemplate | None = None) -> str:
    return (template or PromptTemplate()).render(tb_text)


def fit_prompt_budget(tb_text: str) -> str:
    """Reduce oversized traceback text to the header block plus the tail."""
    if len(tb_text) <= PROMPT_BUDGET_CHARS:
        return tb_text
    lines = tb_text.splitlines(keepends=True)
    head_count = 1  # the traceback header line
    if len(lines) > 1 and _FRAME_LINE_RE.match(lines[1]):
        head_count = 2
        if len(lines) > 2 and lines[2][:1] in (" ", "\t") and not _FRAME_LINE_RE.match(lines[2]):
            head_count = 3
    head = "".join(lines[:head_count])
    tail_start = max(len(tb_text) - PROMPT_TAIL_CHARS, len(head))
    elided = tail_start - len(head)
    return f"{head}[... {elided} characters elided ...]\n{tb_text[tail_start:]}"


def _cap_model_output(text: str) -> str:
    if len(text) <= MAX_MODEL_SUMMARY_CHARS:
        return text
    window = text[: MAX_MODEL_SUMMARY_CHARS + 1]
    ends = [m.end() for m in _SENTENCE_END_RE.finditer(window)]
    if ends:
        return text[: ends[-1]].rstrip()
    return text[:MAX_MODEL_SUMMARY_CHARS]


def extractive_summary(
    tb: ParsedTraceback,
    library_markers: tuple[str, ...] | list[str] = DEFAULT_LIBRARY_MARKERS,
) -> Summary:
    """Deterministic summary assembled from parsed fields.

    At most three sentences: the exception, the most relevant location in
    the user's code (falling back to the dependency frame where the error
    actually fired), and the prior exception when the error was chained.
    """
    start = time.perf_counter()
    sentences = []
    if tb.exception_message:
        sentences.append(f"{tb.exception_type}: {tb.exception_message}.")
    else:
        sentences.append(f"{tb.exception_type}.")
    frame = deepest_user_frame(tb, library_markers)
    if frame is not None:
        sentences.append(
            f"Raised at {frame.file_path}:{frame.line_number} in {frame.function_name}."
        )
    else:
        link = innermost_link(tb)
        if link.frames:
            last = link.frames[-1]
            sentences.append(
                "Raised inside a dependency, at "
                f"{last.file_path}:{last.line_number} in {last.function_name}."
            )
    if tb.cause is not None:
        sentences.append(
            f"This occurred while handling a prior {tb.cause.exception_type}."
        )
    latency_ms = (time.perf_counter() - start) * 1000.0
    return Summary(
        text=" ".join(sentences),
        backend="extractive",
        latency_ms=latency_ms,
        category=classify(tb.exception_type),
    )


def _log(message: str) -> None:
    print(f"blvrun: {message}", file=sys.stderr)


def summarize(
    tb: ParsedTraceback,
    raw_span_text: str,
    config: BackendConfig,
    library_markers: tuple[str, ...] | list[str] = DEFAULT_LIBRARY_MARKERS,
    truncated_input: bool = False,
) -> Summary:
    """Summarize via the model backend, falling back to the extractive form.

    Never fails outward: any backend error (or an empty reply) is logged to
    stderr and absorbed into the extractive fallback. One attempt only; a
    blocking CLI needs predictable latency more than retry success.
    """
    if config.enabled:
        start = time.perf_counter()
        try:
            reply = generate(config, build_prompt(fit_prompt_budget(raw_span_text)))
        except ModelClientError as exc:
            _log(f"model backend failed ({exc}); using extractive summary")
        else:
            latency_ms = (time.perf_counter() - start) * 1000.0
            text = reply.strip()
            if text:
                return Summary(
                    text=_cap_model_output(text),
                    backend="model",
                    latency_ms=latency_ms,
                    category=classify(tb.exception_type),
                    truncated_input=truncated_input,
                )
            _log("model backend returned an empty summary; using extractive summary")
    fallback = extractive_summary(tb, library_markers)
    return replace(fallback, truncated_input=truncated_input)
